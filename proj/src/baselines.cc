#include "cw/baselines.h"

#include <functional>

namespace cw {

void BaselineConfig::validate() const {
  if (!(eps > 0.0)) throw std::invalid_argument("baseline eps must be > 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("baseline alpha must be > 0");
  if (iterations < 1) throw std::invalid_argument("baseline T must be >= 1");
  if (!(momentum >= 0.0)) throw std::invalid_argument("momentum must be >= 0");
  if (!(s >= 0.0)) throw std::invalid_argument("smoothing s must be >= 0");
  if (samples < 1) throw std::invalid_argument("smoothing m must be >= 1");
}

Image fgsm_step(const Image& x, const Tensor& grad, double eps) {
  return take_step(x, unit_direction(grad), eps, x, eps);
}

Tensor momentum_step(const Tensor& m, const Tensor& g, double mu) {
  Tensor out = m;
  out *= mu;
  out += unit_direction(g);
  return out;
}

AttackResult fgsm(const Image& x, int y, const SubstituteOracle& sub,
                  TargetOracle& target, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("fgsm eps must be > 0");
  AttackResult result;
  const std::int64_t start = target.ledger().used();
  Image adv = fgsm_step(x, sub.substitute_gradient(x.tensor(), y), eps);
  result.iterates = {x, adv};
  try {
    if (target.query_label(adv) != y) result.offer(x, adv);
  } catch (const BudgetExhausted&) {
    result.budget_exhausted = true;
  }
  result.queries = target.ledger().used() - start;
  return result;
}

namespace {

// Shared I-FGSM loop; `direction` returns the unit update direction at the
// current iterate.
AttackResult iterate(const Image& x, int y, TargetOracle& target,
                     const BaselineConfig& cfg,
                     const std::function<Tensor(const Image&)>& direction) {
  cfg.validate();
  AttackResult result;
  const std::int64_t start = target.ledger().used();
  result.iterates.push_back(x);
  Image current = x;
  try {
    for (int t = 0; t < cfg.iterations; ++t) {
      current = take_step(current, direction(current), cfg.alpha, x, cfg.eps);
      result.iterates.push_back(current);
      if (target.query_label(current) != y) {
        result.offer(x, current);
        break;
      }
    }
  } catch (const BudgetExhausted&) {
    result.budget_exhausted = true;
  }
  result.queries = target.ledger().used() - start;
  return result;
}

}  // namespace

AttackResult i_fgsm(const Image& x, int y, const SubstituteOracle& sub,
                    TargetOracle& target, const BaselineConfig& cfg) {
  return iterate(x, y, target, cfg, [&](const Image& cur) {
    return unit_direction(sub.substitute_gradient(cur.tensor(), y));
  });
}

AttackResult mi_fgsm(const Image& x, int y, const SubstituteOracle& sub,
                     TargetOracle& target, const BaselineConfig& cfg) {
  Tensor momentum(x.shape());
  return iterate(x, y, target, cfg, [&](const Image& cur) {
    momentum = momentum_step(momentum, sub.substitute_gradient(cur.tensor(), y),
                             cfg.momentum);
    return unit_direction(momentum);
  });
}

AttackResult vr_igsm(const Image& x, int y, const SubstituteOracle& sub,
                     TargetOracle& target, const BaselineConfig& cfg,
                     Rng& rng) {
  return iterate(x, y, target, cfg, [&](const Image& cur) {
    return unit_direction(
        sub.smoothed_gradient(cur.tensor(), y, cfg.s, cfg.samples, rng));
  });
}

}  // namespace cw
