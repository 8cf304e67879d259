#include "cw/whey.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cw {

void WheyConfig::validate() const {
  if (group_attempts < 0) throw std::invalid_argument("whey T1 must be >= 0");
  if (stochastic_attempts < 0) {
    throw std::invalid_argument("whey T2 must be >= 0");
  }
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("whey delta must be in [0, 1]");
  }
}

namespace {

// Descending |v|, then descending v.
bool before(double a, double b) {
  const double fa = std::fabs(a);
  const double fb = std::fabs(b);
  if (fa != fb) return fa > fb;
  return a > b;
}

}  // namespace

std::vector<double> value_groups(const Perturbation& z) {
  std::vector<double> v(z.data());
  for (double& e : v) {
    if (e == 0.0) e = 0.0;  // fold -0 into +0
  }
  std::sort(v.begin(), v.end(), before);
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

Image apply_perturbation(const Image& x, const Perturbation& z) {
  check_same_shape(x.shape(), z.shape(), "perturbation");
  return Image::clamped(x + z);
}

Perturbation group_squeeze(const Image& x, const Goal& goal,
                           const Perturbation& z, TargetOracle& target,
                           int attempts) {
  check_same_shape(x.shape(), z.shape(), "group squeeze");
  if (attempts < 0) throw std::invalid_argument("group attempts must be >= 0");
  Perturbation cur = z;
  bool have_cursor = false;
  double cursor = 0.0;
  try {
    for (int k = 0; k < attempts; ++k) {
      std::vector<double> groups = value_groups(cur);
      std::erase(groups, 0.0);
      if (groups.empty()) break;
      double pick = groups.front();
      if (have_cursor) {
        auto next = std::find_if(groups.begin(), groups.end(),
                                 [&](double g) { return before(cursor, g); });
        if (next != groups.end()) pick = *next;
      }
      have_cursor = true;
      cursor = pick;

      Perturbation trial = cur;
      for (double& e : trial.values()) {
        if (e == pick) e = 0.5 * e;
      }
      if (goal.reached_by(target.query_label(apply_perturbation(x, trial)))) {
        cur = std::move(trial);
      }
    }
  } catch (const BudgetExhausted&) {
  }
  return cur;
}

Perturbation stochastic_squeeze(const Image& x, const Goal& goal,
                                const Perturbation& z, TargetOracle& target,
                                int attempts, double delta, Rng& rng) {
  check_same_shape(x.shape(), z.shape(), "stochastic squeeze");
  if (attempts < 0) {
    throw std::invalid_argument("stochastic attempts must be >= 0");
  }
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("delta must be in [0, 1]");
  }
  Perturbation cur = z;
  try {
    for (int k = 0; k < attempts; ++k) {
      Perturbation trial = cur;
      bool changed = false;
      for (double& e : trial.values()) {
        if (rng.uniform() < delta && e != 0.0) {
          e = 0.0;
          changed = true;
        }
      }
      if (!changed) continue;
      if (goal.reached_by(target.query_label(apply_perturbation(x, trial)))) {
        cur = std::move(trial);
      }
    }
  } catch (const BudgetExhausted&) {
  }
  return cur;
}

Image whey(const Image& x, const Goal& goal, const Image& x_adv,
           TargetOracle& target, const WheyConfig& cfg, Rng& rng) {
  cfg.validate();
  check_same_shape(x.shape(), x_adv.shape(), "whey");
  const Perturbation z0 = x_adv - x;
  Perturbation z = group_squeeze(x, goal, z0, target, cfg.group_attempts);
  z = stochastic_squeeze(x, goal, z, target, cfg.stochastic_attempts,
                         cfg.delta, rng);
  if (z == z0) return x_adv;
  return apply_perturbation(x, z);
}

AttackResult curls_whey_attack(const Image& x, int y,
                               const SubstituteOracle& sub,
                               TargetOracle& target, const CurlsConfig& curls,
                               const WheyConfig& whey_cfg, Rng& rng) {
  whey_cfg.validate();
  const std::int64_t used0 = target.ledger().used();
  AttackResult result = curls_attack(x, y, sub, target, curls, rng);
  if (result.success && !result.budget_exhausted) {
    const Image squeezed = whey(x, Goal::untargeted(y), *result.adversarial,
                                target, whey_cfg, rng);
    result.offer(x, squeezed);
    result.budget_exhausted = target.ledger().exhausted();
  }
  result.queries = target.ledger().used() - used0;
  return result;
}

}  // namespace cw
