#include "cw/curls.h"

#include <stdexcept>

namespace cw {

void CurlsConfig::validate() const {
  if (rounds < 1) throw std::invalid_argument("curls T0 must be >= 1");
  if (steps < 1) throw std::invalid_argument("curls T must be >= 1");
  if (search_steps < 0) throw std::invalid_argument("curls bs must be >= 0");
  if (!(eps0 > 0.0)) throw std::invalid_argument("curls eps must be > 0");
  if (!(step_size() > 0.0)) throw std::invalid_argument("curls alpha must be > 0");
  if (!(s >= 0.0)) throw std::invalid_argument("curls s must be >= 0");
  if (!(eps_shrink > 0.0 && eps_shrink <= 1.0)) {
    throw std::invalid_argument("curls eps shrink must be in (0, 1]");
  }
}

void MeanDirection::update(const Image& x, const Image& x_adv) {
  check_same_shape(x.shape(), x_adv.shape(), "mean direction");
  Perturbation d = x_adv - x;
  const double n = d.norm();
  if (!(n > 0.0)) {
    throw std::invalid_argument("mean direction update with x_adv == x");
  }
  d *= 1.0 / n;
  sum_ += d;
  ++count_;
}

Perturbation MeanDirection::value() const {
  Perturbation v = sum_;
  if (count_ > 0) v *= 1.0 / double(count_);
  return v;
}

namespace {

Image lerp(const Image& x, const Image& far, double t) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = (1.0 - t) * x[i] + t * far[i];
  }
  return Image::clamped(std::move(out));
}

}  // namespace

Image binary_search_refine(const Image& x, const Image& x_adv,
                           const Goal& goal, TargetOracle& target, int steps) {
  check_same_shape(x.shape(), x_adv.shape(), "binary search");
  if (steps < 0) throw std::invalid_argument("binary search steps must be >= 0");
  double lo = 0.0;
  double hi = 1.0;
  Image best = x_adv;
  try {
    for (int k = 0; k < steps; ++k) {
      const double mid = 0.5 * (lo + hi);
      Image candidate = lerp(x, x_adv, mid);
      if (goal.reached_by(target.query_label(candidate))) {
        hi = mid;
        best = std::move(candidate);
      } else {
        lo = mid;
      }
    }
  } catch (const BudgetExhausted&) {
  }
  return best;
}

CurlsStart probe_start(const Image& point, const Goal& goal,
                       TargetOracle& target) {
  Scores sc = target.query(point);
  return {point, goal.attack_loss(sc.probabilities), sc.label};
}

namespace {

Tensor evaluation_point(const Image& at, const Tensor& shift, double s,
                        Rng& rng) {
  Tensor p = at.tensor();
  p += gaussian_like(at.shape(), s, rng);
  p += shift;
  return p;
}

}  // namespace

RoundOutcome curls_round(const Image& x, const Goal& goal,
                         const SubstituteOracle& sub, TargetOracle& target,
                         const CurlsConfig& cfg, double eps,
                         const CurlsStart& start, MeanDirection& md,
                         Rng& rng) {
  cfg.validate();
  check_same_shape(x.shape(), start.point.shape(), "curls start");
  if (!(eps > 0.0)) throw std::invalid_argument("curls round eps must be > 0");
  const double alpha = cfg.step_size();
  const std::int64_t used0 = target.ledger().used();

  RoundOutcome out;
  RoundTrace& tr = out.trace;
  tr.eps = eps;
  tr.trajectory_a.push_back(start.point);
  tr.trajectory_b.push_back(start.point);
  tr.losses_a.push_back(start.attack_loss);

  Image a = start.point;
  Image b = start.point;
  double prev_loss = start.attack_loss;
  bool downhill = true;
  std::optional<Image> found_a;
  std::optional<Image> found_b;

  try {
    for (int t = 0; t < cfg.steps && !(found_a && found_b); ++t) {
      Tensor shift(x.shape());
      if (cfg.mean_direction && md.count() > 0) shift = alpha * md.value();

      if (!found_a) {
        Tensor g = goal.attack_gradient(
            sub, evaluation_point(a, shift, cfg.s, rng));
        tr.downhill.push_back(downhill);
        a = take_step(a, unit_direction(g), downhill ? -alpha : alpha, x, eps);
        tr.trajectory_a.push_back(a);
        Scores sc = target.query(a);
        ++tr.label_queries;
        const double loss = goal.attack_loss(sc.probabilities);
        tr.losses_a.push_back(loss);
        if (downhill && loss > prev_loss) downhill = false;
        prev_loss = loss;
        if (goal.reached_by(sc.label) && !(a == x)) {
          found_a = a;
          tr.success_step_a = t + 1;
          md.update(x, a);
        }
      }

      if (!found_b) {
        Tensor g = goal.attack_gradient(
            sub, evaluation_point(b, shift, cfg.s, rng));
        b = take_step(b, unit_direction(g), alpha, x, eps);
        tr.trajectory_b.push_back(b);
        ++tr.label_queries;
        if (goal.reached_by(target.query_label(b)) && !(b == x)) {
          found_b = b;
          tr.success_step_b = t + 1;
          md.update(x, b);
        }
      }
    }
  } catch (const BudgetExhausted&) {
    out.budget_exhausted = true;
  }

  std::optional<Image> pick;
  if (found_a && found_b) {
    pick = l2_distance(x, *found_b) < l2_distance(x, *found_a) ? found_b
                                                               : found_a;
  } else if (found_a) {
    pick = found_a;
  } else if (found_b) {
    pick = found_b;
  }

  if (pick) {
    tr.found = true;
    tr.distance_before_refine = l2_distance(x, *pick);
    if (!out.budget_exhausted) {
      out.adversarial =
          binary_search_refine(x, *pick, goal, target, cfg.search_steps);
      out.budget_exhausted = target.ledger().exhausted();
    } else {
      out.adversarial = pick;
    }
    tr.best_distance = l2_distance(x, *out.adversarial);
  }
  tr.queries = target.ledger().used() - used0;
  return out;
}

RoundOutcome curls_round(const Image& x, int y, const SubstituteOracle& sub,
                         TargetOracle& target, const CurlsConfig& cfg,
                         MeanDirection& md, Rng& rng) {
  const Goal goal = Goal::untargeted(y);
  const std::int64_t used0 = target.ledger().used();
  RoundOutcome out;
  try {
    const CurlsStart start = probe_start(x, goal, target);
    out = curls_round(x, goal, sub, target, cfg, cfg.eps0, start, md, rng);
  } catch (const BudgetExhausted&) {
    out.budget_exhausted = true;
  }
  out.trace.queries = target.ledger().used() - used0;
  return out;
}

AttackResult curls_search(const Image& x, const Goal& goal,
                          const SubstituteOracle& sub, TargetOracle& target,
                          const CurlsConfig& cfg, const Image& start,
                          Rng& rng) {
  cfg.validate();
  check_same_shape(x.shape(), start.shape(), "curls start");
  AttackResult result;
  const std::int64_t used0 = target.ledger().used();
  MeanDirection md(x.shape());
  double eps = cfg.eps0;
  try {
    const CurlsStart origin = probe_start(start, goal, target);
    if (goal.reached_by(origin.label) && !(start == x)) result.offer(x, start);
    for (int r = 0; r < cfg.rounds; ++r) {
      RoundOutcome round =
          curls_round(x, goal, sub, target, cfg, eps, origin, md, rng);
      result.rounds.push_back(std::move(round.trace));
      if (round.adversarial) {
        result.offer(x, *round.adversarial);
        const double d = linf_distance(x, *round.adversarial);
        if (d > 0.0) eps = cfg.eps_shrink * d;
      }
      if (round.budget_exhausted) {
        result.budget_exhausted = true;
        break;
      }
    }
  } catch (const BudgetExhausted&) {
    result.budget_exhausted = true;
  }
  result.queries = target.ledger().used() - used0;
  return result;
}

AttackResult curls_attack(const Image& x, int y, const SubstituteOracle& sub,
                          TargetOracle& target, const CurlsConfig& cfg,
                          Rng& rng) {
  return curls_search(x, Goal::untargeted(y), sub, target, cfg, x, rng);
}

}  // namespace cw
