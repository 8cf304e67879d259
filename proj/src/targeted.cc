#include "cw/targeted.h"

#include <stdexcept>

namespace cw {

TargetedGoal TargetedGoal::make(int source_label, int target_label,
                                const Image& x_target, TargetOracle& target) {
  if (target_label == source_label) {
    throw std::invalid_argument("target class equals the original class");
  }
  if (target_label < 0 || target_label >= target.num_classes()) {
    throw std::invalid_argument("target class out of range");
  }
  if (target.query_label(x_target) != target_label) {
    throw std::invalid_argument(
        "target image is not classified as the target class");
  }
  return TargetedGoal(source_label, target_label, x_target);
}

Image interpolate(const Image& x, const Image& x_target, double s) {
  check_same_shape(x.shape(), x_target.shape(), "interpolate");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = (1.0 - s) * x[i] + s * x_target[i];
  }
  return Image::clamped(std::move(out));
}

InterpolationSeed interpolation_seed(const Image& x, const TargetedGoal& goal,
                                     TargetOracle& target, int steps) {
  if (steps < 0) throw std::invalid_argument("seed steps must be >= 0");
  double lo = 0.0;
  InterpolationSeed best{goal.target_image(), 1.0};
  try {
    for (int k = 0; k < steps; ++k) {
      const double mid = 0.5 * (lo + best.s);
      Image candidate = interpolate(x, goal.target_image(), mid);
      if (target.query_label(candidate) == goal.target_label()) {
        best = {std::move(candidate), mid};
      } else {
        lo = mid;
      }
    }
  } catch (const BudgetExhausted&) {
  }
  return best;
}

Image targeted_boost_step(const Image& x, const TargetedGoal& goal,
                          const Image& x0, const SubstituteOracle& sub,
                          double alpha, double eps) {
  check_same_shape(x.shape(), x0.shape(), "boost step");
  Tensor g = sub.substitute_gradient(x0.tensor(), goal.target_label());
  return take_step(x, unit_direction(g), -alpha, x, eps);
}

AttackResult targeted_attack(const Image& x, const TargetedGoal& goal,
                             const SubstituteOracle& sub, TargetOracle& target,
                             const TargetedConfig& cfg, Rng& rng) {
  cfg.curls.validate();
  cfg.whey.validate();
  const std::int64_t used0 = target.ledger().used();
  AttackResult result;

  const InterpolationSeed seed =
      interpolation_seed(x, goal, target, cfg.seed_steps);
  result.offer(x, seed.image);

  if (!target.ledger().exhausted()) {
    const Image boosted = targeted_boost_step(
        x, goal, seed.image, sub, cfg.curls.step_size(), cfg.curls.eps0);
    AttackResult curls =
        curls_search(x, goal.goal(), sub, target, cfg.curls, boosted, rng);
    result.rounds = std::move(curls.rounds);
    if (curls.success) result.offer(x, *curls.adversarial);
    result.budget_exhausted = curls.budget_exhausted;
  } else {
    result.budget_exhausted = true;
  }

  if (!target.ledger().exhausted()) {
    const Image squeezed =
        whey(x, goal.goal(), *result.adversarial, target, cfg.whey, rng);
    result.offer(x, squeezed);
  }
  result.budget_exhausted = result.budget_exhausted || target.ledger().exhausted();
  result.queries = target.ledger().used() - used0;
  return result;
}

}  // namespace cw
