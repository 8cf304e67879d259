#ifndef CW_TARGETED_H_
#define CW_TARGETED_H_

#include "cw/attack.h"
#include "cw/core.h"
#include "cw/curls.h"
#include "cw/oracles.h"
#include "cw/whey.h"

namespace cw {

// A target class together with an image the target model already puts in it.
class TargetedGoal {
 public:
  // Spends one query to confirm that x_target is classified as
  // target_label. Throws std::invalid_argument when target_label equals
  // source_label or the confirmation fails.
  static TargetedGoal make(int source_label, int target_label,
                           const Image& x_target, TargetOracle& target);

  int source_label() const { return source_; }
  int target_label() const { return label_; }
  const Image& target_image() const { return image_; }
  Goal goal() const { return Goal::toward(label_); }

 private:
  TargetedGoal(int source, int label, Image image)
      : source_(source), label_(label), image_(std::move(image)) {}

  int source_;
  int label_;
  Image image_;
};

struct InterpolationSeed {
  Image image;
  double s = 1.0;
};

// (1 - s) x + s x_T, clamped.
Image interpolate(const Image& x, const Image& x_target, double s);

// Bisection over s in (0, 1], keeping the upper end target-classified.
// Spends `steps` queries.
InterpolationSeed interpolation_seed(const Image& x, const TargetedGoal& goal,
                                     TargetOracle& target, int steps);

// clip_to_ball(x - alpha * unit(grad J_sub(x0, t)), x, eps): the gradient is
// read at the seed, the step is taken from x.
Image targeted_boost_step(const Image& x, const TargetedGoal& goal,
                          const Image& x0, const SubstituteOracle& sub,
                          double alpha, double eps);

struct TargetedConfig {
  int seed_steps = 10;
  CurlsConfig curls;
  WheyConfig whey;
};

// Seed, boost, Curls toward the target class starting from the boosted
// point, then Whey on the best image. Never returns anything farther from x
// than the seed.
AttackResult targeted_attack(const Image& x, const TargetedGoal& goal,
                             const SubstituteOracle& sub, TargetOracle& target,
                             const TargetedConfig& cfg, Rng& rng);

}  // namespace cw

#endif  // CW_TARGETED_H_
