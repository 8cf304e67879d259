#ifndef CW_CURLS_H_
#define CW_CURLS_H_

#include <optional>

#include "cw/attack.h"
#include "cw/core.h"
#include "cw/oracles.h"

namespace cw {

struct CurlsConfig {
  int rounds = 10;       // T0
  int steps = 4;         // T, per trajectory per round
  int search_steps = 2;  // bs
  double eps0 = 0.3;
  // Step size; unset means 1 / (2 T).
  std::optional<double> alpha;
  // Std of the Gaussian added before each substitute gradient, on the unit
  // pixel scale.
  double s = 0.05;
  // After a round confirms x*, the next rounds use eps = shrink * |x* - x|_inf.
  double eps_shrink = 0.9;
  // Bias gradient evaluation points by alpha times the mean direction of the
  // adversarials found so far.
  bool mean_direction = true;

  double step_size() const { return alpha ? *alpha : 1.0 / (2.0 * steps); }
  void validate() const;
};

// Running mean of unit noise directions (x_adv - x) / |x_adv - x|_2 over the
// adversarials found for one image.
class MeanDirection {
 public:
  explicit MeanDirection(Shape shape) : sum_(shape) {}

  // Throws std::invalid_argument when x_adv == x.
  void update(const Image& x, const Image& x_adv);
  // sum / count, or the zero tensor before any update.
  Perturbation value() const;
  int count() const { return count_; }

 private:
  Tensor sum_;
  int count_ = 0;
};

// Bisects the segment [x, x_adv] `steps` times, moving the far end inward
// whenever the midpoint still satisfies `goal`. Spends exactly `steps`
// queries (fewer only if the budget runs out) and returns the far end, which
// is never farther from x than x_adv.
Image binary_search_refine(const Image& x, const Image& x_adv,
                           const Goal& goal, TargetOracle& target, int steps);

// Starting point of a round's two trajectories together with the target's
// attack loss there.
struct CurlsStart {
  Image point;
  double attack_loss = 0.0;
  int label = 0;
};

// One query at `point`.
CurlsStart probe_start(const Image& point, const Goal& goal,
                       TargetOracle& target);

struct RoundOutcome {
  std::optional<Image> adversarial;  // refined
  RoundTrace trace;
  bool budget_exhausted = false;
};

// One round of dual-trajectory iteration inside the eps box around x.
// Trajectory B always ascends the attack loss; trajectory A descends it
// until the target's attack loss rises, then ascends. Each trajectory stops
// at its first iterate that satisfies `goal` and folds it into `md`. The
// closer of the two (A on ties) is refined by binary search.
RoundOutcome curls_round(const Image& x, const Goal& goal,
                         const SubstituteOracle& sub, TargetOracle& target,
                         const CurlsConfig& cfg, double eps,
                         const CurlsStart& start, MeanDirection& md, Rng& rng);

// Convenience form: eps = eps0, trajectories start at x (one extra query to
// read the starting loss).
RoundOutcome curls_round(const Image& x, int y, const SubstituteOracle& sub,
                         TargetOracle& target, const CurlsConfig& cfg,
                         MeanDirection& md, Rng& rng);

// All rounds under the shrinking eps schedule, starting each round's
// trajectories from `start`. Returns the closest adversarial over all
// rounds.
AttackResult curls_search(const Image& x, const Goal& goal,
                          const SubstituteOracle& sub, TargetOracle& target,
                          const CurlsConfig& cfg, const Image& start,
                          Rng& rng);

AttackResult curls_attack(const Image& x, int y, const SubstituteOracle& sub,
                          TargetOracle& target, const CurlsConfig& cfg,
                          Rng& rng);

}  // namespace cw

#endif  // CW_CURLS_H_
