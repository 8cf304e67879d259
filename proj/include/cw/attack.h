#ifndef CW_ATTACK_H_
#define CW_ATTACK_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "cw/core.h"
#include "cw/oracles.h"

namespace cw {

// What counts as a successful adversarial: any label other than `label`
// (untargeted), or exactly `label` (targeted).
struct Goal {
  int label = 0;
  bool targeted = false;

  static Goal untargeted(int true_label) { return {true_label, false}; }
  static Goal toward(int target_label) { return {target_label, true}; }

  bool reached_by(int predicted) const {
    return targeted ? predicted == label : predicted != label;
  }
  // Loss the attacker wants to increase: J(x, y) untargeted, -J(x, t)
  // targeted.
  double attack_loss(const std::vector<double>& probs) const;
  // Gradient of attack_loss on the substitute.
  Perturbation attack_gradient(const SubstituteOracle& sub,
                               const Tensor& x) const;
};

struct RoundTrace {
  double eps = 0.0;
  // Target attack-loss at trajectory A's iterates (index 0 is the start).
  std::vector<double> losses_a;
  std::vector<bool> downhill;  // flag value used for each A step
  std::vector<Image> trajectory_a;
  std::vector<Image> trajectory_b;
  std::optional<int> success_step_a;
  std::optional<int> success_step_b;
  std::int64_t queries = 0;
  std::int64_t label_queries = 0;
  bool found = false;
  double distance_before_refine = 0.0;
  double best_distance = 0.0;  // after refinement, if found
};

struct AttackResult {
  bool success = false;
  std::optional<Image> adversarial;
  double l2 = 0.0;    // meaningful only on success
  double linf = 0.0;  // meaningful only on success
  std::int64_t queries = 0;
  bool budget_exhausted = false;
  // Iterates of single-trajectory methods, starting with the original.
  std::vector<Image> iterates;
  std::vector<RoundTrace> rounds;

  // Records `candidate` if it is closer to x than the current best.
  void offer(const Image& x, const Image& candidate);
};

}  // namespace cw

#endif  // CW_ATTACK_H_
