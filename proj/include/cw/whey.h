#ifndef CW_WHEY_H_
#define CW_WHEY_H_

#include <vector>

#include "cw/attack.h"
#include "cw/core.h"
#include "cw/curls.h"
#include "cw/oracles.h"

namespace cw {

struct WheyConfig {
  int group_attempts = 40;       // T1
  int stochastic_attempts = 40;  // T2
  double delta = 0.01;

  void validate() const;
};

// Distinct values of z, largest magnitude first; equal magnitudes put the
// positive value first.
std::vector<double> value_groups(const Perturbation& z);

// The candidate a perturbation stands for: x + z clamped to [0, 1].
Image apply_perturbation(const Image& x, const Perturbation& z);

// Up to `attempts` queries. Each attempt halves every component equal to the
// next nonzero group value (sweeping in value_groups order and wrapping
// around) and keeps the change only if the candidate still satisfies goal.
Perturbation group_squeeze(const Image& x, const Goal& goal,
                           const Perturbation& z, TargetOracle& target,
                           int attempts);

// Up to `attempts` queries. Each attempt zeroes each component with
// probability delta and keeps the change only if the candidate still
// satisfies goal. Attempts whose mask changes nothing skip the query.
Perturbation stochastic_squeeze(const Image& x, const Goal& goal,
                                const Perturbation& z, TargetOracle& target,
                                int attempts, double delta, Rng& rng);

// group_squeeze then stochastic_squeeze on z = x_adv - x. Returns x_adv
// itself when no change was kept.
Image whey(const Image& x, const Goal& goal, const Image& x_adv,
           TargetOracle& target, const WheyConfig& cfg, Rng& rng);

// Untargeted Curls followed by Whey on the closest adversarial.
AttackResult curls_whey_attack(const Image& x, int y,
                               const SubstituteOracle& sub,
                               TargetOracle& target, const CurlsConfig& curls,
                               const WheyConfig& whey_cfg, Rng& rng);

}  // namespace cw

#endif  // CW_WHEY_H_
