#ifndef CW_BASELINES_H_
#define CW_BASELINES_H_

#include "cw/attack.h"
#include "cw/core.h"
#include "cw/oracles.h"

namespace cw {

// Reference gradient attacks in their L2 form: every sign(g) of the
// original methods becomes g / ||g||_2 over the whole tensor, and iterates
// stay inside the per-pixel eps box around x.
struct BaselineConfig {
  double eps = 0.3;
  double alpha = 0.05;
  int iterations = 10;
  double momentum = 1.0;
  double s = 0.05;  // vr-IGSM smoothing std, unit pixel scale
  int samples = 8;  // vr-IGSM gradients per step

  void validate() const;
};

// clip_to_ball(x + eps * unit_direction(grad), x, eps)
Image fgsm_step(const Image& x, const Tensor& grad, double eps);

// mu * m + g / ||g||_2, the MI-FGSM accumulator update.
Tensor momentum_step(const Tensor& m, const Tensor& g, double mu);

// One target query.
AttackResult fgsm(const Image& x, int y, const SubstituteOracle& sub,
                  TargetOracle& target, double eps);

// At most cfg.iterations target queries; stops at the first iterate the
// target no longer labels y.
AttackResult i_fgsm(const Image& x, int y, const SubstituteOracle& sub,
                    TargetOracle& target, const BaselineConfig& cfg);

AttackResult mi_fgsm(const Image& x, int y, const SubstituteOracle& sub,
                     TargetOracle& target, const BaselineConfig& cfg);

AttackResult vr_igsm(const Image& x, int y, const SubstituteOracle& sub,
                     TargetOracle& target, const BaselineConfig& cfg,
                     Rng& rng);

}  // namespace cw

#endif  // CW_BASELINES_H_
