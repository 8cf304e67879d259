#include "cw/attack.h"

namespace cw {

double Goal::attack_loss(const std::vector<double>& probs) const {
  double j = cross_entropy_from(probs, label);
  return targeted ? -j : j;
}

Perturbation Goal::attack_gradient(const SubstituteOracle& sub,
                                   const Tensor& x) const {
  Perturbation g = sub.substitute_gradient(x, label);
  if (targeted) g *= -1.0;
  return g;
}

void AttackResult::offer(const Image& x, const Image& candidate) {
  const double d = l2_distance(x, candidate);
  if (success && d >= l2) return;
  success = true;
  adversarial = candidate;
  l2 = d;
  linf = linf_distance(x, candidate);
}

}  // namespace cw
