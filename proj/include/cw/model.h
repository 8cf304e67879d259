#ifndef CW_MODEL_H_
#define CW_MODEL_H_

#include <vector>

#include "cw/core.h"

namespace cw {

// Anything that maps an input to class probabilities. Target oracles only
// need this much.
class Model {
 public:
  virtual ~Model() = default;

  virtual Shape input_shape() const = 0;
  virtual int num_classes() const = 0;
  virtual std::vector<double> probabilities(const Tensor& x) const = 0;
};

// A model that also exposes d(cross-entropy)/d(input).
class DifferentiableModel : public Model {
 public:
  virtual Tensor loss_gradient(const Tensor& x, int label) const = 0;
};

// -log(max(p, 1e-12)).
double cross_entropy_from(const std::vector<double>& probs, int label);
// Lowest index wins ties.
int argmax(const std::vector<double>& values);
void softmax_inplace(std::vector<double>& logits);

}  // namespace cw

#endif  // CW_MODEL_H_
