#ifndef CW_TRAINING_H_
#define CW_TRAINING_H_

#include <vector>

#include "cw/classifier.h"
#include "cw/dataset.h"

namespace cw {

struct TrainOptions {
  int epochs = 30;
  double learning_rate = 0.05;
  int batch_size = 32;
};

struct TrainedModel {
  Classifier model;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  // Mean training loss seen during each epoch.
  std::vector<double> epoch_loss;
};

double accuracy(const Model& model, const std::vector<Example>& examples);

// Plain minibatch SGD on cross-entropy. Deterministic given rng state.
// Throws std::invalid_argument on an empty training split.
TrainedModel train(Classifier model, const Dataset& data,
                   const TrainOptions& options, Rng& rng);

// As train, but every minibatch is paired with white-box FGSM copies of its
// examples at strength eps, computed against the current weights. The step
// uses the mean of the clean-batch and adversarial-batch gradients, so
// eps = 0 reproduces train() exactly.
TrainedModel train_adversarial(Classifier model, const Dataset& data,
                               const TrainOptions& options, double eps,
                               Rng& rng);

}  // namespace cw

#endif  // CW_TRAINING_H_
