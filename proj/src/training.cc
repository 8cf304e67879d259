#include "cw/training.h"

#include <numeric>
#include <optional>

#include "cw/baselines.h"

namespace cw {

double accuracy(const Model& model, const std::vector<Example>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Example& e : examples) {
    if (argmax(model.probabilities(e.image.tensor())) == e.label) ++correct;
  }
  return double(correct) / double(examples.size());
}

namespace {

void scale_into(std::vector<Layer>& dst, const std::vector<Layer>& a,
                const std::vector<Layer>& b) {
  // dst = 0.5 * (a + b)
  for (std::size_t i = 0; i < dst.size(); ++i) {
    std::visit(
        [&](auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (!std::is_same_v<T, ReluLayer>) {
            const T& la = std::get<T>(a[i]);
            const T& lb = std::get<T>(b[i]);
            for (std::size_t j = 0; j < l.weights.size(); ++j) {
              l.weights[j] = 0.5 * (la.weights[j] + lb.weights[j]);
            }
            for (std::size_t j = 0; j < l.bias.size(); ++j) {
              l.bias[j] = 0.5 * (la.bias[j] + lb.bias[j]);
            }
          }
        },
        dst[i]);
  }
}

TrainedModel run_sgd(Classifier model, const Dataset& data,
                     const TrainOptions& options, std::optional<double> eps,
                     Rng& rng) {
  data.validate();
  if (data.train.empty()) {
    throw std::invalid_argument("cannot train on an empty training split");
  }
  if (!(model.input_shape() == data.shape) ||
      model.num_classes() != data.classes) {
    throw std::invalid_argument("model does not match dataset shape/classes");
  }
  if (options.epochs < 0 || options.batch_size < 1) {
    throw std::invalid_argument("bad training options");
  }
  if (eps && !(*eps >= 0.0)) {
    throw std::invalid_argument("adversarial eps must be >= 0");
  }

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  TrainedModel out;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size();
         begin += std::size_t(options.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + std::size_t(options.batch_size));
      const double inv = 1.0 / double(end - begin);
      std::vector<Layer> clean = model.zero_gradients();
      std::optional<std::vector<Layer>> adv;
      if (eps) adv = model.zero_gradients();
      for (std::size_t k = begin; k < end; ++k) {
        const Example& e = data.train[order[k]];
        Tensor input_grad;
        loss_sum += model.backward(e.image.tensor(), e.label, &clean,
                                   eps ? &input_grad : nullptr);
        if (eps) {
          const Image perturbed =
              *eps > 0.0 ? fgsm_step(e.image, input_grad, *eps) : e.image;
          model.backward(perturbed.tensor(), e.label, &*adv, nullptr);
        }
      }
      if (eps) {
        std::vector<Layer> mean = clean;
        scale_into(mean, clean, *adv);
        model.apply_update(mean, -options.learning_rate * inv);
      } else {
        model.apply_update(clean, -options.learning_rate * inv);
      }
    }
    out.epoch_loss.push_back(loss_sum / double(order.size()));
  }
  out.train_accuracy = accuracy(model, data.train);
  out.test_accuracy = accuracy(model, data.test);
  out.model = std::move(model);
  return out;
}

}  // namespace

TrainedModel train(Classifier model, const Dataset& data,
                   const TrainOptions& options, Rng& rng) {
  return run_sgd(std::move(model), data, options, std::nullopt, rng);
}

TrainedModel train_adversarial(Classifier model, const Dataset& data,
                               const TrainOptions& options, double eps,
                               Rng& rng) {
  return run_sgd(std::move(model), data, options, eps, rng);
}

}  // namespace cw
