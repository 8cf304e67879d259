// Small hand-built models shared by the unit tests.
#ifndef CW_TESTS_SUPPORT_H_
#define CW_TESTS_SUPPORT_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "cw/classifier.h"
#include "cw/core.h"
#include "cw/model.h"

namespace cwtest {

// Probabilities from an arbitrary function of the input.
class FunctionModel : public cw::Model {
 public:
  using Fn = std::function<std::vector<double>(const cw::Tensor&)>;
  FunctionModel(cw::Shape shape, int classes, Fn fn)
      : shape_(shape), classes_(classes), fn_(std::move(fn)) {}

  cw::Shape input_shape() const override { return shape_; }
  int num_classes() const override { return classes_; }
  std::vector<double> probabilities(const cw::Tensor& x) const override {
    return fn_(x);
  }

 private:
  cw::Shape shape_;
  int classes_;
  Fn fn_;
};

// Differentiable model with a prescribed input gradient; probabilities are
// uniform.
class GradientModel : public cw::DifferentiableModel {
 public:
  using Fn = std::function<cw::Tensor(const cw::Tensor&, int)>;
  GradientModel(cw::Shape shape, int classes, Fn fn)
      : shape_(shape), classes_(classes), fn_(std::move(fn)) {}

  cw::Shape input_shape() const override { return shape_; }
  int num_classes() const override { return classes_; }
  std::vector<double> probabilities(const cw::Tensor&) const override {
    return std::vector<double>(std::size_t(classes_), 1.0 / classes_);
  }
  cw::Tensor loss_gradient(const cw::Tensor& x, int label) const override {
    return fn_(x, label);
  }

 private:
  cw::Shape shape_;
  int classes_;
  Fn fn_;
};

inline cw::Shape pixel() { return {1, 1, 1}; }

inline cw::Image pixel_image(double v) { return cw::Image(pixel(), {v}); }

// Two classes on one pixel: class 1 iff v >= threshold.
inline FunctionModel threshold_model(double threshold) {
  return FunctionModel(pixel(), 2, [threshold](const cw::Tensor& x) {
    return x[0] >= threshold ? std::vector<double>{0.1, 0.9}
                             : std::vector<double>{0.9, 0.1};
  });
}

// One pixel, two classes, logits (-v, v): the loss of class 0 rises with v.
inline cw::Classifier rising_pixel_model() {
  cw::DenseLayer d{1, 2, {-1.0, 1.0}, {0.0, 0.0}};
  return cw::Classifier(pixel(), 2, {d});
}

inline cw::Image random_image(cw::Shape shape, cw::Rng& rng) {
  cw::Tensor t(shape);
  for (double& v : t.values()) v = rng.uniform();
  return cw::Image(std::move(t));
}

inline cw::Classifier random_classifier(int arch, cw::Shape shape,
                                        int classes, cw::Rng& rng) {
  cw::Classifier c;
  switch (arch % 3) {
    case 0:
      c = cw::Classifier::linear(shape, classes);
      break;
    case 1:
      c = cw::Classifier::mlp(shape, classes, 7);
      break;
    default:
      c = cw::Classifier::conv(shape, classes, 3, 3, 6);
      break;
  }
  c.init_weights(rng);
  // Nonzero biases so every code path is exercised.
  for (cw::Layer& l : c.mutable_layers()) {
    std::visit(
        [&](auto& layer) {
          if constexpr (!std::is_same_v<std::decay_t<decltype(layer)>,
                                        cw::ReluLayer>) {
            for (double& b : layer.bias) b = 0.1 * rng.normal();
          }
        },
        l);
  }
  return c;
}

// Central finite differences of the model's own cross-entropy.
inline cw::Tensor numeric_gradient(const cw::Classifier& m, const cw::Tensor& x,
                                   int label, double h = 1e-5) {
  cw::Tensor g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    cw::Tensor up = x;
    cw::Tensor down = x;
    up[i] += h;
    down[i] -= h;
    g[i] = (m.cross_entropy(up, label) - m.cross_entropy(down, label)) /
           (2.0 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
inline double max_relative_error(const cw::Tensor& a, const cw::Tensor& b,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::fabs(a[i]), std::fabs(b[i]), floor});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace cwtest

#endif  // CW_TESTS_SUPPORT_H_
