#ifndef CW_CLASSIFIER_H_
#define CW_CLASSIFIER_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "cw/model.h"

namespace cw {

// y = W x + b with W stored row-major as out x in.
struct DenseLayer {
  std::uint32_t in = 0;
  std::uint32_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;
};

// Rectifier; the subgradient at 0 is taken as 0.
struct ReluLayer {
  std::uint32_t size = 0;
};

// Valid (unpadded) stride-1 convolution over an (h, w, c) input. Weights are
// stored as filters x kernel x kernel x in.channels.
struct ConvLayer {
  Shape in;
  std::uint32_t filters = 0;
  std::uint32_t kernel = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  Shape out_shape() const {
    return {in.width - kernel + 1, in.height - kernel + 1, filters};
  }
};

using Layer = std::variant<DenseLayer, ReluLayer, ConvLayer>;

// Feed-forward softmax classifier with a hand-written backward pass.
class Classifier : public DifferentiableModel {
 public:
  Classifier() = default;
  // Throws std::invalid_argument if consecutive layer dimensions do not
  // chain or the last layer does not emit `classes` values.
  Classifier(Shape input, int classes, std::vector<Layer> layers);

  // Zero-initialized architectures of the built-in zoo.
  static Classifier linear(Shape input, int classes);
  static Classifier mlp(Shape input, int classes, std::uint32_t hidden);
  static Classifier conv(Shape input, int classes, std::uint32_t filters,
                         std::uint32_t kernel, std::uint32_t hidden);

  // He-normal weights, zero biases.
  void init_weights(Rng& rng);

  Shape input_shape() const override { return input_; }
  int num_classes() const override { return classes_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  std::size_t parameter_count() const;

  std::vector<double> logits(const Tensor& x) const;
  std::vector<double> probabilities(const Tensor& x) const override;
  double cross_entropy(const Tensor& x, int label) const;
  Tensor loss_gradient(const Tensor& x, int label) const override;

  // Backpropagates cross-entropy at (x, label). Adds parameter gradients
  // into `param_grads` (same layout as layers(), see zero_gradients()) when
  // non-null, writes the input gradient into `input_grad` when non-null, and
  // returns the loss.
  double backward(const Tensor& x, int label, std::vector<Layer>* param_grads,
                  Tensor* input_grad) const;
  std::vector<Layer> zero_gradients() const;
  // layers += scale * grads
  void apply_update(const std::vector<Layer>& grads, double scale);

  bool operator==(const Classifier&) const;

 private:
  void check_input(const Tensor& x) const;
  void check_label(int label) const;

  Shape input_;
  int classes_ = 0;
  std::vector<Layer> layers_;
};

bool operator==(const DenseLayer& a, const DenseLayer& b);
bool operator==(const ReluLayer& a, const ReluLayer& b);
bool operator==(const ConvLayer& a, const ConvLayer& b);

// "CWM1", version byte (1), W, H, C, class count and layer count as uint32,
// then per layer a kind tag byte (1 dense, 2 relu, 3 conv), its dims as
// uint32 and row-major float64 weights followed by biases.
void write_model(std::ostream& out, const Classifier& model);
Classifier read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const Classifier& model);
Classifier load_model(const std::filesystem::path& path);

}  // namespace cw

#endif  // CW_CLASSIFIER_H_
