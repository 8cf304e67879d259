#include "cw/classifier.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "cw/tensor_io.h"

namespace cw {

double cross_entropy_from(const std::vector<double>& probs, int label) {
  return -std::log(std::max(probs.at(static_cast<std::size_t>(label)), 1e-12));
}

int argmax(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best);
}

void softmax_inplace(std::vector<double>& logits) {
  double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

namespace {

void forward_layer(const Layer& layer, const std::vector<double>& in,
                   std::vector<double>& out) {
  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, DenseLayer>) {
          out.assign(l.out, 0.0);
          for (std::uint32_t o = 0; o < l.out; ++o) {
            const double* row = l.weights.data() + std::size_t{o} * l.in;
            double acc = l.bias[o];
            for (std::uint32_t i = 0; i < l.in; ++i) acc += row[i] * in[i];
            out[o] = acc;
          }
        } else if constexpr (std::is_same_v<T, ReluLayer>) {
          out.resize(in.size());
          for (std::size_t i = 0; i < in.size(); ++i) {
            out[i] = in[i] > 0.0 ? in[i] : 0.0;
          }
        } else {
          const Shape os = l.out_shape();
          const std::uint32_t c_in = l.in.channels;
          out.assign(os.size(), 0.0);
          for (std::uint32_t oh = 0; oh < os.height; ++oh) {
            for (std::uint32_t ow = 0; ow < os.width; ++ow) {
              double* dst = out.data() + (std::size_t{oh} * os.width + ow) *
                                             l.filters;
              for (std::uint32_t f = 0; f < l.filters; ++f) {
                const double* w = l.weights.data() +
                                  std::size_t{f} * l.kernel * l.kernel * c_in;
                double acc = l.bias[f];
                for (std::uint32_t kh = 0; kh < l.kernel; ++kh) {
                  const double* src =
                      in.data() +
                      (std::size_t{oh + kh} * l.in.width + ow) * c_in;
                  const double* wk = w + std::size_t{kh} * l.kernel * c_in;
                  for (std::uint32_t j = 0; j < l.kernel * c_in; ++j) {
                    acc += wk[j] * src[j];
                  }
                }
                dst[f] = acc;
              }
            }
          }
        }
      },
      layer);
}

// Given dL/d(out), writes dL/d(in) into `din` and, when `grad` is non-null,
// adds parameter gradients into it.
void backward_layer(const Layer& layer, const std::vector<double>& in,
                    const std::vector<double>& dout, std::vector<double>& din,
                    Layer* grad) {
  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        din.assign(in.size(), 0.0);
        if constexpr (std::is_same_v<T, DenseLayer>) {
          T* g = grad ? &std::get<T>(*grad) : nullptr;
          for (std::uint32_t o = 0; o < l.out; ++o) {
            const double d = dout[o];
            if (d == 0.0) continue;
            const double* row = l.weights.data() + std::size_t{o} * l.in;
            for (std::uint32_t i = 0; i < l.in; ++i) din[i] += row[i] * d;
            if (g) {
              double* grow = g->weights.data() + std::size_t{o} * l.in;
              for (std::uint32_t i = 0; i < l.in; ++i) grow[i] += in[i] * d;
              g->bias[o] += d;
            }
          }
        } else if constexpr (std::is_same_v<T, ReluLayer>) {
          for (std::size_t i = 0; i < in.size(); ++i) {
            din[i] = in[i] > 0.0 ? dout[i] : 0.0;
          }
        } else {
          T* g = grad ? &std::get<T>(*grad) : nullptr;
          const Shape os = l.out_shape();
          const std::uint32_t c_in = l.in.channels;
          const std::uint32_t span = l.kernel * c_in;
          for (std::uint32_t oh = 0; oh < os.height; ++oh) {
            for (std::uint32_t ow = 0; ow < os.width; ++ow) {
              const double* d = dout.data() +
                                (std::size_t{oh} * os.width + ow) * l.filters;
              for (std::uint32_t f = 0; f < l.filters; ++f) {
                if (d[f] == 0.0) continue;
                const std::size_t wbase =
                    std::size_t{f} * l.kernel * l.kernel * c_in;
                for (std::uint32_t kh = 0; kh < l.kernel; ++kh) {
                  const std::size_t ibase =
                      (std::size_t{oh + kh} * l.in.width + ow) * c_in;
                  const std::size_t wrow = wbase + std::size_t{kh} * span;
                  for (std::uint32_t j = 0; j < span; ++j) {
                    din[ibase + j] += l.weights[wrow + j] * d[f];
                  }
                  if (g) {
                    for (std::uint32_t j = 0; j < span; ++j) {
                      g->weights[wrow + j] += in[ibase + j] * d[f];
                    }
                  }
                }
                if (g) g->bias[f] += d[f];
              }
            }
          }
        }
      },
      layer);
}

const char* kind_name(const Layer& layer) {
  switch (layer.index()) {
    case 0:
      return "dense";
    case 1:
      return "relu";
    default:
      return "conv";
  }
}

}  // namespace

bool operator==(const DenseLayer& a, const DenseLayer& b) {
  return a.in == b.in && a.out == b.out && a.weights == b.weights &&
         a.bias == b.bias;
}
bool operator==(const ReluLayer& a, const ReluLayer& b) {
  return a.size == b.size;
}
bool operator==(const ConvLayer& a, const ConvLayer& b) {
  return a.in == b.in && a.filters == b.filters && a.kernel == b.kernel &&
         a.weights == b.weights && a.bias == b.bias;
}

Classifier::Classifier(Shape input, int classes, std::vector<Layer> layers)
    : input_(input), classes_(classes), layers_(std::move(layers)) {
  if (classes_ < 1) throw std::invalid_argument("class count must be >= 1");
  if (input_.size() == 0) throw std::invalid_argument("empty input shape");
  Shape current = input_;
  bool spatial = true;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string where =
        "layer " + std::to_string(i) + " (" + kind_name(layers_[i]) + "): ";
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, DenseLayer>) {
            if (l.in != current.size()) {
              throw std::invalid_argument(
                  where + "expects " + std::to_string(l.in) +
                  " inputs but receives " + std::to_string(current.size()));
            }
            if (l.weights.size() != std::size_t{l.in} * l.out ||
                l.bias.size() != l.out) {
              throw std::invalid_argument(where + "parameter size mismatch");
            }
            current = {l.out, 1, 1};
            spatial = false;
          } else if constexpr (std::is_same_v<T, ReluLayer>) {
            if (l.size != current.size()) {
              throw std::invalid_argument(
                  where + "size " + std::to_string(l.size) +
                  " does not match " + std::to_string(current.size()));
            }
          } else {
            if (!spatial || !(l.in == current)) {
              throw std::invalid_argument(where + "input shape " +
                                          l.in.str() + " does not match " +
                                          current.str());
            }
            if (l.kernel == 0 || l.kernel > l.in.width ||
                l.kernel > l.in.height || l.filters == 0) {
              throw std::invalid_argument(where + "bad kernel/filter count");
            }
            if (l.weights.size() != std::size_t{l.filters} * l.kernel *
                                        l.kernel * l.in.channels ||
                l.bias.size() != l.filters) {
              throw std::invalid_argument(where + "parameter size mismatch");
            }
            current = l.out_shape();
          }
        },
        layers_[i]);
  }
  if (current.size() != static_cast<std::size_t>(classes_)) {
    throw std::invalid_argument("final layer emits " +
                                std::to_string(current.size()) +
                                " values for " + std::to_string(classes_) +
                                " classes");
  }
}

namespace {

DenseLayer make_dense(std::uint32_t in, std::uint32_t out) {
  return DenseLayer{in, out, std::vector<double>(std::size_t{in} * out, 0.0),
                    std::vector<double>(out, 0.0)};
}

}  // namespace

Classifier Classifier::linear(Shape input, int classes) {
  const auto k = static_cast<std::uint32_t>(classes);
  return Classifier(input, classes,
                    {make_dense(static_cast<std::uint32_t>(input.size()), k)});
}

Classifier Classifier::mlp(Shape input, int classes, std::uint32_t hidden) {
  const auto k = static_cast<std::uint32_t>(classes);
  const auto n = static_cast<std::uint32_t>(input.size());
  return Classifier(input, classes,
                    {make_dense(n, hidden), ReluLayer{hidden},
                     make_dense(hidden, k)});
}

Classifier Classifier::conv(Shape input, int classes, std::uint32_t filters,
                            std::uint32_t kernel, std::uint32_t hidden) {
  const auto k = static_cast<std::uint32_t>(classes);
  ConvLayer c{input, filters, kernel,
              std::vector<double>(
                  std::size_t{filters} * kernel * kernel * input.channels, 0.0),
              std::vector<double>(filters, 0.0)};
  const auto flat = static_cast<std::uint32_t>(c.out_shape().size());
  return Classifier(input, classes,
                    {c, ReluLayer{flat}, make_dense(flat, hidden),
                     ReluLayer{hidden}, make_dense(hidden, k)});
}

void Classifier::init_weights(Rng& rng) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const bool last = i + 1 == layers_.size();
    std::visit(
        [&](auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (!std::is_same_v<T, ReluLayer>) {
            double fan_in;
            if constexpr (std::is_same_v<T, DenseLayer>) {
              fan_in = l.in;
            } else {
              fan_in = double(l.kernel) * l.kernel * l.in.channels;
            }
            const double std = std::sqrt((last ? 1.0 : 2.0) / fan_in);
            for (double& w : l.weights) w = std * rng.normal();
            std::fill(l.bias.begin(), l.bias.end(), 0.0);
          }
        },
        layers_[i]);
  }
}

std::size_t Classifier::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& layer : layers_) {
    std::visit(
        [&](const auto& l) {
          if constexpr (!std::is_same_v<std::decay_t<decltype(l)>, ReluLayer>) {
            n += l.weights.size() + l.bias.size();
          }
        },
        layer);
  }
  return n;
}

void Classifier::check_input(const Tensor& x) const {
  check_same_shape(x.shape(), input_, "classifier input");
}

void Classifier::check_label(int label) const {
  if (label < 0 || label >= classes_) {
    throw std::invalid_argument("label " + std::to_string(label) +
                                " out of range [0, " +
                                std::to_string(classes_) + ")");
  }
}

std::vector<double> Classifier::logits(const Tensor& x) const {
  check_input(x);
  std::vector<double> cur(x.values().begin(), x.values().end());
  std::vector<double> next;
  for (const Layer& layer : layers_) {
    forward_layer(layer, cur, next);
    std::swap(cur, next);
  }
  return cur;
}

std::vector<double> Classifier::probabilities(const Tensor& x) const {
  std::vector<double> p = logits(x);
  softmax_inplace(p);
  return p;
}

double Classifier::cross_entropy(const Tensor& x, int label) const {
  check_label(label);
  return cross_entropy_from(probabilities(x), label);
}

Tensor Classifier::loss_gradient(const Tensor& x, int label) const {
  Tensor grad;
  backward(x, label, nullptr, &grad);
  return grad;
}

double Classifier::backward(const Tensor& x, int label,
                            std::vector<Layer>* param_grads,
                            Tensor* input_grad) const {
  check_input(x);
  check_label(label);
  std::vector<std::vector<double>> acts(layers_.size() + 1);
  acts[0].assign(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    forward_layer(layers_[i], acts[i], acts[i + 1]);
  }
  std::vector<double> delta = acts.back();
  softmax_inplace(delta);
  const double loss = cross_entropy_from(delta, label);
  delta[static_cast<std::size_t>(label)] -= 1.0;

  const bool need_input = input_grad != nullptr;
  std::vector<double> din;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    Layer* g = param_grads ? &(*param_grads)[i] : nullptr;
    if (i == 0 && !need_input) {
      if (g) backward_layer(layers_[0], acts[0], delta, din, g);
      break;
    }
    backward_layer(layers_[i], acts[i], delta, din, g);
    std::swap(delta, din);
  }
  if (need_input) {
    if (layers_.empty()) {
      *input_grad = Tensor(input_);
    } else {
      *input_grad = Tensor(input_, std::move(delta));
    }
  }
  return loss;
}

std::vector<Layer> Classifier::zero_gradients() const {
  std::vector<Layer> grads = layers_;
  for (Layer& layer : grads) {
    std::visit(
        [](auto& l) {
          if constexpr (!std::is_same_v<std::decay_t<decltype(l)>, ReluLayer>) {
            std::fill(l.weights.begin(), l.weights.end(), 0.0);
            std::fill(l.bias.begin(), l.bias.end(), 0.0);
          }
        },
        layer);
  }
  return grads;
}

void Classifier::apply_update(const std::vector<Layer>& grads, double scale) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::visit(
        [&](auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (!std::is_same_v<T, ReluLayer>) {
            const T& g = std::get<T>(grads[i]);
            for (std::size_t j = 0; j < l.weights.size(); ++j) {
              l.weights[j] += scale * g.weights[j];
            }
            for (std::size_t j = 0; j < l.bias.size(); ++j) {
              l.bias[j] += scale * g.bias[j];
            }
          }
        },
        layers_[i]);
  }
}

bool Classifier::operator==(const Classifier& other) const {
  return input_ == other.input_ && classes_ == other.classes_ &&
         layers_ == other.layers_;
}

namespace {

constexpr char kModelMagic[4] = {'C', 'W', 'M', '1'};
constexpr std::uint8_t kModelVersion = 1;

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  for (double d : v) le::put_f64(out, d);
}

std::vector<double> get_doubles(std::istream& in, std::size_t n,
                                const std::string& what) {
  std::vector<double> v(n);
  for (double& d : v) d = le::get_f64(in, what.c_str());
  return v;
}

}  // namespace

void write_model(std::ostream& out, const Classifier& model) {
  out.write(kModelMagic, 4);
  out.put(static_cast<char>(kModelVersion));
  le::put_u32(out, model.input_shape().width);
  le::put_u32(out, model.input_shape().height);
  le::put_u32(out, model.input_shape().channels);
  le::put_u32(out, static_cast<std::uint32_t>(model.num_classes()));
  le::put_u32(out, static_cast<std::uint32_t>(model.layers().size()));
  for (const Layer& layer : model.layers()) {
    out.put(static_cast<char>(layer.index() + 1));
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, DenseLayer>) {
            le::put_u32(out, l.in);
            le::put_u32(out, l.out);
            put_doubles(out, l.weights);
            put_doubles(out, l.bias);
          } else if constexpr (std::is_same_v<T, ReluLayer>) {
            le::put_u32(out, l.size);
          } else {
            le::put_u32(out, l.in.width);
            le::put_u32(out, l.in.height);
            le::put_u32(out, l.in.channels);
            le::put_u32(out, l.filters);
            le::put_u32(out, l.kernel);
            put_doubles(out, l.weights);
            put_doubles(out, l.bias);
          }
        },
        layer);
  }
}

Classifier read_model(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0) {
    throw FormatError("not a CWM1 model file (bad magic)");
  }
  const int version = in.get();
  if (version == std::char_traits<char>::eof()) {
    throw FormatError("truncated input while reading model version");
  }
  if (version != kModelVersion) {
    throw FormatError("unsupported model version " + std::to_string(version));
  }
  Shape input;
  input.width = le::get_u32(in, "model input width");
  input.height = le::get_u32(in, "model input height");
  input.channels = le::get_u32(in, "model input channels");
  const std::uint32_t classes = le::get_u32(in, "model class count");
  const std::uint32_t count = le::get_u32(in, "model layer count");
  constexpr std::uint32_t kMaxDim = 1u << 20;
  if (input.size() == 0 || input.size() > kMaxDim || classes == 0 ||
      classes > kMaxDim || count > 1024) {
    throw FormatError("corrupt model header");
  }
  std::vector<Layer> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string where = "layer " + std::to_string(i);
    const int tag = in.get();
    if (tag == std::char_traits<char>::eof()) {
      throw FormatError("truncated input while reading " + where + " kind");
    }
    auto dim = [&](const char* name) {
      std::uint32_t v = le::get_u32(in, (where + " " + name).c_str());
      if (v == 0 || v > kMaxDim) {
        throw FormatError(where + ": implausible " + name + " " +
                          std::to_string(v));
      }
      return v;
    };
    try {
      if (tag == 1) {
        DenseLayer l;
        l.in = dim("in");
        l.out = dim("out");
        l.weights = get_doubles(in, std::size_t{l.in} * l.out, where);
        l.bias = get_doubles(in, l.out, where);
        layers.emplace_back(std::move(l));
      } else if (tag == 2) {
        layers.emplace_back(ReluLayer{dim("size")});
      } else if (tag == 3) {
        ConvLayer l;
        l.in.width = dim("width");
        l.in.height = dim("height");
        l.in.channels = dim("channels");
        l.filters = dim("filters");
        l.kernel = dim("kernel");
        if (l.kernel > l.in.width || l.kernel > l.in.height) {
          throw FormatError(where + ": kernel larger than input");
        }
        l.weights = get_doubles(
            in, std::size_t{l.filters} * l.kernel * l.kernel * l.in.channels,
            where);
        l.bias = get_doubles(in, l.filters, where);
        layers.emplace_back(std::move(l));
      } else {
        throw FormatError(where + ": unknown layer kind " +
                          std::to_string(tag));
      }
    } catch (const FormatError& e) {
      std::string msg = e.what();
      if (msg.find(where) == std::string::npos) msg = where + ": " + msg;
      throw FormatError(msg);
    }
  }
  try {
    return Classifier(input, static_cast<int>(classes), std::move(layers));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("dimension mismatch: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Classifier& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_model(out, model);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Classifier load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_model(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace cw
