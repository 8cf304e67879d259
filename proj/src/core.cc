#include "cw/core.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cw {

std::string Shape::str() const {
  return std::to_string(width) + "x" + std::to_string(height) + "x" +
         std::to_string(channels);
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(shape), data_(shape.size(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw std::invalid_argument("tensor data length " +
                                std::to_string(data_.size()) +
                                " does not match shape " + shape_.str());
  }
}

double Tensor::norm() const {
  double sum = 0.0;
  for (double v : data_) sum += v * v;
  return std::sqrt(sum);
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Tensor::is_zero() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return v == 0.0; });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  check_same_shape(shape_, other.shape_, "tensor +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  check_same_shape(shape_, other.shape_, "tensor -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(double scale, Tensor a) { return a *= scale; }

Image::Image(Tensor pixels) : pixels_(std::move(pixels)) {
  for (std::size_t i = 0; i < pixels_.size(); ++i) {
    double v = pixels_[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("image element " + std::to_string(i) +
                                  " = " + std::to_string(v) +
                                  " is outside [0, 1]");
    }
  }
}

Image::Image(Shape shape, std::vector<double> data)
    : Image(Tensor(shape, std::move(data))) {}

Image Image::clamped(Tensor pixels) {
  for (double& v : pixels.values()) v = std::clamp(v, 0.0, 1.0);
  return Image(std::move(pixels));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below(0)");
  // Rejection sampling keeps the result unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; 1 - uniform() lies in (0, 1] so the log is finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Rng Rng::fork(std::uint64_t stream) const {
  return Rng(mix_seed(seed_, stream));
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word.
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void check_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                a.str() + " vs " + b.str());
  }
}

double l2_distance(const Image& a, const Image& b) {
  check_same_shape(a.shape(), b.shape(), "l2_distance");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double linf_distance(const Image& a, const Image& b) {
  check_same_shape(a.shape(), b.shape(), "linf_distance");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

Image clip_to_ball(const Tensor& candidate, const Image& anchor, double eps) {
  check_same_shape(candidate.shape(), anchor.shape(), "clip_to_ball");
  if (!(eps >= 0.0)) {
    throw std::invalid_argument("clip_to_ball: eps must be non-negative");
  }
  std::vector<double> out(candidate.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double lo = std::max(0.0, anchor[i] - eps);
    double hi = std::min(1.0, anchor[i] + eps);
    out[i] = std::clamp(candidate[i], lo, hi);
  }
  return Image(candidate.shape(), std::move(out));
}

Image take_step(const Image& from, const Tensor& direction, double step,
                const Image& anchor, double eps) {
  check_same_shape(from.shape(), direction.shape(), "take_step");
  Tensor moved = from.tensor();
  for (std::size_t i = 0; i < moved.size(); ++i) {
    moved[i] += step * direction[i];
  }
  return clip_to_ball(moved, anchor, eps);
}

Perturbation gaussian_like(const Shape& shape, double s, Rng& rng) {
  if (!(s >= 0.0)) {
    throw std::invalid_argument("gaussian_like: s must be non-negative");
  }
  Tensor out(shape);
  if (s == 0.0) return out;
  for (double& v : out.values()) v = s * rng.normal();
  return out;
}

Perturbation unit_direction(const Perturbation& z) {
  constexpr double kTolerance = 1e-12;
  double n = z.norm();
  if (n <= kTolerance) return Tensor(z.shape());
  if (std::abs(n - 1.0) <= kTolerance) return z;
  Tensor out = z;
  for (double& v : out.values()) v /= n;
  return out;
}

double worst_case_distance(const Image& x) {
  double sum = 0.0;
  for (double v : x.values()) {
    double d = std::max(v, 1.0 - v);
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace cw
