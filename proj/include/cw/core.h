#ifndef CW_CORE_H_
#define CW_CORE_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cw {

struct Shape {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(width) * height * channels;
  }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Real-valued tensor in row-major (h, w, c) order. Used for perturbations,
// gradients and unconstrained evaluation points.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }
  const std::vector<double>& data() const { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  double norm() const;
  double max_abs() const;
  bool is_zero() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double scale);

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(double scale, Tensor a);

using Perturbation = Tensor;

// A tensor whose every element lies in [0, 1].
class Image {
 public:
  Image() = default;
  // Throws std::invalid_argument if any element is outside [0, 1] or NaN.
  explicit Image(Tensor pixels);
  Image(Shape shape, std::vector<double> data);

  static Image clamped(Tensor pixels);

  const Tensor& tensor() const { return pixels_; }
  const Shape& shape() const { return pixels_.shape(); }
  std::size_t size() const { return pixels_.size(); }
  std::span<const double> values() const { return pixels_.values(); }
  double operator[](std::size_t i) const { return pixels_[i]; }

  bool operator==(const Image&) const = default;

 private:
  Tensor pixels_;
};

inline Tensor operator-(const Image& a, const Image& b) {
  return a.tensor() - b.tensor();
}
inline Tensor operator+(const Image& a, const Tensor& z) {
  return a.tensor() + z;
}

// Deterministic generator: mt19937_64 for bits, with the uniform and normal
// transforms written out so draws do not depend on the standard library
// vendor's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  // Uniform in [0, 1), 53 bits of precision.
  double uniform();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  // Independent child stream; does not disturb this generator.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

void check_same_shape(const Shape& a, const Shape& b, const char* what);

double l2_distance(const Image& a, const Image& b);
double linf_distance(const Image& a, const Image& b);

// Per-element clamp to [anchor - eps, anchor + eps] intersected with [0, 1].
Image clip_to_ball(const Tensor& candidate, const Image& anchor, double eps);

// clip_to_ball(from + step * direction, anchor, eps): one iterative update.
Image take_step(const Image& from, const Tensor& direction, double step,
                const Image& anchor, double eps);

Perturbation gaussian_like(const Shape& shape, double s, Rng& rng);

// z / ||z||_2, or zero when ||z||_2 <= 1e-12. Returns z untouched when it is
// already unit length, so the map is idempotent bit for bit.
Perturbation unit_direction(const Perturbation& z);

// Farthest point of the unit box from x, as a distance: the sentinel used
// for failed attacks.
double worst_case_distance(const Image& x);

}  // namespace cw

#endif  // CW_CORE_H_
