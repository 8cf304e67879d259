#include "cw/tensor_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace cw {

namespace le {

namespace {

template <typename U>
void put_bytes(std::ostream& out, U bits) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U get_bytes(std::istream& in, const char* what) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits |= static_cast<U>(buf[i]) << (8 * i);
  }
  return bits;
}

}  // namespace

void put_u32(std::ostream& out, std::uint32_t v) { put_bytes(out, v); }
void put_f32(std::ostream& out, float v) {
  put_bytes(out, std::bit_cast<std::uint32_t>(v));
}
void put_f64(std::ostream& out, double v) {
  put_bytes(out, std::bit_cast<std::uint64_t>(v));
}
std::uint32_t get_u32(std::istream& in, const char* what) {
  return get_bytes<std::uint32_t>(in, what);
}
float get_f32(std::istream& in, const char* what) {
  return std::bit_cast<float>(get_bytes<std::uint32_t>(in, what));
}
double get_f64(std::istream& in, const char* what) {
  return std::bit_cast<double>(get_bytes<std::uint64_t>(in, what));
}

}  // namespace le

namespace {
constexpr char kMagic[4] = {'C', 'W', 'T', '1'};
}

void write_tensor(std::ostream& out, const Tensor& t) {
  out.write(kMagic, 4);
  le::put_u32(out, t.shape().width);
  le::put_u32(out, t.shape().height);
  le::put_u32(out, t.shape().channels);
  for (double v : t.values()) le::put_f32(out, static_cast<float>(v));
}

Tensor read_tensor(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("not a CWT1 tensor file (bad magic)");
  }
  Shape shape;
  shape.width = le::get_u32(in, "tensor width");
  shape.height = le::get_u32(in, "tensor height");
  shape.channels = le::get_u32(in, "tensor channels");
  if (shape.size() == 0 || shape.size() > (1u << 28)) {
    throw FormatError("implausible tensor shape " + shape.str());
  }
  std::vector<double> data(shape.size());
  for (double& v : data) v = le::get_f32(in, "tensor data");
  return Tensor(shape, std::move(data));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_tensor(out, t);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_tensor(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Image load_image(const std::filesystem::path& path) {
  return Image(load_tensor(path));
}

Tensor round_to_float(const Tensor& t) {
  Tensor out = t;
  for (double& v : out.values()) v = static_cast<float>(v);
  return out;
}

Image round_to_float(const Image& img) {
  return Image(round_to_float(img.tensor()));
}

}  // namespace cw
