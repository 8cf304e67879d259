#ifndef CW_TENSOR_IO_H_
#define CW_TENSOR_IO_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "cw/core.h"

namespace cw {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "CWT1", then W, H, C as little-endian uint32, then W*H*C float32 values
// in row-major (h, w, c) order. Values are narrowed to float on write.
void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);
Image load_image(const std::filesystem::path& path);

// Rounds every element through float32, the precision of the file format.
Tensor round_to_float(const Tensor& t);
Image round_to_float(const Image& img);

namespace le {
void put_u32(std::ostream& out, std::uint32_t v);
void put_f32(std::ostream& out, float v);
void put_f64(std::ostream& out, double v);
std::uint32_t get_u32(std::istream& in, const char* what);
float get_f32(std::istream& in, const char* what);
double get_f64(std::istream& in, const char* what);
}  // namespace le

}  // namespace cw

#endif  // CW_TENSOR_IO_H_
