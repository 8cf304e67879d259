#ifndef CW_DATASET_H_
#define CW_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cw/core.h"

namespace cw {

struct Example {
  Image image;
  int label = 0;
};

struct Dataset {
  Shape shape;
  int classes = 0;
  std::vector<Example> train;
  std::vector<Example> test;

  // Throws std::invalid_argument on mixed shapes or out-of-range labels.
  void validate() const;
};

// K-class images: a shared smooth background plus a per-class Gaussian
// prototype offset, with per-sample Gaussian pixel noise.
struct PrototypeSpec {
  Shape shape{8, 8, 3};
  int classes = 10;
  int train_per_class = 200;
  int test_per_class = 100;
  // Std of each class prototype's offset from the shared background.
  double prototype_scale = 0.03;
  // Std of per-sample pixel noise.
  double noise = 0.06;
};

Dataset make_prototype_dataset(const PrototypeSpec& spec, std::uint64_t seed);

// Two linearly separable classes. Every image is a mid-grey background
// moved by a signed amount m * d along a fixed dense direction d (|d| = 1),
// with m drawn uniformly from [min_margin, max_margin] and the class given
// by the sign, plus noise orthogonal to d.
struct BlobSpec {
  Shape shape{4, 4, 1};
  int train_per_class = 100;
  int test_per_class = 50;
  double min_margin = 0.05;
  double max_margin = 0.25;
  double noise = 0.05;
};

Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed);

// <dir>/{train,test}/NNNNNN.cwt plus a labels.txt per split (one integer
// per line, line i labels image i). Pixels are stored as float32.
void save_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace cw

#endif  // CW_DATASET_H_
