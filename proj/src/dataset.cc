#include "cw/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cw/tensor_io.h"

namespace cw {

void Dataset::validate() const {
  if (classes < 1) throw std::invalid_argument("dataset has no classes");
  for (const auto* split : {&train, &test}) {
    for (std::size_t i = 0; i < split->size(); ++i) {
      const Example& e = (*split)[i];
      if (!(e.image.shape() == shape)) {
        throw std::invalid_argument("example " + std::to_string(i) +
                                    " has shape " + e.image.shape().str() +
                                    ", expected " + shape.str());
      }
      if (e.label < 0 || e.label >= classes) {
        throw std::invalid_argument("example " + std::to_string(i) +
                                    " has label " + std::to_string(e.label) +
                                    " outside [0, " + std::to_string(classes) +
                                    ")");
      }
    }
  }
}

namespace {

// Bilinear upsampling of a 3x3 grid of uniform values in [-1, 1].
Tensor smooth_field(const Shape& shape, Rng& rng) {
  constexpr int kGrid = 3;
  std::vector<double> grid(kGrid * kGrid * shape.channels);
  for (double& g : grid) g = 2.0 * rng.uniform() - 1.0;
  Tensor out(shape);
  for (std::uint32_t h = 0; h < shape.height; ++h) {
    const double fy = shape.height > 1
                          ? double(h) * (kGrid - 1) / (shape.height - 1)
                          : 0.0;
    const int y0 = std::min(int(fy), kGrid - 2);
    const double ty = fy - y0;
    for (std::uint32_t w = 0; w < shape.width; ++w) {
      const double fx = shape.width > 1
                            ? double(w) * (kGrid - 1) / (shape.width - 1)
                            : 0.0;
      const int x0 = std::min(int(fx), kGrid - 2);
      const double tx = fx - x0;
      for (std::uint32_t c = 0; c < shape.channels; ++c) {
        auto at = [&](int y, int x) {
          return grid[(std::size_t(y) * kGrid + x) * shape.channels + c];
        };
        const double v = (1 - ty) * ((1 - tx) * at(y0, x0) + tx * at(y0, x0 + 1)) +
                         ty * ((1 - tx) * at(y0 + 1, x0) + tx * at(y0 + 1, x0 + 1));
        out[(std::size_t(h) * shape.width + w) * shape.channels + c] = v;
      }
    }
  }
  return out;
}

Image finish(Tensor t) { return round_to_float(Image::clamped(std::move(t))); }

}  // namespace

Dataset make_prototype_dataset(const PrototypeSpec& spec, std::uint64_t seed) {
  if (spec.classes < 2 || spec.train_per_class < 1 || spec.test_per_class < 0) {
    throw std::invalid_argument("make_prototype_dataset: bad spec");
  }
  Rng rng(seed);
  Tensor background = smooth_field(spec.shape, rng);
  background *= 0.2;
  for (double& v : background.values()) v += 0.5;

  std::vector<Tensor> prototypes;
  for (int k = 0; k < spec.classes; ++k) {
    prototypes.push_back(background +
                         gaussian_like(spec.shape, spec.prototype_scale, rng));
  }

  Dataset data;
  data.shape = spec.shape;
  data.classes = spec.classes;
  auto fill = [&](std::vector<Example>& split, int per_class) {
    for (int i = 0; i < per_class; ++i) {
      for (int k = 0; k < spec.classes; ++k) {
        Tensor t = prototypes[k] + gaussian_like(spec.shape, spec.noise, rng);
        split.push_back({finish(std::move(t)), k});
      }
    }
  };
  fill(data.train, spec.train_per_class);
  fill(data.test, spec.test_per_class);
  return data;
}

Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed) {
  if (!(spec.min_margin > 0.0 && spec.max_margin >= spec.min_margin)) {
    throw std::invalid_argument("make_blobs: bad margins");
  }
  Rng rng(seed);
  const std::size_t n = spec.shape.size();
  // Alternating-sign dense direction, so no single pixel carries the class.
  Tensor direction(spec.shape);
  for (std::size_t i = 0; i < n; ++i) {
    direction[i] = (i % 2 == 0 ? 1.0 : -1.0) / std::sqrt(double(n));
  }

  Dataset data;
  data.shape = spec.shape;
  data.classes = 2;
  auto fill = [&](std::vector<Example>& split, int per_class) {
    for (int i = 0; i < per_class; ++i) {
      for (int k = 0; k < 2; ++k) {
        Tensor noise = gaussian_like(spec.shape, spec.noise, rng);
        double along = 0.0;
        for (std::size_t j = 0; j < n; ++j) along += noise[j] * direction[j];
        const double margin =
            spec.min_margin +
            (spec.max_margin - spec.min_margin) * rng.uniform();
        const double shift = (k == 1 ? margin : -margin) - along;
        Tensor t(spec.shape, 0.5);
        for (std::size_t j = 0; j < n; ++j) {
          t[j] += noise[j] + shift * direction[j];
        }
        split.push_back({finish(std::move(t)), k});
      }
    }
  };
  fill(data.train, spec.train_per_class);
  fill(data.test, spec.test_per_class);
  return data;
}

namespace {

void save_split(const std::filesystem::path& dir,
                const std::vector<Example>& split) {
  std::filesystem::create_directories(dir);
  std::ofstream labels(dir / "labels.txt");
  if (!labels) throw std::runtime_error("cannot write " + dir.string());
  for (std::size_t i = 0; i < split.size(); ++i) {
    std::ostringstream name;
    name << std::setw(6) << std::setfill('0') << i << ".cwt";
    save_tensor(dir / name.str(), split[i].image.tensor());
    labels << split[i].label << '\n';
  }
}

std::vector<Example> load_split(const std::filesystem::path& dir) {
  std::ifstream labels(dir / "labels.txt");
  if (!labels) throw std::runtime_error("missing " + (dir / "labels.txt").string());
  std::vector<Example> split;
  std::string line;
  while (std::getline(labels, line)) {
    if (line.empty()) continue;
    std::size_t used = 0;
    int label = 0;
    try {
      label = std::stoi(line, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != line.size()) {
      throw FormatError(dir.string() + "/labels.txt line " +
                        std::to_string(split.size() + 1) + ": not an integer");
    }
    std::ostringstream name;
    name << std::setw(6) << std::setfill('0') << split.size() << ".cwt";
    split.push_back({load_image(dir / name.str()), label});
  }
  return split;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& data) {
  data.validate();
  save_split(dir / "train", data.train);
  save_split(dir / "test", data.test);
  std::ofstream meta(dir / "classes.txt");
  meta << data.classes << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset data;
  std::ifstream meta(dir / "classes.txt");
  if (!(meta >> data.classes)) {
    throw FormatError("missing or corrupt " + (dir / "classes.txt").string());
  }
  data.train = load_split(dir / "train");
  data.test = load_split(dir / "test");
  if (!data.train.empty()) {
    data.shape = data.train.front().image.shape();
  } else if (!data.test.empty()) {
    data.shape = data.test.front().image.shape();
  }
  data.validate();
  return data;
}

}  // namespace cw
