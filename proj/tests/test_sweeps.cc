#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "cw/harness.h"

using cw::Method;

namespace {

struct Fixture {
  cw::Dataset data = cw::make_prototype_dataset(cw::PrototypeSpec{}, 1);
  cw::Zoo zoo = cw::train_zoo(data, cw::ZooOptions{});
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

std::vector<double> medians(const cw::SweepResult& s) {
  std::vector<double> out;
  std::ostringstream msg;
  for (const cw::SweepPoint& p : s.points) {
    out.push_back(p.stats.median);
    msg << s.parameter << "=" << p.value << " " << p.stats.median << "  ";
  }
  MESSAGE(msg.str());
  return out;
}

// Medians of ~100 images move by about a percent between nearby settings,
// so "non-increasing" is checked up to this fraction of the first median.
constexpr double kNoise = 0.02;

}  // namespace

TEST_CASE("T sweep is non-increasing up to noise with shrinking gains") {
  cw::AttackConfig c;
  c.images_per_class = 10;
  const auto m = medians(cw::run_sweep(fixture().zoo, fixture().data, c, "T",
                                       {4, 8, 12, 16, 20}, Method::kCurlsWhey,
                                       "mlp", "conv", 0));
  for (std::size_t i = 1; i < m.size(); ++i) {
    CHECK(m[i] <= m[i - 1] + kNoise * m[0]);
  }
  CHECK(m.back() <= m.front());
  CHECK(m[3] - m[4] < m[0] - m[1]);
}

TEST_CASE("bs sweep is weakly decreasing up to noise") {
  cw::AttackConfig c;
  c.images_per_class = 10;
  const auto m = medians(cw::run_sweep(fixture().zoo, fixture().data, c, "bs",
                                       {2, 4, 6, 8, 10}, Method::kCurlsWhey,
                                       "mlp", "conv", 0));
  for (std::size_t i = 1; i < m.size(); ++i) {
    CHECK(m[i] <= m[i - 1] + kNoise * m[0]);
  }
  CHECK(m.back() <= m.front());
}
