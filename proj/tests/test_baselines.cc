#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cw/baselines.h"
#include "cw/dataset.h"
#include "cw/training.h"
#include "support.h"

using cw::BaselineConfig;
using cw::Classifier;
using cw::Image;
using cw::Rng;
using cw::Shape;
using cw::SubstituteOracle;
using cw::TargetOracle;
using cw::Tensor;

namespace {

const Shape kTwo{2, 1, 1};

// Target that never changes its mind, so iterative attacks run all T steps.
cwtest::FunctionModel stubborn(Shape shape, int classes = 2) {
  return cwtest::FunctionModel(shape, classes, [classes](const Tensor&) {
    std::vector<double> p(std::size_t(classes), 0.1 / (classes - 1));
    p[0] = 0.9;
    return p;
  });
}

cwtest::GradientModel constant_gradient(Shape shape, std::vector<double> g) {
  return cwtest::GradientModel(shape, 2, [shape, g](const Tensor&, int) {
    return Tensor(shape, g);
  });
}

BaselineConfig cfg_with(int iterations, double alpha = 0.05,
                        double eps = 0.3) {
  BaselineConfig c;
  c.iterations = iterations;
  c.alpha = alpha;
  c.eps = eps;
  return c;
}

void check_in_ball(const cw::AttackResult& r, const Image& x, double eps) {
  for (const Image& it : r.iterates) {
    CHECK(cw::linf_distance(it, x) <= eps + 1e-12);
    for (double v : it.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

}  // namespace

TEST_CASE("fgsm on one pixel moves 0.5 to 0.8") {
  auto sub_model = constant_gradient(cwtest::pixel(), {1.0});
  auto target = cwtest::threshold_model(0.75);
  SubstituteOracle sub(sub_model);
  TargetOracle t(target, std::nullopt);
  const Image x = cwtest::pixel_image(0.5);
  const cw::AttackResult r = cw::fgsm(x, 0, sub, t, 0.3);
  CHECK(r.success);
  REQUIRE(r.adversarial);
  CHECK((*r.adversarial)[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(r.queries == 1);
  CHECK(r.l2 == doctest::Approx(0.3));
}

TEST_CASE("zero gradients leave x alone and fail") {
  auto sub_model = constant_gradient(kTwo, {0.0, 0.0});
  auto target = stubborn(kTwo);
  SubstituteOracle sub(sub_model);
  const Image x(kTwo, {0.4, 0.6});
  {
    TargetOracle t(target, std::nullopt);
    const auto r = cw::fgsm(x, 0, sub, t, 0.3);
    CHECK_FALSE(r.success);
    CHECK(r.iterates.back() == x);
    CHECK(r.queries == 1);
  }
  for (int method = 0; method < 3; ++method) {
    TargetOracle t(target, std::nullopt);
    Rng rng(1);
    const BaselineConfig c = cfg_with(5);
    const auto r = method == 0   ? cw::i_fgsm(x, 0, sub, t, c)
                   : method == 1 ? cw::mi_fgsm(x, 0, sub, t, c)
                                 : cw::vr_igsm(x, 0, sub, t, c, rng);
    CHECK_FALSE(r.success);
    for (const Image& it : r.iterates) CHECK(it == x);
    CHECK(r.queries == 5);
  }
}

TEST_CASE("one-step I-FGSM is FGSM with step alpha") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    Classifier m = cwtest::random_classifier(trial, {4, 4, 1}, 3, rng);
    SubstituteOracle sub(m);
    auto target = stubborn({4, 4, 1}, 3);
    const Image x = cwtest::random_image({4, 4, 1}, rng);
    TargetOracle t1(target, std::nullopt);
    TargetOracle t2(target, std::nullopt);
    const auto a = cw::i_fgsm(x, 0, sub, t1, cfg_with(1, 0.07));
    const auto b = cw::fgsm(x, 0, sub, t2, 0.07);
    CHECK(a.iterates.back() == b.iterates.back());
    CHECK(a.queries == 1);
  }
}

TEST_CASE("I-FGSM on a quadratic bowl follows the hand unroll") {
  // Loss rises toward c = (1.0, 0.25): gradient (c - x).
  const double c0 = 1.0, c1 = 0.25;
  cwtest::GradientModel bowl(kTwo, 2, [&](const Tensor& x, int) {
    return Tensor(kTwo, {c0 - x[0], c1 - x[1]});
  });
  auto target = stubborn(kTwo);
  SubstituteOracle sub(bowl);
  TargetOracle t(target, std::nullopt);
  const double x0 = 0.2, x1 = 0.3, alpha = 0.12, eps = 0.3;
  const auto r = cw::i_fgsm(Image(kTwo, {x0, x1}), 0, sub, t,
                            cfg_with(3, alpha, eps));
  REQUIRE(r.iterates.size() == 4);

  double a = x0, b = x1;
  for (int step = 1; step <= 3; ++step) {
    const double g0 = c0 - a, g1 = c1 - b;
    const double n = std::sqrt(g0 * g0 + g1 * g1);
    a = std::clamp(a + alpha * g0 / n, std::max(0.0, x0 - eps),
                   std::min(1.0, x0 + eps));
    b = std::clamp(b + alpha * g1 / n, std::max(0.0, x1 - eps),
                   std::min(1.0, x1 + eps));
    CHECK(r.iterates[std::size_t(step)][0] == doctest::Approx(a).epsilon(1e-14));
    CHECK(r.iterates[std::size_t(step)][1] == doctest::Approx(b).epsilon(1e-14));
  }
  // The third step is cut by the ball face.
  CHECK(r.iterates[3][0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r.queries == 3);
}

TEST_CASE("MI-FGSM with zero momentum is I-FGSM bit for bit") {
  Rng rng(32);
  for (int trial = 0; trial < 6; ++trial) {
    Classifier m = cwtest::random_classifier(trial, {4, 4, 2}, 3, rng);
    SubstituteOracle sub(m);
    auto target = stubborn({4, 4, 2}, 3);
    const Image x = cwtest::random_image({4, 4, 2}, rng);
    BaselineConfig c = cfg_with(8);
    c.momentum = 0.0;
    TargetOracle t1(target, std::nullopt);
    TargetOracle t2(target, std::nullopt);
    CHECK(cw::mi_fgsm(x, 0, sub, t1, c).iterates ==
          cw::i_fgsm(x, 0, sub, t2, c).iterates);
  }
}

TEST_CASE("momentum accumulates a geometric series") {
  const Tensor g(Shape{3, 1, 1}, {2.0, -1.0, 2.0});
  for (double mu : {0.0, 0.5, 0.9, 1.0}) {
    Tensor m(g.shape());
    for (int t = 1; t <= 6; ++t) {
      m = cw::momentum_step(m, g, mu);
      const double expect =
          mu == 1.0 ? double(t) : (1.0 - std::pow(mu, t)) / (1.0 - mu);
      CHECK(m.norm() == doctest::Approx(expect).epsilon(1e-12));
      const Tensor u = cw::unit_direction(m);
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(u[k] == doctest::Approx(g[k] / 3.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("vr-IGSM with s = 0 is I-FGSM bit for bit") {
  Rng rng(33);
  for (int trial = 0; trial < 6; ++trial) {
    Classifier m = cwtest::random_classifier(trial, {4, 4, 2}, 3, rng);
    SubstituteOracle sub(m);
    auto target = stubborn({4, 4, 2}, 3);
    const Image x = cwtest::random_image({4, 4, 2}, rng);
    BaselineConfig c = cfg_with(8);
    c.s = 0.0;
    c.samples = 4;
    TargetOracle t1(target, std::nullopt);
    TargetOracle t2(target, std::nullopt);
    Rng r(5);
    CHECK(cw::vr_igsm(x, 0, sub, t1, c, r).iterates ==
          cw::i_fgsm(x, 0, sub, t2, c).iterates);
  }
}

TEST_CASE("vr-IGSM step uses the mean of its two sampled gradients") {
  Rng rng(34);
  Classifier m = cwtest::random_classifier(1, {3, 3, 1}, 3, rng);
  SubstituteOracle sub(m);
  auto target = stubborn({3, 3, 1}, 3);
  const Image x = cwtest::random_image({3, 3, 1}, rng);
  BaselineConfig c = cfg_with(1, 0.1);
  c.s = 0.2;
  c.samples = 2;
  TargetOracle t(target, std::nullopt);
  Rng r(77);
  const auto res = cw::vr_igsm(x, 1, sub, t, c, r);

  Rng hand(77);
  const Tensor xi1 = cw::gaussian_like(x.shape(), 0.2, hand);
  const Tensor xi2 = cw::gaussian_like(x.shape(), 0.2, hand);
  const Tensor g1 = m.loss_gradient(x + xi1, 1);
  const Tensor g2 = m.loss_gradient(x + xi2, 1);
  Tensor mean(x.shape());
  for (std::size_t k = 0; k < mean.size(); ++k) mean[k] = 0.5 * (g1[k] + g2[k]);
  const double n = mean.norm();
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double expect = std::clamp(x[k] + 0.1 * mean[k] / n,
                                     std::max(0.0, x[k] - 0.3),
                                     std::min(1.0, x[k] + 0.3));
    CHECK(std::fabs(res.iterates.back()[k] - expect) < 1e-12);
  }

  Rng again(77);
  TargetOracle t2(target, std::nullopt);
  CHECK(cw::vr_igsm(x, 1, sub, t2, c, again).iterates == res.iterates);
}

TEST_CASE("iterative attacks stop at the first fooling iterate") {
  auto sub_model = constant_gradient(cwtest::pixel(), {1.0});
  auto target = cwtest::threshold_model(0.62);
  SubstituteOracle sub(sub_model);
  TargetOracle t(target, std::nullopt);
  const auto r = cw::i_fgsm(cwtest::pixel_image(0.5), 0, sub, t, cfg_with(10));
  CHECK(r.success);
  CHECK(r.queries == 3);
  CHECK((*r.adversarial)[0] == doctest::Approx(0.65));
}

TEST_CASE("attacks return gracefully when the budget runs out") {
  auto sub_model = constant_gradient(kTwo, {1.0, 0.5});
  auto target = stubborn(kTwo);
  SubstituteOracle sub(sub_model);
  const Image x(kTwo, {0.4, 0.6});
  TargetOracle t(target, 3);
  const auto r = cw::i_fgsm(x, 0, sub, t, cfg_with(10));
  CHECK(r.budget_exhausted);
  CHECK_FALSE(r.success);
  CHECK(r.queries == 3);
  TargetOracle empty(target, 0);
  const auto f = cw::fgsm(x, 0, sub, empty, 0.3);
  CHECK(f.budget_exhausted);
  CHECK_FALSE(f.success);
  CHECK(f.queries == 0);
}

TEST_CASE("random attacks stay in the ball and report consistent success") {
  Rng rng(35);
  for (int trial = 0; trial < 24; ++trial) {
    const Shape shape{4, 4, 1};
    Classifier sub_model = cwtest::random_classifier(trial, shape, 3, rng);
    Classifier target_model = cwtest::random_classifier(trial + 1, shape, 3, rng);
    SubstituteOracle sub(sub_model);
    const Image x = cwtest::random_image(shape, rng);
    const int y = TargetOracle(target_model, std::nullopt).peek(x.tensor()).label;
    BaselineConfig c = cfg_with(1 + int(rng.below(8)), 0.02 + 0.1 * rng.uniform(),
                                0.05 + 0.4 * rng.uniform());
    TargetOracle t(target_model, std::nullopt);
    Rng r{std::uint64_t(trial)};
    cw::AttackResult res;
    switch (trial % 4) {
      case 0: res = cw::fgsm(x, y, sub, t, c.eps); break;
      case 1: res = cw::i_fgsm(x, y, sub, t, c); break;
      case 2: res = cw::mi_fgsm(x, y, sub, t, c); break;
      default: res = cw::vr_igsm(x, y, sub, t, c, r); break;
    }
    check_in_ball(res, x, c.eps);
    CHECK(res.queries == t.ledger().used());
    if (trial % 4 == 0) {
      CHECK(res.queries == 1);
    } else {
      CHECK(res.queries <= c.iterations);
    }
    if (res.success) {
      REQUIRE(res.adversarial);
      CHECK(t.peek(res.adversarial->tensor()).label != y);
      CHECK(res.l2 == cw::l2_distance(x, *res.adversarial));
    }
  }
}

TEST_CASE("bad baseline configs are rejected") {
  CHECK_THROWS_AS(cfg_with(0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(cfg_with(1, 0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(cfg_with(1, 0.1, 0.0).validate(), std::invalid_argument);
  BaselineConfig c;
  c.samples = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = BaselineConfig{};
  c.momentum = -1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("white-box FGSM fools the blob model") {
  const cw::Dataset d = cw::make_blobs(cw::BlobSpec{}, 5);
  Classifier c = Classifier::linear(d.shape, 2);
  Rng init(3);
  c.init_weights(init);
  cw::TrainOptions o;
  o.epochs = 50;
  Rng rng(9);
  const Classifier m = cw::train(c, d, o, rng).model;
  SubstituteOracle sub(m);
  int tried = 0, fooled = 0;
  for (const cw::Example& e : d.test) {
    TargetOracle t(m, std::nullopt);
    if (t.peek(e.image.tensor()).label != e.label) continue;
    ++tried;
    fooled += cw::fgsm(e.image, e.label, sub, t, 0.3).success;
  }
  REQUIRE(tried > 0);
  CHECK(double(fooled) / tried >= 0.9);
}
