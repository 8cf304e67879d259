#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cw/baselines.h"
#include "cw/curls.h"
#include "cw/dataset.h"
#include "cw/training.h"
#include "support.h"

using cw::Classifier;
using cw::CurlsConfig;
using cw::Goal;
using cw::Image;
using cw::MeanDirection;
using cw::Rng;
using cw::Shape;
using cw::SubstituteOracle;
using cw::TargetOracle;
using cw::Tensor;

namespace {

cwtest::FunctionModel stubborn(Shape shape, int classes) {
  return cwtest::FunctionModel(shape, classes, [classes](const Tensor&) {
    std::vector<double> p(std::size_t(classes), 0.1 / (classes - 1));
    p[0] = 0.9;
    return p;
  });
}

// Class 1 outside (0.3, 0.8). Inside, the class-0 loss has its minimum at
// 0.375, below x = 0.5.
cwtest::FunctionModel double_well() {
  return cwtest::FunctionModel(cwtest::pixel(), 2, [](const Tensor& t) {
    const double v = t[0];
    if (v <= 0.3 || v >= 0.8) return std::vector<double>{0.1, 0.9};
    const double p0 = 0.9 - 0.5 * (v - 0.375) * (v - 0.375);
    return std::vector<double>{p0, 1.0 - p0};
  });
}

CurlsConfig quiet(int rounds, int steps, int bs) {
  CurlsConfig c;
  c.rounds = rounds;
  c.steps = steps;
  c.search_steps = bs;
  c.s = 0.0;
  return c;
}

bool monotone_flag(const cw::RoundTrace& tr) {
  for (std::size_t i = 1; i < tr.downhill.size(); ++i) {
    if (tr.downhill[i] && !tr.downhill[i - 1]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("mean direction examples") {
  const Shape two{2, 1, 1};
  MeanDirection md(two);
  CHECK(md.count() == 0);
  CHECK(md.value().is_zero());
  md.update(Image(two, {0.0, 0.0}), Image(two, {0.3, 0.4}));
  CHECK(md.count() == 1);
  CHECK(md.value()[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(md.value()[1] == doctest::Approx(0.8).epsilon(1e-15));

  MeanDirection opp(two);
  const Image x(two, {0.5, 0.5});
  opp.update(x, Image(two, {0.8, 0.5}));
  opp.update(x, Image(two, {0.2, 0.5}));
  CHECK(opp.value().norm() < 1e-15);
  CHECK_THROWS_AS(opp.update(x, x), std::invalid_argument);
  CHECK(opp.count() == 2);
}

TEST_CASE("mean direction is the mean of unit noises") {
  Rng rng(41);
  const Shape shape{3, 3, 1};
  const Image x = cwtest::random_image(shape, rng);
  MeanDirection md(shape);
  std::vector<Tensor> units;
  for (int i = 0; i < 3; ++i) {
    const Image adv = cwtest::random_image(shape, rng);
    md.update(x, adv);
    Tensor d = adv - x;
    const double n = d.norm();
    d *= 1.0 / n;
    units.push_back(d);
  }
  for (std::size_t k = 0; k < shape.size(); ++k) {
    const double mean = (units[0][k] + units[1][k] + units[2][k]) / 3.0;
    CHECK(std::fabs(md.value()[k] - mean) < 1e-14);
  }
}

TEST_CASE("binary search on a 0.6 threshold") {
  auto target = cwtest::threshold_model(0.6);
  const Image x = cwtest::pixel_image(0.0);
  const Image far = cwtest::pixel_image(1.0);
  const Goal goal = Goal::untargeted(0);
  {
    TargetOracle t(target, std::nullopt);
    CHECK(cw::binary_search_refine(x, far, goal, t, 2)[0] == 0.75);
    CHECK(t.ledger().used() == 2);
  }
  {
    TargetOracle t(target, std::nullopt);
    CHECK(cw::binary_search_refine(x, far, goal, t, 3)[0] == 0.625);
    CHECK(t.ledger().used() == 3);
  }
  {
    TargetOracle t(target, std::nullopt);
    CHECK(cw::binary_search_refine(x, far, goal, t, 0) == far);
    CHECK(t.ledger().used() == 0);
  }
  {
    // Out of budget after one step: the last adversarial end is returned.
    TargetOracle t(target, 1);
    CHECK(cw::binary_search_refine(x, far, goal, t, 5)[0] == 1.0);
  }
}

TEST_CASE("binary search never moves away and stays adversarial") {
  Rng rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const Shape shape{3, 3, 1};
    Classifier m = cwtest::random_classifier(trial, shape, 3, rng);
    TargetOracle t(m, std::nullopt);
    const Image x = cwtest::random_image(shape, rng);
    const Image adv = cwtest::random_image(shape, rng);
    const int y = t.peek(x.tensor()).label;
    if (t.peek(adv.tensor()).label == y) continue;
    const Goal goal = Goal::untargeted(y);
    const int bs = int(rng.below(6));
    const Image r = cw::binary_search_refine(x, adv, goal, t, bs);
    CHECK(cw::l2_distance(x, r) <= cw::l2_distance(x, adv));
    CHECK(goal.reached_by(t.peek(r.tensor()).label));
    CHECK(t.ledger().used() == bs);
  }
}

TEST_CASE("trajectory B without noise or mean direction is I-FGSM") {
  Rng rng(43);
  for (int trial = 0; trial < 8; ++trial) {
    const Shape shape{4, 4, 2};
    Classifier m = cwtest::random_classifier(trial, shape, 3, rng);
    SubstituteOracle sub(m);
    auto target = stubborn(shape, 3);
    const Image x = cwtest::random_image(shape, rng);
    CurlsConfig c = quiet(1, 6, 2);
    c.mean_direction = false;
    TargetOracle t1(target, std::nullopt);
    MeanDirection md(shape);
    Rng r(1);
    const auto round = cw::curls_round(x, 0, sub, t1, c, md, r);

    cw::BaselineConfig b;
    b.iterations = c.steps;
    b.alpha = c.step_size();
    b.eps = c.eps0;
    TargetOracle t2(target, std::nullopt);
    CHECK(round.trace.trajectory_b == cw::i_fgsm(x, 0, sub, t2, b).iterates);
    CHECK_FALSE(round.adversarial);
  }
}

TEST_CASE("the descent trajectory finds the closer crossing of a double well") {
  const Image x = cwtest::pixel_image(0.5);
  Classifier sub_model = cwtest::rising_pixel_model();
  SubstituteOracle sub(sub_model);
  auto target = double_well();

  // Grid search for the nearest adversarial on each side.
  TargetOracle grid(target, std::nullopt);
  double below = 0.0, above = 1.0;
  for (int k = 0; k <= 1000; ++k) {
    const double v = k / 1000.0;
    if (grid.peek(Tensor(cwtest::pixel(), {v})).label == 0) continue;
    if (v < 0.5) below = v;
    if (v > 0.5 && above == 1.0) above = v;
  }
  REQUIRE(0.5 - below < above - 0.5);

  const CurlsConfig c = quiet(1, 4, 2);
  TargetOracle t(target, std::nullopt);
  MeanDirection md(cwtest::pixel());
  Rng r(1);
  const auto round = cw::curls_round(x, 0, sub, t, c, md, r);
  REQUIRE(round.adversarial);
  const double curls_d = cw::l2_distance(x, *round.adversarial);
  CHECK(round.trace.success_step_a);
  CHECK(round.trace.success_step_b);
  CHECK(md.count() == 2);
  CHECK(curls_d == doctest::Approx(0.25));

  // Trajectory B alone: its endpoint, refined the same way.
  REQUIRE(round.trace.success_step_b);
  const Image b_end =
      round.trace.trajectory_b[std::size_t(*round.trace.success_step_b)];
  TargetOracle t2(target, std::nullopt);
  const Image b_best = cw::binary_search_refine(x, b_end, Goal::untargeted(0),
                                                t2, c.search_steps);
  CHECK(curls_d < cw::l2_distance(x, b_best));
}

TEST_CASE("zero gradients keep both trajectories at x") {
  const Shape two{2, 1, 1};
  cwtest::GradientModel flat(two, 2,
                             [two](const Tensor&, int) { return Tensor(two); });
  SubstituteOracle sub(flat);
  auto target = stubborn(two, 2);
  TargetOracle t(target, std::nullopt);
  const Image x(two, {0.3, 0.7});
  MeanDirection md(two);
  Rng r(1);
  const auto round = cw::curls_round(x, 0, sub, t, quiet(1, 4, 2), md, r);
  CHECK_FALSE(round.adversarial);
  for (const Image& p : round.trace.trajectory_a) CHECK(p == x);
  for (const Image& p : round.trace.trajectory_b) CHECK(p == x);
  CHECK(md.count() == 0);
}

TEST_CASE("a round with a late success spends 2T + bs label queries") {
  Classifier sub_model = cwtest::rising_pixel_model();
  SubstituteOracle sub(sub_model);
  auto target = cwtest::threshold_model(0.95);
  TargetOracle t(target, std::nullopt);
  CurlsConfig c = quiet(1, 4, 3);
  c.eps0 = 0.5;
  MeanDirection md(cwtest::pixel());
  Rng r(1);
  const auto round = cw::curls_round(cwtest::pixel_image(0.5), 0, sub, t, c,
                                     md, r);
  REQUIRE(round.adversarial);
  CHECK(round.trace.success_step_b == 4);
  CHECK_FALSE(round.trace.success_step_a);
  CHECK(round.trace.label_queries == 2 * c.steps);
  // One extra query reads the start.
  CHECK(round.trace.queries == 2 * c.steps + c.search_steps + 1);
  CHECK(t.ledger().used() == round.trace.queries);
}

TEST_CASE("one round of curls_attack is one refined curls_round") {
  Rng rng(44);
  for (int trial = 0; trial < 6; ++trial) {
    const Shape shape{4, 4, 1};
    Classifier s = cwtest::random_classifier(trial, shape, 3, rng);
    Classifier m = cwtest::random_classifier(trial + 1, shape, 3, rng);
    SubstituteOracle sub(s);
    const Image x = cwtest::random_image(shape, rng);
    const int y = TargetOracle(m, std::nullopt).peek(x.tensor()).label;
    CurlsConfig c;
    c.rounds = 1;
    c.eps0 = 0.5;
    TargetOracle t1(m, std::nullopt);
    TargetOracle t2(m, std::nullopt);
    Rng r1(9);
    Rng r2(9);
    MeanDirection md(shape);
    const auto round = cw::curls_round(x, y, sub, t1, c, md, r1);
    const auto attack = cw::curls_attack(x, y, sub, t2, c, r2);
    CHECK(attack.success == bool(round.adversarial));
    if (round.adversarial) CHECK(*attack.adversarial == *round.adversarial);
    CHECK(attack.queries == round.trace.queries);
  }
}

TEST_CASE("curls attacks respect query and flag invariants") {
  Rng rng(45);
  int successes = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const Shape shape{4, 4, 2};
    Classifier s = cwtest::random_classifier(trial, shape, 4, rng);
    Classifier other = cwtest::random_classifier(trial + 2, shape, 4, rng);
    // Half white-box so the success paths get exercised.
    const Classifier& m = trial % 2 ? other : s;
    SubstituteOracle sub(s);
    const Image x = cwtest::random_image(shape, rng);
    const int y = TargetOracle(m, std::nullopt).peek(x.tensor()).label;
    CurlsConfig c;
    c.eps0 = 0.3 + 0.7 * rng.uniform();
    c.rounds = 1 + int(rng.below(5));
    c.steps = 1 + int(rng.below(6));
    c.search_steps = int(rng.below(4));
    c.s = 0.1 * rng.uniform();
    TargetOracle t(m, std::nullopt);
    Rng r{std::uint64_t(trial)};
    const auto res = cw::curls_attack(x, y, sub, t, c, r);
    successes += res.success;

    std::int64_t label_queries = 0;
    for (const cw::RoundTrace& tr : res.rounds) {
      CHECK(monotone_flag(tr));
      CHECK(tr.queries <= 2 * (c.steps + c.search_steps));
      label_queries += tr.label_queries + (tr.found ? c.search_steps : 0);
      for (const Image& p : tr.trajectory_a) {
        CHECK(cw::linf_distance(p, x) <= tr.eps + 1e-12);
      }
    }
    CHECK(label_queries <= std::int64_t(c.rounds) * (c.steps + c.search_steps) * 2);
    CHECK(res.queries == t.ledger().used());
    CHECK(res.queries <= 1 + c.rounds * (2 * c.steps + c.search_steps));
    if (res.success) {
      CHECK(t.peek(res.adversarial->tensor()).label != y);
      CHECK(res.l2 == cw::l2_distance(x, *res.adversarial));
    }
  }
  MESSAGE(successes << " of 30 random attacks succeeded");
}

TEST_CASE("mean direction counts each confirmed adversarial once") {
  Rng rng(46);
  for (int trial = 0; trial < 20; ++trial) {
    const Shape shape{3, 3, 1};
    Classifier s = cwtest::random_classifier(trial, shape, 2, rng);
    SubstituteOracle sub(s);
    const Image x = cwtest::random_image(shape, rng);
    const int y = TargetOracle(s, std::nullopt).peek(x.tensor()).label;
    MeanDirection md(shape);
    TargetOracle t(s, std::nullopt);
    Rng r{std::uint64_t(trial)};
    CurlsConfig c;
    c.eps0 = 0.6;
    const auto round = cw::curls_round(x, y, sub, t, c, md, r);
    CHECK(md.count() == int(bool(round.trace.success_step_a)) +
                            int(bool(round.trace.success_step_b)));
  }
}

TEST_CASE("curls attacks are reproducible and stop at the budget") {
  Rng rng(47);
  const Shape shape{4, 4, 1};
  Classifier s = cwtest::random_classifier(1, shape, 3, rng);
  Classifier m = cwtest::random_classifier(2, shape, 3, rng);
  SubstituteOracle sub(s);
  const Image x = cwtest::random_image(shape, rng);
  const int y = TargetOracle(m, std::nullopt).peek(x.tensor()).label;
  const CurlsConfig c;
  TargetOracle t1(m, std::nullopt);
  TargetOracle t2(m, std::nullopt);
  Rng r1(3);
  Rng r2(3);
  const auto a = cw::curls_attack(x, y, sub, t1, c, r1);
  const auto b = cw::curls_attack(x, y, sub, t2, c, r2);
  CHECK(a.success == b.success);
  CHECK(a.adversarial == b.adversarial);
  CHECK(a.queries == b.queries);

  TargetOracle small(m, 7);
  Rng r3(3);
  const auto cut = cw::curls_attack(x, y, sub, small, c, r3);
  CHECK(cut.budget_exhausted);
  CHECK(cut.queries == 7);
  if (cut.success) CHECK(small.peek(cut.adversarial->tensor()).label != y);
}

TEST_CASE("bad curls configs are rejected") {
  CurlsConfig c;
  c.rounds = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = CurlsConfig{};
  c.search_steps = -1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = CurlsConfig{};
  c.s = -0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = CurlsConfig{};
  c.alpha = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(CurlsConfig{}.step_size() == 0.125);
}

TEST_CASE("white-box curls on blobs succeeds at least as often as I-FGSM") {
  const cw::Dataset d = cw::make_blobs(cw::BlobSpec{}, 5);
  Classifier c = Classifier::linear(d.shape, 2);
  Rng init(3);
  c.init_weights(init);
  cw::TrainOptions o;
  o.epochs = 50;
  Rng train_rng(9);
  const Classifier m = cw::train(c, d, o, train_rng).model;
  SubstituteOracle sub(m);
  int n = 0, curls_wins = 0, ifgsm_wins = 0;
  for (std::size_t i = 0; i < d.test.size(); ++i) {
    const cw::Example& e = d.test[i];
    if (TargetOracle(m, std::nullopt).peek(e.image.tensor()).label != e.label) {
      continue;
    }
    ++n;
    TargetOracle t1(m, 200);
    Rng r{std::uint64_t(i)};
    curls_wins += cw::curls_attack(e.image, e.label, sub, t1, CurlsConfig{}, r)
                      .success;
    TargetOracle t2(m, 200);
    ifgsm_wins += cw::i_fgsm(e.image, e.label, sub, t2, cw::BaselineConfig{})
                      .success;
  }
  MESSAGE("curls " << curls_wins << " I-FGSM " << ifgsm_wins << " of " << n);
  CHECK(curls_wins >= ifgsm_wins);
}
