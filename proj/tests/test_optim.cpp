#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "dcloss/errors.hpp"
#include "dcloss/optim.hpp"
#include "dcloss/phantom.hpp"

using namespace dcloss;

TEST(Adam, FirstStepMovesByLearningRate) {
  auto st = AdamState::zeros(3, 0.01);
  std::vector<double> p{1.0, 2.0, 3.0};
  const std::vector<double> g{0.5, -3.0, 1e-3};
  adam_step(st, p, g);
  EXPECT_NEAR(p[0], 1.0 - 0.01, 1e-7);
  EXPECT_NEAR(p[1], 2.0 + 0.01, 1e-7);
  EXPECT_NEAR(p[2], 3.0 - 0.01, 1e-4);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto st = AdamState::zeros(2, 0.1);
  std::vector<double> p{1.0, -1.0};
  adam_step(st, p, std::vector<double>{0.0, 0.0});
  EXPECT_EQ(p, (std::vector<double>{1.0, -1.0}));
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, MatchesHandRolledSecondStep) {
  auto st = AdamState::zeros(1, 0.1);
  std::vector<double> p{0.0};
  adam_step(st, p, std::vector<double>{1.0});
  adam_step(st, p, std::vector<double>{-2.0});
  const double m = 0.9 * 0.1 + 0.1 * -2.0;
  const double v = 0.999 * 0.001 + 0.001 * 4.0;
  const double step2 = 0.1 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
  EXPECT_NEAR(p[0], -0.1 * (1.0 / (1.0 + 1e-8)) - step2, 1e-12);
}

TEST(Adam, Deterministic) {
  auto a = AdamState::zeros(2, 0.05);
  auto b = AdamState::zeros(2, 0.05);
  std::vector<double> pa{0.3, 0.4}, pb{0.3, 0.4};
  for (int i = 0; i < 10; ++i) {
    const std::vector<double> g{std::sin(i), std::cos(i)};
    adam_step(a, pa, g);
    adam_step(b, pb, g);
  }
  EXPECT_EQ(pa, pb);
}

TEST(Adam, ShapeMismatch) {
  auto st = AdamState::zeros(2, 0.1);
  std::vector<double> p{1.0, 2.0, 3.0};
  EXPECT_THROW(adam_step(st, p, std::vector<double>{1.0, 2.0, 3.0}), InputError);
}

TEST(Mlem, FixedPoint) {
  ProjectorGeometry g;
  g.image_side = 8;
  g.n_angles = 6;
  g.n_bins = 13;
  const auto op = ForwardOp::parallel_beam(g);
  std::vector<double> x(64);
  for (std::size_t j = 0; j < 64; ++j) x[j] = 0.5 + 0.01 * j;
  const auto m = dcloss::apply(op, x);
  const auto next = mlem_step(x, m, op);
  for (std::size_t j = 0; j < 64; ++j) EXPECT_NEAR(next[j], x[j], 1e-10);
}

TEST(Mlem, IdentityTotalCountsAndNonNegativity) {
  const auto op = ForwardOp::identity(4);
  const std::vector<double> x{1.0, 0.0, 2.0, 5.0};
  const std::vector<double> m{3.0, 1.0, 0.0, 7.0};
  const auto next = mlem_step(x, m, op);
  for (double v : next) EXPECT_GE(v, 0.0);
  // One step on the identity returns m wherever x > 0.
  EXPECT_NEAR(next[0], 3.0, 1e-12);
  EXPECT_NEAR(next[3], 7.0, 1e-12);
  // With x > 0 everywhere the total count equals sum(m).
  const std::vector<double> xp{1.0, 0.5, 2.0, 5.0};
  const auto np = mlem_step(xp, m, op);
  EXPECT_NEAR(std::accumulate(np.begin(), np.end(), 0.0), 11.0, 1e-12);
}

TEST(Mlem, Errors) {
  const auto op = ForwardOp::identity(3);
  EXPECT_THROW(mlem_step(std::vector<double>(3, 1.0), std::vector<double>(2, 1.0), op), InputError);
  EXPECT_THROW(mlem_step(std::vector<double>(3, 1.0), std::vector<double>(3, 1.0), op, std::vector<double>(2)),
               InputError);
}

namespace {

Problem tiny_tomo(std::uint64_t seed) {
  const std::size_t side = 12;
  ProjectorGeometry g;
  g.image_side = side;
  g.n_angles = 10;
  g.n_bins = 21;
  g.gain = 2.0;
  auto op = ForwardOp::parallel_beam(g);
  const auto truth = ellipse_phantom(side);
  RngStream s(seed);
  const auto c = sample_poisson(s, dcloss::apply(op, truth.values));
  std::vector<double> m(c.begin(), c.end());
  return Problem{op, NoiseModel::poisson(), m, truth.values, std::vector<double>(side * side, 1.0), {}, side, side};
}

}  // namespace

TEST(Run, RecordCountAndSnapshots) {
  const auto pb = tiny_tomo(1);
  RunConfig cfg;
  cfg.iterations = 25;
  cfg.lr = 0.01;
  cfg.snapshot_iterations = {1, 10, 25, 100};
  const auto out = run(cfg, pb);
  ASSERT_EQ(out.records.size(), 25u);
  for (std::size_t k = 0; k < 25; ++k) EXPECT_EQ(out.records[k].iteration, k + 1);
  ASSERT_EQ(out.snapshots.size(), 3u);
  EXPECT_EQ(out.snapshots.back().iteration, 25u);
  EXPECT_EQ(out.snapshots.back().params, out.final_params);
  for (const auto& r : out.records) {
    EXPECT_TRUE(std::isfinite(r.dc));
    EXPECT_TRUE(std::isfinite(r.nll));
    EXPECT_TRUE(std::isfinite(r.nrmse));
  }
}

TEST(Run, ZeroGradientKeepsInitial) {
  const auto op = ForwardOp::identity(5);
  const std::vector<double> x0{0.1, 0.2, 0.3, 0.4, 0.5};
  Problem pb{op, NoiseModel::gaussian(1.0), x0, x0, x0, {}, 0, 0};
  RunConfig cfg;
  cfg.loss = LossKind::MSE;
  cfg.iterations = 1;
  const auto out = run(cfg, pb);
  EXPECT_EQ(out.final_params, x0);
  EXPECT_EQ(out.records.size(), 1u);
  EXPECT_EQ(out.records[0].nrmse, 0.0);
}

TEST(Run, MlemNllNonIncreasing) {
  for (std::uint64_t seed : {2u, 3u}) {
    const auto pb = tiny_tomo(seed);
    RunConfig cfg;
    cfg.optimizer = OptimizerKind::MLEM;
    cfg.iterations = 200;
    cfg.snapshot_iterations = {1, 50, 200};
    const auto out = run(cfg, pb);
    for (std::size_t k = 1; k < out.records.size(); ++k) {
      ASSERT_LE(out.records[k].nll, out.records[k - 1].nll + 1e-9 * std::abs(out.records[k - 1].nll)) << k;
    }
    for (const auto& snap : out.snapshots) {
      for (double v : snap.params) ASSERT_GE(v, 0.0);
    }
  }
}

TEST(Run, MaskAndReluApply) {
  auto pb = tiny_tomo(4);
  RunConfig cfg;
  cfg.loss = LossKind::NLL;
  cfg.iterations = 30;
  cfg.lr = 0.05;
  cfg.mask = support_mask(Image2D(12, 12, pb.ground_truth));
  cfg.relu_output = true;
  cfg.precondition = true;
  const auto out = run(cfg, pb);
  for (std::size_t j = 0; j < out.final_params.size(); ++j) {
    if (cfg.mask[j] == 0.0) {
      EXPECT_EQ(out.final_params[j], 0.0);
    }
    EXPECT_GE(out.final_params[j], 0.0);
  }
}

TEST(Run, RegularisedObjectiveLowersPenalty) {
  auto pb = tiny_tomo(5);
  RunConfig cfg;
  cfg.loss = LossKind::NLL;
  cfg.iterations = 300;
  cfg.lr = 0.01;
  cfg.regularizer = RegularizerKind::EPTV;
  const auto plain = run(cfg, pb);
  EXPECT_EQ(plain.final_penalty, eptv(Image2D(12, 12, plain.final_params)).value);
  cfg.beta = 100.0;
  const auto reg = run(cfg, pb);
  EXPECT_LT(reg.final_penalty, plain.final_penalty);
}

TEST(Run, DeterministicForSeed) {
  const auto pb = tiny_tomo(6);
  RunConfig cfg;
  cfg.iterations = 40;
  cfg.lr = 0.02;
  cfg.seed = 99;
  const auto a = run(cfg, pb);
  const auto b = run(cfg, pb);
  EXPECT_EQ(a.final_params, b.final_params);
  for (std::size_t k = 0; k < a.records.size(); ++k) EXPECT_EQ(a.records[k].dc, b.records[k].dc);
}

TEST(Run, ConfigValidation) {
  auto pb = tiny_tomo(7);
  RunConfig cfg;
  cfg.iterations = 0;
  EXPECT_THROW(run(cfg, pb), ParameterError);
  cfg = {};
  cfg.lr = 0.0;
  EXPECT_THROW(run(cfg, pb), ParameterError);
  cfg = {};
  cfg.beta = -1.0;
  EXPECT_THROW(run(cfg, pb), ParameterError);

  Problem g{ForwardOp::identity(3), NoiseModel::gaussian(1.0), {1, 2, 3}, {}, {0, 0, 0}, {}, 0, 0};
  cfg = {};
  cfg.optimizer = OptimizerKind::MLEM;
  EXPECT_THROW(run(cfg, g), ParameterError);
  cfg = {};
  cfg.loss = LossKind::NLL;
  EXPECT_THROW(run(cfg, g), ParameterError);
  cfg = {};
  cfg.regularizer = RegularizerKind::TV;
  cfg.beta = 1.0;
  EXPECT_THROW(run(cfg, g), InputError);
  Problem bad{ForwardOp::identity(3), NoiseModel::gaussian(1.0), {1, 2}, {}, {0, 0, 0}, {}, 0, 0};
  EXPECT_THROW(run(RunConfig{}, bad), InputError);
}
