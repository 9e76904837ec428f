#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dcloss/errors.hpp"
#include "dcloss/regularizers.hpp"
#include "dcloss/rng.hpp"
#include "oracles.hpp"

using namespace dcloss;

namespace {

Image2D random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  RngStream s(seed);
  return Image2D(w, h, sample_uniform(s, w * h));
}

// Subgradient components can be exactly zero, so errors are taken relative
// to the largest component there.
template <typename F>
void check_fd(const Image2D& x, const Image2D& grad, F&& value, double tol) {
  std::vector<double> fd(x.size());
  double scale = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    auto f = [&](double v) {
      Image2D y = x;
      y.values[j] = v;
      return value(y);
    };
    fd[j] = oracle::central_difference(f, x.values[j], 1e-6);
    scale = std::max(scale, std::abs(fd[j]));
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    EXPECT_LT(oracle::rel_err(grad.values[j], fd[j], 1e-3 * scale), tol) << "pixel " << j;
  }
}

// Weighted TV with weights computed from `w_from` and held fixed.
double frozen_weight_eptv(const Image2D& x, const Image2D& w_from, double kappa, double eps) {
  double total = 0.0;
  for (std::size_t yy = 0; yy < x.height; ++yy) {
    for (std::size_t xx = 0; xx < x.width; ++xx) {
      const double dh = xx + 1 < x.width ? x.at(xx + 1, yy) - x.at(xx, yy) : 0.0;
      const double dv = yy + 1 < x.height ? x.at(xx, yy + 1) - x.at(xx, yy) : 0.0;
      const double wh = xx + 1 < x.width ? w_from.at(xx + 1, yy) - w_from.at(xx, yy) : 0.0;
      const double wv = yy + 1 < x.height ? w_from.at(xx, yy + 1) - w_from.at(xx, yy) : 0.0;
      const double w = 1.0 / (1.0 + (wh * wh + wv * wv + eps) / (kappa * kappa));
      total += w * (std::abs(dh) + std::abs(dv));
    }
  }
  return total / static_cast<double>(x.size());
}

}  // namespace

TEST(Tv, ConstantImage) {
  const Image2D c(5, 4, 0.7);
  const auto pe = tv(c);
  EXPECT_EQ(pe.value, 0.0);
  for (double g : pe.grad.values) EXPECT_EQ(g, 0.0);
}

TEST(Tv, TwoPixelExample) {
  const Image2D x(2, 1, std::vector<double>{0.0, 1.0});
  const auto pe = tv(x);
  EXPECT_DOUBLE_EQ(pe.value, 0.5);
  EXPECT_DOUBLE_EQ(pe.grad.values[0], -0.5);
  EXPECT_DOUBLE_EQ(pe.grad.values[1], 0.5);
}

TEST(Tv, GradientMatchesFiniteDifference) {
  const auto x = random_image(6, 5, 51);
  check_fd(x, tv(x).grad, [](const Image2D& y) { return tv(y).value; }, 1e-6);
}

TEST(Tv, Errors) {
  EXPECT_THROW(tv(Image2D(1, 1)), InputError);
  EXPECT_THROW(tv(Image2D(3, 3, std::vector<double>(8))), InputError);
}

TEST(Eptv, ConstantImage) {
  const auto pe = eptv(Image2D(4, 4, 2.0));
  EXPECT_EQ(pe.value, 0.0);
  for (double g : pe.grad.values) EXPECT_EQ(g, 0.0);
}

TEST(Eptv, SingleSiteWeightOneHalf) {
  // Only site (0,0) has a nonzero difference: dh = 0.1, dv = 0.
  Image2D x(2, 1, std::vector<double>{0.0, 0.1});
  EptvOptions o;
  o.eps = 1e-300;
  const auto pe = eptv(x, o);
  EXPECT_NEAR(pe.value, 0.5 * 0.1 / 2.0, 1e-15);
}

TEST(Eptv, WeightsShrinkAcrossEdges) {
  Image2D small(2, 1, std::vector<double>{0.0, 0.01});
  Image2D large(2, 1, std::vector<double>{0.0, 10.0});
  const double w_small = eptv(small).value / (0.01 / 2.0);
  const double w_large = eptv(large).value / (10.0 / 2.0);
  EXPECT_GT(w_small, 0.99);
  EXPECT_LE(w_small, 1.0);
  EXPECT_GT(w_large, 0.0);
  EXPECT_LT(w_large, 1e-3);
}

TEST(Eptv, DetachedGradientFreezesWeights) {
  const auto x = random_image(5, 6, 52);
  EptvOptions o;
  const auto pe = eptv(x, o);
  check_fd(x, pe.grad, [&](const Image2D& y) { return frozen_weight_eptv(y, x, o.kappa, o.eps); }, 1e-6);
  EXPECT_NEAR(pe.value, frozen_weight_eptv(x, x, o.kappa, o.eps), 1e-15);
}

TEST(Eptv, FullGradientMatchesFiniteDifference) {
  const auto x = random_image(5, 6, 53);
  EptvOptions o;
  o.differentiate_weights = true;
  check_fd(x, eptv(x, o).grad, [&](const Image2D& y) { return eptv(y, o).value; }, 1e-6);
}

TEST(Eptv, Errors) {
  const Image2D x(3, 3, 1.0);
  EXPECT_THROW(eptv(x, EptvOptions{0.0, 1e-8, false}), ParameterError);
  EXPECT_THROW(eptv(x, EptvOptions{0.1, 0.0, false}), ParameterError);
  EXPECT_THROW(eptv(Image2D(1, 1)), InputError);
}

TEST(Penalties, NonNegativeOnRandomImages) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = random_image(7, 3, seed);
    EXPECT_GT(tv(x).value, 0.0);
    EXPECT_GT(eptv(x).value, 0.0);
  }
}
