#include "dcloss/regularizers.hpp"

#include <cmath>
#include <string>

#include "dcloss/errors.hpp"

namespace dcloss {

Image2D::Image2D(std::size_t w, std::size_t h, std::vector<double> v) : width(w), height(h), values(std::move(v)) {
  if (values.size() != width * height) {
    throw InputError("Image2D: " + std::to_string(values.size()) + " values for a " + std::to_string(width) + "x" +
                     std::to_string(height) + " image");
  }
}

namespace {

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

void check_image(const Image2D& x, const char* what) {
  if (x.width == 0 || x.height == 0 || x.size() < 2 || x.values.size() != x.width * x.height) {
    throw InputError(std::string(what) + ": image must have at least two pixels and consistent dimensions");
  }
}

// Visits every site with its forward differences (zero past the last
// column/row). f(idx, right_idx_or_npos, down_idx_or_npos, dh, dv).
template <class F>
void for_each_site(const Image2D& x, F&& f) {
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  for (std::size_t i = 0; i < x.height; ++i) {
    for (std::size_t j = 0; j < x.width; ++j) {
      const std::size_t idx = i * x.width + j;
      const std::size_t right = j + 1 < x.width ? idx + 1 : none;
      const std::size_t down = i + 1 < x.height ? idx + x.width : none;
      const double dh = right != none ? x.values[right] - x.values[idx] : 0.0;
      const double dv = down != none ? x.values[down] - x.values[idx] : 0.0;
      f(idx, right, down, dh, dv);
    }
  }
}

}  // namespace

PenaltyEval tv(const Image2D& x) {
  check_image(x, "tv");
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  const double inv_n = 1.0 / static_cast<double>(x.size());
  PenaltyEval out{0.0, Image2D(x.width, x.height)};
  auto& g = out.grad.values;
  double total = 0.0;
  for_each_site(x, [&](std::size_t idx, std::size_t right, std::size_t down, double dh, double dv) {
    total += std::fabs(dh) + std::fabs(dv);
    if (right != none) {
      const double sh = sign(dh) * inv_n;
      g[right] += sh;
      g[idx] -= sh;
    }
    if (down != none) {
      const double sv = sign(dv) * inv_n;
      g[down] += sv;
      g[idx] -= sv;
    }
  });
  out.value = total * inv_n;
  return out;
}

PenaltyEval eptv(const Image2D& x, const EptvOptions& options) {
  check_image(x, "eptv");
  if (!(options.kappa > 0.0)) throw ParameterError("eptv: kappa must be > 0");
  if (!(options.eps > 0.0)) throw ParameterError("eptv: eps must be > 0");
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  const double inv_n = 1.0 / static_cast<double>(x.size());
  const double inv_k2 = 1.0 / (options.kappa * options.kappa);
  PenaltyEval out{0.0, Image2D(x.width, x.height)};
  auto& g = out.grad.values;
  double total = 0.0;
  for_each_site(x, [&](std::size_t idx, std::size_t right, std::size_t down, double dh, double dv) {
    const double w = 1.0 / (1.0 + (dh * dh + dv * dv + options.eps) * inv_k2);
    const double a = std::fabs(dh) + std::fabs(dv);
    total += w * a;
    // d(w a)/d(dh) = w sign(dh) + a dw/d(dh), dw/d(dh) = -2 w^2 dh / kappa^2.
    double gh = w * sign(dh);
    double gv = w * sign(dv);
    if (options.differentiate_weights) {
      gh -= a * 2.0 * w * w * dh * inv_k2;
      gv -= a * 2.0 * w * w * dv * inv_k2;
    }
    if (right != none) {
      g[right] += gh * inv_n;
      g[idx] -= gh * inv_n;
    }
    if (down != none) {
      g[down] += gv * inv_n;
      g[idx] -= gv * inv_n;
    }
  });
  out.value = total * inv_n;
  return out;
}

}  // namespace dcloss
