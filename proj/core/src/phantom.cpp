#include "dcloss/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dcloss/errors.hpp"

namespace dcloss {

namespace {

bool inside_ellipse(double u, double v, double cu, double cv, double a, double b) {
  const double du = (u - cu) / a;
  const double dv = (v - cv) / b;
  return du * du + dv * dv <= 1.0;
}

}  // namespace

Image2D ellipse_phantom(std::size_t side, double intensity) {
  if (side < 2) throw ParameterError("ellipse_phantom: side must be >= 2");
  Image2D img(side, side);
  const double s = static_cast<double>(side);
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      // Pixel centre in [-1, 1]^2, v pointing up.
      const double u = (2.0 * (static_cast<double>(x) + 0.5) / s) - 1.0;
      const double v = 1.0 - (2.0 * (static_cast<double>(y) + 0.5) / s);
      double level = 0.0;
      if (inside_ellipse(u, v, 0.0, 0.0, 0.85, 0.70)) level = 1.0;
      if (inside_ellipse(u, v, 0.0, -0.05, 0.60, 0.48)) level = 2.0;
      if (inside_ellipse(u, v, -0.05, -0.05, 0.28, 0.22)) level = 0.5;
      if (inside_ellipse(u, v, 0.42, 0.22, 0.09, 0.09)) level = 4.0;
      if (inside_ellipse(u, v, -0.38, 0.30, 0.07, 0.07)) level = 4.0;
      img.at(x, y) = level * intensity;
    }
  }
  return img;
}

std::vector<double> support_mask(const Image2D& image, double radius) {
  const auto w = static_cast<long>(image.width);
  const auto h = static_cast<long>(image.height);
  const auto r = static_cast<long>(std::ceil(radius));
  std::vector<double> mask(image.size(), 0.0);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      if (image.values[static_cast<std::size_t>(y * w + x)] == 0.0) continue;
      for (long dy = -r; dy <= r; ++dy) {
        for (long dx = -r; dx <= r; ++dx) {
          if (static_cast<double>(dx * dx + dy * dy) > radius * radius) continue;
          const long xx = x + dx;
          const long yy = y + dy;
          if (xx >= 0 && xx < w && yy >= 0 && yy < h) mask[static_cast<std::size_t>(yy * w + xx)] = 1.0;
        }
      }
    }
  }
  return mask;
}

std::vector<double> two_tone_signal(std::size_t n) {
  if (n < 2) throw ParameterError("two_tone_signal: need at least two points");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    out[i] = std::sin(10.0 * std::numbers::pi * x) + 0.5 * std::sin(40.0 * std::numbers::pi * x);
  }
  return out;
}

}  // namespace dcloss
