#pragma once

#include <span>
#include <vector>

namespace dcloss {

/// Row-major image, values[y * width + x].
struct Image2D {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  Image2D() = default;
  Image2D(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), values(w * h, fill) {}
  Image2D(std::size_t w, std::size_t h, std::vector<double> v);

  double& at(std::size_t x, std::size_t y) { return values[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
  std::size_t size() const noexcept { return values.size(); }
};

struct PenaltyEval {
  double value = 0.0;
  Image2D grad;
};

/// Anisotropic TV, (1/N) sum |x[i,j+1] - x[i,j]| + |x[i+1,j] - x[i,j]| with
/// forward differences that vanish at the last row/column. sign(0) = 0 in the
/// subgradient. Needs at least two pixels.
PenaltyEval tv(const Image2D& x);

struct EptvOptions {
  double kappa = 0.1;
  double eps = 1e-8;
  /// When false the edge weights are treated as constants for the gradient.
  bool differentiate_weights = false;
};

/// Edge-preserving TV: (1/N) sum w (|dh| + |dv|),
/// w = 1 / (1 + (dh^2 + dv^2 + eps) / kappa^2).
PenaltyEval eptv(const Image2D& x, const EptvOptions& options = {});

}  // namespace dcloss
