#pragma once

#include <span>
#include <vector>

namespace dcloss {

/// ||xhat - xstar||_2 / ||xstar||_2. Throws InputError for mismatched lengths
/// or a zero-norm reference.
double nrmse(std::span<const double> xhat, std::span<const double> xstar);

/// 10 log10(peak^2 / MSE) in dB; +infinity when the images are identical.
double psnr(std::span<const double> xhat, std::span<const double> xstar, double peak = 1.0);

/// Uniform-bin histogram over [0, 1]. Bins are half-open [a, b) except the
/// last, which also takes 1.0.
struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::size_t total = 0;

  std::size_t bins() const noexcept { return counts.size(); }
};

/// Throws InputError for n_bins < 2 or a value outside [0, 1].
Histogram cdf_histogram(std::span<const double> s, std::size_t n_bins);

}  // namespace dcloss
