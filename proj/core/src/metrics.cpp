#include "dcloss/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dcloss/errors.hpp"

namespace dcloss {

double nrmse(std::span<const double> xhat, std::span<const double> xstar) {
  if (xhat.size() != xstar.size()) throw InputError("nrmse: length mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < xhat.size(); ++i) {
    const double d = xhat[i] - xstar[i];
    num += d * d;
    den += xstar[i] * xstar[i];
  }
  if (!(den > 0.0)) throw InputError("nrmse: reference has zero norm");
  return std::sqrt(num / den);
}

double psnr(std::span<const double> xhat, std::span<const double> xstar, double peak) {
  if (xhat.size() != xstar.size() || xhat.empty()) throw InputError("psnr: length mismatch or empty input");
  if (!(peak > 0.0)) throw ParameterError("psnr: peak must be > 0");
  double mse = 0.0;
  for (std::size_t i = 0; i < xhat.size(); ++i) {
    const double d = xhat[i] - xstar[i];
    mse += d * d;
  }
  mse /= static_cast<double>(xhat.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

Histogram cdf_histogram(std::span<const double> s, std::size_t n_bins) {
  if (n_bins < 2) throw InputError("cdf_histogram: need at least two bins");
  Histogram h;
  h.edges.resize(n_bins + 1);
  for (std::size_t k = 0; k <= n_bins; ++k) h.edges[k] = static_cast<double>(k) / static_cast<double>(n_bins);
  h.counts.assign(n_bins, 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double v = s[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InputError("cdf_histogram: value " + std::to_string(v) + " outside [0, 1] at index " + std::to_string(i));
    }
    auto bin = static_cast<std::size_t>(v * static_cast<double>(n_bins));
    if (bin >= n_bins) bin = n_bins - 1;
    ++h.counts[bin];
  }
  h.total = s.size();
  return h;
}

}  // namespace dcloss
