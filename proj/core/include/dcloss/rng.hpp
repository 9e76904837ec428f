#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace dcloss {

/// Seedable random stream. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; every distribution on top of it is
/// implemented here so draws are bit-identical across standard libraries.
///
/// Streams derived from the same seed with different ids use independently
/// mixed engine seeds and never share state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Derive an independent child stream, e.g. one per optimizer iteration.
  RngStream derive(std::uint64_t child_id) const;

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw strictly inside (0, 1), clamped to [ulp, 1 - ulp].
  double uniform();

  /// Standard normal draw (Marsaglia polar method, cached second value).
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::vector<double> sample_uniform(RngStream& stream, std::size_t n);

/// Logistic(0,1) draws via the inverse CDF logit(u).
std::vector<double> sample_logistic(RngStream& stream, std::size_t n);

/// Inverse CDF of Logistic(0,1): ln(p / (1 - p)).
double logistic_quantile(double p);

/// Independent N(mean_i, sigma^2) draws. Throws ParameterError if sigma <= 0.
std::vector<double> sample_gaussian(RngStream& stream, std::span<const double> mean, double sigma);

/// Independent Poisson(rate_i) counts. Inversion for rate < 30, PTRS above.
/// Throws ParameterError for a negative or non-finite rate.
std::vector<std::int64_t> sample_poisson(RngStream& stream, std::span<const double> rates);

std::int64_t sample_poisson_one(RngStream& stream, double rate);

}  // namespace dcloss
