#include "dcloss/rng.hpp"

#include <cmath>
#include <string>

#include "dcloss/errors.hpp"

namespace dcloss {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_id) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x632BE59BD9B4E019ULL));
}

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(mix_seed(seed, stream_id)) {}

RngStream RngStream::derive(std::uint64_t child_id) const {
  return RngStream(mix_seed(seed_, stream_id_), child_id);
}

double RngStream::uniform() {
  // 53 random bits mapped to bin centres: values lie in [2^-54, 1 - 2^-54].
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * kTwoPow53Inv;
}

double RngStream::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  // Marsaglia polar method.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * factor;
  has_spare_normal_ = true;
  return u * factor;
}

std::vector<double> sample_uniform(RngStream& stream, std::size_t n) {
  std::vector<double> out(n);
  for (auto& x : out) x = stream.uniform();
  return out;
}

double logistic_quantile(double p) { return std::log(p) - std::log1p(-p); }

std::vector<double> sample_logistic(RngStream& stream, std::size_t n) {
  std::vector<double> out(n);
  for (auto& x : out) x = logistic_quantile(stream.uniform());
  return out;
}

std::vector<double> sample_gaussian(RngStream& stream, std::span<const double> mean, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("sample_gaussian: sigma must be positive and finite");
  }
  std::vector<double> out(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) out[i] = mean[i] + sigma * stream.normal();
  return out;
}

namespace {

std::int64_t poisson_inversion(RngStream& stream, double rate) {
  const double u = stream.uniform();
  double p = std::exp(-rate);
  double cdf = p;
  std::int64_t k = 0;
  // The cap only triggers when rounding leaves cdf a few ulps below u.
  while (u > cdf && k < 1000) {
    ++k;
    p *= rate / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

// Transformed rejection with squeeze (Hormann 1993).
std::int64_t poisson_ptrs(RngStream& stream, double rate) {
  const double slam = std::sqrt(rate);
  const double loglam = std::log(rate);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = stream.uniform() - 0.5;
    const double v = stream.uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + rate + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -rate + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::int64_t>(k);
    }
  }
}

}  // namespace

std::int64_t sample_poisson_one(RngStream& stream, double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw ParameterError("sample_poisson: rate must be finite and non-negative, got " +
                         std::to_string(rate));
  }
  if (rate == 0.0) return 0;
  return rate < 30.0 ? poisson_inversion(stream, rate) : poisson_ptrs(stream, rate);
}

std::vector<std::int64_t> sample_poisson(RngStream& stream, std::span<const double> rates) {
  std::vector<std::int64_t> out(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) out[i] = sample_poisson_one(stream, rates[i]);
  return out;
}

}  // namespace dcloss
