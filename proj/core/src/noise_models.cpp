#include "dcloss/noise_models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcloss/errors.hpp"
#include "dcloss/special.hpp"

namespace dcloss {

namespace sp = special;

NoiseModel NoiseModel::gaussian(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("Gaussian noise: sigma must be > 0");
  return NoiseModel(GaussianNoise{sigma});
}

NoiseModel NoiseModel::clipped_gaussian(double sigma, double ramp_eps, double hard_eps) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("clipped Gaussian noise: sigma must be > 0");
  if (!(ramp_eps > 0.0 && ramp_eps < 0.5)) throw ParameterError("clipped Gaussian noise: ramp_eps must lie in (0, 0.5)");
  if (!(hard_eps > 0.0 && hard_eps < 0.5)) throw ParameterError("clipped Gaussian noise: hard_eps must lie in (0, 0.5)");
  return NoiseModel(ClippedGaussianNoise{sigma, ramp_eps, hard_eps});
}

NoiseModel NoiseModel::poisson() { return NoiseModel(PoissonNoise{}); }

NoiseKind NoiseModel::kind() const noexcept {
  switch (params_.index()) {
    case 0: return NoiseKind::Gaussian;
    case 1: return NoiseKind::ClippedGaussian;
    default: return NoiseKind::Poisson;
  }
}

void TailPolicy::validate() const {
  if (!(gaussian_z_threshold > 0.0)) throw ParameterError("TailPolicy: gaussian_z_threshold must be > 0");
  if (!(poisson_s_threshold > 0.0 && poisson_s_threshold < 0.5)) {
    throw ParameterError("TailPolicy: poisson_s_threshold must lie in (0, 0.5)");
  }
  if (!(clipped_delta > 0.0 && clipped_delta < 0.5)) throw ParameterError("TailPolicy: clipped_delta must lie in (0, 0.5)");
  if (gaussian_tail_terms < 0 || poisson_tail_terms < 0) throw ParameterError("TailPolicy: tail term counts must be >= 0");
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_poisson_count(double m) {
  if (!(m >= 0.0) || m != std::floor(m) || !std::isfinite(m)) {
    throw InputError("Poisson noise: measurement must be a non-negative integer, got " + std::to_string(m));
  }
}

void check_unit_interval(double m) {
  if (!(m >= 0.0 && m <= 1.0)) {
    throw InputError("clipped Gaussian noise: measurement must lie in [0, 1], got " + std::to_string(m));
  }
}

// -ln(1 - Phi(a)) for a > 0 as a truncated asymptotic expansion:
//   a^2/2 + ln a + ln sqrt(2 pi) - ln S(a),
//   S(a) = sum_k (-1)^k (2k-1)!! / a^{2k}.
// Terms are added while they keep shrinking. Returns value and d/da.
struct TailValue {
  double value;
  double derivative;
};

TailValue gaussian_upper_tail(double a, int terms) {
  double series = 1.0;
  double dseries = 0.0;
  double term = 1.0;
  const double inv_a2 = 1.0 / (a * a);
  for (int k = 1; k <= terms; ++k) {
    const double ratio = (2.0 * k - 1.0) * inv_a2;
    if (ratio >= 1.0) break;
    term *= -ratio;
    series += term;
    dseries += term * (-2.0 * k) / a;
  }
  return {0.5 * a * a + std::log(a) + sp::kLnSqrt2Pi - std::log(series),
          a + 1.0 / a - dseries / series};
}

LogitScore gaussian_score(double z, double sigma, const TailPolicy& policy) {
  const double tau = policy.gaussian_z_threshold;
  if (z > tau) {
    const auto t = gaussian_upper_tail(z, policy.gaussian_tail_terms);
    return {t.value, -t.derivative / sigma, ScoreBranch::UpperTail};
  }
  if (z < -tau) {
    const auto t = gaussian_upper_tail(-z, policy.gaussian_tail_terms);
    return {-t.value, -t.derivative / sigma, ScoreBranch::LowerTail};
  }
  const double s = sp::normal_cdf(z);
  const double sc = sp::normal_sf(z);
  const double r = std::log(s) - std::log(sc);
  const double dr = -sp::normal_pdf(z) / sigma * (1.0 / s + 1.0 / sc);
  return {r, dr, ScoreBranch::Central};
}

LogitScore clipped_score(const ClippedGaussianNoise& p, double m, double yhat, const TailPolicy& policy) {
  check_unit_interval(m);
  const double eps = p.ramp_eps;
  const double sigma = p.sigma;
  double s = 0.0;
  double sc = 0.0;
  double ds = 0.0;
  ScoreBranch branch;
  if (m < eps) {
    const double ze = (eps - yhat) / sigma;
    const double w = m / eps;
    s = w * sp::normal_cdf(ze);
    sc = 1.0 - s;
    ds = -w * sp::normal_pdf(ze) / sigma;
    branch = ScoreBranch::LowerRamp;
  } else if (m > 1.0 - eps) {
    const double ze = (1.0 - eps - yhat) / sigma;
    const double w = (m - (1.0 - eps)) / eps;
    sc = (1.0 - w) * sp::normal_sf(ze);
    s = 1.0 - sc;
    ds = -(1.0 - w) * sp::normal_pdf(ze) / sigma;
    branch = ScoreBranch::UpperRamp;
  } else {
    const double z = (m - yhat) / sigma;
    const double phi = sp::normal_cdf(z);
    const double phic = sp::normal_sf(z);
    if (phi < policy.clipped_delta) {
      const auto t = gaussian_upper_tail(-z, policy.gaussian_tail_terms);
      return {-t.value, -t.derivative / sigma, ScoreBranch::LowerTail};
    }
    if (phic < policy.clipped_delta) {
      const auto t = gaussian_upper_tail(z, policy.gaussian_tail_terms);
      return {t.value, -t.derivative / sigma, ScoreBranch::UpperTail};
    }
    return {std::log(phi) - std::log(phic), -sp::normal_pdf(z) / sigma * (1.0 / phi + 1.0 / phic),
            ScoreBranch::Central};
  }
  // Ramp regions: plain logit with hard clamping, no tail expansion.
  if (s < p.hard_eps) {
    s = p.hard_eps;
    sc = 1.0 - s;
    ds = 0.0;
  } else if (sc < p.hard_eps) {
    sc = p.hard_eps;
    s = 1.0 - sc;
    ds = 0.0;
  }
  return {std::log(s) - std::log(sc), ds * (1.0 / s + 1.0 / sc), branch};
}

// Lower tail, s ~ 0 (q >> m):
//   ln s = m ln q - q - ln m! + ln sum_j m!/(m-j)! q^-j.
LogitScore poisson_lower_tail(double m, double q, int terms) {
  double series = 1.0;
  double dseries = 0.0;
  double c = 1.0;
  for (int j = 1; j <= terms && j <= m; ++j) {
    const double ratio = (m - j + 1.0) / q;
    if (ratio >= 1.0) break;
    c *= ratio;
    series += c;
    dseries += c * (-j / q);
  }
  const double r = m * std::log(q) - q - std::lgamma(m + 1.0) + std::log(series);
  const double dr = m / q - 1.0 + dseries / series;
  return {r, dr, ScoreBranch::LowerTail};
}

// Upper tail, 1 - s ~ 0 (q << m):
//   -ln(1 - s) = -(m+1) ln q + q + ln (m+1)! - ln sum_j q^j / ((m+2)...(m+1+j)).
LogitScore poisson_upper_tail(double m, double q, int terms) {
  double series = 1.0;
  double dseries = 0.0;
  double d = 1.0;
  for (int j = 1; j <= terms; ++j) {
    const double ratio = q / (m + 1.0 + j);
    if (ratio >= 1.0) break;
    d *= ratio;
    series += d;
    dseries += d * (j / q);
  }
  const double r = -(m + 1.0) * std::log(q) + q + std::lgamma(m + 2.0) - std::log(series);
  const double dr = -(m + 1.0) / q + 1.0 - dseries / series;
  return {r, dr, ScoreBranch::UpperTail};
}

LogitScore poisson_score(double m, double yhat, const TailPolicy& policy) {
  check_poisson_count(m);
  const bool floored = !(yhat > kPoissonRateFloor);
  const double q = floored ? kPoissonRateFloor : yhat;
  const auto ig = sp::incomplete_gamma(m + 1.0, q);
  // s = Q(m + 1, q) is the Poisson CDF at m, 1 - s = P(m + 1, q).
  LogitScore out;
  if (ig.q <= policy.poisson_s_threshold) {
    out = poisson_lower_tail(m, q, policy.poisson_tail_terms);
  } else if (ig.p <= policy.poisson_s_threshold) {
    out = poisson_upper_tail(m, q, policy.poisson_tail_terms);
  } else {
    const double log_pmf = sp::poisson_log_pmf(static_cast<std::int64_t>(m), q);
    out = {ig.log_q - ig.log_p, -std::exp(log_pmf - ig.log_q) - std::exp(log_pmf - ig.log_p),
           ScoreBranch::Central};
  }
  if (floored) out.dr_dyhat = 0.0;
  return out;
}

}  // namespace

double cdf(const NoiseModel& model, double m, double yhat) {
  return std::visit(
      Overloaded{
          [&](const GaussianNoise& p) { return sp::normal_cdf((m - yhat) / p.sigma); },
          [&](const ClippedGaussianNoise& p) {
            check_unit_interval(m);
            const double eps = p.ramp_eps;
            if (m < eps) return sp::normal_cdf((eps - yhat) / p.sigma) * (m / eps);
            if (m > 1.0 - eps) {
              const double c = sp::normal_cdf((1.0 - eps - yhat) / p.sigma);
              return c + (1.0 - c) * (m - (1.0 - eps)) / eps;
            }
            return sp::normal_cdf((m - yhat) / p.sigma);
          },
          [&](const PoissonNoise&) {
            check_poisson_count(m);
            return sp::incomplete_gamma(m + 1.0, std::max(yhat, 0.0)).q;
          },
      },
      model.params());
}

double prepare_measurement(const NoiseModel& model, double m, RngStream& stream) {
  if (const auto* p = std::get_if<ClippedGaussianNoise>(&model.params())) {
    check_unit_interval(m);
    if (m == 0.0) return p->ramp_eps * stream.uniform();
    if (m == 1.0) return 1.0 - p->ramp_eps * stream.uniform();
  }
  return m;
}

LogitScore logit_score(const NoiseModel& model, double m, double yhat, const TailPolicy& policy) {
  return std::visit(Overloaded{
                        [&](const GaussianNoise& p) { return gaussian_score((m - yhat) / p.sigma, p.sigma, policy); },
                        [&](const ClippedGaussianNoise& p) { return clipped_score(p, m, yhat, policy); },
                        [&](const PoissonNoise&) { return poisson_score(m, yhat, policy); },
                    },
                    model.params());
}

double logit_cdf(const NoiseModel& model, double m, double yhat, const TailPolicy& policy, RngStream& stream) {
  return logit_score(model, prepare_measurement(model, m, stream), yhat, policy).r;
}

double dlogit_dyhat(const NoiseModel& model, double m, double yhat, const TailPolicy& policy) {
  return logit_score(model, m, yhat, policy).dr_dyhat;
}

std::vector<double> sample(const NoiseModel& model, std::span<const double> yhat, RngStream& stream) {
  return std::visit(Overloaded{
                        [&](const GaussianNoise& p) { return sample_gaussian(stream, yhat, p.sigma); },
                        [&](const ClippedGaussianNoise& p) {
                          auto out = sample_gaussian(stream, yhat, p.sigma);
                          for (auto& v : out) v = std::clamp(v, 0.0, 1.0);
                          return out;
                        },
                        [&](const PoissonNoise&) {
                          const auto counts = sample_poisson(stream, yhat);
                          return std::vector<double>(counts.begin(), counts.end());
                        },
                    },
                    model.params());
}

RandomizedPit randomized_pit_at(double m, double yhat, double u) {
  check_poisson_count(m);
  if (!(yhat >= 0.0)) throw ParameterError("randomized_pit: rate must be non-negative");
  const auto k = static_cast<std::int64_t>(m);
  const double pmf = sp::poisson_pmf(k, yhat);
  const double pmf_prev = k > 0 ? sp::poisson_pmf(k - 1, yhat) : 0.0;
  // F(m - 1) = Q(m, q); 1 - F(m) = P(m + 1, q).
  const double below = k > 0 ? sp::incomplete_gamma(m, yhat).q : 0.0;
  const double above = sp::incomplete_gamma(m + 1.0, yhat).p;
  return {below + u * pmf, above + (1.0 - u) * pmf, -(1.0 - u) * pmf_prev - u * pmf};
}

double randomized_pit(double m, double yhat, RngStream& stream) {
  return randomized_pit_at(m, yhat, stream.uniform()).s;
}

}  // namespace dcloss
