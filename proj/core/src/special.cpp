#include "dcloss/special.hpp"

#include <cmath>
#include <limits>

#include "dcloss/errors.hpp"

namespace dcloss::special {

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kSqrt1_2); }

double normal_sf(double z) { return 0.5 * std::erfc(z * kSqrt1_2); }

double logit(double s) { return std::log(s) - std::log1p(-s); }

double sigmoid(double r) {
  if (r >= 0.0) return 1.0 / (1.0 + std::exp(-r));
  const double e = std::exp(r);
  return e / (1.0 + e);
}

namespace {

constexpr int kMaxIter = 10000;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// ln of the common prefactor x^a e^{-x} / Gamma(a).
double log_prefactor(double a, double x) { return a * std::log(x) - x - std::lgamma(a); }

// Series for P(a, x): x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n)).
double log_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) break;
  }
  return log_prefactor(a, x) + std::log(sum);
}

// Modified Lentz continued fraction for Q(a, x).
double log_q_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return log_prefactor(a, x) + std::log(h);
}

}  // namespace

IncompleteGamma incomplete_gamma(double a, double x) {
  if (!(a > 0.0)) throw ParameterError("incomplete_gamma: shape must be positive");
  if (!(x >= 0.0)) throw DomainError("incomplete_gamma: x must be non-negative");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (x == 0.0) return {0.0, 1.0, kNegInf, 0.0};
  if (std::isinf(x)) return {1.0, 0.0, 0.0, kNegInf};
  IncompleteGamma out{};
  if (x < a + 1.0) {
    out.log_p = log_p_series(a, x);
    out.p = std::exp(out.log_p);
    out.q = -std::expm1(out.log_p);
    out.log_q = std::log1p(-out.p);
  } else {
    out.log_q = log_q_continued_fraction(a, x);
    out.q = std::exp(out.log_q);
    out.p = -std::expm1(out.log_q);
    out.log_p = std::log1p(-out.q);
  }
  return out;
}

double gamma_cdf(double x, double shape) { return incomplete_gamma(shape, x).p; }

double log_factorial(std::int64_t k) { return std::lgamma(static_cast<double>(k) + 1.0); }

double poisson_log_pmf(std::int64_t k, double lambda) {
  if (k < 0) return -std::numeric_limits<double>::infinity();
  if (lambda == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return static_cast<double>(k) * std::log(lambda) - lambda - log_factorial(k);
}

double poisson_pmf(std::int64_t k, double lambda) { return std::exp(poisson_log_pmf(k, lambda)); }

}  // namespace dcloss::special
