#pragma once

#include <cstdint>

// Scalar special functions used by the noise models.

namespace dcloss::special {

inline constexpr double kLnSqrt2Pi = 0.91893853320467274178;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kSqrt1_2 = 0.70710678118654752440;

double normal_pdf(double z);
/// Phi(z), accurate in both tails via erfc.
double normal_cdf(double z);
/// 1 - Phi(z) without cancellation.
double normal_sf(double z);

/// ln(s / (1 - s)).
double logit(double s);
double sigmoid(double r);

/// Regularized incomplete gamma P(a, x) and Q(a, x) = 1 - P(a, x) with
/// their logarithms. Series for x < a + 1, Lentz continued fraction above.
struct IncompleteGamma {
  double p;
  double q;
  double log_p;
  double log_q;
};

IncompleteGamma incomplete_gamma(double a, double x);

/// CDF of Gamma(shape, scale = 1) at x: P(shape, x).
double gamma_cdf(double x, double shape);

/// ln(lambda^k e^{-lambda} / k!), with the lambda = 0 point mass handled.
double poisson_log_pmf(std::int64_t k, double lambda);
double poisson_pmf(std::int64_t k, double lambda);

/// ln(k!) via lgamma.
double log_factorial(std::int64_t k);

}  // namespace dcloss::special
