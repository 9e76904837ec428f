#pragma once

#include <span>
#include <variant>
#include <vector>

#include "dcloss/rng.hpp"

namespace dcloss {

struct GaussianNoise {
  double sigma;
};

/// Gaussian noise clipped to [0, 1]. The CDF is replaced by linear ramps of
/// width ramp_eps next to each boundary; hard_eps clamps ramp CDF values away
/// from 0 and 1.
struct ClippedGaussianNoise {
  double sigma;
  double ramp_eps = 1e-3;
  double hard_eps = 1e-12;
};

/// Poisson counts; the rate is the predicted mean supplied per call.
struct PoissonNoise {};

enum class NoiseKind { Gaussian, ClippedGaussian, Poisson };

class NoiseModel {
 public:
  using Variant = std::variant<GaussianNoise, ClippedGaussianNoise, PoissonNoise>;

  static NoiseModel gaussian(double sigma);
  static NoiseModel clipped_gaussian(double sigma, double ramp_eps = 1e-3, double hard_eps = 1e-12);
  static NoiseModel poisson();

  NoiseKind kind() const noexcept;
  const Variant& params() const noexcept { return params_; }

 private:
  explicit NoiseModel(Variant params) : params_(params) {}
  Variant params_;
};

/// Thresholds selecting between the direct logit-of-CDF evaluation and the
/// closed-form tail expansions.
///
/// The tail expansions start from the leading asymptotic term
///   Gaussian:  z^2/2 + ln z + ln sqrt(2 pi)
///   Poisson:   m ln q - q - ln m!             (lower tail, q >> m)
///              -(m+1) ln q + q + ln (m+1)!    (upper tail, q << m)
/// and add `*_tail_terms` further terms of the corresponding asymptotic or
/// convergent series. Setting the term counts to 0 gives the bare leading
/// terms.
struct TailPolicy {
  double gaussian_z_threshold = 5.0;
  double poisson_s_threshold = 1e-12;
  /// Phi(-5): the clipped model switches to the tail at the same place as
  /// the plain Gaussian.
  double clipped_delta = 2.866515718791939e-7;
  int gaussian_tail_terms = 3;
  int poisson_tail_terms = 16;

  /// Throws ParameterError when a threshold is out of range.
  void validate() const;
};

/// Which piece of the piecewise logit-CDF evaluation produced a score.
enum class ScoreBranch { Central, LowerTail, UpperTail, LowerRamp, UpperRamp };

struct LogitScore {
  double r;
  double dr_dyhat;
  ScoreBranch branch;
};

/// Predicted rates below this floor are clamped before taking logarithms.
inline constexpr double kPoissonRateFloor = 1e-12;

/// F(m | yhat). Poisson uses s = 1 - GammaCDF(max(yhat, 0); m + 1, 1).
/// Throws InputError for measurements outside the model's support.
double cdf(const NoiseModel& model, double m, double yhat);

/// Returns the measurement value that enters the logit-CDF. Identity except
/// for the clipped model, where m == 0 and m == 1 are redrawn uniformly inside
/// the boundary ramps. The returned value must be reused for the gradient.
double prepare_measurement(const NoiseModel& model, double m, RngStream& stream);

/// logit(F(m | yhat)) and its analytic derivative for an already prepared
/// measurement. The derivative is that of the branch actually evaluated.
LogitScore logit_score(const NoiseModel& model, double m, double yhat, const TailPolicy& policy);

/// prepare_measurement followed by logit_score(...).r.
double logit_cdf(const NoiseModel& model, double m, double yhat, const TailPolicy& policy,
                 RngStream& stream);

/// d logit(F(m | yhat)) / d yhat. For the clipped model pass the prepared m.
double dlogit_dyhat(const NoiseModel& model, double m, double yhat, const TailPolicy& policy);

/// One noise realisation around yhat. The clipped model clips Gaussian draws
/// to [0, 1].
std::vector<double> sample(const NoiseModel& model, std::span<const double> yhat, RngStream& stream);

/// Randomised PIT for Poisson counts, s = F(m - 1) + U pmf(m), with the
/// complement and the derivative with respect to the rate.
struct RandomizedPit {
  double s;
  double one_minus_s;
  double ds_dyhat;
};

RandomizedPit randomized_pit_at(double m, double yhat, double u);

/// Draws U ~ Uniform(0, 1) from the stream and returns s.
double randomized_pit(double m, double yhat, RngStream& stream);

}  // namespace dcloss
