#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dcloss/noise_models.hpp"
#include "dcloss/rng.hpp"

namespace dcloss {

/// Per-measurement PIT values s_i = F(m_i | yhat_i) and logit scores r_i.
/// In the tail branches r comes from the expansion and s may round to 0 or 1.
struct ScoreVector {
  std::vector<double> s;
  std::vector<double> r;

  std::size_t size() const noexcept { return r.size(); }
};

/// How the sorted Logistic(0,1) reference u is obtained.
///   FreshSample    - N new draws from the supplied stream per evaluation.
///   FixedQuantiles - u_k = logit((k + 0.5) / N), deterministic.
enum class ReferenceMode { FreshSample, FixedQuantiles };

struct LossEval {
  double value = 0.0;
  std::vector<double> grad_yhat;
};

struct W1Result {
  double value = 0.0;
  std::vector<double> subgrad_a;
};

/// W1 distance between the empirical distributions of a and b:
/// (1/N) sum_k |a_(k) - b_(k)| over ascending sorts. subgrad_a[j] is
/// sign(a_j - b_(rank of a_j)) / N, with sign(0) = 0. Throws InputError when
/// the lengths differ or are zero.
W1Result wasserstein1_sorted(std::span<const double> a, std::span<const double> b);

/// Sorted Logistic(0,1) reference of length n.
std::vector<double> reference_sample(ReferenceMode mode, std::size_t n, RngStream& stream);

struct DcOptions {
  ReferenceMode mode = ReferenceMode::FreshSample;
  TailPolicy policy{};
  /// Poisson only: use the randomised PIT instead of the plain CDF.
  bool randomized_pit = false;
};

/// Saved state of a DC loss evaluation, enough to form the gradient later.
struct DcForward {
  double value = 0.0;
  std::vector<double> m_used;     // measurements after endpoint resampling
  std::vector<double> pit_noise;  // U per index when randomized_pit is set
  std::vector<double> r;
  std::vector<double> sign_weight;  // sign(r_j - u_rank(j)) / N
};

/// Value-only pass of the DC loss; keeps what the backward pass needs.
DcForward dc_forward(const NoiseModel& model, std::span<const double> m, std::span<const double> yhat,
                     const DcOptions& options, RngStream& stream);

/// Gradient with respect to yhat for a previous dc_forward on the same inputs.
std::vector<double> dc_backward(const DcForward& forward, const NoiseModel& model,
                                std::span<const double> yhat, const DcOptions& options);

/// DC loss: W1 between sorted logit-PIT scores and a sorted Logistic(0,1)
/// reference, with the gradient with respect to yhat. The sort permutation
/// and the reference are held fixed when differentiating.
LossEval dc_loss(const NoiseModel& model, std::span<const double> m, std::span<const double> yhat,
                 const DcOptions& options, RngStream& stream);

/// PIT values and logit scores, e.g. for calibration histograms.
ScoreVector pit_scores(const NoiseModel& model, std::span<const double> m, std::span<const double> yhat,
                       const DcOptions& options, RngStream& stream);

/// (1/N) sum (yhat - m)^2, gradient 2 (yhat - m) / N.
LossEval mse_loss(std::span<const double> yhat, std::span<const double> m);

/// sum -m ln(yhat + b) + (yhat + b) + ln m!, gradient 1 - m / (yhat + b).
/// An empty background means b = 0. Throws DomainError for a non-positive
/// rate and InputError for mismatched lengths.
LossEval poisson_nll(std::span<const double> yhat, std::span<const double> m,
                     std::span<const double> background = {});

}  // namespace dcloss
