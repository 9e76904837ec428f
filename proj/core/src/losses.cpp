#include "dcloss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "dcloss/errors.hpp"
#include "dcloss/special.hpp"

namespace dcloss {

namespace {

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InputError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

// Pairs a against the sorted reference: returns the W1 value and writes
// sign(a_j - ref_rank(j)) / N into weight[j].
double w1_against_sorted(std::span<const double> a, std::span<const double> ref_sorted,
                         std::vector<double>& weight) {
  const std::size_t n = a.size();
  std::vector<std::pair<double, std::uint32_t>> keyed(n);
  for (std::size_t i = 0; i < n; ++i) keyed[i] = {a[i], static_cast<std::uint32_t>(i)};
  std::sort(keyed.begin(), keyed.end());
  weight.assign(n, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double diff = keyed[k].first - ref_sorted[k];
    total += std::fabs(diff);
    weight[keyed[k].second] = sign(diff) * inv_n;
  }
  return total * inv_n;
}

struct RandomizedScore {
  double r;
  double dr_dyhat;
};

// Randomised PIT score with a hard floor keeping the logit finite.
RandomizedScore randomized_score(double m, double yhat, double u) {
  constexpr double kFloor = 1e-300;
  const auto pit = randomized_pit_at(m, std::max(yhat, 0.0), u);
  const double s = std::max(pit.s, kFloor);
  const double sc = std::max(pit.one_minus_s, kFloor);
  const double dr = yhat > 0.0 ? pit.ds_dyhat * (1.0 / s + 1.0 / sc) : 0.0;
  return {std::log(s) - std::log(sc), dr};
}

void check_options(const NoiseModel& model, const DcOptions& options) {
  options.policy.validate();
  if (options.randomized_pit && model.kind() != NoiseKind::Poisson) {
    throw ParameterError("randomized PIT is only defined for the Poisson model");
  }
}

// Shared front half of the DC loss: measurement preparation, PIT noise and
// scores. derivative may be null when only values are needed.
void compute_scores(const NoiseModel& model, std::span<const double> m, std::span<const double> yhat,
                    const DcOptions& options, RngStream& stream, DcForward& out,
                    std::vector<double>* derivative) {
  require_same_length(m.size(), yhat.size(), "dc_loss");
  if (m.empty()) throw InputError("dc_loss: empty input");
  check_options(model, options);
  const std::size_t n = m.size();
  out.m_used.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.m_used[i] = prepare_measurement(model, m[i], stream);
  out.r.resize(n);
  if (derivative) derivative->resize(n);
  if (options.randomized_pit) {
    out.pit_noise = sample_uniform(stream, n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto sc = randomized_score(out.m_used[i], yhat[i], out.pit_noise[i]);
      out.r[i] = sc.r;
      if (derivative) (*derivative)[i] = sc.dr_dyhat;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto sc = logit_score(model, out.m_used[i], yhat[i], options.policy);
      out.r[i] = sc.r;
      if (derivative) (*derivative)[i] = sc.dr_dyhat;
    }
  }
}

}  // namespace

W1Result wasserstein1_sorted(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "wasserstein1_sorted");
  if (a.empty()) throw InputError("wasserstein1_sorted: empty input");
  std::vector<double> b_sorted(b.begin(), b.end());
  std::sort(b_sorted.begin(), b_sorted.end());
  W1Result out;
  out.value = w1_against_sorted(a, b_sorted, out.subgrad_a);
  return out;
}

std::vector<double> reference_sample(ReferenceMode mode, std::size_t n, RngStream& stream) {
  std::vector<double> u;
  if (mode == ReferenceMode::FixedQuantiles) {
    u.resize(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) u[k] = logistic_quantile((static_cast<double>(k) + 0.5) * inv_n);
  } else {
    u = sample_logistic(stream, n);
    std::sort(u.begin(), u.end());
  }
  return u;
}

DcForward dc_forward(const NoiseModel& model, std::span<const double> m, std::span<const double> yhat,
                     const DcOptions& options, RngStream& stream) {
  DcForward out;
  compute_scores(model, m, yhat, options, stream, out, nullptr);
  const auto u = reference_sample(options.mode, m.size(), stream);
  out.value = w1_against_sorted(out.r, u, out.sign_weight);
  return out;
}

std::vector<double> dc_backward(const DcForward& forward, const NoiseModel& model,
                                std::span<const double> yhat, const DcOptions& options) {
  require_same_length(forward.r.size(), yhat.size(), "dc_backward");
  std::vector<double> grad(yhat.size());
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    if (forward.sign_weight[i] == 0.0) continue;
    const double dr = options.randomized_pit
                          ? randomized_score(forward.m_used[i], yhat[i], forward.pit_noise[i]).dr_dyhat
                          : logit_score(model, forward.m_used[i], yhat[i], options.policy).dr_dyhat;
    grad[i] = forward.sign_weight[i] * dr;
  }
  return grad;
}

LossEval dc_loss(const NoiseModel& model, std::span<const double> m, std::span<const double> yhat,
                 const DcOptions& options, RngStream& stream) {
  DcForward fwd;
  std::vector<double> dr;
  compute_scores(model, m, yhat, options, stream, fwd, &dr);
  const auto u = reference_sample(options.mode, m.size(), stream);
  LossEval out;
  out.value = w1_against_sorted(fwd.r, u, fwd.sign_weight);
  out.grad_yhat.resize(dr.size());
  for (std::size_t i = 0; i < dr.size(); ++i) {
    out.grad_yhat[i] = fwd.sign_weight[i] == 0.0 ? 0.0 : fwd.sign_weight[i] * dr[i];
  }
  return out;
}

ScoreVector pit_scores(const NoiseModel& model, std::span<const double> m, std::span<const double> yhat,
                       const DcOptions& options, RngStream& stream) {
  DcForward fwd;
  compute_scores(model, m, yhat, options, stream, fwd, nullptr);
  ScoreVector out;
  out.s.resize(fwd.r.size());
  for (std::size_t i = 0; i < fwd.r.size(); ++i) {
    if (options.randomized_pit) {
      out.s[i] = randomized_pit_at(fwd.m_used[i], std::max(yhat[i], 0.0), fwd.pit_noise[i]).s;
    } else {
      out.s[i] = cdf(model, fwd.m_used[i], yhat[i]);
    }
  }
  out.r = std::move(fwd.r);
  return out;
}

LossEval mse_loss(std::span<const double> yhat, std::span<const double> m) {
  require_same_length(yhat.size(), m.size(), "mse_loss");
  if (yhat.empty()) throw InputError("mse_loss: empty input");
  const double inv_n = 1.0 / static_cast<double>(yhat.size());
  LossEval out;
  out.grad_yhat.resize(yhat.size());
  double total = 0.0;
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    const double d = yhat[i] - m[i];
    total += d * d;
    out.grad_yhat[i] = 2.0 * d * inv_n;
  }
  out.value = total * inv_n;
  return out;
}

LossEval poisson_nll(std::span<const double> yhat, std::span<const double> m, std::span<const double> background) {
  require_same_length(yhat.size(), m.size(), "poisson_nll");
  if (!background.empty()) require_same_length(yhat.size(), background.size(), "poisson_nll background");
  LossEval out;
  out.grad_yhat.resize(yhat.size());
  double total = 0.0;
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    const double rate = yhat[i] + (background.empty() ? 0.0 : background[i]);
    if (!(rate > 0.0)) {
      throw DomainError("poisson_nll: non-positive rate " + std::to_string(rate) + " at index " + std::to_string(i));
    }
    if (!(m[i] >= 0.0)) throw InputError("poisson_nll: negative count at index " + std::to_string(i));
    total += -m[i] * std::log(rate) + rate + std::lgamma(m[i] + 1.0);
    out.grad_yhat[i] = 1.0 - m[i] / rate;
  }
  out.value = total;
  return out;
}

}  // namespace dcloss
