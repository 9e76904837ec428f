#include "dcloss/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dcloss/errors.hpp"
#include "dcloss/metrics.hpp"

namespace dcloss {

AdamState AdamState::zeros(std::size_t n, double lr) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw InputError("adam_step: parameter, gradient and moment lengths differ");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps_hat);
  }
}

namespace {

constexpr double kGuard = 1e-12;
// Rates below this are clamped before evaluating the Poisson NLL inside the
// Adam loop; the gradient passes straight through the clamp.
constexpr double kNllRateFloor = 1e-9;

}  // namespace

std::vector<double> mlem_step(std::span<const double> x, std::span<const double> counts, const ForwardOp& op,
                              std::span<const double> background, std::span<const double> sens) {
  if (counts.size() != op.output_size() || sens.size() != op.input_size()) {
    throw InputError("mlem_step: dimension mismatch");
  }
  if (!background.empty() && background.size() != counts.size()) throw InputError("mlem_step: background length");
  auto ratio = apply(op, x);
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    const double denom = ratio[i] + (background.empty() ? 0.0 : background[i]);
    ratio[i] = counts[i] / std::max(denom, kGuard);
  }
  auto back = adjoint(op, ratio);
  for (std::size_t j = 0; j < back.size(); ++j) back[j] *= x[j] / std::max(sens[j], kGuard);
  return back;
}

std::vector<double> mlem_step(std::span<const double> x, std::span<const double> counts, const ForwardOp& op,
                              std::span<const double> background) {
  const auto sens = sensitivity(op);
  return mlem_step(x, counts, op, background, sens);
}

void RunConfig::validate() const {
  if (iterations < 1) throw ParameterError("RunConfig: iterations must be >= 1");
  if (optimizer == OptimizerKind::Adam && !(lr > 0.0)) throw ParameterError("RunConfig: lr must be > 0 for Adam");
  if (!(beta >= 0.0)) throw ParameterError("RunConfig: beta must be >= 0");
  if (!(psnr_peak > 0.0)) throw ParameterError("RunConfig: psnr_peak must be > 0");
  dc.policy.validate();
}

namespace {

struct Evaluation {
  std::vector<double> yhat;
  double dc = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
  double nll = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> grad_yhat;  // training-loss gradient, Adam only
};

std::vector<double> with_background(std::span<const double> yhat, std::span<const double> b) {
  std::vector<double> out(yhat.begin(), yhat.end());
  if (!b.empty()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  }
  return out;
}

LossEval safe_nll(std::span<const double> yhat, std::span<const double> m, std::span<const double> b) {
  auto rate = with_background(yhat, b);
  for (auto& r : rate) r = std::max(r, kNllRateFloor);
  return poisson_nll(rate, m);
}

class Loop {
 public:
  Loop(const RunConfig& config, const Problem& problem) : cfg_(config), pb_(problem) {
    poisson_ = pb_.noise.kind() == NoiseKind::Poisson;
    run_stream_ = RngStream(cfg_.seed, 0x5eed);
  }

  Evaluation evaluate(std::span<const double> x, std::size_t k, bool full, bool need_grad) {
    Evaluation ev;
    ev.yhat = apply(pb_.op, x);
    const auto& m = pb_.measurements;
    const bool train_dc = need_grad && cfg_.loss == LossKind::DC;
    if (train_dc || full) {
      // The DC prediction includes the background for Poisson data.
      auto pred = poisson_ ? with_background(ev.yhat, pb_.background) : ev.yhat;
      RngStream stream = run_stream_.derive(k);
      if (train_dc) {
        auto le = dc_loss(pb_.noise, m, pred, cfg_.dc, stream);
        ev.dc = le.value;
        ev.grad_yhat = std::move(le.grad_yhat);
      } else {
        ev.dc = dc_forward(pb_.noise, m, pred, cfg_.dc, stream).value;
      }
    }
    const bool train_mse = need_grad && cfg_.loss == LossKind::MSE;
    if (train_mse || full) {
      auto le = mse_loss(ev.yhat, m);
      ev.mse = le.value;
      if (train_mse) ev.grad_yhat = std::move(le.grad_yhat);
    }
    const bool train_nll = need_grad && cfg_.loss == LossKind::NLL;
    if (train_nll || (full && poisson_)) {
      auto le = safe_nll(ev.yhat, m, pb_.background);
      ev.nll = le.value;
      if (train_nll) ev.grad_yhat = std::move(le.grad_yhat);
    }
    return ev;
  }

  std::vector<double> reported(std::span<const double> x) const {
    std::vector<double> out(x.begin(), x.end());
    if (cfg_.relu_output) {
      for (auto& v : out) v = std::max(v, 0.0);
    }
    return out;
  }

  IterationRecord record(std::size_t k, const Evaluation& ev, std::span<const double> x) const {
    IterationRecord rec{k, ev.dc, ev.mse, ev.nll, std::numeric_limits<double>::quiet_NaN(),
                        std::numeric_limits<double>::quiet_NaN()};
    if (!pb_.ground_truth.empty()) {
      const auto img = reported(x);
      rec.nrmse = nrmse(img, pb_.ground_truth);
      rec.psnr = psnr(img, pb_.ground_truth, cfg_.psnr_peak);
    }
    return rec;
  }

  double penalty(std::span<const double> x, std::vector<double>* grad) const {
    if (cfg_.regularizer == RegularizerKind::None) return 0.0;
    Image2D img(pb_.image_width, pb_.image_height, std::vector<double>(x.begin(), x.end()));
    auto pe = cfg_.regularizer == RegularizerKind::TV ? tv(img) : eptv(img, cfg_.eptv);
    if (grad) *grad = std::move(pe.grad.values);
    return pe.value;
  }

  OptRun run() {
    const std::size_t n = pb_.op.input_size();
    std::vector<double> x = pb_.initial;
    const bool adam = cfg_.optimizer == OptimizerKind::Adam;
    if (adam && !cfg_.mask.empty()) apply_mask(x);
    const auto sens = sensitivity(pb_.op);
    AdamState state = AdamState::zeros(n, cfg_.lr);
    OptRun out;
    out.records.reserve(cfg_.iterations);
    std::vector<double> reg_grad;
    std::vector<double> grad;
    for (std::size_t it = 1; it <= cfg_.iterations; ++it) {
      // Evaluate x_{it-1}; its metrics become record it-1.
      const bool full = cfg_.record_trajectory && it > 1;
      const auto ev = evaluate(x, it - 1, full, adam);
      if (it > 1) out.records.push_back(record(it - 1, ev, x));
      if (adam) {
        grad = adjoint(pb_.op, ev.grad_yhat);
        if (cfg_.beta > 0.0) {
          penalty(x, &reg_grad);
          for (std::size_t j = 0; j < n; ++j) grad[j] += cfg_.beta * reg_grad[j];
        }
        if (cfg_.precondition) {
          for (std::size_t j = 0; j < n; ++j) {
            if (sens[j] > kGuard) grad[j] /= sens[j];
          }
        }
        adam_step(state, x, grad);
        if (!cfg_.mask.empty()) apply_mask(x);
      } else {
        x = mlem_step(x, pb_.measurements, pb_.op, pb_.background, sens);
      }
      maybe_snapshot(it, x, out);
    }
    const auto ev = evaluate(x, cfg_.iterations, true, false);
    out.records.push_back(record(cfg_.iterations, ev, x));
    out.final_penalty = penalty(x, nullptr);
    out.final_params = reported(x);
    return out;
  }

 private:
  void apply_mask(std::vector<double>& x) const {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] *= cfg_.mask[j];
  }

  void maybe_snapshot(std::size_t it, std::span<const double> x, OptRun& out) const {
    if (std::find(cfg_.snapshot_iterations.begin(), cfg_.snapshot_iterations.end(), it) !=
        cfg_.snapshot_iterations.end()) {
      out.snapshots.push_back({it, reported(x)});
    }
  }

  const RunConfig& cfg_;
  const Problem& pb_;
  bool poisson_ = false;
  RngStream run_stream_{0};
};

void validate_problem(const RunConfig& cfg, const Problem& pb) {
  const std::size_t n = pb.op.input_size();
  if (pb.measurements.size() != pb.op.output_size()) throw InputError("run: measurement length does not match operator");
  if (pb.initial.size() != n) throw InputError("run: initial estimate length does not match operator");
  if (!pb.ground_truth.empty() && pb.ground_truth.size() != n) throw InputError("run: ground truth length mismatch");
  if (!cfg.mask.empty() && cfg.mask.size() != n) throw InputError("run: mask length mismatch");
  if (cfg.regularizer != RegularizerKind::None && pb.image_width * pb.image_height != n) {
    throw InputError("run: regularizer needs image dimensions matching the parameter count");
  }
  if (cfg.optimizer == OptimizerKind::MLEM && pb.noise.kind() != NoiseKind::Poisson) {
    throw ParameterError("run: MLEM requires the Poisson noise model");
  }
  if (cfg.loss == LossKind::NLL && pb.noise.kind() != NoiseKind::Poisson) {
    throw ParameterError("run: the NLL loss requires the Poisson noise model");
  }
}

}  // namespace

OptRun run(const RunConfig& config, const Problem& problem) {
  config.validate();
  validate_problem(config, problem);
  Loop loop(config, problem);
  return loop.run();
}

}  // namespace dcloss
