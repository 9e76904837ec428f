#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dcloss/forward_ops.hpp"
#include "dcloss/losses.hpp"
#include "dcloss/noise_models.hpp"
#include "dcloss/regularizers.hpp"

namespace dcloss {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;

  static AdamState zeros(std::size_t n, double lr);
};

/// Bias-corrected Adam update of params in place. Throws InputError when the
/// parameter, gradient and moment lengths differ.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad);

/// One MLEM update x' = (x / sens) * A^T(m / (A x + b)). Denominators are
/// floored at 1e-12. An empty background means b = 0.
std::vector<double> mlem_step(std::span<const double> x, std::span<const double> counts, const ForwardOp& op,
                              std::span<const double> background, std::span<const double> sens);

std::vector<double> mlem_step(std::span<const double> x, std::span<const double> counts, const ForwardOp& op,
                              std::span<const double> background = {});

enum class LossKind { DC, MSE, NLL };
enum class OptimizerKind { Adam, MLEM };
enum class RegularizerKind { None, TV, EPTV };

struct RunConfig {
  LossKind loss = LossKind::DC;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::size_t iterations = 1000;
  double lr = 5e-3;
  double beta = 0.0;
  RegularizerKind regularizer = RegularizerKind::None;
  EptvOptions eptv{};
  /// Support mask multiplied into the Adam estimate every iteration; empty
  /// means no mask. Ignored by MLEM.
  std::vector<double> mask;
  /// Divide each Adam gradient by the sensitivity image.
  bool precondition = false;
  std::uint64_t seed = 0;
  std::vector<std::size_t> snapshot_iterations{1, 10, 100, 1000, 10000};
  DcOptions dc{};
  /// Report images through max(x, 0).
  bool relu_output = false;
  double psnr_peak = 1.0;
  /// When false only the final iteration's metrics are computed in full; the
  /// other records carry NaN for metrics that are not the training loss.
  bool record_trajectory = true;

  /// Throws ParameterError on an inconsistent configuration.
  void validate() const;
};

struct Problem {
  ForwardOp op;
  NoiseModel noise;
  std::vector<double> measurements;
  std::vector<double> ground_truth;  // parameter space; empty disables nrmse/psnr
  std::vector<double> initial;
  std::vector<double> background;  // Poisson background b; empty means zero
  std::size_t image_width = 0;     // needed by the regularizers
  std::size_t image_height = 0;
};

/// Metrics of the estimate after `iteration` updates. nll is NaN for
/// non-Poisson problems.
struct IterationRecord {
  std::size_t iteration = 0;
  double dc = 0.0;
  double mse = 0.0;
  double nll = 0.0;
  double nrmse = 0.0;
  double psnr = 0.0;
};

struct Snapshot {
  std::size_t iteration = 0;
  std::vector<double> params;
};

struct OptRun {
  std::vector<IterationRecord> records;
  std::vector<Snapshot> snapshots;
  std::vector<double> final_params;  // reported (ReLU'd when configured)
  double final_penalty = 0.0;        // regularizer value at the final estimate, before beta
};

/// Runs the configured optimisation loop. Adam minimises data loss +
/// beta * regularizer; MLEM ignores loss/regularizer settings. Record k holds
/// the metrics of the estimate after k updates.
OptRun run(const RunConfig& config, const Problem& problem);

}  // namespace dcloss
