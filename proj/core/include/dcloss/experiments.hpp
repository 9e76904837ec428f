#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dcloss/losses.hpp"
#include "dcloss/metrics.hpp"
#include "dcloss/optim.hpp"
#include "dcloss/regularizers.hpp"

namespace dcloss {

enum class ExperimentKind { Deconv, Tomo, Calibrate, Regsweep, Bench };

/// Everything an experiment depends on. Zero-valued sizes, iteration counts
/// and learning rates select the experiment's default (see resolved()).
struct ExperimentSpec {
  ExperimentKind experiment = ExperimentKind::Deconv;
  std::uint64_t seed = 0;
  /// Restricts deconv/tomo to one trained loss; empty runs all of them.
  std::optional<LossKind> loss;
  double sigma = 0.1;         // Gaussian noise level (deconv, calibrate)
  double counts_scale = 0.0;  // multiplies the base count level (tomo, regsweep, calibrate)
  std::size_t n = 0;          // signal length, image side, or calibration/bench size
  std::size_t iterations = 0;
  double lr = 0.0;
  std::vector<double> betas;  // regsweep grid; empty selects the default grid
  DcOptions dc{};
  std::filesystem::path out_dir;  // empty writes no files

  // Experiment-specific knobs.
  std::size_t n_angles = 60;
  /// Constant background per sinogram bin (randoms-like), as a fraction of
  /// the mean noiseless line integral. Negative selects the default.
  double background_fraction = -1.0;
  bool include_mlem = true;             // tomo
  bool precondition = true;             // tomo, regsweep
  bool use_mask = true;                 // tomo, regsweep
  std::filesystem::path phantom_path;   // tomo/regsweep: P2 image instead of the built-in phantom
  NoiseKind calibrate_noise = NoiseKind::Gaussian;
  std::size_t repeats = 100;            // calibrate
  std::size_t hist_bins = 20;
  std::size_t bench_reps = 1000;
  std::vector<std::size_t> bench_sizes{1000, 1000000};

  /// Copy with experiment defaults filled in. Throws ParameterError for
  /// values that cannot be used.
  ExperimentSpec resolved() const;
};

/// Default regularisation grid: 0 followed by 10 log-spaced values per
/// decade over [1e-4, 1e2].
std::vector<double> default_beta_grid();

/// Count-level gain of the tomography projector for a given side and scale.
/// The total expected counts stay constant as the side changes.
double tomo_gain(std::size_t side, double counts_scale);

struct MethodResult {
  std::string name;
  OptRun run;
  std::vector<double> final_prediction;  // forward model of the final estimate
};

struct DeconvResult {
  std::vector<double> truth;         // theta*
  std::vector<double> clean;         // blurred theta*
  std::vector<double> measurements;  // clean + noise
  std::vector<MethodResult> methods;
};

struct TomoResult {
  Image2D phantom;
  std::vector<double> clean_sinogram;  // without background
  std::vector<double> background;
  std::vector<double> counts;
  double truth_dc = 0.0;  // DC loss of the true sinogram against the counts
  std::vector<MethodResult> methods;
};

struct CalibrationCase {
  std::string name;
  std::vector<double> values;  // DC loss per repeat
  double mean = 0.0;
  double sd = 0.0;
  Histogram hist;  // PIT values of the first repeat
};

struct CalibrateResult {
  std::vector<CalibrationCase> cases;  // "truth", "noisy"
};

struct SweepPoint {
  double beta = 0.0;
  double nrmse = 0.0;
  double penalty = 0.0;
  double dc = 0.0;
  double nll = 0.0;
};

struct RegsweepResult {
  std::vector<SweepPoint> dc;   // DC + beta * EPTV, one entry per grid point
  std::vector<SweepPoint> nll;  // NLL + beta * EPTV
  std::size_t best_dc = 0;      // grid index with the lowest final NRMSE
  std::size_t best_nll = 0;
};

struct BenchRow {
  std::string noise;  // gaussian | poisson
  std::string pass;   // forward | backward
  std::string loss;   // dc | mse | nll
  std::size_t n = 0;
  double mean_seconds = 0.0;
  double sd_seconds = 0.0;
  double value = 0.0;  // loss value of the last repetition
};

struct BenchResult {
  std::vector<BenchRow> rows;
};

DeconvResult run_deconv(const ExperimentSpec& spec);
TomoResult run_tomo(const ExperimentSpec& spec);
CalibrateResult run_calibrate(const ExperimentSpec& spec);
RegsweepResult run_regsweep(const ExperimentSpec& spec);
BenchResult run_bench(const ExperimentSpec& spec);

const char* to_string(ExperimentKind kind);
const char* to_string(LossKind kind);

}  // namespace dcloss
