#include "dcloss/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dcloss/errors.hpp"
#include "dcloss/forward_ops.hpp"
#include "dcloss/image_io.hpp"
#include "dcloss/phantom.hpp"

namespace dcloss {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

// Stream ids under the experiment seed.
constexpr std::uint64_t kMeasurementStream = 1;
constexpr std::uint64_t kTruthDcStream = 3;
constexpr std::uint64_t kHistogramStream = 4;
constexpr std::uint64_t kCalibrationNoiseStream = 5;
constexpr std::uint64_t kCalibrationDcStream = 6;
constexpr std::uint64_t kBenchInputStream = 7;
constexpr std::uint64_t kBenchDcStream = 8;

constexpr double kDeconvKernelSigma = 1.0;
constexpr std::size_t kDeconvKernelHalfwidth = 15;
// Expected counts per unit activity and unit path length at side 64,
// counts_scale 1.
constexpr double kTomoBaseGain = 1.0;
// Default constant background relative to the mean noiseless bin value.
constexpr double kTomoBackgroundFraction = 0.1;
// Mean rate of the Poisson calibration signal at counts_scale 1.
constexpr double kCalibrationBaseRate = 10.0;
// Pixel intensity of a white pixel when a phantom is read from a PGM file.
constexpr double kPgmPhantomPeak = 4.0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string method_name(LossKind loss) { return to_string(loss); }

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json record_json(const IterationRecord& r) {
  return {{"iteration", r.iteration}, {"dc", nullable(r.dc)},       {"mse", nullable(r.mse)},
          {"nll", nullable(r.nll)},   {"nrmse", nullable(r.nrmse)}, {"psnr", nullable(r.psnr)}};
}

// Minimum of one metric over the trajectory (or maximum for psnr), NaNs skipped.
json extremum_json(const std::vector<IterationRecord>& records, double IterationRecord::*field, bool maximise) {
  const IterationRecord* best = nullptr;
  for (const auto& r : records) {
    const double v = r.*field;
    if (std::isnan(v)) continue;
    if (best == nullptr || (maximise ? v > best->*field : v < best->*field)) best = &r;
  }
  if (best == nullptr) return nullptr;
  return {{"value", nullable(best->*field)}, {"iteration", best->iteration}};
}

json run_json(const OptRun& run) {
  const auto& recs = run.records;
  json j;
  j["final"] = recs.empty() ? json(nullptr) : record_json(recs.back());
  j["min"] = {{"dc", extremum_json(recs, &IterationRecord::dc, false)},
              {"mse", extremum_json(recs, &IterationRecord::mse, false)},
              {"nll", extremum_json(recs, &IterationRecord::nll, false)},
              {"nrmse", extremum_json(recs, &IterationRecord::nrmse, false)},
              {"psnr_max", extremum_json(recs, &IterationRecord::psnr, true)}};
  return j;
}

json spec_json(const ExperimentSpec& s) {
  json j{{"experiment", to_string(s.experiment)},
         {"seed", s.seed},
         {"loss", s.loss ? json(to_string(*s.loss)) : json(nullptr)},
         {"sigma", s.sigma},
         {"counts_scale", s.counts_scale},
         {"n", s.n},
         {"iterations", s.iterations},
         {"lr", s.lr},
         {"betas", s.betas},
         {"ref_mode", s.dc.mode == ReferenceMode::FreshSample ? "fresh" : "quantiles"},
         {"randomized_pit", s.dc.randomized_pit},
         {"n_angles", s.n_angles},
         {"background_fraction", s.background_fraction},
         {"include_mlem", s.include_mlem},
         {"precondition", s.precondition},
         {"use_mask", s.use_mask},
         {"phantom", s.phantom_path.empty() ? json(nullptr) : json(s.phantom_path.string())},
         {"repeats", s.repeats},
         {"hist_bins", s.hist_bins},
         {"bench_reps", s.bench_reps},
         {"bench_sizes", s.bench_sizes}};
  j["calibrate_noise"] = s.calibrate_noise == NoiseKind::Poisson ? "poisson" : "gaussian";
  return j;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void prepare_out_dir(const ExperimentSpec& spec) {
  if (spec.out_dir.empty()) return;
  std::filesystem::create_directories(spec.out_dir);
}

void write_trajectory(const std::filesystem::path& path, const OptRun& run, bool poisson) {
  std::vector<std::vector<double>> rows;
  rows.reserve(run.records.size());
  for (const auto& r : run.records) {
    rows.push_back({static_cast<double>(r.iteration), r.dc, poisson ? r.nll : r.mse, r.nrmse, r.psnr});
  }
  io::write_csv_table(path, {"iteration", "dc", "mse_or_nll", "nrmse", "psnr"}, rows);
}

void write_histogram(const std::filesystem::path& path, const Histogram& h) {
  std::vector<std::vector<double>> rows;
  for (std::size_t b = 0; b < h.bins(); ++b) {
    rows.push_back({h.edges[b], h.edges[b + 1], static_cast<double>(h.counts[b])});
  }
  io::write_csv_table(path, {"bin_lo", "bin_hi", "count"}, rows);
}

// PIT values of measurements under a prediction, as plotted in histograms.
Histogram pit_histogram(const NoiseModel& model, std::span<const double> m, std::span<const double> pred,
                        const DcOptions& dc, RngStream stream, std::size_t bins) {
  const auto scores = pit_scores(model, m, pred, dc, stream);
  return cdf_histogram(scores.s, bins);
}

std::vector<std::size_t> snapshot_schedule(std::size_t iterations) {
  std::vector<std::size_t> its;
  for (std::size_t k = 1; k < iterations; k *= 10) its.push_back(k);
  its.push_back(iterations);
  return its;
}

std::size_t default_bins(std::size_t side) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(side) * std::sqrt(2.0))) + 4;
}

struct TomoSetup {
  Image2D phantom;
  ForwardOp op;
  std::vector<double> clean;
  std::vector<double> background;
  std::vector<double> counts;
  std::vector<double> mask;
  std::vector<double> initial;
  double peak = 0.0;
};

TomoSetup make_tomo(const ExperimentSpec& spec) {
  Image2D phantom = [&] {
    if (spec.phantom_path.empty()) return ellipse_phantom(spec.n);
    auto img = io::read_pgm(spec.phantom_path);
    if (img.width != img.height) throw InputError("phantom image must be square");
    for (auto& v : img.values) v *= kPgmPhantomPeak;
    return img;
  }();
  const std::size_t side = phantom.width;
  ProjectorGeometry geo;
  geo.image_side = side;
  geo.n_angles = spec.n_angles;
  geo.n_bins = default_bins(side);
  geo.gain = tomo_gain(side, spec.counts_scale);
  auto op = ForwardOp::parallel_beam(geo);
  auto clean = dcloss::apply(op, phantom.values);
  const double mean_rate = std::accumulate(clean.begin(), clean.end(), 0.0) / static_cast<double>(clean.size());
  std::vector<double> background(clean.size(), spec.background_fraction * mean_rate);
  std::vector<double> expected(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) expected[i] = clean[i] + background[i];
  RngStream noise(spec.seed, kMeasurementStream);
  const auto draws = sample_poisson(noise, expected);
  std::vector<double> counts(draws.begin(), draws.end());

  double sum = 0.0;
  std::size_t nonzero = 0;
  double peak = 0.0;
  for (double v : phantom.values) {
    if (v != 0.0) {
      sum += v;
      ++nonzero;
    }
    peak = std::max(peak, v);
  }
  if (nonzero == 0) throw InputError("phantom has no nonzero pixels");
  std::vector<double> initial(phantom.size(), sum / static_cast<double>(nonzero));
  auto mask = spec.use_mask ? support_mask(phantom, 2.0) : std::vector<double>{};
  return {std::move(phantom), std::move(op), std::move(clean), std::move(background), std::move(counts), std::move(mask),
          std::move(initial), peak};
}

RunConfig tomo_config(const ExperimentSpec& spec, const TomoSetup& setup) {
  RunConfig cfg;
  cfg.iterations = spec.iterations;
  cfg.lr = spec.lr;
  cfg.seed = spec.seed;
  cfg.dc = spec.dc;
  cfg.mask = setup.mask;
  cfg.precondition = spec.precondition;
  cfg.relu_output = true;
  cfg.psnr_peak = setup.peak;
  cfg.snapshot_iterations = snapshot_schedule(spec.iterations);
  return cfg;
}

Problem tomo_problem(const TomoSetup& setup) {
  return Problem{setup.op,      NoiseModel::poisson(), setup.counts,        setup.phantom.values,
                 setup.initial, setup.background,      setup.phantom.width, setup.phantom.height};
}

template <typename T>
std::pair<double, double> mean_sd(const std::vector<T>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Deconv: return "deconv";
    case ExperimentKind::Tomo: return "tomo";
    case ExperimentKind::Calibrate: return "calibrate";
    case ExperimentKind::Regsweep: return "regsweep";
    case ExperimentKind::Bench: return "bench";
  }
  return "unknown";
}

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::DC: return "dc";
    case LossKind::MSE: return "mse";
    case LossKind::NLL: return "nll";
  }
  return "unknown";
}

std::vector<double> default_beta_grid() {
  std::vector<double> grid{0.0};
  for (int k = -40; k <= 20; ++k) grid.push_back(std::pow(10.0, k / 10.0));
  return grid;
}

double tomo_gain(std::size_t side, double counts_scale) {
  const double r = 64.0 / static_cast<double>(side);
  return kTomoBaseGain * counts_scale * r * r;
}

ExperimentSpec ExperimentSpec::resolved() const {
  ExperimentSpec s = *this;
  auto pick = [](auto& field, auto fallback) {
    if (field == decltype(fallback){}) field = fallback;
  };
  switch (s.experiment) {
    case ExperimentKind::Deconv:
      pick(s.n, std::size_t{500});
      pick(s.iterations, std::size_t{20000});
      pick(s.lr, 0.005);
      break;
    case ExperimentKind::Tomo:
      pick(s.n, std::size_t{64});
      pick(s.iterations, std::size_t{2000});
      pick(s.lr, 0.0025);
      pick(s.counts_scale, 1.0);
      if (s.background_fraction < 0.0) s.background_fraction = kTomoBackgroundFraction;
      break;
    case ExperimentKind::Regsweep:
      pick(s.n, std::size_t{64});
      pick(s.iterations, std::size_t{2000});
      pick(s.lr, 0.0025);
      pick(s.counts_scale, 0.25);
      if (s.background_fraction < 0.0) s.background_fraction = kTomoBackgroundFraction;
      if (s.betas.empty()) s.betas = default_beta_grid();
      break;
    case ExperimentKind::Calibrate:
      pick(s.n, std::size_t{1000000});
      pick(s.counts_scale, 1.0);
      break;
    case ExperimentKind::Bench:
      if (s.n != 0) s.bench_sizes = {s.n};
      break;
  }
  if (!(s.sigma > 0.0)) throw ParameterError("sigma must be > 0");
  if (s.experiment != ExperimentKind::Bench && s.experiment != ExperimentKind::Deconv && !(s.counts_scale > 0.0)) {
    throw ParameterError("counts scale must be > 0");
  }
  if (s.experiment == ExperimentKind::Regsweep) {
    for (double b : s.betas) {
      if (!(b >= 0.0)) throw ParameterError("beta values must be >= 0");
    }
  }
  if (s.n_angles == 0) throw ParameterError("need at least one angle");
  if (s.hist_bins < 2) throw ParameterError("need at least two histogram bins");
  if (s.experiment == ExperimentKind::Calibrate && s.repeats == 0) throw ParameterError("repeats must be >= 1");
  if (s.experiment == ExperimentKind::Bench) {
    if (s.bench_reps == 0) throw ParameterError("bench repetitions must be >= 1");
    if (s.bench_sizes.empty()) throw ParameterError("no bench sizes");
  }
  s.dc.policy.validate();
  return s;
}

DeconvResult run_deconv(const ExperimentSpec& input) {
  const auto t0 = Clock::now();
  const auto spec = input.resolved();
  prepare_out_dir(spec);
  const std::size_t n = spec.n;

  DeconvResult res;
  res.truth = two_tone_signal(n);
  const auto op = ForwardOp::conv1d(gaussian_kernel(kDeconvKernelSigma, kDeconvKernelHalfwidth), n);
  res.clean = dcloss::apply(op, res.truth);
  RngStream noise(spec.seed, kMeasurementStream);
  res.measurements = sample_gaussian(noise, res.clean, spec.sigma);
  const auto model = NoiseModel::gaussian(spec.sigma);

  double peak = 0.0;
  for (double v : res.truth) peak = std::max(peak, std::abs(v));

  std::vector<LossKind> losses{LossKind::MSE, LossKind::DC};
  if (spec.loss) {
    if (*spec.loss == LossKind::NLL) throw ParameterError("deconv supports the dc and mse losses");
    losses = {*spec.loss};
  }
  const Problem problem{op, model, res.measurements, res.truth, std::vector<double>(n, 0.0), {}, 0, 0};
  for (LossKind loss : losses) {
    RunConfig cfg;
    cfg.loss = loss;
    cfg.iterations = spec.iterations;
    cfg.lr = spec.lr;
    cfg.seed = spec.seed;
    cfg.dc = spec.dc;
    cfg.psnr_peak = peak;
    cfg.snapshot_iterations = snapshot_schedule(spec.iterations);
    MethodResult mr{method_name(loss), run(cfg, problem), {}};
    mr.final_prediction = dcloss::apply(op, mr.run.final_params);
    res.methods.push_back(std::move(mr));
  }

  if (!spec.out_dir.empty()) {
    const auto& dir = spec.out_dir;
    json summary;
    summary["spec"] = spec_json(spec);
    std::vector<std::string> header{"x", "truth", "clean", "measurement"};
    for (const auto& mr : res.methods) {
      write_trajectory(dir / ("trajectory_" + mr.name + ".csv"), mr.run, false);
      header.push_back(mr.name + "_theta");
      header.push_back(mr.name + "_reblurred");
      RngStream hs = RngStream(spec.seed, kHistogramStream).derive(&mr - res.methods.data() + 1);
      write_histogram(dir / ("hist_" + mr.name + ".csv"),
                      pit_histogram(model, res.measurements, mr.final_prediction, spec.dc, hs, spec.hist_bins));
      auto j = run_json(mr.run);
      double l2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = mr.run.final_params[i] - res.truth[i];
        l2 += d * d;
      }
      j["l2_error"] = std::sqrt(l2);
      summary["methods"][mr.name] = j;
    }
    write_histogram(dir / "hist_truth.csv",
                    pit_histogram(model, res.measurements, res.clean, spec.dc,
                                  RngStream(spec.seed, kHistogramStream).derive(0), spec.hist_bins));
    std::vector<std::vector<double>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
      rows[i] = {static_cast<double>(i) / static_cast<double>(n - 1), res.truth[i], res.clean[i], res.measurements[i]};
      for (const auto& mr : res.methods) {
        rows[i].push_back(mr.run.final_params[i]);
        rows[i].push_back(mr.final_prediction[i]);
      }
    }
    io::write_csv_table(dir / "signals.csv", header, rows);
    summary["runtime_seconds"] = seconds_since(t0);
    write_json(dir / "summary.json", summary);
  }
  return res;
}

TomoResult run_tomo(const ExperimentSpec& input) {
  const auto t0 = Clock::now();
  const auto spec = input.resolved();
  prepare_out_dir(spec);
  auto setup = make_tomo(spec);
  const auto model = NoiseModel::poisson();

  TomoResult res;
  {
    RngStream s(spec.seed, kTruthDcStream);
    std::vector<double> expected(setup.clean.size());
    for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = setup.clean[i] + setup.background[i];
    res.truth_dc = dc_forward(model, setup.counts, expected, spec.dc, s).value;
  }
  const auto problem = tomo_problem(setup);
  std::vector<LossKind> losses{LossKind::NLL, LossKind::DC};
  if (spec.loss) losses = {*spec.loss};
  for (LossKind loss : losses) {
    auto cfg = tomo_config(spec, setup);
    cfg.loss = loss;
    MethodResult mr{method_name(loss) + "_adam", run(cfg, problem), {}};
    mr.final_prediction = dcloss::apply(setup.op, mr.run.final_params);
    res.methods.push_back(std::move(mr));
  }
  if (spec.include_mlem) {
    auto cfg = tomo_config(spec, setup);
    cfg.optimizer = OptimizerKind::MLEM;
    cfg.loss = LossKind::NLL;
    MethodResult mr{"mlem", run(cfg, problem), {}};
    mr.final_prediction = dcloss::apply(setup.op, mr.run.final_params);
    res.methods.push_back(std::move(mr));
  }

  if (!spec.out_dir.empty()) {
    const auto& dir = spec.out_dir;
    json summary;
    summary["spec"] = spec_json(spec);
    summary["truth_dc"] = res.truth_dc;
    summary["total_counts"] = std::accumulate(setup.counts.begin(), setup.counts.end(), 0.0);
    io::write_pgm(dir / "image_truth.pgm", setup.phantom, setup.peak);
    std::vector<double> expected(setup.clean.size());
    for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = setup.clean[i] + setup.background[i];
    write_histogram(dir / "hist_truth.csv",
                    pit_histogram(model, setup.counts, expected, spec.dc,
                                  RngStream(spec.seed, kHistogramStream).derive(0), spec.hist_bins));
    for (std::size_t k = 0; k < res.methods.size(); ++k) {
      const auto& mr = res.methods[k];
      write_trajectory(dir / ("trajectory_" + mr.name + ".csv"), mr.run, true);
      for (const auto& snap : mr.run.snapshots) {
        const Image2D img(setup.phantom.width, setup.phantom.height, snap.params);
        io::write_pgm(dir / ("image_" + mr.name + "_" + std::to_string(snap.iteration) + ".pgm"), img, setup.peak);
      }
      auto pred = mr.final_prediction;
      for (std::size_t i = 0; i < pred.size(); ++i) pred[i] += setup.background[i];
      write_histogram(dir / ("hist_" + mr.name + ".csv"),
                      pit_histogram(model, setup.counts, pred, spec.dc,
                                    RngStream(spec.seed, kHistogramStream).derive(k + 1), spec.hist_bins));
      summary["methods"][mr.name] = run_json(mr.run);
    }
    summary["runtime_seconds"] = seconds_since(t0);
    write_json(dir / "summary.json", summary);
  }
  res.phantom = std::move(setup.phantom);
  res.clean_sinogram = std::move(setup.clean);
  res.background = std::move(setup.background);
  res.counts = std::move(setup.counts);
  return res;
}

CalibrateResult run_calibrate(const ExperimentSpec& input) {
  const auto t0 = Clock::now();
  const auto spec = input.resolved();
  prepare_out_dir(spec);
  const bool poisson = spec.calibrate_noise == NoiseKind::Poisson;
  if (spec.calibrate_noise == NoiseKind::ClippedGaussian) {
    throw ParameterError("calibrate supports the gaussian and poisson models");
  }
  const auto model = poisson ? NoiseModel::poisson() : NoiseModel::gaussian(spec.sigma);
  auto clean = two_tone_signal(spec.n);
  if (poisson) {
    for (auto& v : clean) v = kCalibrationBaseRate * spec.counts_scale * (1.0 + 0.5 * v);
  }

  CalibrateResult res;
  res.cases = {{"truth", {}, 0.0, 0.0, {}}, {"noisy", {}, 0.0, 0.0, {}}};
  for (std::size_t rep = 0; rep < spec.repeats; ++rep) {
    RngStream noise = RngStream(spec.seed, kCalibrationNoiseStream).derive(rep);
    const auto m = sample(model, clean, noise);
    RngStream dc_stream = RngStream(spec.seed, kCalibrationDcStream).derive(rep);
    RngStream truth_stream = dc_stream.derive(0);
    RngStream noisy_stream = dc_stream.derive(1);
    res.cases[0].values.push_back(dc_forward(model, m, clean, spec.dc, truth_stream).value);
    res.cases[1].values.push_back(dc_forward(model, m, m, spec.dc, noisy_stream).value);
    if (rep == 0) {
      res.cases[0].hist = pit_histogram(model, m, clean, spec.dc, dc_stream.derive(2), spec.hist_bins);
      res.cases[1].hist = pit_histogram(model, m, m, spec.dc, dc_stream.derive(3), spec.hist_bins);
    }
  }
  for (auto& c : res.cases) std::tie(c.mean, c.sd) = mean_sd(c.values);

  if (!spec.out_dir.empty()) {
    const auto& dir = spec.out_dir;
    json summary;
    summary["spec"] = spec_json(spec);
    std::vector<std::vector<double>> rows;
    for (std::size_t rep = 0; rep < spec.repeats; ++rep) {
      rows.push_back({static_cast<double>(rep), res.cases[0].values[rep], res.cases[1].values[rep]});
    }
    io::write_csv_table(dir / "calibrate.csv", {"repeat", "truth", "noisy"}, rows);
    for (const auto& c : res.cases) {
      write_histogram(dir / ("hist_" + c.name + ".csv"), c.hist);
      summary["cases"][c.name] = {{"mean", c.mean}, {"sd", c.sd}, {"ci95_half_width", 1.96 * c.sd}};
    }
    summary["runtime_seconds"] = seconds_since(t0);
    write_json(dir / "summary.json", summary);
  }
  return res;
}

RegsweepResult run_regsweep(const ExperimentSpec& input) {
  const auto t0 = Clock::now();
  const auto spec = input.resolved();
  if (spec.betas.empty()) throw ParameterError("empty beta grid");
  prepare_out_dir(spec);
  const auto setup = make_tomo(spec);
  const auto problem = tomo_problem(setup);

  RegsweepResult res;
  std::vector<double> best_dc_image;
  std::vector<double> best_nll_image;
  for (LossKind loss : {LossKind::DC, LossKind::NLL}) {
    auto& points = loss == LossKind::DC ? res.dc : res.nll;
    auto& best = loss == LossKind::DC ? res.best_dc : res.best_nll;
    auto& best_image = loss == LossKind::DC ? best_dc_image : best_nll_image;
    for (double beta : spec.betas) {
      auto cfg = tomo_config(spec, setup);
      cfg.loss = loss;
      cfg.beta = beta;
      cfg.regularizer = RegularizerKind::EPTV;
      cfg.eptv = EptvOptions{};
      cfg.record_trajectory = false;
      cfg.snapshot_iterations.clear();
      const auto out = run(cfg, problem);
      const auto& last = out.records.back();
      points.push_back({beta, last.nrmse, out.final_penalty, last.dc, last.nll});
      if (points.size() == 1 || last.nrmse < points[best].nrmse) {
        best = points.size() - 1;
        best_image = out.final_params;
      }
    }
  }

  if (!spec.out_dir.empty()) {
    const auto& dir = spec.out_dir;
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < spec.betas.size(); ++k) {
      const auto& d = res.dc[k];
      const auto& l = res.nll[k];
      rows.push_back({d.beta, d.nrmse, d.penalty, d.dc, d.nll, l.nrmse, l.penalty, l.dc, l.nll});
    }
    io::write_csv_table(dir / "regsweep.csv",
                        {"beta", "dc_nrmse", "dc_penalty", "dc_dc", "dc_nll", "nll_nrmse", "nll_penalty", "nll_dc",
                         "nll_nll"},
                        rows);
    const auto w = setup.phantom.width;
    const auto h = setup.phantom.height;
    const auto iters = std::to_string(spec.iterations);
    io::write_pgm(dir / "image_truth.pgm", setup.phantom, setup.peak);
    io::write_pgm(dir / ("image_dc_eptv_best_" + iters + ".pgm"), Image2D(w, h, best_dc_image), setup.peak);
    io::write_pgm(dir / ("image_nll_eptv_best_" + iters + ".pgm"), Image2D(w, h, best_nll_image), setup.peak);
    json summary;
    summary["spec"] = spec_json(spec);
    auto point_json = [](const SweepPoint& p) {
      return json{{"beta", p.beta}, {"nrmse", nullable(p.nrmse)}, {"penalty", nullable(p.penalty)},
                  {"dc", nullable(p.dc)}, {"nll", nullable(p.nll)}};
    };
    summary["methods"]["dc_eptv"] = {{"best", point_json(res.dc[res.best_dc])},
                                     {"beta_zero", point_json(res.dc.front())}};
    summary["methods"]["nll_eptv"] = {{"best", point_json(res.nll[res.best_nll])},
                                      {"beta_zero", point_json(res.nll.front())}};
    summary["runtime_seconds"] = seconds_since(t0);
    write_json(dir / "summary.json", summary);
  }
  return res;
}

BenchResult run_bench(const ExperimentSpec& input) {
  const auto t0 = Clock::now();
  const auto spec = input.resolved();
  prepare_out_dir(spec);
  BenchResult res;

  for (std::size_t si = 0; si < spec.bench_sizes.size(); ++si) {
    const std::size_t n = spec.bench_sizes[si];
    RngStream inputs = RngStream(spec.seed, kBenchInputStream).derive(si);
    // Gaussian: predictions and measurements are both Uniform(0, 1) arrays.
    // Poisson: rates 10 * u, counts drawn from rates 10 * u'.
    const auto a = sample_uniform(inputs, n);
    const auto b = sample_uniform(inputs, n);
    std::vector<double> rates(n);
    std::vector<double> rate_b(n);
    for (std::size_t i = 0; i < n; ++i) {
      rates[i] = 10.0 * a[i];
      rate_b[i] = 10.0 * b[i];
    }
    const auto draws = sample_poisson(inputs, rate_b);
    const std::vector<double> counts(draws.begin(), draws.end());

    auto time_it = [&](const std::string& noise, const std::string& pass, const std::string& loss, auto&& fn) {
      std::vector<double> times;
      times.reserve(spec.bench_reps);
      double value = 0.0;
      for (std::size_t rep = 0; rep < spec.bench_reps; ++rep) {
        const auto start = Clock::now();
        value = fn(rep);
        times.push_back(seconds_since(start));
      }
      const auto [mean, sd] = mean_sd(times);
      res.rows.push_back({noise, pass, loss, n, mean, sd, value});
    };

    for (const bool poisson : {false, true}) {
      const auto model = poisson ? NoiseModel::poisson() : NoiseModel::gaussian(spec.sigma);
      const std::string noise = poisson ? "poisson" : "gaussian";
      const std::vector<double>& pred = poisson ? rates : a;
      const std::vector<double>& meas = poisson ? counts : b;
      auto dc_stream = [&](std::size_t rep) { return RngStream(spec.seed, kBenchDcStream).derive(si).derive(rep); };
      auto baseline = [&]() { return poisson ? poisson_nll(pred, meas) : mse_loss(pred, meas); };
      const std::string base_name = poisson ? "nll" : "mse";

      time_it(noise, "forward", "dc", [&](std::size_t rep) {
        auto s = dc_stream(rep);
        return dc_forward(model, meas, pred, spec.dc, s).value;
      });
      time_it(noise, "forward", base_name, [&](std::size_t) { return baseline().value; });

      auto s = dc_stream(0);
      const auto fwd = dc_forward(model, meas, pred, spec.dc, s);
      time_it(noise, "backward", "dc", [&](std::size_t) {
        const auto g = dc_backward(fwd, model, pred, spec.dc);
        return g.empty() ? 0.0 : fwd.value;
      });
      time_it(noise, "backward", base_name, [&](std::size_t) { return baseline().value; });
    }
  }

  if (!spec.out_dir.empty()) {
    const auto& dir = spec.out_dir;
    std::ofstream out(dir / "bench.csv");
    if (!out) throw std::runtime_error("cannot open bench.csv for writing");
    out << "noise,pass,loss,n,mean_seconds,sd_seconds,value\n";
    json rows = json::array();
    for (const auto& r : res.rows) {
      out << r.noise << ',' << r.pass << ',' << r.loss << ',' << r.n << ',' << io::format_double(r.mean_seconds)
          << ',' << io::format_double(r.sd_seconds) << ',' << io::format_double(r.value) << '\n';
      rows.push_back({{"noise", r.noise}, {"pass", r.pass}, {"loss", r.loss}, {"n", r.n},
                      {"mean_seconds", r.mean_seconds}, {"sd_seconds", r.sd_seconds}, {"value", r.value}});
    }
    if (!out) throw std::runtime_error("failed writing bench.csv");
    json summary;
    summary["spec"] = spec_json(spec);
    summary["rows"] = rows;
    summary["runtime_seconds"] = seconds_since(t0);
    write_json(dir / "summary.json", summary);
  }
  return res;
}

}  // namespace dcloss
