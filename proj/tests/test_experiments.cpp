#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "dcloss/errors.hpp"
#include "dcloss/experiments.hpp"
#include "dcloss/image_io.hpp"

using namespace dcloss;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dcloss_experiment_tests" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

json load_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

ExperimentSpec small_deconv() {
  ExperimentSpec s;
  s.experiment = ExperimentKind::Deconv;
  s.seed = 3;
  s.n = 80;
  s.iterations = 150;
  return s;
}

ExperimentSpec small_tomo() {
  ExperimentSpec s;
  s.experiment = ExperimentKind::Tomo;
  s.seed = 4;
  s.n = 16;
  s.n_angles = 12;
  s.iterations = 30;
  s.lr = 0.01;
  return s;
}

}  // namespace

TEST(Spec, ResolvedDefaults) {
  ExperimentSpec s;
  auto r = s.resolved();
  EXPECT_EQ(r.n, 500u);
  EXPECT_EQ(r.iterations, 20000u);
  EXPECT_DOUBLE_EQ(r.lr, 0.005);
  s.experiment = ExperimentKind::Tomo;
  r = s.resolved();
  EXPECT_EQ(r.n, 64u);
  EXPECT_EQ(r.iterations, 2000u);
  EXPECT_DOUBLE_EQ(r.lr, 0.0025);
  EXPECT_GE(r.background_fraction, 0.0);
  s.experiment = ExperimentKind::Regsweep;
  EXPECT_EQ(s.resolved().betas, default_beta_grid());
  s.experiment = ExperimentKind::Bench;
  s.n = 77;
  EXPECT_EQ(s.resolved().bench_sizes, (std::vector<std::size_t>{77}));
}

TEST(Spec, Validation) {
  ExperimentSpec s;
  s.sigma = 0.0;
  EXPECT_THROW(s.resolved(), ParameterError);
  s = {};
  s.experiment = ExperimentKind::Tomo;
  s.counts_scale = -1.0;
  EXPECT_THROW(s.resolved(), ParameterError);
  s = {};
  s.experiment = ExperimentKind::Regsweep;
  s.betas = {0.0, -1.0};
  EXPECT_THROW(s.resolved(), ParameterError);
  s = {};
  s.hist_bins = 1;
  EXPECT_THROW(s.resolved(), ParameterError);
  s = {};
  s.experiment = ExperimentKind::Calibrate;
  s.repeats = 0;
  EXPECT_THROW(s.resolved(), ParameterError);
  s = small_deconv();
  s.loss = LossKind::NLL;
  EXPECT_THROW(run_deconv(s), ParameterError);
  s = {};
  s.experiment = ExperimentKind::Calibrate;
  s.calibrate_noise = NoiseKind::ClippedGaussian;
  s.n = 10;
  EXPECT_THROW(run_calibrate(s), ParameterError);
}

TEST(Spec, BetaGridAndGain) {
  const auto g = default_beta_grid();
  ASSERT_EQ(g.size(), 62u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_NEAR(g[1], 1e-4, 1e-18);
  EXPECT_NEAR(g.back(), 1e2, 1e-12);
  for (std::size_t k = 2; k < g.size(); ++k) EXPECT_NEAR(g[k] / g[k - 1], std::pow(10.0, 0.1), 1e-12);
  EXPECT_DOUBLE_EQ(tomo_gain(32, 1.0), 4.0 * tomo_gain(64, 1.0));
  EXPECT_DOUBLE_EQ(tomo_gain(64, 0.25), 0.25 * tomo_gain(64, 1.0));
}

TEST(Deconv, OutputsAndSchema) {
  auto s = small_deconv();
  s.out_dir = fresh_dir("deconv");
  const auto res = run_deconv(s);
  ASSERT_EQ(res.methods.size(), 2u);
  EXPECT_EQ(res.methods[0].name, "mse");
  EXPECT_EQ(res.methods[1].name, "dc");
  for (const auto& mr : res.methods) EXPECT_EQ(mr.run.records.size(), 150u);

  const auto traj = lines(s.out_dir / "trajectory_dc.csv");
  ASSERT_EQ(traj.size(), 151u);
  EXPECT_EQ(traj[0], "iteration,dc,mse_or_nll,nrmse,psnr");
  const auto sig = lines(s.out_dir / "signals.csv");
  ASSERT_EQ(sig.size(), 81u);
  EXPECT_EQ(sig[0], "x,truth,clean,measurement,mse_theta,mse_reblurred,dc_theta,dc_reblurred");
  for (const char* h : {"hist_truth.csv", "hist_mse.csv", "hist_dc.csv"}) {
    const auto hl = lines(s.out_dir / h);
    ASSERT_EQ(hl.size(), 21u) << h;
    EXPECT_EQ(hl[0], "bin_lo,bin_hi,count");
  }
  const auto j = load_json(s.out_dir / "summary.json");
  EXPECT_EQ(j["spec"]["experiment"], "deconv");
  EXPECT_EQ(j["spec"]["seed"], 3);
  for (const char* m : {"mse", "dc"}) {
    ASSERT_TRUE(j["methods"].contains(m));
    EXPECT_TRUE(j["methods"][m]["final"].contains("dc"));
    EXPECT_TRUE(j["methods"][m]["min"]["dc"].contains("iteration"));
    EXPECT_GT(j["methods"][m]["l2_error"].get<double>(), 0.0);
  }
  EXPECT_GE(j["runtime_seconds"].get<double>(), 0.0);
}

TEST(Deconv, DeterministicFiles) {
  auto a = small_deconv();
  a.out_dir = fresh_dir("det_a");
  auto b = a;
  b.out_dir = fresh_dir("det_b");
  run_deconv(a);
  run_deconv(b);
  for (const char* f : {"trajectory_dc.csv", "trajectory_mse.csv", "signals.csv", "hist_dc.csv", "hist_truth.csv"}) {
    EXPECT_EQ(slurp(a.out_dir / f), slurp(b.out_dir / f)) << f;
  }
  auto c = small_deconv();
  c.seed = 5;
  EXPECT_NE(run_deconv(c).measurements, run_deconv(small_deconv()).measurements);
}

TEST(Deconv, SingleLoss) {
  auto s = small_deconv();
  s.loss = LossKind::DC;
  const auto res = run_deconv(s);
  ASSERT_EQ(res.methods.size(), 1u);
  EXPECT_EQ(res.methods[0].name, "dc");
}

TEST(Tomo, OutputsAndSchema) {
  auto s = small_tomo();
  s.out_dir = fresh_dir("tomo");
  const auto res = run_tomo(s);
  ASSERT_EQ(res.methods.size(), 3u);
  EXPECT_EQ(res.methods[0].name, "nll_adam");
  EXPECT_EQ(res.methods[1].name, "dc_adam");
  EXPECT_EQ(res.methods[2].name, "mlem");
  EXPECT_EQ(res.phantom.width, 16u);
  EXPECT_EQ(res.counts.size(), 12u * (static_cast<std::size_t>(std::ceil(16 * std::sqrt(2.0))) + 4));
  for (double b : res.background) EXPECT_GT(b, 0.0);
  for (double c : res.counts) EXPECT_EQ(c, std::floor(c));
  EXPECT_TRUE(std::isfinite(res.truth_dc));

  for (const char* m : {"nll_adam", "dc_adam", "mlem"}) {
    const auto traj = lines(s.out_dir / (std::string("trajectory_") + m + ".csv"));
    EXPECT_EQ(traj.size(), 31u);
    for (int it : {1, 10, 30}) {
      EXPECT_TRUE(fs::exists(s.out_dir / ("image_" + std::string(m) + "_" + std::to_string(it) + ".pgm"))) << m;
    }
    const auto img = io::read_pgm(s.out_dir / ("image_" + std::string(m) + "_30.pgm"));
    EXPECT_EQ(img.width, 16u);
  }
  EXPECT_TRUE(fs::exists(s.out_dir / "image_truth.pgm"));
  const auto j = load_json(s.out_dir / "summary.json");
  EXPECT_EQ(j["spec"]["experiment"], "tomo");
  EXPECT_GT(j["total_counts"].get<double>(), 0.0);
  EXPECT_TRUE(j["methods"]["mlem"]["min"]["nrmse"].contains("value"));
}

TEST(Tomo, PhantomFromFile) {
  const auto dir = fresh_dir("phantom_file");
  fs::create_directories(dir);
  Image2D img(12, 12);
  for (std::size_t y = 3; y < 9; ++y) {
    for (std::size_t x = 4; x < 8; ++x) img.at(x, y) = 1.0;
  }
  io::write_pgm(dir / "p.pgm", img);
  auto s = small_tomo();
  s.phantom_path = dir / "p.pgm";
  s.include_mlem = false;
  s.loss = LossKind::NLL;
  const auto res = run_tomo(s);
  EXPECT_EQ(res.phantom.width, 12u);
  ASSERT_EQ(res.methods.size(), 1u);

  io::write_pgm(dir / "rect.pgm", Image2D(4, 6, 1.0));
  s.phantom_path = dir / "rect.pgm";
  EXPECT_THROW(run_tomo(s), InputError);
  io::write_pgm(dir / "empty.pgm", Image2D(8, 8));
  s.phantom_path = dir / "empty.pgm";
  EXPECT_THROW(run_tomo(s), InputError);
}

TEST(Calibrate, OutputsAndShape) {
  ExperimentSpec s;
  s.experiment = ExperimentKind::Calibrate;
  s.n = 2000;
  s.repeats = 5;
  s.out_dir = fresh_dir("calibrate");
  const auto res = run_calibrate(s);
  ASSERT_EQ(res.cases.size(), 2u);
  EXPECT_EQ(res.cases[0].name, "truth");
  EXPECT_EQ(res.cases[1].name, "noisy");
  for (const auto& c : res.cases) {
    EXPECT_EQ(c.values.size(), 5u);
    EXPECT_EQ(c.hist.total, 2000u);
  }
  // Overfitted predictions put every PIT value at 1/2.
  EXPECT_EQ(res.cases[1].hist.counts[10], 2000u);
  EXPECT_GT(res.cases[1].mean, 5.0 * res.cases[0].mean);
  EXPECT_EQ(lines(s.out_dir / "calibrate.csv").size(), 6u);
  EXPECT_EQ(lines(s.out_dir / "calibrate.csv")[0], "repeat,truth,noisy");
  const auto j = load_json(s.out_dir / "summary.json");
  EXPECT_NEAR(j["cases"]["truth"]["mean"].get<double>(), res.cases[0].mean, 1e-12);

  s.calibrate_noise = NoiseKind::Poisson;
  s.out_dir.clear();
  const auto pr = run_calibrate(s);
  EXPECT_LT(pr.cases[0].mean, pr.cases[1].mean);
}

TEST(Regsweep, SmallGrid) {
  ExperimentSpec s;
  s.experiment = ExperimentKind::Regsweep;
  s.n = 16;
  s.n_angles = 12;
  s.iterations = 20;
  s.lr = 0.01;
  s.betas = {0.0, 0.1, 10.0};
  s.out_dir = fresh_dir("regsweep");
  const auto res = run_regsweep(s);
  ASSERT_EQ(res.dc.size(), 3u);
  ASSERT_EQ(res.nll.size(), 3u);
  EXPECT_LT(res.best_dc, 3u);
  EXPECT_LT(res.best_nll, 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(res.dc[k].beta, s.betas[k]);
    EXPECT_TRUE(std::isfinite(res.dc[k].nrmse));
    EXPECT_TRUE(std::isfinite(res.nll[k].dc));
    EXPECT_LE(res.dc[res.best_dc].nrmse, res.dc[k].nrmse);
  }
  const auto rows = lines(s.out_dir / "regsweep.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], "beta,dc_nrmse,dc_penalty,dc_dc,dc_nll,nll_nrmse,nll_penalty,nll_dc,nll_nll");
  EXPECT_TRUE(fs::exists(s.out_dir / "image_dc_eptv_best_20.pgm"));
  EXPECT_TRUE(fs::exists(s.out_dir / "image_nll_eptv_best_20.pgm"));
  const auto j = load_json(s.out_dir / "summary.json");
  EXPECT_TRUE(j["methods"]["dc_eptv"]["best"].contains("beta"));
}

TEST(Bench, RowsPerSize) {
  ExperimentSpec s;
  s.experiment = ExperimentKind::Bench;
  s.bench_sizes = {100, 1000};
  s.bench_reps = 3;
  s.out_dir = fresh_dir("bench");
  const auto res = run_bench(s);
  ASSERT_EQ(res.rows.size(), 16u);
  std::set<std::string> keys;
  for (const auto& r : res.rows) {
    keys.insert(r.noise + "/" + r.pass + "/" + r.loss + "/" + std::to_string(r.n));
    EXPECT_GE(r.mean_seconds, 0.0);
    EXPECT_TRUE(std::isfinite(r.value));
  }
  EXPECT_EQ(keys.size(), 16u);
  EXPECT_TRUE(keys.count("poisson/backward/nll/1000"));
  EXPECT_TRUE(keys.count("gaussian/forward/mse/100"));
  const auto csv = lines(s.out_dir / "bench.csv");
  ASSERT_EQ(csv.size(), 17u);
  EXPECT_EQ(csv[0], "noise,pass,loss,n,mean_seconds,sd_seconds,value");
  EXPECT_EQ(load_json(s.out_dir / "summary.json")["rows"].size(), 16u);
}

TEST(Names, ToString) {
  EXPECT_STREQ(to_string(ExperimentKind::Regsweep), "regsweep");
  EXPECT_STREQ(to_string(LossKind::DC), "dc");
  EXPECT_STREQ(to_string(LossKind::MSE), "mse");
  EXPECT_STREQ(to_string(LossKind::NLL), "nll");
}
