// dcloss: runs the deconvolution, tomography, calibration, regularisation
// sweep and timing experiments and writes their artifacts.

#include <cstdio>
#include <exception>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dcloss/errors.hpp"
#include "dcloss/experiments.hpp"

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw CLI::ValidationError("--beta", "not a number: " + item);
    out.push_back(v);
  }
  return out;
}

struct Options {
  dcloss::ExperimentSpec spec;
  std::string loss;
  std::string ref_mode = "fresh";
  std::string beta;
  std::string noise = "gaussian";
  bool no_mlem = false;
  bool no_precondition = false;
  bool no_mask = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.spec.seed, "RNG seed");
  cmd->add_option("--out", o.spec.out_dir, "Output directory (omitted: no files written)");
  cmd->add_option("--ref-mode", o.ref_mode, "DC reference: fresh or quantiles")
      ->check(CLI::IsMember({"fresh", "quantiles"}));
  cmd->add_flag("--randomized-pit", o.spec.dc.randomized_pit, "Randomised PIT for Poisson data");
  cmd->add_option("--bins", o.spec.hist_bins, "PIT histogram bins");
}

void add_training(CLI::App* cmd, Options& o) {
  cmd->add_option("--n", o.spec.n, "Signal length or image side");
  cmd->add_option("--iters", o.spec.iterations, "Optimiser iterations");
  cmd->add_option("--lr", o.spec.lr, "Adam learning rate");
}

void print_records(const std::string& name, const dcloss::OptRun& run) {
  const auto& r = run.records.back();
  std::printf("%-10s iter %zu  dc %.6g  mse %.6g  nll %.6g  nrmse %.6g  psnr %.4g\n", name.c_str(), r.iteration, r.dc,
              r.mse, r.nll, r.nrmse, r.psnr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributional consistency loss experiments"};
  app.require_subcommand(1);
  Options o;

  auto* deconv = app.add_subcommand("deconv", "1D deconvolution with MSE and DC training");
  add_common(deconv, o);
  add_training(deconv, o);
  deconv->add_option("--loss", o.loss, "Train only this loss")->check(CLI::IsMember({"dc", "mse"}));
  deconv->add_option("--sigma", o.spec.sigma, "Gaussian noise standard deviation");

  auto* tomo = app.add_subcommand("tomo", "Toy Poisson tomography: NLL-Adam, DC-Adam, MLEM");
  add_common(tomo, o);
  add_training(tomo, o);
  tomo->add_option("--loss", o.loss, "Train only this loss with Adam")->check(CLI::IsMember({"dc", "mse", "nll"}));
  tomo->add_option("--counts-scale", o.spec.counts_scale, "Count level relative to the default");
  tomo->add_option("--angles", o.spec.n_angles, "Projection angles");
  tomo->add_option("--background", o.spec.background_fraction, "Constant background as a fraction of the mean bin value");
  tomo->add_option("--phantom", o.spec.phantom_path, "P2 PGM phantom instead of the built-in one");
  tomo->add_flag("--no-mlem", o.no_mlem, "Skip the MLEM run");
  tomo->add_flag("--no-precondition", o.no_precondition, "Do not divide Adam gradients by the sensitivity");
  tomo->add_flag("--no-mask", o.no_mask, "Do not restrict Adam to the dilated support");

  auto* calibrate = app.add_subcommand("calibrate", "DC loss at the true and at the noisy signal");
  add_common(calibrate, o);
  calibrate->add_option("--n", o.spec.n, "Number of measurements");
  calibrate->add_option("--noise", o.noise, "Noise model")->check(CLI::IsMember({"gaussian", "poisson"}));
  calibrate->add_option("--sigma", o.spec.sigma, "Gaussian noise standard deviation");
  calibrate->add_option("--counts-scale", o.spec.counts_scale, "Poisson count level relative to the default");
  calibrate->add_option("--repeats", o.spec.repeats, "Fresh noise realisations");

  auto* regsweep = app.add_subcommand("regsweep", "DC+EPTV and NLL+EPTV over a beta grid");
  add_common(regsweep, o);
  add_training(regsweep, o);
  regsweep->add_option("--beta", o.beta, "Comma-separated beta values (default: 0 and 1e-4..1e2)");
  regsweep->add_option("--counts-scale", o.spec.counts_scale, "Count level relative to the tomo default");
  regsweep->add_option("--angles", o.spec.n_angles, "Projection angles");
  regsweep->add_option("--background", o.spec.background_fraction, "Constant background as a fraction of the mean bin value");
  regsweep->add_option("--phantom", o.spec.phantom_path, "P2 PGM phantom instead of the built-in one");

  auto* bench = app.add_subcommand("bench", "Forward/backward timing of DC against MSE and NLL");
  add_common(bench, o);
  bench->add_option("--n", o.spec.n, "Single problem size (default: 1000 and 1000000)");
  bench->add_option("--reps", o.spec.bench_reps, "Repetitions per row");
  bench->add_option("--sigma", o.spec.sigma, "Gaussian noise standard deviation");

  CLI11_PARSE(app, argc, argv);

  static const std::map<std::string, dcloss::LossKind> losses{
      {"dc", dcloss::LossKind::DC}, {"mse", dcloss::LossKind::MSE}, {"nll", dcloss::LossKind::NLL}};
  if (!o.loss.empty()) o.spec.loss = losses.at(o.loss);
  o.spec.dc.mode = o.ref_mode == "fresh" ? dcloss::ReferenceMode::FreshSample : dcloss::ReferenceMode::FixedQuantiles;
  o.spec.calibrate_noise = o.noise == "poisson" ? dcloss::NoiseKind::Poisson : dcloss::NoiseKind::Gaussian;
  o.spec.include_mlem = !o.no_mlem;
  o.spec.precondition = !o.no_precondition;
  o.spec.use_mask = !o.no_mask;

  try {
    if (!o.beta.empty()) {
      o.spec.betas = parse_list(o.beta);
      if (o.spec.betas.empty()) throw dcloss::ParameterError("empty beta grid");
    }
    if (deconv->parsed()) {
      o.spec.experiment = dcloss::ExperimentKind::Deconv;
      const auto res = dcloss::run_deconv(o.spec);
      for (const auto& m : res.methods) print_records(m.name, m.run);
    } else if (tomo->parsed()) {
      o.spec.experiment = dcloss::ExperimentKind::Tomo;
      const auto res = dcloss::run_tomo(o.spec);
      std::printf("truth dc %.6g\n", res.truth_dc);
      for (const auto& m : res.methods) print_records(m.name, m.run);
    } else if (calibrate->parsed()) {
      o.spec.experiment = dcloss::ExperimentKind::Calibrate;
      const auto res = dcloss::run_calibrate(o.spec);
      for (const auto& c : res.cases) {
        std::printf("%-6s mean %.6g  +/- %.3g\n", c.name.c_str(), c.mean, 1.96 * c.sd);
      }
    } else if (regsweep->parsed()) {
      o.spec.experiment = dcloss::ExperimentKind::Regsweep;
      const auto res = dcloss::run_regsweep(o.spec);
      for (std::size_t k = 0; k < res.dc.size(); ++k) {
        std::printf("beta %-10.4g dc+eptv nrmse %.5f   nll+eptv nrmse %.5f\n", res.dc[k].beta, res.dc[k].nrmse,
                    res.nll[k].nrmse);
      }
      std::printf("best beta: dc %.4g  nll %.4g\n", res.dc[res.best_dc].beta, res.nll[res.best_nll].beta);
    } else if (bench->parsed()) {
      o.spec.experiment = dcloss::ExperimentKind::Bench;
      const auto res = dcloss::run_bench(o.spec);
      for (const auto& r : res.rows) {
        std::printf("%-8s %-8s %-3s n=%-8zu %.4g s +/- %.2g\n", r.noise.c_str(), r.pass.c_str(), r.loss.c_str(), r.n,
                    r.mean_seconds, r.sd_seconds);
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "dcloss: %s\n", e.what());
    return 1;
  }
  return 0;
}
