#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "dcloss/forward_ops.hpp"
#include "dcloss/losses.hpp"
#include "dcloss/noise_models.hpp"
#include "dcloss/regularizers.hpp"
#include "dcloss/rng.hpp"

namespace {

using namespace dcloss;

struct Inputs {
  std::vector<double> pred;
  std::vector<double> meas;
};

// Same uniform pairs for the DC loss and its baseline.
Inputs gaussian_inputs(std::size_t n) {
  RngStream s(1);
  return {sample_uniform(s, n), sample_uniform(s, n)};
}

Inputs poisson_inputs(std::size_t n) {
  RngStream s(2);
  auto pred = sample_uniform(s, n);
  auto rate = sample_uniform(s, n);
  for (std::size_t i = 0; i < n; ++i) {
    pred[i] *= 10.0;
    rate[i] *= 10.0;
  }
  const auto c = sample_poisson(s, rate);
  return {pred, std::vector<double>(c.begin(), c.end())};
}

void BM_DcForwardGaussian(benchmark::State& state) {
  const auto in = gaussian_inputs(state.range(0));
  const auto model = NoiseModel::gaussian(0.1);
  RngStream ref(3);
  for (auto _ : state) benchmark::DoNotOptimize(dc_forward(model, in.meas, in.pred, {}, ref).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DcBackwardGaussian(benchmark::State& state) {
  const auto in = gaussian_inputs(state.range(0));
  const auto model = NoiseModel::gaussian(0.1);
  RngStream ref(3);
  const auto fwd = dc_forward(model, in.meas, in.pred, {}, ref);
  for (auto _ : state) benchmark::DoNotOptimize(dc_backward(fwd, model, in.pred, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Mse(benchmark::State& state) {
  const auto in = gaussian_inputs(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mse_loss(in.pred, in.meas).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DcForwardPoisson(benchmark::State& state) {
  const auto in = poisson_inputs(state.range(0));
  const auto model = NoiseModel::poisson();
  RngStream ref(4);
  for (auto _ : state) benchmark::DoNotOptimize(dc_forward(model, in.meas, in.pred, {}, ref).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DcForwardPoissonRandomizedPit(benchmark::State& state) {
  const auto in = poisson_inputs(state.range(0));
  const auto model = NoiseModel::poisson();
  DcOptions opts;
  opts.randomized_pit = true;
  RngStream ref(4);
  for (auto _ : state) benchmark::DoNotOptimize(dc_forward(model, in.meas, in.pred, opts, ref).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PoissonNll(benchmark::State& state) {
  const auto in = poisson_inputs(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(poisson_nll(in.pred, in.meas).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ProjectorApply(benchmark::State& state) {
  ProjectorGeometry g;
  g.image_side = static_cast<std::size_t>(state.range(0));
  g.n_bins = static_cast<std::size_t>(std::ceil(g.image_side * 1.4142135623730951)) + 4;
  const auto op = ForwardOp::parallel_beam(g);
  RngStream s(5);
  const auto x = sample_uniform(s, op.input_size());
  for (auto _ : state) benchmark::DoNotOptimize(dcloss::apply(op, x));
}

void BM_Eptv(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  RngStream s(6);
  const Image2D img(side, side, sample_uniform(s, side * side));
  for (auto _ : state) benchmark::DoNotOptimize(eptv(img).value);
}

}  // namespace

BENCHMARK(BM_DcForwardGaussian)->Arg(1000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DcBackwardGaussian)->Arg(1000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Mse)->Arg(1000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DcForwardPoisson)->Arg(1000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DcForwardPoissonRandomizedPit)->Arg(1000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PoissonNll)->Arg(1000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ProjectorApply)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Eptv)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
