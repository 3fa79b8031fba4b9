#include <benchmark/benchmark.h>

#include "neos/data_io.hpp"
#include "neos/matrixfns.hpp"
#include "neos/optimizers.hpp"
#include "neos/spectra.hpp"

using namespace neos;

namespace {

// 2x64 tanh MLP on 500 random-regression examples, as in the EoS configs.
std::shared_ptr<const MlpObjective> desk_mlp() {
  static const auto mlp = [] {
    SyntheticOptions o;
    o.kind = SyntheticKind::kRandomRegression;
    o.n = 500;
    o.p = 8;
    o.q = 10;
    return std::make_shared<const MlpObjective>(std::vector<Index>{8, 64, 64, 10}, Activation::kTanh,
                                                gen_synthetic(o));
  }();
  return mlp;
}

}  // namespace

static void BM_Gradient(benchmark::State& state) {
  const auto mlp = desk_mlp();
  RngState rng(1);
  const ParamVector w = mlp->init(rng);
  for (auto _ : state) benchmark::DoNotOptimize(mlp->grad(w));
}
BENCHMARK(BM_Gradient)->Unit(benchmark::kMicrosecond);

static void BM_Hvp(benchmark::State& state) {
  const auto mlp = desk_mlp();
  RngState rng(2);
  const ParamVector w = mlp->init(rng);
  const ParamVector d = gaussian_like(mlp->layout(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(mlp->hvp(w, d));
}
BENCHMARK(BM_Hvp)->Unit(benchmark::kMicrosecond);

static void BM_Polar(benchmark::State& state) {
  RngState rng(3);
  const Index n = state.range(0);
  const Matrix m = gaussian_matrix(n, n, rng);
  const PolarMethod method = state.range(1) == 0   ? PolarMethod::exact_svd()
                             : state.range(1) == 1 ? PolarMethod::newton_schulz(5)
                                                   : PolarMethod::polar_express(5);
  for (auto _ : state) benchmark::DoNotOptimize(polar_factor(m, method));
}
// second argument: 0 exact SVD, 1 Newton-Schulz(5), 2 PolarExpress(5)
BENCHMARK(BM_Polar)->ArgsProduct({{16, 64, 128}, {0, 1, 2}})->Unit(benchmark::kMicrosecond);

static void BM_FrankWolfe(benchmark::State& state) {
  const auto mlp = desk_mlp();
  RngState rng(4);
  const ParamVector w = mlp->init(rng);
  const HvpOracle hvp = bind_hvp(mlp, w);
  const NormSpec norm = state.range(0) == 0 ? NormSpec::linf() : NormSpec::spectral_max(*mlp->layout());
  FwConfig fw;
  fw.iterations = 20;
  fw.restarts = 5;
  for (auto _ : state) benchmark::DoNotOptimize(sharpness_fw(hvp, mlp->layout(), norm, fw));
}
// 0: l_inf, 1: spectral
BENCHMARK(BM_FrankWolfe)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_Lanczos(benchmark::State& state) {
  const auto mlp = desk_mlp();
  RngState rng(5);
  const ParamVector w = mlp->init(rng);
  const HvpOracle hvp = bind_hvp(mlp, w);
  for (auto _ : state) benchmark::DoNotOptimize(sharpness_closed(hvp, mlp->layout(), NormSpec::euclidean()));
}
BENCHMARK(BM_Lanczos)->Unit(benchmark::kMillisecond);

static void BM_Step(benchmark::State& state) {
  const auto mlp = desk_mlp();
  RngState rng(6);
  ParamVector w = mlp->init(rng);
  OptimizerSpec spec;
  spec.norm = state.range(0) == 0 ? NormSpec::euclidean() : NormSpec::linf();
  spec.eta = state.range(0) == 0 ? 0.01 : 1e-6;
  for (auto _ : state) benchmark::DoNotOptimize(step(*mlp, w, spec));
}
// 0: gradient descent, 1: sign descent; includes the chord smoothness evaluation
BENCHMARK(BM_Step)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
