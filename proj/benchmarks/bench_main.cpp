// Microbenchmarks for the grid/FFT kernels and the flow integrator hot paths.
#include <benchmark/benchmark.h>

#include <proplab/dirac.hpp>
#include <proplab/expr.hpp>
#include <proplab/fft.hpp>
#include <proplab/geometry.hpp>
#include <proplab/model_space.hpp>
#include <proplab/qft.hpp>

using namespace proplab;

static void BM_ExprCompiledEval(benchmark::State& state) {
  expr::Expr e = expr::parse_expression("exp(2*t)*sin(x1) + 0.5*x1^3 - cos(t)/(2 + x1^2)");
  expr::CompiledExpr ce(e);
  double x[2] = {0.3, -0.7};
  for (auto _ : state) {
    benchmark::DoNotOptimize(ce.eval(x));
    x[0] += 1e-9;
  }
}
BENCHMARK(BM_ExprCompiledEval);

static void BM_MetricData(benchmark::State& state) {
  geom::MetricChart chart = geom::MetricChart::frw(expr::parse_expression("exp(t)"), 8.0);
  geom::Vec x(2);
  x << 0.2, -0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(geom::metric_data(chart, x));
  }
}
BENCHMARK(BM_MetricData);

static void BM_FlowBicharacteristic(benchmark::State& state) {
  geom::MetricChart chart = geom::MetricChart::frw(expr::parse_expression("exp(t)"), 8.0);
  geom::Vec x(2), xi(2);
  x << 0.0, 0.0;
  xi << 1.0, 1.0;
  geom::PhasePoint pt(x, xi);
  std::vector<double> params = geom::uniform_params(5.0, 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(geom::flow_bicharacteristic(chart, pt, params));
  }
}
BENCHMARK(BM_FlowBicharacteristic)->Unit(benchmark::kMillisecond);

static void BM_Fft2D(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<fft::Cplx> a(n * n);
  Rng rng(5);
  for (auto& z : a) z = fft::Cplx{rng.normal(), rng.normal()};
  for (auto _ : state) {
    fft::forward_rows(a, n, n);
    fft::forward_cols(a, n, n);
    fft::inverse_rows(a, n, n);
    fft::inverse_cols(a, n, n);
  }
}
BENCHMARK(BM_Fft2D)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_ModelFeynmanApply(benchmark::State& state) {
  Rng rng(9);
  model::GridSection u = model::random_section(rng, {64, 64}, {0.12, 0.12}, 1, 4, true);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model::apply_model_green(model::GreenKind::Feynman, u));
  }
}
BENCHMARK(BM_ModelFeynmanApply)->Unit(benchmark::kMicrosecond);

static void BM_KgGreenLeapfrog(benchmark::State& state) {
  qft::SpacetimeGrid grid;
  grid.nt = static_cast<int>(state.range(0));
  grid.nx = grid.nt;
  for (auto _ : state) {
    benchmark::DoNotOptimize(qft::kg_green(qft::KernelKind::Ret, 1.0, grid));
  }
}
BENCHMARK(BM_KgGreenLeapfrog)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_KgFeynman(benchmark::State& state) {
  qft::SpacetimeGrid grid;
  grid.nt = static_cast<int>(state.range(0));
  grid.nx = grid.nt;
  for (auto _ : state) {
    benchmark::DoNotOptimize(qft::kg_feynman(1.0, 0.05, grid));
  }
}
BENCHMARK(BM_KgFeynman)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_DiracFrequencySplit(benchmark::State& state) {
  qft::SpacetimeGrid grid;
  grid.T = 9.0;
  grid.L = 10.0;
  grid.nt = 256;
  grid.nx = 256;
  dirac::CliffordRep rep = dirac::build_clifford(2);
  dirac::SpinorKernel s = dirac::dirac_green(dirac::DiracKind::Causal, rep, grid);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dirac::frequency_split(s, +1));
  }
}
BENCHMARK(BM_DiracFrequencySplit)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
