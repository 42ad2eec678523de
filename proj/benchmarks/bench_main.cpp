#include <benchmark/benchmark.h>

#include <cmath>

#include "stargraph/corrector.hpp"
#include "stargraph/expansion.hpp"
#include "stargraph/junction.hpp"
#include "stargraph/limit_spectrum.hpp"
#include "stargraph/oracle.hpp"

using namespace stargraph;

namespace {

StarGraph incommensurate() {
  StarGraph g;
  for (auto& e : g.edges) {
    e.length = 1.0;
    e.radius = ConstantRadius{1.0};
  }
  g.edges[1].length = 1.3;
  g.edges[2].length = 1.7;
  g.node.ell0 = 0.2;
  g.node.mass_integral = M_PI;
  g.node.node_volume = 1.0;
  g.node.c0 = g.node.c1 = M_PI;
  return g;
}

}  // namespace

static void SecularSpectrum(benchmark::State& state) {
  const auto g = incommensurate();
  const int count = int(state.range(0));
  for (auto _ : state) {
    auto pairs = solve_limit_spectrum(g, AlphaRegime::zero(), count);
    benchmark::DoNotOptimize(pairs);
  }
}
BENCHMARK(SecularSpectrum)->Arg(4)->Arg(16)->Arg(64);

static void DiscreteEigensolve(benchmark::State& state) {
  const auto g = incommensurate();
  const int N = int(state.range(0));
  for (auto _ : state) {
    auto sys = assemble_discrete(g, AlphaRegime::one(), N);
    auto sol = solve_discrete_eigen(sys, 5);
    benchmark::DoNotOptimize(sol);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(DiscreteEigensolve)->RangeMultiplier(2)->Range(2000, 16000)->Complexity();

static void CorrectorSolve(benchmark::State& state) {
  const auto g = incommensurate();
  CorrectorProblem p;
  p.graph = g;
  p.base = solve_limit_spectrum(g, AlphaRegime::zero(), 1)[0];
  const double w = std::sqrt(p.base.lambda);
  for (int i = 0; i < 3; ++i) p.rhs[i] = TrigPoly::sin_mode(0.3, w, g.edges[i].length);
  p.delta2 = 0.2;
  p.delta3 = -0.1;
  p.flux_datum = 0.5;
  for (auto _ : state) {
    auto s = solve_corrector(p);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(CorrectorSolve);

static void FractionalExpansion(benchmark::State& state) {
  auto g = incommensurate();
  for (int k = 1; k <= 3; ++k)
    for (int p = 0; p <= 9; ++p) {
      g.constants.delta[{k, p, 2}] = 0.01;
      g.constants.delta[{k, p, 3}] = -0.01;
      g.constants.eta[{k, p}] = 0.1;
    }
  const auto r = AlphaRegime::irrational(1.0 / std::sqrt(2.0));
  const int M = int(state.range(0));
  for (auto _ : state) {
    auto s = expand_fractional(g, r, 1, M);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(FractionalExpansion)->Arg(1)->Arg(2)->Arg(3);

static void JunctionHarmonicSolve(benchmark::State& state) {
  StarGraph g = incommensurate();
  const double h = 0.48 / std::sqrt(M_PI);
  for (auto& e : g.edges) e.radius = ConstantRadius{h};
  g.node.ell0 = 0.24;
  g.node.rho0 = Rho0Expr{};
  g.node.mass_integral = 0.110592;
  g.node.node_volume = 0.110592;
  g.node.c0 = g.node.c1 = 1.0;
  const double delta = 0.48 / double(state.range(0));
  const auto m = JunctionMesh::build(g, delta, 5.0);
  for (auto _ : state) {
    auto f = solve_homogeneous(m, 2);
    benchmark::DoNotOptimize(f);
  }
  state.counters["cells"] = double(m.n_cells());
}
BENCHMARK(JunctionHarmonicSolve)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void SurrogateSweepPoint(benchmark::State& state) {
  const auto g = incommensurate();
  SurrogateOptions opt;
  opt.points_per_edge = int(state.range(0));
  for (auto _ : state) {
    auto l = solve_surrogate(g, 0.5, 1e-3, 3, opt);
    benchmark::DoNotOptimize(l);
  }
}
BENCHMARK(SurrogateSweepPoint)->Arg(1000)->Arg(4000);

BENCHMARK_MAIN();
