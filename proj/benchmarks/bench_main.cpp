#include <benchmark/benchmark.h>

#include "rcmap/analysis.hpp"
#include "rcmap/mcmc.hpp"
#include "rcmap/operators.hpp"
#include "rcmap/vb.hpp"

namespace {

using namespace rcmap;

DomainSpec bench_domain() {
  DomainSpec d;
  d.ka = {-4, 0, true};
  d.kd = {1, 8, true};
  return d;
}

KineticsParams bench_kinetics() { return {0.0, 50.0, 0.0}; }

InjectionGrid bench_grid(int nt, int nc) {
  return InjectionGrid::uniform(0.0, 200.0, nt, 1e-8, 1e-6, nc);
}

SensorgramSet bench_data(const InjectionGrid& grid) {
  AnalyticMap f = [](double x, double y) {
    double dx = x + 2.0, dy = y - 4.0;
    return std::exp(-4.0 * (dx * dx + dy * dy));
  };
  SyntheticOptions opt;
  opt.delta = 0.01;
  opt.seed = 7;
  return generate_synthetic(f, grid, bench_kinetics(), bench_domain(), opt);
}

void BM_AssembleDesign(benchmark::State& state) {
  auto mesh = uniform_initial_mesh(bench_domain().rect(),
                                   static_cast<int>(state.range(0)),
                                   static_cast<int>(state.range(0)));
  auto grid = bench_grid(100, 20);
  for (auto _ : state) {
    auto K = assemble_design_matrix(mesh, grid, bench_kinetics(),
                                    bench_domain());
    benchmark::DoNotOptimize(K.data());
  }
}
BENCHMARK(BM_AssembleDesign)->Arg(10)->Arg(14)->Unit(benchmark::kMillisecond);

void BM_VBIteration(benchmark::State& state) {
  auto mesh = uniform_initial_mesh(bench_domain().rect(), 10, 10);
  auto grid = bench_grid(100, 20);
  auto data = bench_data(grid);
  auto design = assemble_design(mesh, grid, bench_kinetics(), bench_domain());
  DesignCache cache(design, data);
  HyperPriors hp;
  VBOptions opt;
  opt.sample_count = 1000;
  VBState st = init_state(design, data, hp, opt.lambda0, opt.kappa0, 3);
  for (auto _ : state) {
    update_c(st, design, data, cache, opt);
    for (int j = 0; j < design.nc; ++j)
      st.q_sigma_j[j] = update_sigma_j(st, design, data, cache, j, hp);
    st.q_sigma_c = update_sigma_c(st, design, cache, hp);
  }
}
BENCHMARK(BM_VBIteration)->Unit(benchmark::kMillisecond);

void BM_GibbsSweep(benchmark::State& state) {
  auto mesh = uniform_initial_mesh(bench_domain().rect(), 10, 10);
  auto grid = bench_grid(100, 20);
  auto data = bench_data(grid);
  auto design = assemble_design(mesh, grid, bench_kinetics(), bench_domain());
  DesignCache cache(design, data);
  HyperPriors hp;
  McmcState st;
  st.c = Eigen::VectorXd::Zero(design.n);
  st.sigma2_j = Eigen::VectorXd::Ones(design.nc);
  st.sigma2_c = 1;
  std::mt19937_64 rng(5);
  for (auto _ : state) gibbs_step(st, design, data, cache, hp, rng);
}
BENCHMARK(BM_GibbsSweep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
