#include <benchmark/benchmark.h>

#include <bmap/fkpp.hpp>
#include <bmap/simulator.hpp>
#include <bmap/spectral.hpp>
#include <bmap/spine.hpp>

using namespace bmap;

namespace {

ModelSpec two_type() {
  ModelSpec m;
  m.d = 2;
  m.types = {TypeSpec{MotionSpec{1.0, 0.0, 0.0, {}}, 1.0, DiscreteLaw::point_mass(2.0)},
             TypeSpec{MotionSpec{0.25, 0.1, 0.5, DiscreteLaw{{{-0.5, 0.5}, {0.3, 0.5}}}}, 0.5,
                      DiscreteLaw{{{0.0, 0.2}, {2.0, 0.8}}}}};
  m.q = Matrix(2, 2);
  m.q(0, 0) = -1.0;
  m.q(0, 1) = 1.0;
  m.q(1, 0) = 0.5;
  m.q(1, 1) = -0.5;
  m.u_laws.assign(2, std::vector<DiscreteLaw>(2, DiscreteLaw::point_mass(0.0)));
  return m;
}

ModelSpec ring(std::size_t d) {
  ModelSpec m;
  m.d = d;
  m.q = Matrix(d, d);
  m.u_laws.assign(d, std::vector<DiscreteLaw>(d, DiscreteLaw::point_mass(0.0)));
  for (std::size_t i = 0; i < d; ++i) {
    m.types.push_back({MotionSpec{0.5 + 0.1 * static_cast<double>(i % 5), 0.0, 0.0, {}}, 1.0, DiscreteLaw::point_mass(2.0)});
    m.q(i, (i + 1) % d) = 1.0;
    m.q(i, i) = -1.0;
  }
  return m;
}

void BM_PfEigenpair(benchmark::State& state) {
  const ModelSpec m = ring(static_cast<std::size_t>(state.range(0)));
  const Matrix mm = matrix_exponent(m, 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(pf_eigenpair(mm).lambda);
}
BENCHMARK(BM_PfEigenpair)->Arg(2)->Arg(8)->Arg(32);

void BM_MatrixExp(benchmark::State& state) {
  const Matrix mm = matrix_exponent(ring(static_cast<std::size_t>(state.range(0))), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(matrix_exp(mm, 2.0)(0, 0));
}
BENCHMARK(BM_MatrixExp)->Arg(2)->Arg(8)->Arg(32);

void BM_ThetaStar(benchmark::State& state) {
  const ModelSpec m = two_type();
  for (auto _ : state) benchmark::DoNotOptimize(theta_star(m));
}
BENCHMARK(BM_ThetaStar);

void BM_SimulateReplica(benchmark::State& state) {
  const ModelSpec m = two_type();
  const Simulator sim(m);
  SimConfig cfg;
  cfg.horizon = static_cast<double>(state.range(0));
  cfg.observation_times = {cfg.horizon};
  std::size_t r = 0;
  for (auto _ : state) {
    std::size_t n = 0;
    sim.run({}, cfg, r++, [&](std::size_t, double, std::span<const Particle> ps) { n = ps.size(); });
    benchmark::DoNotOptimize(n);
  }
}
BENCHMARK(BM_SimulateReplica)->Arg(2)->Arg(6);

void BM_SpinePath(benchmark::State& state) {
  const ModelSpec m = two_type();
  const TiltedModel tilted = tilt_model(m, spectral_report(m, 0.5));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_spine(tilted, {}, 50.0, seed++).positions.back());
}
BENCHMARK(BM_SpinePath);

void BM_FkppStep(benchmark::State& state) {
  const ModelSpec m = two_type();
  const Grid1D grid{-40.0, 40.0, static_cast<std::size_t>(state.range(0))};
  FkppSolver solver(m, grid);
  FkppField f = init_field(grid, m, InitSpec::step());
  const double dt = 0.5 * solver.max_stable_dt();
  for (auto _ : state) {
    solver.step(f, dt);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FkppStep)->Arg(801)->Arg(3201);

}  // namespace

BENCHMARK_MAIN();
