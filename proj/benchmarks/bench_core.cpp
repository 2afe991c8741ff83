#include <benchmark/benchmark.h>

#include "vpgen/asymptotics.hpp"
#include "vpgen/datum.hpp"
#include "vpgen/dynamics.hpp"
#include "vpgen/radial_field.hpp"

namespace {

vpgen::SingularDatum cold_ball() {
  vpgen::ColdMonokinetic c;
  c.rho0.kind = vpgen::ColdProfile::Kind::UniformBall;
  c.rho0.mass = 1.0;
  c.rho0.radius = 1.0;
  vpgen::SingularDatum d;
  d.shape = c;
  d.gamma = 1.0;
  return d;
}

void BM_Regularize(benchmark::State& state) {
  auto datum = cold_ball();
  auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto e = vpgen::regularize(datum, 0.25, n, 1);
    benchmark::DoNotOptimize(e.r.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          state.range(0));
}
BENCHMARK(BM_Regularize)->Arg(10000)->Arg(100000);

void BM_MassProfile(benchmark::State& state) {
  auto e = vpgen::regularize(cold_ball(), 0.25,
                             static_cast<std::size_t>(state.range(0)), 1);
  auto grid = vpgen::RadialGrid::uniform(3.0, 256);
  for (auto _ : state) {
    auto m = vpgen::mass_profile(e, grid);
    benchmark::DoNotOptimize(m.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          state.range(0));
}
BENCHMARK(BM_MassProfile)->Arg(10000)->Arg(100000);

void BM_Snapshot(benchmark::State& state) {
  auto e = vpgen::regularize(cold_ball(), 0.25,
                             static_cast<std::size_t>(state.range(0)), 1);
  auto grid = vpgen::RadialGrid::uniform(3.0, 256);
  for (auto _ : state) {
    auto snap = vpgen::build_snapshot(e, grid);
    benchmark::DoNotOptimize(snap.potential.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          state.range(0));
}
BENCHMARK(BM_Snapshot)->Arg(10000)->Arg(100000);

void BM_Step(benchmark::State& state) {
  auto e = vpgen::regularize(cold_ball(), 0.25,
                             static_cast<std::size_t>(state.range(0)), 1);
  auto sim = vpgen::make_state(std::move(e));
  for (auto _ : state) {
    vpgen::step(sim, 1e-3);
    benchmark::DoNotOptimize(sim.ensemble.r.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          state.range(0));
}
BENCHMARK(BM_Step)->Arg(10000)->Arg(100000);

void BM_StepTangent(benchmark::State& state) {
  auto e = vpgen::regularize(cold_ball(), 0.25,
                             static_cast<std::size_t>(state.range(0)), 1);
  auto sim = vpgen::make_state(std::move(e), vpgen::FieldModel::SelfConsistent,
                               0.0, true);
  for (auto _ : state) {
    vpgen::step(sim, 1e-3);
    benchmark::DoNotOptimize(sim.ensemble.r.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          state.range(0));
}
BENCHMARK(BM_StepTangent)->Arg(10000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
