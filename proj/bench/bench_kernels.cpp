// Serial reference vs. OpenMP for the value-iteration sweeps and the joint
// solver. Run with OMP_NUM_THREADS set to the core count.

#include <vector>

#include <benchmark/benchmark.h>

#include "aoi/mdp.hpp"

namespace {

using aoi::kernels::Backend;

Backend backend_arg(const benchmark::State& state) {
  return state.range(0) == 0 ? Backend::serial : Backend::openmp;
}

void BM_JointSweep(benchmark::State& state) {
  const aoi::JointModel model({0.3, 0.5, 0.7}, state.range(1));
  std::vector<double> values(model.num_states(), 1.0);
  std::vector<double> scratch(model.scratch_size());
  std::vector<double> best(model.num_states());
  std::vector<std::uint8_t> actions(model.num_states());
  for (auto _ : state) {
    aoi::kernels::bellman_sweep(backend_arg(state), model, values, scratch, 1.0, 1e-7, best, actions);
    benchmark::DoNotOptimize(best.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(model.num_states()));
  state.SetLabel(std::string(aoi::kernels::to_string(backend_arg(state))));
}
BENCHMARK(BM_JointSweep)->ArgsProduct({{0, 1}, {20, 40}})->Unit(benchmark::kMillisecond);

void BM_SolveJointTwoUsers(benchmark::State& state) {
  aoi::RviConfig config;
  config.backend = backend_arg(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(aoi::solve_joint({0.4, 0.4}, 40, config).gain);
  }
  state.SetLabel(std::string(aoi::kernels::to_string(config.backend)));
}
BENCHMARK(BM_SolveJointTwoUsers)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SubproblemRvi(benchmark::State& state) {
  const auto model = aoi::build_subproblem(0.3, 12.0, 200);
  aoi::RviConfig config;
  config.backend = backend_arg(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(aoi::relative_value_iteration(model, config).gain);
  }
  state.SetLabel(std::string(aoi::kernels::to_string(config.backend)));
}
BENCHMARK(BM_SubproblemRvi)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
