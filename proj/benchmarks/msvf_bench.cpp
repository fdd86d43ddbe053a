#include <benchmark/benchmark.h>

#include <random>

#include "msvf/rollout.hpp"
#include "msvf/train.hpp"

using namespace msvf;

namespace {

Manifold manifold_for_case(int kind) {
  switch (kind) {
    case 0: return Manifold::so2();
    case 1: return Manifold::s2();
    case 2: return Manifold::so3();
    case 3: return Manifold::se2(2.0);
    default: return Manifold::se3(2.0);
  }
}

MsvfModel bench_model(const Manifold& m, int width) {
  std::mt19937_64 rng(7);
  const GroupElement target = random_element(m, rng);
  return random_model(m, target, {width, width}, 16, rng, 1.0, 0.4);
}

}  // namespace

static void BM_EvalField(benchmark::State& state) {
  const Manifold m = manifold_for_case(static_cast<int>(state.range(0)));
  const MsvfModel model = bench_model(m, 64);
  std::mt19937_64 rng(11);
  std::vector<GroupElement> probes;
  for (int i = 0; i < 64; ++i) probes.push_back(sample_chart_start(model, 0.1, rng));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_field_full(model, probes[i++ & 63]));
  }
}
BENCHMARK(BM_EvalField)->DenseRange(0, 4)->Unit(benchmark::kMicrosecond);

static void BM_FlowForward(benchmark::State& state) {
  const Manifold m = Manifold::s2();
  const MsvfModel model = bench_model(m, static_cast<int>(state.range(0)));
  const Eigen::VectorXd x = Eigen::Vector2d(0.9, -0.7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(flow_forward(model.flow, x));
  }
}
BENCHMARK(BM_FlowForward)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

static void BM_FlowJacobian(benchmark::State& state) {
  const Manifold m = Manifold::s2();
  const MsvfModel model = bench_model(m, static_cast<int>(state.range(0)));
  const Eigen::VectorXd x = Eigen::Vector2d(0.9, -0.7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(flow_run(model.flow, x, true));
  }
}
BENCHMARK(BM_FlowJacobian)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

static void BM_TrainIteration(benchmark::State& state) {
  const Manifold m = Manifold::s2();
  std::mt19937_64 rng(3);
  const GroupElement target = random_element(m, rng);
  const MsvfModel gt = random_model(m, target, {32, 32}, 16, rng, 1.0, 0.8);
  const TrajectoryDataset ds = synth_demos(gt, 6, 300, 0.02, 5);
  const MsvfModel init = random_model(m, target, {64, 64}, 16, rng, 1.0, 0.1);

  TrainConfig tc;
  tc.iterations = 1;
  tc.batch_size = static_cast<int>(state.range(0));
  tc.learning_rate = 1e-3;
  tc.seed = 1;
  tc.loss_log_every = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bc_train(ds, tc, init));
  }
}
BENCHMARK(BM_TrainIteration)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_Rollout(benchmark::State& state) {
  const Manifold m = manifold_for_case(static_cast<int>(state.range(0)));
  const MsvfModel model = bench_model(m, 32);
  std::mt19937_64 rng(13);
  const GroupElement x0 = sample_chart_start(model, 0.1, rng);
  RolloutConfig rc;
  rc.dt = 0.01;
  rc.horizon = 500;
  rc.eps_goal = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate(model, x0, rc));
  }
}
BENCHMARK(BM_Rollout)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
