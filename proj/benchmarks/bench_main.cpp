#include "robrl/env.hpp"
#include "robrl/oracle.hpp"
#include "robrl/sampler.hpp"
#include "robrl/td.hpp"

#include <benchmark/benchmark.h>

using namespace robrl;

namespace {

void BM_TdSteps(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto env = make_random_mrp(256, dim, 0.9, 1.4, 30.0, 1);
  const auto target = EvaluationTarget::from(env.mrp, env.features);
  TdConfig config;
  config.horizon = 10000;
  config.clip = ClipSchedule::linear();
  config.step = StepSchedule::full_rank(0.9, feature_gram(target.mu, target.phi).lambda_min);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto result = run_robust_td(env.mrp, target, config, ++seed);
    benchmark::DoNotOptimize(result.theta_avg.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(config.horizon));
}
BENCHMARK(BM_TdSteps)->Arg(4)->Arg(32)->Arg(128);

void BM_IidSampler(benchmark::State& state) {
  const auto env = make_random_mrp(256, 4, 0.9, 1.4, 30.0, 2);
  const Vector mu = stationary_distribution(env.mrp.transition).mu;
  IidSampler sampler(env.mrp, mu, 3);
  for (auto _ : state) {
    auto tr = sampler.next();
    benchmark::DoNotOptimize(tr);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_IidSampler);

void BM_StationaryDistribution(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto env = make_random_mrp(n, 4, 0.9, 1.4, 30.0, 4);
  for (auto _ : state) {
    auto st = stationary_distribution(env.mrp.transition);
    benchmark::DoNotOptimize(st.mu.data());
  }
}
BENCHMARK(BM_StationaryDistribution)->Arg(64)->Arg(256)->Arg(1024);

void BM_MinEigenvalue(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto env = make_random_mrp(256, dim, 0.9, 1.4, 30.0, 5);
  const Vector mu = stationary_distribution(env.mrp.transition).mu;
  for (auto _ : state) {
    auto g = feature_gram(mu, env.features.phi);
    benchmark::DoNotOptimize(g.lambda_min);
  }
}
BENCHMARK(BM_MinEigenvalue)->Arg(8)->Arg(32)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
