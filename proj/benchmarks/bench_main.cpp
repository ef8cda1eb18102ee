#include <benchmark/benchmark.h>

#include "fedraa/data.hpp"
#include "fedraa/experiment.hpp"
#include "fedraa/local_update.hpp"
#include "fedraa/rng.hpp"

using namespace fedraa;

namespace {

std::vector<Sample> bench_batch(std::size_t count, std::size_t dim, std::size_t classes) {
  Rng rng(1);
  std::vector<Sample> batch(count);
  for (Sample& s : batch) {
    s.features.resize(dim);
    for (double& f : s.features) f = rng.uniform(-1.0, 1.0);
    s.label = static_cast<int>(rng.bounded(classes));
  }
  return batch;
}

void BM_forward_loss(benchmark::State& state) {
  const ModelSpec spec{784, static_cast<std::size_t>(state.range(0)), 10};
  const ParamVector p = init_params(spec, 2);
  const auto batch = bench_batch(128, 784, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_loss(p, spec, batch));
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_forward_loss)->Arg(0)->Arg(64)->Arg(200);

void BM_grad_g(benchmark::State& state) {
  const ModelSpec spec{784, static_cast<std::size_t>(state.range(0)), 10};
  const ParamVector p = init_params(spec, 2);
  const ParamVector anchor = init_params(spec, 3);
  const auto batch = bench_batch(128, 784, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad_g(p, anchor, spec, batch, 0.1));
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_grad_g)->Arg(64)->Arg(200);

void BM_merge_fragment(benchmark::State& state) {
  const ModelSpec spec{784, 200, 10};
  auto frags = partition_model(spec, 4, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  ParamVector global = init_params(spec, 2);
  const Fragment frag = extract_fragment(global, frags[3]);
  for (auto _ : state) {
    merge_fragment(global, frags[3], frag, 0.5);
    benchmark::DoNotOptimize(global.data());
  }
  state.SetItemsProcessed(state.iterations() * frag.values.size());
}
BENCHMARK(BM_merge_fragment);

void BM_gre_raa_assign(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  std::vector<double> sizes(m);
  Rng rng(4);
  for (double& s : sizes) s = rng.uniform(0.05, 1.0);
  SchedulerState sched(m, 2.0, 5);
  ClientProfile client;
  client.id = 0;
  client.cmp = 1.0;
  client.shard_size = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        gre_raa_assign(sched, client, sizes, CostModel::size_over_capability));
    release_client(sched, 0);
  }
}
BENCHMARK(BM_gre_raa_assign)->Arg(4)->Arg(16)->Arg(64);

void BM_event_loop(benchmark::State& state) {
  // end-to-end simulation throughput on a small learning instance
  ExperimentConfig cfg = parse_config_text(R"({
    "dataset": "synthetic", "synthetic_classes": 2, "synthetic_dim": 6,
    "synthetic_per_class": 40, "synthetic_test_per_class": 10,
    "M": 2, "N": 4, "beta": 0.5, "Q": 25,
    "gamma": 0.05, "batch_size": 16, "local_iters": 2, "seed": 7
  })");
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_instance(cfg).merges);
  }
  state.SetItemsProcessed(state.iterations() * cfg.resolved_t_target());
}
BENCHMARK(BM_event_loop)->Unit(benchmark::kMillisecond);

void BM_brute_force_oracle(benchmark::State& state) {
  const std::size_t n = 8, m = 4;
  Rng rng(6);
  std::vector<ClientProfile> profiles(n);
  for (std::size_t i = 0; i < n; ++i) {
    profiles[i].id = i;
    profiles[i].cmp = rng.uniform(1.0, 4.0);
    profiles[i].shard_size = 1;
  }
  std::vector<double> sizes{0.1, 0.2, 0.3, 0.4};
  for (auto _ : state) {
    benchmark::DoNotOptimize(brute_force_offline_K(profiles, sizes));
  }
}
BENCHMARK(BM_brute_force_oracle);

}  // namespace

BENCHMARK_MAIN();
