#include <benchmark/benchmark.h>

#include "wd/dreamer.hpp"
#include "wd/env.hpp"
#include "wd/replay.hpp"
#include "wd/rng.hpp"
#include "wd/world_model.hpp"

namespace {

wd::env::EnvConfig bench_env_config() {
  wd::env::EnvConfig cfg;
  cfg.grid_w = 32;
  cfg.grid_h = 32;
  cfg.n_users = 5;
  cfg.horizon = 50;
  return cfg;
}

// Replay data gathered once with a random policy.
wd::replay::ReplayBuffer& shared_buffer(const wd::env::EnvConfig& cfg) {
  static wd::replay::ReplayBuffer buf = [&] {
    wd::replay::ReplayBuffer b;
    wd::env::Env e(cfg, 1);
    wd::Rng rng(2);
    for (int ep = 0; ep < 40; ++ep) {
      Eigen::VectorXd obs = e.reset();
      bool done = false;
      while (!done) {
        const int a = rng.uniform_int(wd::env::kNumActions);
        const auto r = e.step(a);
        b.append({obs, a, r.reward, r.obs, r.done, ep});
        obs = r.obs;
        done = r.done;
      }
    }
    return b;
  }();
  return buf;
}

void BM_EnvStep(benchmark::State& state) {
  const auto cfg = bench_env_config();
  wd::env::Env e(cfg, 7);
  e.reset();
  wd::Rng rng(3);
  int t = 0;
  for (auto _ : state) {
    if (t++ % cfg.horizon == 0) e.reset();
    benchmark::DoNotOptimize(e.step(rng.uniform_int(wd::env::kNumActions)).reward);
  }
}
BENCHMARK(BM_EnvStep);

void BM_WorldModelTrainBatch(benchmark::State& state) {
  const auto ecfg = bench_env_config();
  wd::wm::WorldModelConfig cfg;
  cfg.obs_size = ecfg.obs_size();
  wd::Rng init(11);
  wd::wm::WorldModel m(cfg, init);
  auto& buf = shared_buffer(ecfg);
  wd::Rng sample(13);
  for (auto _ : state) {
    const auto batch = buf.sample_sequences(32, 16, sample);
    benchmark::DoNotOptimize(m.train_batch(batch).losses.total);
  }
}
BENCHMARK(BM_WorldModelTrainBatch);

void BM_DreamerTdUpdate(benchmark::State& state) {
  const auto ecfg = bench_env_config();
  wd::agent::DreamerConfig cfg;
  cfg.world_model.obs_size = ecfg.obs_size();
  wd::agent::DreamerAgent ag(cfg, wd::Rng(21), wd::Rng(22), wd::Rng(23));
  wd::Rng probe(5);
  wd::agent::Matrix starts(cfg.world_model.latent_size, cfg.batch_size);
  for (int c = 0; c < starts.cols(); ++c)
    for (int r = 0; r < starts.rows(); ++r) starts(r, c) = probe.uniform(-1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(ag.td_update(starts));
}
BENCHMARK(BM_DreamerTdUpdate);

}  // namespace

BENCHMARK_MAIN();
