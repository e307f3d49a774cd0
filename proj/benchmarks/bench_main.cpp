#include <benchmark/benchmark.h>

#include "cam/env.hpp"
#include "cam/exact.hpp"
#include "cam/objectives.hpp"
#include "cam/policy.hpp"

namespace {

cam::EnvSpec duel_env() {
  cam::EnvSpec env;
  env.kind = cam::EnvKind::kDuel;
  return env;
}

void BM_MlpForward(benchmark::State& state) {
  const cam::EnvSpec env = duel_env();
  const cam::PolicyArch arch =
      env.arch(cam::PolicyKind::kMlp, 4, static_cast<std::size_t>(state.range(0)));
  cam::Rng rng(1);
  const cam::PolicyParams params = cam::init_policy(arch, rng);
  cam::Observation obs{std::vector<double>(arch.obs_dim, 0.25), 0};
  const cam::ActionMask mask(arch.n_actions, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cam::forward(params, obs, cam::AgentId{1}, mask));
  }
}
BENCHMARK(BM_MlpForward)->Arg(32)->Arg(64)->Arg(128);

void BM_GradLogProb(benchmark::State& state) {
  const cam::EnvSpec env = duel_env();
  const cam::PolicyArch arch = env.arch(cam::PolicyKind::kMlp, 4, 32);
  cam::Rng rng(2);
  const cam::PolicyParams params = cam::init_policy(arch, rng);
  cam::Observation obs{std::vector<double>(arch.obs_dim, 0.25), 0};
  const cam::ActionMask mask(arch.n_actions, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cam::grad_log_prob(params, obs, cam::AgentId{0}, mask, 2));
  }
}
BENCHMARK(BM_GradLogProb);

void BM_DuelEpisode(benchmark::State& state) {
  const cam::EnvSpec env = duel_env();
  const cam::PolicyArch arch = env.arch(cam::PolicyKind::kMlp, 4, 32);
  cam::Rng init(3);
  const cam::PolicyParams params = cam::init_policy(arch, init);
  std::uint64_t k = 0;
  for (auto _ : state) {
    cam::Rng rng(k++);
    benchmark::DoNotOptimize(cam::play_episode(env, {&params, cam::AgentId{0}},
                                               {&params, cam::AgentId{1}}, rng, 64, true));
  }
}
BENCHMARK(BM_DuelEpisode);

void BM_MatrixEpisode(benchmark::State& state) {
  const cam::EnvSpec env;
  const cam::PolicyArch arch = env.arch(cam::PolicyKind::kTabular, 2, 0);
  cam::Rng init(4);
  const cam::PolicyParams params = cam::init_policy(arch, init);
  cam::Rng rng(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cam::play_episode(env, {&params, cam::AgentId{0}},
                                               {&params, cam::AgentId{1}}, rng, 1, true));
  }
}
BENCHMARK(BM_MatrixEpisode);

void BM_ExactMiGradient(benchmark::State& state) {
  const cam::MatrixGameSpec game = cam::games::rock_paper_scissors();
  cam::PolicyArch arch;
  arch.n_actions = 3;
  cam::Rng rng(6);
  cam::PolicyParams params = cam::init_policy(arch, rng);
  for (double& v : params.flat) v = rng.uniform(-1.0, 1.0);
  cam::ExactMatrixProblem pr = cam::ExactMatrixProblem::zero_sum(game);
  pr.coupling = {{0.5, 0.0, -0.5}, {0.0, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(cam::exact_mi_gradient(params, pr));
  }
}
BENCHMARK(BM_ExactMiGradient);

}  // namespace

BENCHMARK_MAIN();
