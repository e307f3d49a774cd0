// Acceptance suite. Prints one PASS/FAIL line per criterion; exits non-zero
// when any selected criterion fails. Usage: acceptance [criterion...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "cam/check.hpp"
#include "cam/config.hpp"
#include "cam/env.hpp"
#include "cam/eval.hpp"
#include "cam/exact.hpp"
#include "cam/objectives.hpp"
#include "cam/population.hpp"

using namespace cam;

namespace {

constexpr std::size_t kSeeds = 5;
constexpr std::size_t kRequiredSeeds = 4;

struct Verdict {
  bool passed = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

RunConfig config_file(const char* name) {
  return load_config(std::string(CAM_CONFIG_DIR) + "/" + name);
}

ActionMask full(std::size_t n) { return ActionMask(n, 1); }

PolicyParams random_params(const PolicyArch& arch, std::uint64_t seed) {
  Rng rng(seed);
  PolicyParams p = init_policy(arch, rng);
  for (double& v : p.flat) v = rng.uniform(-1.0, 1.0);
  return p;
}

Verdict gradient_oracle() {
  const auto t0 = Clock::now();
  const auto results = gradient_checks();
  const double dt = seconds_since(t0);
  double worst = 0.0;
  bool ok = true;
  for (const auto& r : results) {
    worst = std::max(worst, r.max_error);
    ok = ok && r.passed && r.max_error < kGradientTolerance;
  }
  return {ok && dt < 60.0, std::to_string(results.size()) + " checks over " +
                               std::to_string(gradient_check_games().size()) +
                               " games, worst relative error " + fmt("%.2e", worst) +
                               " (< 1e-4), " + fmt("%.2f", dt) + " s (< 60 s)"};
}

Verdict mi_correctness() {
  PolicyArch arch;
  arch.n_actions = 4;
  double worst = 0.0;
  const Observation s{{1.0}, 0};
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const PolicyParams p = random_params(arch, derive_seed(2, 0, k));
    worst = std::max(worst, std::abs(mutual_information_exact(p, s, AgentId{0}, full(4), s,
                                                               AgentId{1}, full(4))));
  }
  std::vector<JointActionSample> corr;
  for (std::size_t k = 0; k < 1000; ++k) corr.push_back({k % 2, k % 2, 0});
  const double ln2_err = std::abs(mutual_information_sampled(corr) - std::log(2.0));
  Rng rng(3);
  std::vector<JointActionSample> ind;
  for (int k = 0; k < 100000; ++k) ind.push_back({rng.below(2), rng.below(2), 0});
  const double ind_mi = mutual_information_sampled(ind);
  return {worst < 1e-12 && ln2_err < 1e-6 && ind_mi <= 0.01,
          "factorized max " + fmt("%.1e", worst) + " (< 1e-12), correlated |I - ln2| " +
              fmt("%.1e", ln2_err) + " (< 1e-6), independent " + fmt("%.4f", ind_mi) +
              " nats (<= 0.01)"};
}

Verdict epsilon_convergence() {
  RunConfig c = config_file("biased_rps.json");
  const auto t0 = Clock::now();
  std::size_t good = 0;
  std::string per_seed;
  for (std::size_t seed = 0; seed < kSeeds; ++seed) {
    c.master_seed = seed;
    const MiaResult r = mia_train(c, {workers(), {}});
    const double e = exploitability(r.store.latest().params, AgentId{0}, AgentId{1}, c.env.matrix);
    good += e <= 0.05;
    per_seed += fmt(" %.4f", e);
  }
  const double dt = seconds_since(t0);
  const double eps = epsilon_ne(0.576);
  const bool arithmetic = std::abs(eps - 0.076) < 1e-12;
  return {good >= kRequiredSeeds && dt < 600.0 && arithmetic,
          "exploitability after " + std::to_string(c.generations) + " generations:" + per_seed +
              " (" + std::to_string(good) + "/5 <= 0.05, need 4), " + fmt("%.0f", dt) +
              " s (< 600 s), epsilon_ne(0.576) = " + fmt("%.6f", eps)};
}

struct DuelSeed {
  double winrate = 0.0;
  std::size_t games_per_agent = 0;
  double mia_diversity = 0.0;
  double spec_diversity = 0.0;
};

// Stage 1, stage 2 and the shared evaluation protocol for one seed.
DuelSeed duel_seed(RunConfig c, std::uint64_t seed) {
  c.master_seed = seed;
  const TrainHooks hooks{workers(), {}};
  const MiaResult mia = mia_train(c, hooks);
  const CamResult cam = cam_specialize(mia.store, &mia.value, c, hooks);
  const PolicyParams& frozen = mia.store.latest().params;
  const std::size_t n = c.population_size;
  const std::size_t per_opponent = (1000 + n - 2) / (n - 1);
  const std::uint64_t eval_seed = derive_seed(seed, 0xe7a1, 0);

  DuelSeed out;
  out.games_per_agent = per_opponent * (n - 1);
  for (std::size_t x = 0; x < n; ++x) {
    double w = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      if (y == x) continue;
      w += match_score(c.env, {&cam.specialists[x], AgentId{x}}, {&frozen, AgentId{y}},
                       per_opponent, derive_seed(eval_seed, x, y), hooks.workers);
    }
    out.winrate += w / static_cast<double>((n - 1) * n);
  }

  std::vector<Actor> opponents;
  for (std::size_t y = 0; y < n; ++y) opponents.push_back({&frozen, AgentId{y}});
  std::vector<ActionFrequencyVector> before, after;
  for (std::size_t x = 0; x < n; ++x) {
    const std::uint64_t s = derive_seed(eval_seed, 21, x);
    before.push_back(action_frequency_vector(c.env, {&frozen, AgentId{x}}, opponents, 400, s,
                                             hooks.workers));
    after.push_back(action_frequency_vector(c.env, {&cam.specialists[x], AgentId{x}}, opponents,
                                            400, s, hooks.workers));
  }
  out.mia_diversity = diversity_score(before).expected_distance;
  out.spec_diversity = diversity_score(after).expected_distance;
  return out;
}

std::vector<DuelSeed> duel_runs(double& elapsed) {
  static std::optional<std::vector<DuelSeed>> cache;
  static double cache_time = 0.0;
  if (!cache) {
    const RunConfig c = config_file("duel.json");
    const auto t0 = Clock::now();
    cache.emplace();
    for (std::size_t seed = 0; seed < kSeeds; ++seed) cache->push_back(duel_seed(c, seed));
    cache_time = seconds_since(t0);
  }
  elapsed = cache_time;
  return *cache;
}

Verdict cam_improvement() {
  double dt = 0.0;
  const auto runs = duel_runs(dt);
  std::size_t good = 0;
  std::string per_seed;
  bool budget = true;
  for (const auto& r : runs) {
    good += r.winrate > 0.52;
    budget = budget && r.games_per_agent >= 1000;
    per_seed += fmt(" %.3f", r.winrate);
  }
  return {good >= kRequiredSeeds && budget && dt < 3600.0,
          "mean specialist win rate vs frozen stage-1 policy:" + per_seed + " (" +
              std::to_string(good) + "/5 > 0.52, need 4), " +
              std::to_string(runs.front().games_per_agent) + " games per agent, " +
              fmt("%.0f", dt) + " s for both stages (< 3600 s)"};
}

Verdict diversity_increase() {
  double dt = 0.0;
  const auto runs = duel_runs(dt);
  std::size_t good = 0;
  std::string per_seed;
  for (const auto& r : runs) {
    good += r.spec_diversity > r.mia_diversity;
    per_seed += fmt(" %.4f", r.mia_diversity) + fmt("->%.4f", r.spec_diversity);
  }
  const double rel = relative_change(0.9210, 1.0585);
  const bool arithmetic = std::abs(rel * 100.0 - 14.93) < 0.005;
  return {good >= kRequiredSeeds && arithmetic,
          "expected distance stage 1 -> specialists:" + per_seed + " (" + std::to_string(good) +
              "/5 increased, need 4), (1.0585 - 0.9210) / 0.9210 = " + fmt("%.2f%%", rel * 100.0)};
}

Verdict exploitability_oracle() {
  const auto rps = games::rock_paper_scissors();
  const std::vector<double> third(3, 1.0 / 3);
  const double uniform = exploitability(third, third, rps);
  const double pennies = exploitability({0.5, 0.5}, {0.5, 0.5}, games::matching_pennies());
  const double rock = exploitability({1.0, 0.0, 0.0}, third, rps);
  PolicyArch arch;
  arch.n_actions = 3;
  const PolicyParams zero{arch, std::vector<double>(arch.policy_param_count(), 0.0)};
  const double policy_uniform = exploitability(zero, AgentId{0}, AgentId{1}, rps);
  return {uniform < 1e-12 && pennies < 1e-12 && policy_uniform < 1e-12 &&
              std::abs(rock - 1.0) < 1e-12,
          "uniform RPS " + fmt("%.1e", uniform) + ", matching pennies NE " + fmt("%.1e", pennies) +
              ", zero-logit policy on RPS " + fmt("%.1e", policy_uniform) + ", pure rock " +
              fmt("%.6f", rock)};
}

Verdict structural_invariants() {
  std::vector<std::string> failures;
  EnvSpec duel;
  duel.kind = EnvKind::kDuel;
  const PolicyArch arch = duel.arch(PolicyKind::kMlp, 4, 16);
  const PolicyParams p = random_params(arch, 7);

  std::vector<LabeledActor> pop;
  for (std::size_t x = 0; x < 4; ++x) pop.push_back({{&p, AgentId{x}}, "id" + std::to_string(x)});
  const auto m = win_rate_matrix(duel, pop, pop, 20, 1, workers());
  for (std::size_t x = 0; x < 4; ++x) {
    for (std::size_t y = 0; y < 4; ++y) {
      if (x != y && m.w[x][y] + m.w[y][x] != 1.0) failures.push_back("win-rate antisymmetry");
    }
  }

  std::size_t steps = 0;
  for (std::size_t e = 0; e < 200; ++e) {
    Rng rng(derive_seed(4, 0, e));
    const auto rec = play_episode(duel, {&p, AgentId{e % 4}}, {&p, AgentId{(e + 1) % 4}}, rng, 8,
                                  true);
    for (std::size_t t = 0; t < rec.transitions[0].size(); ++t, ++steps) {
      if (rec.transitions[0][t].reward != -rec.transitions[1][t].reward) {
        failures.push_back("zero-sum reward");
        break;
      }
    }
  }

  Checkpoint ck;
  ck.params = p;
  const Checkpoint back = parse_checkpoint(serialize_checkpoint(ck));
  Rng probe(5);
  for (int k = 0; k < 100; ++k) {
    Observation s;
    for (std::size_t d = 0; d < arch.obs_dim; ++d) s.features.push_back(probe.uniform(-1.0, 1.0));
    const AgentId id{probe.below(4)};
    if (forward(back.params, s, id, full(arch.n_actions)).probs !=
        forward(p, s, id, full(arch.n_actions)).probs) {
      failures.push_back("checkpoint round trip");
      break;
    }
  }
  const RunConfig duel_cfg = config_file("duel.json");
  const std::string text = serialize_config(duel_cfg);
  if (!(parse_config(text) == duel_cfg) || serialize_config(parse_config(text)) != text) {
    failures.push_back("config round trip");
  }

  RunConfig small = duel_cfg;
  small.generations = 2;
  small.episodes_per_generation = 8;
  small.eval_games = 4;
  small.cam.sweeps = 1;
  small.cam.episodes_per_sweep = 8;
  small.cam.eval_games = 4;
  const MiaResult a = mia_train(small, {1, {}});
  const MiaResult b = mia_train(small, {workers() + 1, {}});
  bool same = a.store.entries().size() == b.store.entries().size();
  for (std::size_t g = 0; same && g < a.store.size(); ++g) {
    same = a.store.at(g).params == b.store.at(g).params && a.store.at(g).seed == b.store.at(g).seed;
  }
  for (std::size_t g = 0; same && g < a.state.history.size(); ++g) {
    const auto& x = a.state.history[g];
    const auto& y = b.state.history[g];
    same = x.payoff == y.payoff && x.sigma == y.sigma && x.winrate_vs_prev == y.winrate_vs_prev &&
           x.update.surrogate_loss == y.update.surrogate_loss && x.update.mi == y.update.mi;
  }
  const CamResult ca = cam_specialize(a.store, &a.value, small, {1, {}});
  const CamResult cb = cam_specialize(b.store, &b.value, small, {workers() + 1, {}});
  same = same && ca.specialists == cb.specialists;
  if (!same) failures.push_back("run determinism");

  std::string detail = "antisymmetry over 12 pairs, zero-sum over " + std::to_string(steps) +
                       " steps, checkpoint and config round trips, bit-identical reruns";
  for (const auto& f : failures) detail += "; broken: " + f;
  return {failures.empty(), detail};
}

Verdict skill_transfer() {
  std::string detail;
  bool ok = true;
  for (PolicyKind kind : {PolicyKind::kMlp, PolicyKind::kTabular}) {
    PolicyArch arch;
    arch.kind = kind;
    arch.n_ids = 2;
    arch.n_actions = 4;
    arch.n_states = 3;
    arch.obs_dim = 3;
    arch.hidden = 16;
    const PolicyParams p = random_params(arch, 9);
    std::vector<Observation> probes;
    for (std::size_t k = 0; k < 3; ++k) {
      probes.push_back({{0.1 * k, -0.2, 0.3 + 0.1 * k}, k});
    }
    std::vector<double> g(p.size(), 0.0);
    for (std::size_t k = 0; k < probes.size(); ++k) {
      accumulate_grad_log_prob(p, probes[k], AgentId{0}, full(4), k, 1.0, g);
    }
    const PolicyParams q = sgd_step(p, g, 0.5);
    double change = 0.0;
    for (const auto& s : probes) {
      const auto before = forward(p, s, AgentId{1}, full(4)).probs;
      const auto after = forward(q, s, AgentId{1}, full(4)).probs;
      for (std::size_t a = 0; a < 4; ++a) change = std::max(change, std::abs(before[a] - after[a]));
    }
    const bool expect_change = kind == PolicyKind::kMlp;
    ok = ok && (expect_change ? change > 0.0 : change == 0.0);
    detail += to_string(kind) + " max |delta Pi(.|s, ii)| = " + fmt("%.3e", change) + "  ";
  }
  return {ok, detail + "(mlp moves, tabular does not)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient oracle", gradient_oracle},
      {"mutual information", mi_correctness},
      {"epsilon-NE convergence", epsilon_convergence},
      {"specialist improvement", cam_improvement},
      {"diversity increase", diversity_increase},
      {"exploitability oracle", exploitability_oracle},
      {"structural invariants", structural_invariants},
      {"skill transfer", skill_transfer},
  };
  std::set<std::size_t> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::strtoul(argv[k], nullptr, 10));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!selected.empty() && !selected.count(k + 1)) continue;
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %zu %s: %s  %s\n", k + 1, v.passed ? "PASS" : "FAIL",
                criteria[k].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
    failed += !v.passed;
  }
  return failed == 0 ? 0 : 1;
}
