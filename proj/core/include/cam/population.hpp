#pragma once

// Both training stages: generation checkpoints, the empirical payoff matrix
// and interaction graph, opponent-sampled episode collection, the stage-1
// population self-play loop and the stage-2 specialization loop.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cam/env.hpp"
#include "cam/objectives.hpp"
#include "cam/policy.hpp"

namespace cam {

struct GenerationEntry {
  std::size_t generation = 0;
  std::string stage;
  std::optional<std::size_t> parent;
  std::uint64_t seed = 0;
  PolicyParams params;
};

// Append-only sequence of checkpoints indexed from 0.
class GenerationStore {
 public:
  std::size_t add(PolicyParams params, std::string stage, std::uint64_t seed);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const GenerationEntry& at(std::size_t generation) const;
  const GenerationEntry& latest() const;
  const std::vector<GenerationEntry>& entries() const { return entries_; }

 private:
  std::vector<GenerationEntry> entries_;
};

// Win rates of one population against itself. Each unordered pair keeps a
// single tally; u(y, x) is derived as 1 - u(x, y).
class PayoffMatrix {
 public:
  explicit PayoffMatrix(std::size_t n = 0);

  std::size_t size() const { return n_; }
  // Adds `games` games in which x scored `points` (wins + 0.5 draws).
  void record(std::size_t x, std::size_t y, double points, std::size_t games);
  double u(std::size_t x, std::size_t y) const;
  std::size_t games(std::size_t x, std::size_t y) const;
  std::vector<std::vector<double>> matrix() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> points_;  // [x * n + y] for x < y
  std::vector<std::size_t> games_;
};

struct InteractionGraph {
  std::vector<std::vector<double>> sigma;
};

// w[y] ~ (1 - win_rates[y])^exponent over eligible y, uniform when every
// weight vanishes. `exclude` (if any) gets weight 0.
std::vector<double> graph_solve_row(std::span<const double> win_rates, double exponent,
                                    std::optional<std::size_t> exclude = std::nullopt);

// Row x from graph_solve_row(u[x], exponent, x).
InteractionGraph graph_solve(const PayoffMatrix& u, double exponent);

std::size_t sample_opponent(std::span<const double> weights, Rng& rng);

struct OpponentHandle {
  const PolicyParams* params = nullptr;
  AgentId id;
  OpponentSource source = OpponentSource::kLive;
  std::size_t index = 0;
};

struct NplBatch {
  TrajectoryBatch batch;
  std::vector<double> episode_scores;        // learner's score per episode
  std::vector<std::size_t> episode_opponent;  // index into the opponent set
};

// Runs `episodes` episodes of `learner`, each against an opponent drawn from
// `opponents` with weights `sigma`. Episode e uses derive_seed(seed, 1, e).
NplBatch npl_collect(const EnvSpec& env, const Actor& learner, std::span<const double> sigma,
                     std::span<const OpponentHandle> opponents, std::size_t episodes,
                     std::uint64_t seed, std::size_t state_buckets, std::size_t workers);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kMlp;
  std::size_t hidden = 32;
  double init_scale = 0.05;

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

struct ConvergenceConfig {
  double threshold = 0.076;
  std::size_t patience = 2;
  bool early_stop = true;

  friend bool operator==(const ConvergenceConfig&, const ConvergenceConfig&) = default;
};

struct CamConfig {
  std::size_t sweeps = 10;
  std::size_t episodes_per_sweep = 64;
  std::size_t updates_per_sweep = 1;
  std::size_t eval_games = 50;
  // Probability mass on the frozen stage-1 policy among the opponents.
  double mia_weight = 0.5;
  bool include_specialists_from_start = true;
  // 0 falls back to the objective's learning rate.
  double learning_rate = 0.0;

  friend bool operator==(const CamConfig&, const CamConfig&) = default;
};

struct RunConfig {
  EnvSpec env;
  PolicyConfig policy;
  std::size_t population_size = 2;
  std::size_t generations = 10;
  std::size_t episodes_per_generation = 64;  // per id and update
  std::size_t updates_per_generation = 1;
  ObjectiveConfig objective;
  double solver_exponent = 1.0;
  // Games per evaluated pairing; 0 selects 200 for matrix games, 50 for the duel.
  std::size_t eval_games = 0;
  ConvergenceConfig convergence;
  // Share of opponents drawn from stored generations instead of the live policy.
  double past_mix = 0.3;
  std::uint64_t master_seed = 0;
  CamConfig cam;

  std::size_t resolved_eval_games() const;
  PolicyArch arch() const { return env.arch(policy.kind, population_size, policy.hidden); }
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct UpdateStats {
  double objective_J = 0.0;
  double mi = 0.0;
  double literal_loss = 0.0;
  double surrogate_loss = 0.0;
  double clip_fraction = 0.0;
  double kl_anchor = 0.0;
  double value_loss = 0.0;
  double grad_norm = 0.0;
  double reward_term_norm = 0.0;
  double mi_term_norm = 0.0;
  std::size_t samples = 0;
};

enum class Stage : std::uint8_t { kMia, kCam };

// One on-policy update of `params` from per-id batches: value targets,
// advantage normalization, the configured update rule (with the optional
// pull toward `anchor`), gradient clipping and value regression.
UpdateStats policy_update(PolicyParams& params, ValueHead& value,
                          std::span<const TrajectoryBatch> batches, const ObjectiveConfig& config,
                          double learning_rate, const PolicyParams* anchor, Stage stage,
                          std::uint64_t seed);

struct GenerationMetrics {
  std::size_t tau = 0;
  double winrate_vs_prev = 0.5;
  double epsilon = 0.0;
  std::vector<std::vector<double>> payoff;
  std::vector<std::vector<double>> sigma;
  UpdateStats update;
};

struct TrainState {
  std::size_t tau = 0;
  bool converged = false;
  std::vector<GenerationMetrics> history;
};

// True when the last `patience` entries all lie within `threshold` of 0.5.
bool convergence_check(std::span<const double> winrate_history, double threshold,
                       std::size_t patience);

class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t generation, const std::string& what)
      : std::runtime_error("generation " + std::to_string(generation) + ": " + what),
        generation_(generation) {}
  std::size_t generation() const { return generation_; }

 private:
  std::size_t generation_;
};

struct TrainHooks {
  std::size_t workers = 1;
  std::function<void(const GenerationMetrics&)> on_generation;
};

struct MiaResult {
  GenerationStore store;
  ValueHead value;
  TrainState state;
};

MiaResult mia_train(const RunConfig& config, const TrainHooks& hooks = {});

struct SweepMetrics {
  std::size_t sweep = 0;
  std::vector<double> winrate_vs_mia;  // per agent, from the sweep's episodes
  std::vector<double> winrate_vs_pool;
  std::vector<double> cam_loss;
  std::vector<UpdateStats> update;
};

struct CamResult {
  std::vector<PolicyParams> specialists;
  std::vector<SweepMetrics> history;
};

// Specializes one copy of the final stage-1 policy per id. `mia_value`
// seeds the specialists' baselines when given.
CamResult cam_specialize(const GenerationStore& mia_store, const ValueHead* mia_value,
                         const RunConfig& config, const TrainHooks& hooks = {});

}  // namespace cam
