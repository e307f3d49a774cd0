#pragma once

// Shared vocabulary for two-player zero-sum games with heterogeneous agents:
// identities, character descriptions, transitions and return arithmetic.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cam {

// Identity of a population member, the `id` input of the conditional policy.
struct AgentId {
  std::size_t index = 0;

  friend bool operator==(AgentId, AgentId) = default;
  friend auto operator<=>(AgentId, AgentId) = default;
};

enum class SkillCategory : std::uint8_t { kForcingMove, kCounterMove, kSubstitute };

std::string to_string(SkillCategory c);
SkillCategory skill_category_from_string(const std::string& s);

struct SkillSpec {
  SkillCategory category = SkillCategory::kForcingMove;
  int cooldown = 0;         // ticks
  int damage = 0;           // HP points
  int range = 1;            // cells
  int mana_cost = 0;        // mana points
  int effect_duration = 0;  // ticks

  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  friend bool operator==(const SkillSpec&, const SkillSpec&) = default;
};

// The per-agent type: movement, reach, durability and skill kit.
struct CharacterSpec {
  std::string name;
  int move_speed = 1;
  int attack_range = 1;
  int attack_damage = 1;
  int max_hp = 100;
  int max_mana = 0;
  std::vector<SkillSpec> skills;

  void validate() const;

  friend bool operator==(const CharacterSpec&, const CharacterSpec&) = default;
};

using ActionMask = std::vector<std::uint8_t>;

// What a policy sees. `state_index` addresses tabular parameterizations;
// `features` feeds the mlp.
struct Observation {
  std::vector<double> features;
  std::size_t state_index = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

// Where the opponent's actions came from during collection.
enum class OpponentSource : std::uint8_t {
  kLive,        // the policy being trained (shared parameters)
  kGeneration,  // a stored checkpoint of an earlier generation
  kFrozenMia,   // the frozen stage-1 policy
  kSpecialist,  // a member of the stage-2 specialist pool
};

struct Transition {
  Observation state;
  std::size_t action_self = 0;
  std::size_t action_opp = 0;
  double reward = 0.0;  // zero-sum: the opponent received -reward
  Observation next_state;
  bool done = false;
  ActionMask mask_self;
  double log_prob_self = 0.0;

  // Opponent side of the same step, needed by joint-policy estimators.
  Observation opp_state;
  ActionMask mask_opp;
  AgentId id_opp;
  double log_prob_opp = 0.0;
  OpponentSource opponent = OpponentSource::kLive;
  std::size_t opponent_index = 0;  // generation or specialist slot
  std::size_t bucket = 0;          // shared state bucket for MI estimation
};

struct TrajectoryBatch {
  std::vector<Transition> transitions;
  AgentId agent;
  // Start index of every episode; episode k spans
  // [episode_starts[k], episode_starts[k + 1]).
  std::vector<std::size_t> episode_starts;

  bool empty() const { return transitions.empty(); }
  std::size_t episode_count() const { return episode_starts.size(); }
  std::size_t episode_end(std::size_t k) const;

  // Appends `other` keeping the episode partition consistent.
  void append(const TrajectoryBatch& other);

  // Throws std::logic_error unless the episode starts partition the list and
  // each episode's last transition has done = true.
  void check_partition() const;
};

// Per-step reward as the difference of the two agents' payoffs.
double zero_sum_reward(double payoff_self, double payoff_opp);

// Sum of gamma^t r_t over the finite horizon. gamma in [0, 1).
double discounted_return(std::span<const double> rewards, double gamma);

// Sum_{k<n} gamma^k r_k + gamma^n * bootstrap_value with n = rewards.size().
double n_step_return(std::span<const double> rewards, double gamma,
                     double bootstrap_value);

}  // namespace cam
