#pragma once

// Uniform episode runner over the two built-in environments. Population
// members map onto duel characters round-robin over the roster.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "cam/duel.hpp"
#include "cam/matrix_game.hpp"
#include "cam/policy.hpp"
#include "cam/rng.hpp"

namespace cam {

enum class EnvKind : std::uint8_t { kMatrix, kDuel };

struct DuelSettings {
  int arena_length = 11;
  int tick_limit = 60;
  std::vector<CharacterSpec> roster = default_roster();
  RewardWeights reward_weights;
  int mana_regen_interval = 4;

  friend bool operator==(const DuelSettings&, const DuelSettings&) = default;
};

struct EnvSpec {
  EnvKind kind = EnvKind::kMatrix;
  MatrixGameSpec matrix = games::biased_rps();
  DuelSettings duel;

  std::size_t n_actions() const;
  std::size_t obs_dim() const;
  std::size_t n_states() const;
  // Behavior categories: one per action for matrix games, the six skill
  // categories for the duel.
  std::size_t n_categories() const;
  std::size_t max_skills() const;
  // Asymmetric matrix games bind the seat to the id (id 0 plays seat i).
  bool seat_by_id() const;

  const CharacterSpec& character(AgentId id) const;
  DuelConfig duel_config(AgentId seat_i, AgentId seat_ii) const;
  ActionMask matrix_mask(Seat seat) const;
  PolicyArch arch(PolicyKind kind, std::size_t n_ids, std::size_t hidden) const;

  void validate(std::size_t population_size) const;

  friend bool operator==(const EnvSpec&, const EnvSpec&) = default;
};

struct Actor {
  const PolicyParams* params = nullptr;
  AgentId id;
};

struct EpisodeRecord {
  double score_i = 0.5;  // seat i: 1 win, 0.5 draw, 0 loss
  int ticks = 0;
  std::array<std::vector<Transition>, 2> transitions;  // per seat, own perspective
  std::array<std::vector<std::size_t>, 2> category_counts;
  std::array<std::vector<std::uint8_t>, 2> category_by_tick;
};

// Seat taken by `learner` against `opponent` in episode `episode`: the duel
// alternates, symmetric matrix games always use seat i.
Seat learner_seat(const EnvSpec& env, AgentId learner, AgentId opponent, std::size_t episode);

// Plays one episode. Transitions are recorded only when `record` is set;
// category counts always are. The MI bucket of each transition combines the
// shared state bucket with the seat.
EpisodeRecord play_episode(const EnvSpec& env, const Actor& seat_i, const Actor& seat_ii,
                           Rng& rng, std::size_t state_buckets, bool record);

// Mean score of `a` against `b` over `games` episodes with seats assigned by
// learner_seat; game g uses derive_seed(seed, 0, g).
double match_score(const EnvSpec& env, const Actor& a, const Actor& b, std::size_t games,
                   std::uint64_t seed, std::size_t workers);

}  // namespace cam
