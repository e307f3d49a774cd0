#pragma once

// Tick-stepped 1v1 skirmish on a 1-D arena of integer cells.
//
// Action layout for every character:
//   0 no-op, 1 advance (toward the opponent), 2 retreat, 3 basic attack,
//   4 + k skill k.
// Characters with fewer skills than the widest roster entry have the
// trailing slots permanently masked, so one policy head covers the roster.
//
// Within a tick both actions resolve simultaneously in fixed phases:
// substitute, forcing-move approach, counterMove (needs an incoming forcing
// move, cancels it), forcing-move damage, basic attack, movement.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "cam/game_core.hpp"

namespace cam {

enum class Seat : std::uint8_t { kI = 0, kII = 1 };

constexpr std::size_t seat_index(Seat s) { return static_cast<std::size_t>(s); }
constexpr Seat other(Seat s) { return s == Seat::kI ? Seat::kII : Seat::kI; }

enum DuelAction : std::size_t {
  kNoop = 0,
  kAdvance = 1,
  kRetreat = 2,
  kBasicAttack = 3,
  kFirstSkill = 4,
};

// Behavioral categories used by diversity measurements.
enum class ActionCategory : std::uint8_t {
  kForcingMove = 0,
  kCounterMove = 1,
  kSubstitute = 2,
  kBasicAttack = 3,
  kMovement = 4,
  kNoop = 5,
};
constexpr std::size_t kActionCategoryCount = 6;
const char* to_string(ActionCategory c);

struct RewardWeights {
  double own_hp = 10.0;
  double opp_hp = 10.0;
  double result = 10.0;
  double combo = 5.0;
  double mana = 5.0;

  double total() const { return own_hp + opp_hp + result + combo + mana; }
  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

struct DuelConfig {
  int arena_length = 11;
  int tick_limit = 60;
  CharacterSpec char_i;
  CharacterSpec char_ii;
  // Roster slots of the two characters; only used for the observation.
  std::size_t type_i = 0;
  std::size_t type_ii = 0;
  std::size_t roster_size = 1;
  // Skill slots in the shared action layout (>= every character's skills).
  std::size_t max_skills = 3;
  RewardWeights reward_weights;
  int mana_regen_interval = 4;  // +1 mana every this many ticks
  int combo_cap = 5;            // combo normalization

  const CharacterSpec& character(Seat s) const {
    return s == Seat::kI ? char_i : char_ii;
  }
  std::size_t n_actions() const { return kFirstSkill + max_skills; }
  std::size_t observation_size() const { return 12 + 2 * max_skills + 2 * roster_size; }

  void validate() const;
};

struct FighterState {
  int position = 0;
  int hp = 0;
  int mana = 0;
  int combo = 0;
  bool hit_last_tick = false;
  std::vector<int> cooldowns;  // ticks remaining, one per skill
  int invincible_until = 0;    // invincible while tick < invincible_until

  friend bool operator==(const FighterState&, const FighterState&) = default;
};

struct DuelState {
  int tick = 0;
  std::array<FighterState, 2> fighters;

  const FighterState& fighter(Seat s) const { return fighters[seat_index(s)]; }
  FighterState& fighter(Seat s) { return fighters[seat_index(s)]; }

  friend bool operator==(const DuelState&, const DuelState&) = default;
};

enum class Outcome : std::uint8_t { kWinI, kWinII, kDraw, kOngoing };

struct DuelStep {
  DuelState state;
  double reward_i = 0.0;
  double reward_ii = 0.0;
  bool done = false;
};

// Agents one cell in from each end (clamped for short arenas), full HP and
// mana, no cooldowns. The seed is accepted for interface symmetry; the
// initial state does not depend on it.
DuelState duel_reset(const DuelConfig& config, std::uint64_t seed);

DuelStep duel_step(const DuelState& state, const DuelConfig& config,
                   std::size_t a_i, std::size_t a_ii);

ActionMask action_mask(const DuelState& state, const DuelConfig& config, Seat seat);

double shaped_reward(const DuelState& prev, const DuelState& next,
                     const DuelConfig& config, Seat seat);

Outcome outcome(const DuelState& state, const DuelConfig& config);

ActionCategory action_category(const DuelConfig& config, Seat seat, std::size_t action);

// Egocentric encoding of the full state: own features first, opponent's
// second. Both seats receive the same information.
Observation observe(const DuelState& state, const DuelConfig& config, Seat seat);

// Coarse egocentric state index for tabular policies.
constexpr std::size_t kDuelTabularStates = 125;

// Shared (seat-i frame) state bucket for mutual-information estimates:
// sign of the position difference and both HP quintiles.
std::size_t mi_bucket(const DuelState& state, const DuelConfig& config,
                      std::size_t n_buckets);

// Four hand-authored characters: short-range fast, long-range slow,
// counter-oriented, substitute-heavy.
std::vector<CharacterSpec> default_roster();

}  // namespace cam
