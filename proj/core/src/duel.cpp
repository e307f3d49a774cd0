#include "cam/duel.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace cam {

const char* to_string(ActionCategory c) {
  switch (c) {
    case ActionCategory::kForcingMove: return "forcingMove";
    case ActionCategory::kCounterMove: return "counterMove";
    case ActionCategory::kSubstitute: return "substitute";
    case ActionCategory::kBasicAttack: return "basicAttack";
    case ActionCategory::kMovement: return "movement";
    case ActionCategory::kNoop: return "noop";
  }
  return "unknown";
}

void DuelConfig::validate() const {
  if (tick_limit < 1) throw std::invalid_argument("tick_limit must be >= 1");
  if (arena_length < 3) throw std::invalid_argument("arena_length must be >= 3");
  const RewardWeights& w = reward_weights;
  if (w.own_hp < 0 || w.opp_hp < 0 || w.result < 0 || w.combo < 0 || w.mana < 0) {
    throw std::invalid_argument("reward weights must be non-negative");
  }
  // The HP terms only cancel between the seats when both weights agree.
  if (w.own_hp != w.opp_hp) {
    throw std::invalid_argument("reward weights own_hp and opp_hp must be equal");
  }
  if (mana_regen_interval < 1) {
    throw std::invalid_argument("mana_regen_interval must be >= 1");
  }
  if (combo_cap < 1) throw std::invalid_argument("combo_cap must be >= 1");
  for (const CharacterSpec* c : {&char_i, &char_ii}) {
    c->validate();
    if (c->skills.size() > max_skills) {
      throw std::invalid_argument(c->name + ": more skills than max_skills");
    }
  }
  if (type_i >= roster_size || type_ii >= roster_size) {
    throw std::invalid_argument("character type outside roster");
  }
}

namespace {

FighterState fresh_fighter(const CharacterSpec& c, int position) {
  FighterState f;
  f.position = position;
  f.hp = c.max_hp;
  f.mana = c.max_mana;
  f.cooldowns.assign(c.skills.size(), 0);
  return f;
}

int sign(int v) { return (v > 0) - (v < 0); }

int approach(int self, int opp, int speed) {
  const int d = std::abs(opp - self);
  return self + sign(opp - self) * std::min(speed, d);
}

int retreat(int self, int opp, int speed, int length) {
  int dir = sign(self - opp);
  if (dir == 0) {
    // Sharing a cell: back off toward the roomier side.
    const int twice = 2 * self;
    dir = twice < length - 1 ? 1 : (twice > length - 1 ? -1 : 0);
  }
  return std::clamp(self + dir * speed, 0, length - 1);
}

const SkillSpec* skill_for(const CharacterSpec& c, std::size_t action) {
  if (action < kFirstSkill) return nullptr;
  const std::size_t k = action - kFirstSkill;
  return k < c.skills.size() ? &c.skills[k] : nullptr;
}

void check_shape(const DuelState& s, const DuelConfig& config) {
  if (s.fighters[0].cooldowns.size() != config.char_i.skills.size() ||
      s.fighters[1].cooldowns.size() != config.char_ii.skills.size()) {
    throw std::invalid_argument("duel state does not match config");
  }
}

double norm(int v, int max) { return max > 0 ? static_cast<double>(v) / max : 0.0; }

int quintile(int hp, int max_hp) { return std::min(4, (5 * hp) / max_hp); }

}  // namespace

DuelState duel_reset(const DuelConfig& config, [[maybe_unused]] std::uint64_t seed) {
  config.validate();
  const int inset = std::min(1, (config.arena_length - 3) / 2);
  DuelState s;
  s.fighters[0] = fresh_fighter(config.char_i, inset);
  s.fighters[1] = fresh_fighter(config.char_ii, config.arena_length - 1 - inset);
  return s;
}

ActionMask action_mask(const DuelState& state, const DuelConfig& config, Seat seat) {
  check_shape(state, config);
  const CharacterSpec& c = config.character(seat);
  const FighterState& f = state.fighter(seat);
  ActionMask mask(config.n_actions(), 0);
  mask[kNoop] = mask[kAdvance] = mask[kRetreat] = mask[kBasicAttack] = 1;
  for (std::size_t k = 0; k < c.skills.size(); ++k) {
    mask[kFirstSkill + k] = f.cooldowns[k] == 0 && c.skills[k].mana_cost <= f.mana;
  }
  return mask;
}

ActionCategory action_category(const DuelConfig& config, Seat seat, std::size_t action) {
  switch (action) {
    case kNoop: return ActionCategory::kNoop;
    case kAdvance:
    case kRetreat: return ActionCategory::kMovement;
    case kBasicAttack: return ActionCategory::kBasicAttack;
    default: break;
  }
  const SkillSpec* s = skill_for(config.character(seat), action);
  if (s == nullptr) throw std::out_of_range("action outside the character's kit");
  return static_cast<ActionCategory>(s->category);
}

Outcome outcome(const DuelState& state, const DuelConfig& config) {
  const int hp_i = state.fighters[0].hp;
  const int hp_ii = state.fighters[1].hp;
  if (hp_i <= 0 && hp_ii <= 0) return Outcome::kDraw;
  if (hp_ii <= 0) return Outcome::kWinI;
  if (hp_i <= 0) return Outcome::kWinII;
  if (state.tick >= config.tick_limit) {
    if (hp_i > hp_ii) return Outcome::kWinI;
    if (hp_ii > hp_i) return Outcome::kWinII;
    return Outcome::kDraw;
  }
  return Outcome::kOngoing;
}

double shaped_reward(const DuelState& prev, const DuelState& next,
                     const DuelConfig& config, Seat seat) {
  check_shape(prev, config);
  check_shape(next, config);
  const RewardWeights& w = config.reward_weights;
  const Seat opp = other(seat);
  const CharacterSpec& cs = config.character(seat);
  const CharacterSpec& co = config.character(opp);
  const FighterState& ps = prev.fighter(seat);
  const FighterState& po = prev.fighter(opp);
  const FighterState& ns = next.fighter(seat);
  const FighterState& no = next.fighter(opp);

  const double d_own = norm(ns.hp, cs.max_hp) - norm(ps.hp, cs.max_hp);
  const double d_opp = norm(no.hp, co.max_hp) - norm(po.hp, co.max_hp);
  const double d_combo = (norm(ns.combo, config.combo_cap) - norm(ps.combo, config.combo_cap)) -
                         (norm(no.combo, config.combo_cap) - norm(po.combo, config.combo_cap));
  const double d_mana = (norm(ns.mana, cs.max_mana) - norm(ps.mana, cs.max_mana)) -
                        (norm(no.mana, co.max_mana) - norm(po.mana, co.max_mana));

  double result = 0.0;
  if (outcome(prev, config) == Outcome::kOngoing) {
    const Outcome o = outcome(next, config);
    const Outcome win = seat == Seat::kI ? Outcome::kWinI : Outcome::kWinII;
    const Outcome loss = seat == Seat::kI ? Outcome::kWinII : Outcome::kWinI;
    if (o == win) result = 1.0;
    if (o == loss) result = -1.0;
  }
  return (w.own_hp * d_own - w.opp_hp * d_opp) + w.result * result +
         w.combo * d_combo + w.mana * d_mana;
}

DuelStep duel_step(const DuelState& state, const DuelConfig& config,
                   std::size_t a_i, std::size_t a_ii) {
  if (outcome(state, config) != Outcome::kOngoing) {
    throw std::logic_error("duel_step on a finished duel");
  }
  const std::array<std::size_t, 2> act = {a_i, a_ii};
  for (std::size_t k = 0; k < 2; ++k) {
    const ActionMask m = action_mask(state, config, static_cast<Seat>(k));
    if (act[k] >= m.size() || !m[act[k]]) {
      throw std::invalid_argument("duel_step: masked-out action");
    }
  }

  DuelState next = state;
  const int t = state.tick;
  std::array<const SkillSpec*, 2> skill{};
  std::array<SkillCategory, 2> cat{};
  std::array<bool, 2> invincible{};

  for (std::size_t k = 0; k < 2; ++k) {
    FighterState& f = next.fighters[k];
    for (int& cd : f.cooldowns) cd = std::max(0, cd - 1);
    skill[k] = skill_for(config.character(static_cast<Seat>(k)), act[k]);
    if (skill[k] != nullptr) {
      cat[k] = skill[k]->category;
      f.mana -= skill[k]->mana_cost;
      f.cooldowns[act[k] - kFirstSkill] = skill[k]->cooldown;
    }
  }
  auto uses = [&](std::size_t k, SkillCategory c) {
    return skill[k] != nullptr && cat[k] == c;
  };

  // Substitute effects.
  for (std::size_t k = 0; k < 2; ++k) {
    FighterState& f = next.fighters[k];
    if (uses(k, SkillCategory::kSubstitute)) {
      f.invincible_until = std::max(f.invincible_until, t + skill[k]->effect_duration);
    }
    invincible[k] = t < f.invincible_until;
  }

  // Forcing moves close the distance whether or not they are countered.
  {
    std::array<int, 2> pos = {next.fighters[0].position, next.fighters[1].position};
    for (std::size_t k = 0; k < 2; ++k) {
      if (uses(k, SkillCategory::kForcingMove)) {
        const int speed = config.character(static_cast<Seat>(k)).move_speed;
        next.fighters[k].position = approach(pos[k], pos[1 - k], speed);
      }
    }
  }
  const int dist = std::abs(next.fighters[0].position - next.fighters[1].position);

  std::array<int, 2> damage_to = {0, 0};  // damage received by seat k
  std::array<bool, 2> cancelled = {false, false};
  for (std::size_t k = 0; k < 2; ++k) {
    const std::size_t o = 1 - k;
    if (uses(k, SkillCategory::kCounterMove) && uses(o, SkillCategory::kForcingMove) &&
        dist <= skill[k]->range) {
      cancelled[o] = true;
      if (!invincible[o]) damage_to[o] += skill[k]->damage;
    }
  }
  for (std::size_t k = 0; k < 2; ++k) {
    const std::size_t o = 1 - k;
    if (uses(k, SkillCategory::kForcingMove) && !cancelled[k] &&
        dist <= skill[k]->range && !invincible[o]) {
      damage_to[o] += skill[k]->damage;
    }
  }
  for (std::size_t k = 0; k < 2; ++k) {
    const std::size_t o = 1 - k;
    const CharacterSpec& c = config.character(static_cast<Seat>(k));
    if (act[k] == kBasicAttack && dist <= c.attack_range && !invincible[o]) {
      damage_to[o] += c.attack_damage;
    }
  }

  // Movement.
  {
    std::array<int, 2> pos = {next.fighters[0].position, next.fighters[1].position};
    for (std::size_t k = 0; k < 2; ++k) {
      const int speed = config.character(static_cast<Seat>(k)).move_speed;
      if (act[k] == kAdvance) {
        next.fighters[k].position = approach(pos[k], pos[1 - k], speed);
      } else if (act[k] == kRetreat) {
        next.fighters[k].position =
            retreat(pos[k], pos[1 - k], speed, config.arena_length);
      }
    }
  }

  next.tick = t + 1;
  for (std::size_t k = 0; k < 2; ++k) {
    FighterState& f = next.fighters[k];
    const CharacterSpec& c = config.character(static_cast<Seat>(k));
    f.hp = std::max(0, f.hp - damage_to[k]);
    const bool dealt = damage_to[1 - k] > 0;
    f.combo = dealt ? (f.hit_last_tick ? std::min(f.combo + 1, config.combo_cap) : 0) : 0;
    f.hit_last_tick = dealt;
    if (next.tick % config.mana_regen_interval == 0) {
      f.mana = std::min(c.max_mana, f.mana + 1);
    }
  }

  DuelStep out;
  out.reward_i = shaped_reward(state, next, config, Seat::kI);
  out.reward_ii = shaped_reward(state, next, config, Seat::kII);
  out.done = outcome(next, config) != Outcome::kOngoing;
  out.state = std::move(next);
  return out;
}

Observation observe(const DuelState& state, const DuelConfig& config, Seat seat) {
  check_shape(state, config);
  const Seat opp = other(seat);
  const FighterState& fs = state.fighter(seat);
  const FighterState& fo = state.fighter(opp);
  const CharacterSpec& cs = config.character(seat);
  const CharacterSpec& co = config.character(opp);
  const int span = config.arena_length - 1;
  const int dist = std::abs(fs.position - fo.position);

  Observation obs;
  std::vector<double>& x = obs.features;
  x.reserve(config.observation_size());
  x.push_back(norm(dist, span));
  x.push_back(norm(fs.position, span));
  x.push_back(norm(fo.position, span));
  x.push_back(norm(fs.hp, cs.max_hp));
  x.push_back(norm(fo.hp, co.max_hp));
  x.push_back(norm(fs.mana, cs.max_mana));
  x.push_back(norm(fo.mana, co.max_mana));
  x.push_back(norm(fs.combo, config.combo_cap));
  x.push_back(norm(fo.combo, config.combo_cap));
  x.push_back(state.tick < fs.invincible_until ? 1.0 : 0.0);
  x.push_back(state.tick < fo.invincible_until ? 1.0 : 0.0);
  x.push_back(norm(state.tick, config.tick_limit));
  auto push_cooldowns = [&](const FighterState& f, const CharacterSpec& c) {
    for (std::size_t k = 0; k < config.max_skills; ++k) {
      x.push_back(k < c.skills.size() ? norm(f.cooldowns[k], std::max(1, c.skills[k].cooldown))
                                      : 0.0);
    }
  };
  push_cooldowns(fs, cs);
  push_cooldowns(fo, co);
  const std::size_t own_type = seat == Seat::kI ? config.type_i : config.type_ii;
  const std::size_t opp_type = seat == Seat::kI ? config.type_ii : config.type_i;
  for (std::size_t r = 0; r < config.roster_size; ++r) x.push_back(r == own_type ? 1.0 : 0.0);
  for (std::size_t r = 0; r < config.roster_size; ++r) x.push_back(r == opp_type ? 1.0 : 0.0);

  obs.state_index = (static_cast<std::size_t>(std::min(dist, 4)) * 5 +
                     static_cast<std::size_t>(quintile(fs.hp, cs.max_hp))) *
                        5 +
                    static_cast<std::size_t>(quintile(fo.hp, co.max_hp));
  return obs;
}

std::size_t mi_bucket(const DuelState& state, const DuelConfig& config,
                      std::size_t n_buckets) {
  if (n_buckets == 0) throw std::invalid_argument("mi_bucket: zero buckets");
  const FighterState& a = state.fighters[0];
  const FighterState& b = state.fighters[1];
  const auto s = static_cast<std::size_t>(sign(b.position - a.position) + 1);
  const auto qa = static_cast<std::size_t>(quintile(a.hp, config.char_i.max_hp));
  const auto qb = static_cast<std::size_t>(quintile(b.hp, config.char_ii.max_hp));
  return ((s * 5 + qa) * 5 + qb) % n_buckets;
}

std::vector<CharacterSpec> default_roster() {
  using C = SkillCategory;
  // name, speed, attack range, attack damage, hp, mana, skills
  // skill: category, cooldown, damage, range, mana cost, duration
  return {
      {"striker", 2, 1, 10, 100, 6,
       {{C::kForcingMove, 4, 18, 1, 2, 0},
        {C::kCounterMove, 6, 12, 1, 2, 0},
        {C::kSubstitute, 8, 0, 0, 2, 2}}},
      {"archer", 1, 4, 5, 100, 6,
       {{C::kForcingMove, 5, 14, 3, 2, 0},
        {C::kCounterMove, 6, 8, 2, 2, 0},
        {C::kSubstitute, 8, 0, 0, 2, 2}}},
      {"sentinel", 1, 2, 6, 110, 6,
       {{C::kForcingMove, 6, 12, 2, 2, 0},
        {C::kCounterMove, 3, 20, 3, 1, 0},
        {C::kSubstitute, 8, 0, 0, 2, 2}}},
      {"trickster", 2, 2, 6, 90, 8,
       {{C::kForcingMove, 5, 15, 2, 2, 0},
        {C::kCounterMove, 7, 10, 1, 2, 0},
        {C::kSubstitute, 4, 0, 0, 1, 2},
        {C::kSubstitute, 6, 0, 0, 2, 3}}},
  };
}

}  // namespace cam
