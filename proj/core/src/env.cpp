#include "cam/env.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "cam/parallel.hpp"

namespace cam {

std::size_t EnvSpec::max_skills() const {
  std::size_t m = 0;
  for (const auto& c : duel.roster) m = std::max(m, c.skills.size());
  return m;
}

std::size_t EnvSpec::n_actions() const {
  if (kind == EnvKind::kMatrix) return std::max(matrix.n_actions_i(), matrix.n_actions_ii());
  return kFirstSkill + max_skills();
}

std::size_t EnvSpec::obs_dim() const {
  if (kind == EnvKind::kMatrix) return 1;
  return 12 + 2 * max_skills() + 2 * duel.roster.size();
}

std::size_t EnvSpec::n_states() const {
  return kind == EnvKind::kMatrix ? 1 : kDuelTabularStates;
}

std::size_t EnvSpec::n_categories() const {
  return kind == EnvKind::kMatrix ? n_actions() : kActionCategoryCount;
}

bool EnvSpec::seat_by_id() const { return kind == EnvKind::kMatrix && !matrix.symmetric(); }

const CharacterSpec& EnvSpec::character(AgentId id) const {
  if (duel.roster.empty()) throw std::invalid_argument("empty roster");
  return duel.roster[id.index % duel.roster.size()];
}

DuelConfig EnvSpec::duel_config(AgentId seat_i, AgentId seat_ii) const {
  DuelConfig c;
  c.arena_length = duel.arena_length;
  c.tick_limit = duel.tick_limit;
  c.char_i = character(seat_i);
  c.char_ii = character(seat_ii);
  c.type_i = seat_i.index % duel.roster.size();
  c.type_ii = seat_ii.index % duel.roster.size();
  c.roster_size = duel.roster.size();
  c.max_skills = max_skills();
  c.reward_weights = duel.reward_weights;
  c.mana_regen_interval = duel.mana_regen_interval;
  return c;
}

ActionMask EnvSpec::matrix_mask(Seat seat) const {
  const std::size_t avail = seat == Seat::kI ? matrix.n_actions_i() : matrix.n_actions_ii();
  ActionMask m(n_actions(), 0);
  std::fill(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(avail), 1);
  return m;
}

PolicyArch EnvSpec::arch(PolicyKind kind_, std::size_t n_ids, std::size_t hidden) const {
  PolicyArch a;
  a.kind = kind_;
  a.n_ids = n_ids;
  a.n_actions = n_actions();
  a.n_states = n_states();
  a.obs_dim = obs_dim();
  a.hidden = hidden;
  return a;
}

void EnvSpec::validate(std::size_t population_size) const {
  if (population_size < 2) throw std::invalid_argument("population_size must be at least 2");
  if (kind == EnvKind::kMatrix) {
    matrix.validate();
    if (seat_by_id() && population_size != 2) {
      throw std::invalid_argument("asymmetric matrix games need population_size 2");
    }
    return;
  }
  if (duel.roster.empty()) throw std::invalid_argument("duel roster is empty");
  for (std::size_t x = 0; x < duel.roster.size(); ++x) {
    duel_config(AgentId{x}, AgentId{(x + 1) % duel.roster.size()}).validate();
  }
}

Seat learner_seat(const EnvSpec& env, AgentId learner, AgentId opponent, std::size_t episode) {
  if (env.kind == EnvKind::kDuel) return episode % 2 == 0 ? Seat::kI : Seat::kII;
  if (!env.seat_by_id()) return Seat::kI;
  if (learner == opponent) throw std::invalid_argument("asymmetric game needs distinct ids");
  return learner.index == 0 ? Seat::kI : Seat::kII;
}

namespace {

double score_of(Outcome o) {
  switch (o) {
    case Outcome::kWinI: return 1.0;
    case Outcome::kWinII: return 0.0;
    default: return 0.5;
  }
}

struct Decision {
  std::size_t action;
  double log_prob;
};

Decision act(const Actor& actor, const Observation& obs, const ActionMask& mask, Rng& rng) {
  const ActionDistribution d = forward(*actor.params, obs, actor.id, mask);
  const std::size_t a = sample(d, rng);
  return {a, d.log_probs[a]};
}

EpisodeRecord play_matrix(const EnvSpec& env, const std::array<const Actor*, 2>& actors,
                          Rng& rng, bool record) {
  const Observation obs{{1.0}, 0};
  const std::array<ActionMask, 2> masks{env.matrix_mask(Seat::kI), env.matrix_mask(Seat::kII)};
  const Decision di = act(*actors[0], obs, masks[0], rng);
  const Decision dii = act(*actors[1], obs, masks[1], rng);
  const auto [ri, rii] = matrix_play(env.matrix, di.action, dii.action);
  EpisodeRecord rec;
  rec.ticks = 1;
  rec.score_i = ri > 0.0 ? 1.0 : (ri < 0.0 ? 0.0 : 0.5);
  const std::array<Decision, 2> dec{di, dii};
  const std::array<double, 2> rew{ri, rii};
  for (std::size_t s = 0; s < 2; ++s) {
    rec.category_counts[s].assign(env.n_categories(), 0);
    ++rec.category_counts[s][dec[s].action];
    rec.category_by_tick[s].push_back(static_cast<std::uint8_t>(dec[s].action));
    if (!record) continue;
    const std::size_t o = 1 - s;
    Transition t;
    t.state = obs;
    t.action_self = dec[s].action;
    t.action_opp = dec[o].action;
    t.reward = rew[s];
    t.next_state = obs;
    t.done = true;
    t.mask_self = masks[s];
    t.log_prob_self = dec[s].log_prob;
    t.opp_state = obs;
    t.mask_opp = masks[o];
    t.id_opp = actors[o]->id;
    t.log_prob_opp = dec[o].log_prob;
    t.bucket = s;
    rec.transitions[s].push_back(std::move(t));
  }
  return rec;
}

EpisodeRecord play_duel(const EnvSpec& env, const std::array<const Actor*, 2>& actors,
                        Rng& rng, std::size_t buckets, bool record) {
  const DuelConfig cfg = env.duel_config(actors[0]->id, actors[1]->id);
  DuelState state = duel_reset(cfg, 0);
  EpisodeRecord rec;
  for (std::size_t s = 0; s < 2; ++s) rec.category_counts[s].assign(kActionCategoryCount, 0);
  const std::array<Seat, 2> seats{Seat::kI, Seat::kII};
  bool done = false;
  while (!done) {
    std::array<ActionMask, 2> masks;
    std::array<Observation, 2> obs;
    std::array<Decision, 2> dec{};
    for (std::size_t s = 0; s < 2; ++s) {
      masks[s] = action_mask(state, cfg, seats[s]);
      obs[s] = observe(state, cfg, seats[s]);
    }
    for (std::size_t s = 0; s < 2; ++s) dec[s] = act(*actors[s], obs[s], masks[s], rng);
    const std::size_t bucket = buckets > 0 ? mi_bucket(state, cfg, buckets) : 0;
    DuelStep step = duel_step(state, cfg, dec[0].action, dec[1].action);
    const std::array<double, 2> rew{step.reward_i, step.reward_ii};
    for (std::size_t s = 0; s < 2; ++s) {
      const auto cat = static_cast<std::uint8_t>(action_category(cfg, seats[s], dec[s].action));
      ++rec.category_counts[s][cat];
      rec.category_by_tick[s].push_back(cat);
      if (!record) continue;
      const std::size_t o = 1 - s;
      Transition t;
      t.state = obs[s];
      t.action_self = dec[s].action;
      t.action_opp = dec[o].action;
      t.reward = rew[s];
      t.next_state = observe(step.state, cfg, seats[s]);
      t.done = step.done;
      t.mask_self = masks[s];
      t.log_prob_self = dec[s].log_prob;
      t.opp_state = obs[o];
      t.mask_opp = masks[o];
      t.id_opp = actors[o]->id;
      t.log_prob_opp = dec[o].log_prob;
      t.bucket = bucket * 2 + s;
      rec.transitions[s].push_back(std::move(t));
    }
    state = std::move(step.state);
    done = step.done;
    ++rec.ticks;
  }
  rec.score_i = score_of(outcome(state, cfg));
  return rec;
}

}  // namespace

EpisodeRecord play_episode(const EnvSpec& env, const Actor& seat_i, const Actor& seat_ii,
                           Rng& rng, std::size_t state_buckets, bool record) {
  if (seat_i.params == nullptr || seat_ii.params == nullptr) {
    throw std::invalid_argument("actor without parameters");
  }
  const std::array<const Actor*, 2> actors{&seat_i, &seat_ii};
  if (env.kind == EnvKind::kMatrix) return play_matrix(env, actors, rng, record);
  return play_duel(env, actors, rng, state_buckets, record);
}

double match_score(const EnvSpec& env, const Actor& a, const Actor& b, std::size_t games,
                   std::uint64_t seed, std::size_t workers) {
  if (games == 0) throw std::invalid_argument("games must be at least 1");
  const auto scores = parallel_map(games, workers, [&](std::size_t g) {
    Rng rng(derive_seed(seed, 0, g));
    if (learner_seat(env, a.id, b.id, g) == Seat::kI) {
      return play_episode(env, a, b, rng, 0, false).score_i;
    }
    return 1.0 - play_episode(env, b, a, rng, 0, false).score_i;
  });
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(games);
}

}  // namespace cam
