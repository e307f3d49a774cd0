#include "cam/game_core.hpp"

#include <cmath>
#include <stdexcept>

namespace cam {

std::string to_string(SkillCategory c) {
  switch (c) {
    case SkillCategory::kForcingMove: return "forcingMove";
    case SkillCategory::kCounterMove: return "counterMove";
    case SkillCategory::kSubstitute: return "substitute";
  }
  return "unknown";
}

SkillCategory skill_category_from_string(const std::string& s) {
  if (s == "forcingMove") return SkillCategory::kForcingMove;
  if (s == "counterMove") return SkillCategory::kCounterMove;
  if (s == "substitute") return SkillCategory::kSubstitute;
  throw std::invalid_argument("unknown skill category '" + s + "'");
}

void SkillSpec::validate() const {
  if (cooldown < 0) throw std::invalid_argument("skill cooldown must be >= 0");
  if (damage < 0) throw std::invalid_argument("skill damage must be >= 0");
  if (range < 0) throw std::invalid_argument("skill range must be >= 0");
  if (mana_cost < 0) throw std::invalid_argument("skill mana_cost must be >= 0");
  if (effect_duration < 0) {
    throw std::invalid_argument("skill effect_duration must be >= 0");
  }
  if (category == SkillCategory::kSubstitute &&
      (damage != 0 || effect_duration < 1)) {
    throw std::invalid_argument(
        "substitute skills need damage = 0 and effect_duration >= 1");
  }
}

void CharacterSpec::validate() const {
  if (max_hp <= 0) throw std::invalid_argument(name + ": max_hp must be > 0");
  if (move_speed < 1) throw std::invalid_argument(name + ": move_speed must be >= 1");
  if (attack_range < 1) {
    throw std::invalid_argument(name + ": attack_range must be >= 1");
  }
  if (attack_damage < 0) {
    throw std::invalid_argument(name + ": attack_damage must be >= 0");
  }
  if (max_mana < 0) throw std::invalid_argument(name + ": max_mana must be >= 0");
  bool has[3] = {false, false, false};
  for (const auto& s : skills) {
    s.validate();
    has[static_cast<int>(s.category)] = true;
  }
  if (!has[0] || !has[1] || !has[2]) {
    throw std::invalid_argument(
        name + ": needs at least one forcingMove, counterMove and substitute");
  }
}

std::size_t TrajectoryBatch::episode_end(std::size_t k) const {
  return k + 1 < episode_starts.size() ? episode_starts[k + 1]
                                       : transitions.size();
}

void TrajectoryBatch::append(const TrajectoryBatch& other) {
  const std::size_t offset = transitions.size();
  for (std::size_t s : other.episode_starts) episode_starts.push_back(s + offset);
  transitions.insert(transitions.end(), other.transitions.begin(),
                     other.transitions.end());
}

void TrajectoryBatch::check_partition() const {
  if (transitions.empty()) {
    if (!episode_starts.empty()) throw std::logic_error("episodes in empty batch");
    return;
  }
  if (episode_starts.empty() || episode_starts.front() != 0) {
    throw std::logic_error("first episode must start at 0");
  }
  for (std::size_t k = 0; k < episode_starts.size(); ++k) {
    const std::size_t end = episode_end(k);
    if (end <= episode_starts[k] || end > transitions.size()) {
      throw std::logic_error("episode boundaries are not increasing");
    }
    if (!transitions[end - 1].done) {
      throw std::logic_error("episode does not end with done = true");
    }
  }
}

double zero_sum_reward(double payoff_self, double payoff_opp) {
  if (!std::isfinite(payoff_self) || !std::isfinite(payoff_opp)) {
    throw std::invalid_argument("zero_sum_reward: payoffs must be finite");
  }
  return payoff_self - payoff_opp;
}

namespace {
void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in [0, 1)");
  }
}
}  // namespace

double discounted_return(std::span<const double> rewards, double gamma) {
  check_gamma(gamma);
  // Horner form keeps the sum exact for gamma = 0.
  double g = 0.0;
  for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) {
    if (!std::isfinite(*it)) throw std::invalid_argument("non-finite reward");
    g = *it + gamma * g;
  }
  return g;
}

double n_step_return(std::span<const double> rewards, double gamma,
                     double bootstrap_value) {
  if (rewards.empty()) throw std::invalid_argument("n_step_return: no rewards");
  check_gamma(gamma);
  double g = bootstrap_value;
  for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) {
    if (!std::isfinite(*it)) throw std::invalid_argument("non-finite reward");
    g = *it + gamma * g;
  }
  return g;
}

}  // namespace cam
