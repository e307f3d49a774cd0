#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cam/env.hpp"
#include "cam/policy.hpp"

namespace cam::test {

inline PolicyArch tabular(std::size_t n_actions, std::size_t n_ids = 2, std::size_t n_states = 1) {
  PolicyArch a;
  a.kind = PolicyKind::kTabular;
  a.n_ids = n_ids;
  a.n_actions = n_actions;
  a.n_states = n_states;
  return a;
}

inline PolicyArch mlp(std::size_t n_actions, std::size_t obs_dim, std::size_t n_ids = 2,
                      std::size_t hidden = 8) {
  PolicyArch a;
  a.kind = PolicyKind::kMlp;
  a.n_ids = n_ids;
  a.n_actions = n_actions;
  a.obs_dim = obs_dim;
  a.hidden = hidden;
  return a;
}

inline PolicyParams random_params(const PolicyArch& arch, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  PolicyParams p = init_policy(arch, rng);
  for (double& v : p.flat) v = rng.uniform(-scale, scale);
  return p;
}

inline Observation random_obs(std::size_t dim, Rng& rng, std::size_t n_states = 1) {
  Observation o;
  for (std::size_t k = 0; k < dim; ++k) o.features.push_back(rng.uniform(-1.0, 1.0));
  o.state_index = n_states > 1 ? rng.below(n_states) : 0;
  return o;
}

inline ActionMask full_mask(std::size_t n) { return ActionMask(n, 1); }

inline EnvSpec duel_env() {
  EnvSpec env;
  env.kind = EnvKind::kDuel;
  return env;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace cam::test
