#pragma once

// Conditional population policy Pi(a | s, id) and its value baseline V(s, id).
//
// Two parameterizations share one flat parameter vector layout:
//   tabular: logits[state][id][action], one independent row per (state, id);
//   mlp:     x = [features, onehot(id)], h = tanh(W1 x + b1),
//            logits = W2 h + b2, stored as W1 | b1 | W2 | b2 (row-major).
// Masked actions get a -inf logit, so their probability and their gradient
// are exactly zero.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cam/game_core.hpp"
#include "cam/rng.hpp"

namespace cam {

enum class PolicyKind : std::uint8_t { kTabular, kMlp };

std::string to_string(PolicyKind k);
PolicyKind policy_kind_from_string(const std::string& s);

struct PolicyArch {
  PolicyKind kind = PolicyKind::kTabular;
  std::size_t n_ids = 2;
  std::size_t n_actions = 2;
  std::size_t n_states = 1;   // tabular only
  std::size_t obs_dim = 0;    // mlp only
  std::size_t hidden = 32;    // mlp only

  std::size_t input_dim() const { return obs_dim + n_ids; }
  // Parameters of the policy network for this architecture.
  std::size_t policy_param_count() const;
  // Parameters of the value baseline for this architecture.
  std::size_t value_param_count() const;

  friend bool operator==(const PolicyArch&, const PolicyArch&) = default;
};

struct PolicyParams {
  PolicyArch arch;
  std::vector<double> flat;

  std::size_t size() const { return flat.size(); }
  void validate() const;

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

// V(s, id): a table in the tabular case, an independent tanh layer with a
// scalar readout in the mlp case.
struct ValueHead {
  PolicyArch arch;
  std::vector<double> flat;

  friend bool operator==(const ValueHead&, const ValueHead&) = default;
};

struct ActionDistribution {
  std::vector<double> probs;
  std::vector<double> log_probs;  // -inf on masked actions
};

// Zero logits for tabular, U(-init_scale, init_scale) weights for mlp.
PolicyParams init_policy(const PolicyArch& arch, Rng& rng, double init_scale = 0.05);
ValueHead init_value_head(const PolicyArch& arch, Rng& rng, double init_scale = 0.05);

ActionDistribution forward(const PolicyParams& params, const Observation& obs,
                           AgentId id, const ActionMask& mask);

std::size_t sample(const ActionDistribution& dist, Rng& rng);

double log_prob(const PolicyParams& params, const Observation& obs, AgentId id,
                const ActionMask& mask, std::size_t action);

// log Pi(a_i | s_i, id_i) + log Pi(a_ii | s_ii, id_ii).
double joint_log_prob(const PolicyParams& params, const Observation& obs_i, AgentId id_i,
                      std::size_t a_i, const ActionMask& mask_i,
                      const Observation& obs_ii, AgentId id_ii, std::size_t a_ii,
                      const ActionMask& mask_ii);

// out += scale * J^T dlogits, i.e. backpropagates a gradient on the logits of
// (obs, id) into parameter space. Entries of dlogits on masked actions are
// ignored.
void accumulate_logit_backward(const PolicyParams& params, const Observation& obs,
                               AgentId id, const ActionMask& mask,
                               std::span<const double> dlogits, double scale,
                               std::span<double> out);

// out += scale * grad_theta log Pi(action | obs, id).
void accumulate_grad_log_prob(const PolicyParams& params, const Observation& obs,
                              AgentId id, const ActionMask& mask, std::size_t action,
                              double scale, std::span<double> out);

std::vector<double> grad_log_prob(const PolicyParams& params, const Observation& obs,
                                  AgentId id, const ActionMask& mask, std::size_t action);

double value(const ValueHead& head, const Observation& obs, AgentId id);

// out += scale * grad V(obs, id).
void accumulate_value_grad(const ValueHead& head, const Observation& obs, AgentId id,
                           double scale, std::span<double> out);

// One gradient step of 0.5 * mean (V - target)^2. Returns the loss before
// the step.
double value_regression_step(ValueHead& head, std::span<const Observation> obs,
                             std::span<const AgentId> ids,
                             std::span<const double> targets, double learning_rate);

// Independent copy of the shared parameters for agent `id`. The copy keeps
// the full conditional layout, so forward(copy, s, id) reproduces the source
// bit-for-bit until the copy is updated.
PolicyParams clone_for_specialist(const PolicyParams& params, AgentId id);

// Rescales `grad` in place so its Euclidean norm is at most `max_norm`;
// returns the norm before clipping.
double clip_grad_norm(std::span<double> grad, double max_norm);

}  // namespace cam
