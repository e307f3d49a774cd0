#pragma once

// Sample-based objectives and gradient estimators over collected batches:
// the expected-return estimate, the factorized joint policy gradient, plug-in
// mutual information and its score-function gradient, the augmented
// objective, the stage-1 and stage-2 literal objectives, and the clipped
// surrogate that drives the actual updates.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cam/game_core.hpp"
#include "cam/policy.hpp"

namespace cam {

enum class MiMode : std::uint8_t { kExact, kSampled };

// Which rule moves the parameters. kPpo is the default in both stages; the
// others ascend the literal objectives.
enum class UpdateMode : std::uint8_t { kPpo, kAugmented, kLiteral };

std::string to_string(MiMode m);
MiMode mi_mode_from_string(const std::string& s);
std::string to_string(UpdateMode m);
UpdateMode update_mode_from_string(const std::string& s);

struct ObjectiveConfig {
  double gamma = 0.995;
  double lambda_mi = 0.1;
  double ppo_clip = 0.1;
  std::size_t n_step = 100;
  double learning_rate = 1e-4;
  MiMode mi_mode = MiMode::kSampled;
  std::size_t state_buckets = 64;

  std::size_t ppo_epochs = 4;
  std::size_t minibatch_size = 0;  // 0: full batch
  double max_grad_norm = 10.0;
  double value_learning_rate = 1e-4;
  std::size_t value_epochs = 4;
  bool normalize_advantages = true;
  // Weight of KL(Pi || Pi_anchor) toward the previous generation in stage 1.
  double anchor_kl = 0.0;
  UpdateMode update_mode = UpdateMode::kPpo;

  void validate() const;

  friend bool operator==(const ObjectiveConfig&, const ObjectiveConfig&) = default;
};

// Q targets (n-step returns), baselines and advantages for one batch.
struct ValueEstimates {
  std::vector<double> q;
  std::vector<double> v;
  std::vector<double> advantage;
};

struct GradEstimate {
  std::vector<double> grad;
  std::size_t n_samples = 0;
  double reward_term_norm = 0.0;
  double mi_term_norm = 0.0;
};

// One agent's batch paired with its value estimates.
struct AgentSamples {
  const TrajectoryBatch* batch = nullptr;
  const ValueEstimates* values = nullptr;
};

// Flattened view used by the update rules.
struct PolicySample {
  const Transition* transition = nullptr;
  AgentId id;
  double q = 0.0;
  double v = 0.0;
  double advantage = 0.0;
};

std::vector<PolicySample> flatten(std::span<const AgentSamples> samples);

ValueEstimates compute_value_estimates(const TrajectoryBatch& batch, const ValueHead& head,
                                       const ObjectiveConfig& config);

// Zero mean, unit variance in place; untouched when the variance is below
// 1e-8.
void normalize_advantages(std::vector<double>& advantages);

// Mean over agents of the mean Q of their samples.
double estimate_J(std::span<const AgentSamples> samples);

// Mean over agents of E[A (grad log Pi(a_self) + grad log Pi(a_opp))]. The
// opponent term only contributes when the opponent acted with the live
// parameters.
GradEstimate policy_gradient(std::span<const AgentSamples> samples,
                             const PolicyParams& params);

// Joint distribution over (a_i, a_ii), row-major.
struct JointTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> p;

  double at(std::size_t a, std::size_t b) const { return p[a * cols + b]; }
  std::vector<double> row_marginal() const;
  std::vector<double> col_marginal() const;
};

// I(a_i; a_ii) in nats by exact summation. Throws unless the table is a
// distribution within 1e-9.
double mutual_information(const JointTable& joint);

// I(a_i; a_ii | s) of the factorized joint Pi(.|s_i,id_i) x Pi(.|s_ii,id_ii).
double mutual_information_exact(const PolicyParams& params, const Observation& obs_i,
                                AgentId id_i, const ActionMask& mask_i,
                                const Observation& obs_ii, AgentId id_ii,
                                const ActionMask& mask_ii);

struct JointActionSample {
  std::size_t a_i = 0;
  std::size_t a_ii = 0;
  std::size_t bucket = 0;
};

// Plug-in estimate: per-bucket empirical MI weighted by bucket visitation.
double mutual_information_sampled(std::span<const JointActionSample> samples);

// Per-sample plug-in log ratio log p(a,b|k) - log p(a|k) - log p(b|k).
std::vector<double> plug_in_log_ratios(std::span<const JointActionSample> samples);

// Joint-action samples of a batch, bucketed by (state bucket, opponent id).
std::vector<JointActionSample> joint_action_samples(const TrajectoryBatch& batch,
                                                    std::size_t n_ids);

// Score-function estimate of grad I using plug-in tables.
GradEstimate mi_gradient_sampled(std::span<const AgentSamples> samples,
                                 const PolicyParams& params);

// policy_gradient + lambda_mi * mi_gradient_sampled.
GradEstimate augmented_gradient(std::span<const AgentSamples> samples,
                                const PolicyParams& params, const ObjectiveConfig& config);

// Literal stage-1 objective: mean over samples of
// Q p log p - V p (log Pi_self + log Pi_opp), with p the joint probability
// of the sampled action pair.
double mia_loss(std::span<const AgentSamples> samples, const PolicyParams& params);
std::vector<double> mia_loss_gradient(std::span<const AgentSamples> samples,
                                      const PolicyParams& params);

// Literal stage-2 objective: (1/N) sum over agents of the sample mean of
// pi (Q - V) log pi. samples[n] must have been collected by specialist n
// against the frozen stage-1 policy.
double cam_loss(std::span<const AgentSamples> samples,
                std::span<const PolicyParams* const> specialists);
// Gradient of cam_loss with respect to specialist n's parameters.
std::vector<double> cam_loss_gradient(std::span<const AgentSamples> samples,
                                      std::span<const PolicyParams* const> specialists,
                                      std::size_t n);

// Mean of -min(rho A, clip(rho, 1 - eps, 1 + eps) A) over samples.
double ppo_objective_from_logprobs(std::span<const double> new_log_probs,
                                   std::span<const double> old_log_probs,
                                   std::span<const double> advantages, double clip);

struct PpoResult {
  double loss = 0.0;
  std::vector<double> loss_grad;  // gradient of `loss` (descent direction is -loss_grad)
  double clip_fraction = 0.0;
};

// Old log-probabilities come from the batch (recorded under params_old).
PpoResult ppo_surrogate(std::span<const PolicySample> samples, const PolicyParams& params_new,
                        double clip);
PpoResult ppo_surrogate(const TrajectoryBatch& batch, const ValueEstimates& values,
                        const PolicyParams& params_old, const PolicyParams& params_new,
                        const ObjectiveConfig& config);

struct KlResult {
  double value = 0.0;
  std::vector<double> grad;
};

// Mean over sample states of KL(Pi(.|s,id) || Pi_anchor(.|s,id)).
KlResult kl_to_anchor(std::span<const PolicySample> samples, const PolicyParams& params,
                      const PolicyParams& anchor);

// params + learning_rate * grad (ascent).
PolicyParams sgd_step(const PolicyParams& params, std::span<const double> grad,
                      double learning_rate);

}  // namespace cam
