#include "cam/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace cam {

namespace {

double l2(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

void check_aligned(const AgentSamples& s) {
  if (s.batch == nullptr || s.values == nullptr) {
    throw std::invalid_argument("agent samples without batch or values");
  }
  const std::size_t n = s.batch->transitions.size();
  if (s.values->q.size() != n || s.values->v.size() != n || s.values->advantage.size() != n) {
    throw std::invalid_argument("value estimates are not aligned with the batch");
  }
}

bool opponent_is_live(const Transition& t) { return t.opponent == OpponentSource::kLive; }

// Adds scale * grad log p(a_self, a_opp) of the joint under the shared
// parameters. The opponent factor only depends on theta when it is live.
void accumulate_joint_score(const PolicyParams& params, const Transition& t, AgentId id,
                            double scale, std::span<double> out) {
  accumulate_grad_log_prob(params, t.state, id, t.mask_self, t.action_self, scale, out);
  if (opponent_is_live(t)) {
    accumulate_grad_log_prob(params, t.opp_state, t.id_opp, t.mask_opp, t.action_opp, scale,
                             out);
  }
}

double joint_log_prob_of(const PolicyParams& params, const Transition& t, AgentId id) {
  double lp = log_prob(params, t.state, id, t.mask_self, t.action_self);
  lp += opponent_is_live(t) ? log_prob(params, t.opp_state, t.id_opp, t.mask_opp, t.action_opp)
                            : t.log_prob_opp;
  return lp;
}

std::size_t non_empty_agents(std::span<const AgentSamples> samples) {
  std::size_t n = 0;
  for (const auto& s : samples) {
    check_aligned(s);
    if (!s.batch->empty()) ++n;
  }
  if (n == 0) throw std::invalid_argument("empty batch");
  return n;
}

// Empirical counts per bucket.
struct BucketCounts {
  std::size_t n = 0;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> joint;
  std::map<std::size_t, std::size_t> row;
  std::map<std::size_t, std::size_t> col;
};

std::map<std::size_t, BucketCounts> count_buckets(std::span<const JointActionSample> samples) {
  std::map<std::size_t, BucketCounts> buckets;
  for (const auto& s : samples) {
    BucketCounts& b = buckets[s.bucket];
    ++b.n;
    ++b.joint[{s.a_i, s.a_ii}];
    ++b.row[s.a_i];
    ++b.col[s.a_ii];
  }
  return buckets;
}

}  // namespace

std::string to_string(MiMode m) { return m == MiMode::kExact ? "exact" : "sampled"; }

MiMode mi_mode_from_string(const std::string& s) {
  if (s == "exact") return MiMode::kExact;
  if (s == "sampled") return MiMode::kSampled;
  throw std::invalid_argument("unknown mi mode '" + s + "'");
}

std::string to_string(UpdateMode m) {
  switch (m) {
    case UpdateMode::kPpo: return "ppo";
    case UpdateMode::kAugmented: return "augmented";
    case UpdateMode::kLiteral: return "literal";
  }
  return "ppo";
}

UpdateMode update_mode_from_string(const std::string& s) {
  if (s == "ppo") return UpdateMode::kPpo;
  if (s == "augmented") return UpdateMode::kAugmented;
  if (s == "literal") return UpdateMode::kLiteral;
  throw std::invalid_argument("unknown update mode '" + s + "'");
}

void ObjectiveConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (!(lambda_mi >= 0.0) || !std::isfinite(lambda_mi)) {
    throw std::invalid_argument("lambda_mi must be non-negative");
  }
  if (!(ppo_clip > 0.0) || !std::isfinite(ppo_clip)) {
    throw std::invalid_argument("ppo_clip must be positive");
  }
  if (n_step < 1) throw std::invalid_argument("n_step must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (state_buckets < 1) throw std::invalid_argument("state_buckets must be at least 1");
  if (ppo_epochs < 1) throw std::invalid_argument("ppo_epochs must be at least 1");
  if (!(max_grad_norm > 0.0)) throw std::invalid_argument("max_grad_norm must be positive");
  if (!(value_learning_rate >= 0.0) || !std::isfinite(value_learning_rate)) {
    throw std::invalid_argument("value_learning_rate must be non-negative");
  }
  if (!(anchor_kl >= 0.0) || !std::isfinite(anchor_kl)) {
    throw std::invalid_argument("anchor_kl must be non-negative");
  }
}

std::vector<PolicySample> flatten(std::span<const AgentSamples> samples) {
  std::vector<PolicySample> out;
  for (const auto& s : samples) {
    check_aligned(s);
    const auto& ts = s.batch->transitions;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      out.push_back({&ts[k], s.batch->agent, s.values->q[k], s.values->v[k],
                     s.values->advantage[k]});
    }
  }
  return out;
}

ValueEstimates compute_value_estimates(const TrajectoryBatch& batch, const ValueHead& head,
                                       const ObjectiveConfig& config) {
  const auto& ts = batch.transitions;
  ValueEstimates out;
  out.q.resize(ts.size());
  out.v.resize(ts.size());
  out.advantage.resize(ts.size());
  std::vector<double> v(ts.size());
  for (std::size_t t = 0; t < ts.size(); ++t) v[t] = value(head, ts[t].state, batch.agent);
  std::vector<double> rewards;
  for (std::size_t e = 0; e < batch.episode_count(); ++e) {
    const std::size_t begin = batch.episode_starts[e];
    const std::size_t end = batch.episode_end(e);
    for (std::size_t t = begin; t < end; ++t) {
      const std::size_t stop = std::min(end, t + config.n_step);
      rewards.clear();
      for (std::size_t k = t; k < stop; ++k) rewards.push_back(ts[k].reward);
      const double bootstrap = stop < end ? v[stop] : 0.0;
      out.q[t] = n_step_return(rewards, config.gamma, bootstrap);
    }
  }
  for (std::size_t t = 0; t < ts.size(); ++t) {
    out.v[t] = v[t];
    out.advantage[t] = out.q[t] - v[t];
    if (!std::isfinite(out.advantage[t])) throw std::runtime_error("non-finite advantage");
  }
  return out;
}

void normalize_advantages(std::vector<double>& advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= n;
  if (var < 1e-8) return;
  const double inv_sd = 1.0 / std::sqrt(var);
  for (double& a : advantages) a = (a - mean) * inv_sd;
}

double estimate_J(std::span<const AgentSamples> samples) {
  const std::size_t agents = non_empty_agents(samples);
  double total = 0.0;
  for (const auto& s : samples) {
    const auto& q = s.values->q;
    if (q.empty()) continue;
    total += std::accumulate(q.begin(), q.end(), 0.0) / static_cast<double>(q.size());
  }
  return total / static_cast<double>(agents);
}

GradEstimate policy_gradient(std::span<const AgentSamples> samples,
                             const PolicyParams& params) {
  const std::size_t agents = non_empty_agents(samples);
  GradEstimate out;
  out.grad.assign(params.size(), 0.0);
  for (const auto& s : samples) {
    const auto& ts = s.batch->transitions;
    if (ts.empty()) continue;
    const double w = 1.0 / (static_cast<double>(ts.size()) * static_cast<double>(agents));
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double a = s.values->advantage[k];
      if (a == 0.0) continue;
      accumulate_joint_score(params, ts[k], s.batch->agent, w * a, out.grad);
    }
    out.n_samples += ts.size();
  }
  out.reward_term_norm = l2(out.grad);
  return out;
}

std::vector<double> JointTable::row_marginal() const {
  std::vector<double> m(rows, 0.0);
  for (std::size_t a = 0; a < rows; ++a) {
    for (std::size_t b = 0; b < cols; ++b) m[a] += at(a, b);
  }
  return m;
}

std::vector<double> JointTable::col_marginal() const {
  std::vector<double> m(cols, 0.0);
  for (std::size_t a = 0; a < rows; ++a) {
    for (std::size_t b = 0; b < cols; ++b) m[b] += at(a, b);
  }
  return m;
}

double mutual_information(const JointTable& joint) {
  if (joint.rows == 0 || joint.cols == 0 || joint.p.size() != joint.rows * joint.cols) {
    throw std::invalid_argument("malformed joint table");
  }
  double sum = 0.0;
  for (double v : joint.p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("negative joint entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("joint table is not normalized");
  const auto pa = joint.row_marginal();
  const auto pb = joint.col_marginal();
  double mi = 0.0;
  for (std::size_t a = 0; a < joint.rows; ++a) {
    for (std::size_t b = 0; b < joint.cols; ++b) {
      const double p = joint.at(a, b);
      if (p > 0.0) mi += p * std::log(p / (pa[a] * pb[b]));
    }
  }
  return std::max(mi, 0.0);
}

double mutual_information_exact(const PolicyParams& params, const Observation& obs_i,
                                AgentId id_i, const ActionMask& mask_i,
                                const Observation& obs_ii, AgentId id_ii,
                                const ActionMask& mask_ii) {
  const auto di = forward(params, obs_i, id_i, mask_i);
  const auto dii = forward(params, obs_ii, id_ii, mask_ii);
  JointTable t{di.probs.size(), dii.probs.size(), {}};
  t.p.reserve(t.rows * t.cols);
  for (double x : di.probs) {
    for (double y : dii.probs) t.p.push_back(x * y);
  }
  // The outer product of two normalized vectors is normalized up to rounding.
  const double s = std::accumulate(t.p.begin(), t.p.end(), 0.0);
  for (double& v : t.p) v /= s;
  return mutual_information(t);
}

double mutual_information_sampled(std::span<const JointActionSample> samples) {
  if (samples.empty()) throw std::invalid_argument("no joint-action samples");
  const double total = static_cast<double>(samples.size());
  double mi = 0.0;
  for (const auto& [key, b] : count_buckets(samples)) {
    const double n = static_cast<double>(b.n);
    double mk = 0.0;
    for (const auto& [ab, c] : b.joint) {
      const double cab = static_cast<double>(c);
      mk += cab / n *
            std::log(cab * n /
                     (static_cast<double>(b.row.at(ab.first)) *
                      static_cast<double>(b.col.at(ab.second))));
    }
    mi += n / total * mk;
  }
  return std::max(mi, 0.0);
}

std::vector<double> plug_in_log_ratios(std::span<const JointActionSample> samples) {
  const auto buckets = count_buckets(samples);
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const BucketCounts& b = buckets.at(s.bucket);
    const double cab = static_cast<double>(b.joint.at({s.a_i, s.a_ii}));
    out.push_back(std::log(cab * static_cast<double>(b.n) /
                           (static_cast<double>(b.row.at(s.a_i)) *
                            static_cast<double>(b.col.at(s.a_ii)))));
  }
  return out;
}

std::vector<JointActionSample> joint_action_samples(const TrajectoryBatch& batch,
                                                    std::size_t n_ids) {
  std::vector<JointActionSample> out;
  out.reserve(batch.transitions.size());
  for (const auto& t : batch.transitions) {
    out.push_back({t.action_self, t.action_opp, t.bucket * n_ids + t.id_opp.index});
  }
  return out;
}

GradEstimate mi_gradient_sampled(std::span<const AgentSamples> samples,
                                 const PolicyParams& params) {
  const std::size_t agents = non_empty_agents(samples);
  GradEstimate out;
  out.grad.assign(params.size(), 0.0);
  for (const auto& s : samples) {
    const auto& ts = s.batch->transitions;
    if (ts.empty()) continue;
    const auto joint = joint_action_samples(*s.batch, params.arch.n_ids);
    const auto ratios = plug_in_log_ratios(joint);
    const double w = 1.0 / (static_cast<double>(ts.size()) * static_cast<double>(agents));
    for (std::size_t k = 0; k < ts.size(); ++k) {
      if (ratios[k] == 0.0) continue;
      accumulate_joint_score(params, ts[k], s.batch->agent, w * ratios[k], out.grad);
    }
    out.n_samples += ts.size();
  }
  out.mi_term_norm = l2(out.grad);
  return out;
}

GradEstimate augmented_gradient(std::span<const AgentSamples> samples,
                                const PolicyParams& params, const ObjectiveConfig& config) {
  config.validate();
  GradEstimate out = policy_gradient(samples, params);
  if (config.lambda_mi == 0.0) return out;
  const GradEstimate mi = mi_gradient_sampled(samples, params);
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += config.lambda_mi * mi.grad[i];
  out.mi_term_norm = config.lambda_mi * mi.mi_term_norm;
  return out;
}

double mia_loss(std::span<const AgentSamples> samples, const PolicyParams& params) {
  const std::size_t agents = non_empty_agents(samples);
  double total = 0.0;
  for (const auto& s : samples) {
    const auto& ts = s.batch->transitions;
    if (ts.empty()) continue;
    double sum = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double lp = joint_log_prob_of(params, ts[k], s.batch->agent);
      const double p = std::exp(lp);
      // Q p log p_joint - V p (log Pi_self + log Pi_opp); the two logs agree
      // under factorization.
      sum += s.values->q[k] * p * lp - s.values->v[k] * p * lp;
    }
    total += sum / static_cast<double>(ts.size());
  }
  return total / static_cast<double>(agents);
}

std::vector<double> mia_loss_gradient(std::span<const AgentSamples> samples,
                                      const PolicyParams& params) {
  const std::size_t agents = non_empty_agents(samples);
  std::vector<double> grad(params.size(), 0.0);
  for (const auto& s : samples) {
    const auto& ts = s.batch->transitions;
    if (ts.empty()) continue;
    const double w = 1.0 / (static_cast<double>(ts.size()) * static_cast<double>(agents));
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double lp = joint_log_prob_of(params, ts[k], s.batch->agent);
      const double p = std::exp(lp);
      const double c = (s.values->q[k] - s.values->v[k]) * p * (lp + 1.0);
      if (c == 0.0) continue;
      accumulate_joint_score(params, ts[k], s.batch->agent, w * c, grad);
    }
  }
  return grad;
}

namespace {

void check_cam_inputs(std::span<const AgentSamples> samples,
                      std::span<const PolicyParams* const> specialists) {
  if (samples.size() != specialists.size() || samples.empty()) {
    throw std::invalid_argument("one batch per specialist required");
  }
  for (const auto& s : samples) {
    check_aligned(s);
    for (const auto& t : s.batch->transitions) {
      if (t.opponent != OpponentSource::kFrozenMia) {
        throw std::invalid_argument("batch was not collected against the frozen stage-1 policy");
      }
    }
  }
}

}  // namespace

double cam_loss(std::span<const AgentSamples> samples,
                std::span<const PolicyParams* const> specialists) {
  check_cam_inputs(samples, specialists);
  double total = 0.0;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const auto& ts = samples[n].batch->transitions;
    if (ts.empty()) continue;
    const AgentId id = samples[n].batch->agent;
    double sum = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double lp = log_prob(*specialists[n], ts[k].state, id, ts[k].mask_self,
                                 ts[k].action_self);
      sum += std::exp(lp) * samples[n].values->advantage[k] * lp;
    }
    total += sum / static_cast<double>(ts.size());
  }
  return total / static_cast<double>(samples.size());
}

std::vector<double> cam_loss_gradient(std::span<const AgentSamples> samples,
                                      std::span<const PolicyParams* const> specialists,
                                      std::size_t n) {
  check_cam_inputs(samples, specialists);
  if (n >= samples.size()) throw std::out_of_range("specialist index out of range");
  const PolicyParams& params = *specialists[n];
  std::vector<double> grad(params.size(), 0.0);
  const auto& ts = samples[n].batch->transitions;
  if (ts.empty()) return grad;
  const AgentId id = samples[n].batch->agent;
  const double w = 1.0 / (static_cast<double>(ts.size()) * static_cast<double>(samples.size()));
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double lp = log_prob(params, ts[k].state, id, ts[k].mask_self, ts[k].action_self);
    const double c = samples[n].values->advantage[k] * std::exp(lp) * (lp + 1.0);
    if (c == 0.0) continue;
    accumulate_grad_log_prob(params, ts[k].state, id, ts[k].mask_self, ts[k].action_self,
                             w * c, grad);
  }
  return grad;
}

double ppo_objective_from_logprobs(std::span<const double> new_log_probs,
                                   std::span<const double> old_log_probs,
                                   std::span<const double> advantages, double clip) {
  if (new_log_probs.size() != old_log_probs.size() ||
      new_log_probs.size() != advantages.size()) {
    throw std::invalid_argument("surrogate inputs are not aligned");
  }
  if (new_log_probs.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < advantages.size(); ++k) {
    const double rho = std::exp(new_log_probs[k] - old_log_probs[k]);
    const double a = advantages[k];
    sum -= std::min(rho * a, std::clamp(rho, 1.0 - clip, 1.0 + clip) * a);
  }
  return sum / static_cast<double>(advantages.size());
}

PpoResult ppo_surrogate(std::span<const PolicySample> samples, const PolicyParams& params_new,
                        double clip) {
  PpoResult out;
  out.loss_grad.assign(params_new.size(), 0.0);
  if (samples.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  std::size_t clipped = 0;
  for (const auto& s : samples) {
    const Transition& t = *s.transition;
    const double lp = log_prob(params_new, t.state, s.id, t.mask_self, t.action_self);
    const double rho = std::exp(lp - t.log_prob_self);
    const double a = s.advantage;
    const double rho_c = std::clamp(rho, 1.0 - clip, 1.0 + clip);
    const double unclipped = rho * a;
    const double clipped_term = rho_c * a;
    out.loss -= std::min(unclipped, clipped_term) * inv_n;
    const bool inside = rho > 1.0 - clip && rho < 1.0 + clip;
    if (!inside) ++clipped;
    const bool active = unclipped <= clipped_term || inside;
    if (active && a != 0.0) {
      accumulate_grad_log_prob(params_new, t.state, s.id, t.mask_self, t.action_self,
                               -a * rho * inv_n, out.loss_grad);
    }
  }
  out.clip_fraction = static_cast<double>(clipped) * inv_n;
  return out;
}

PpoResult ppo_surrogate(const TrajectoryBatch& batch, const ValueEstimates& values,
                        const PolicyParams& params_old, const PolicyParams& params_new,
                        const ObjectiveConfig& config) {
  if (!(params_old.arch == params_new.arch)) {
    throw std::invalid_argument("old and new parameters differ in architecture");
  }
  const AgentSamples agent{&batch, &values};
  const auto samples = flatten(std::span(&agent, 1));
  std::vector<Transition> rescored;
  rescored.reserve(samples.size());
  for (const auto& s : samples) {
    Transition t = *s.transition;
    t.log_prob_self = log_prob(params_old, t.state, s.id, t.mask_self, t.action_self);
    rescored.push_back(std::move(t));
  }
  std::vector<PolicySample> view = samples;
  for (std::size_t k = 0; k < view.size(); ++k) view[k].transition = &rescored[k];
  return ppo_surrogate(view, params_new, config.ppo_clip);
}

KlResult kl_to_anchor(std::span<const PolicySample> samples, const PolicyParams& params,
                      const PolicyParams& anchor) {
  KlResult out;
  out.grad.assign(params.size(), 0.0);
  if (samples.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  std::vector<double> dlogits;
  for (const auto& s : samples) {
    const Transition& t = *s.transition;
    const auto p = forward(params, t.state, s.id, t.mask_self);
    const auto q = forward(anchor, t.state, s.id, t.mask_self);
    double kl = 0.0;
    for (std::size_t a = 0; a < p.probs.size(); ++a) {
      if (p.probs[a] > 0.0) kl += p.probs[a] * (p.log_probs[a] - q.log_probs[a]);
    }
    out.value += kl * inv_n;
    dlogits.assign(p.probs.size(), 0.0);
    for (std::size_t a = 0; a < p.probs.size(); ++a) {
      if (p.probs[a] > 0.0) dlogits[a] = p.probs[a] * (p.log_probs[a] - q.log_probs[a] - kl);
    }
    accumulate_logit_backward(params, t.state, s.id, t.mask_self, dlogits, inv_n, out.grad);
  }
  return out;
}

PolicyParams sgd_step(const PolicyParams& params, std::span<const double> grad,
                      double learning_rate) {
  if (grad.size() != params.size()) throw std::invalid_argument("gradient size mismatch");
  for (double g : grad) {
    if (!std::isfinite(g)) throw std::invalid_argument("non-finite gradient");
  }
  PolicyParams out = params;
  for (std::size_t i = 0; i < grad.size(); ++i) out.flat[i] += learning_rate * grad[i];
  return out;
}

}  // namespace cam
