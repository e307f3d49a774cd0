#include "cam/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cam {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct MlpLayout {
  std::size_t in, hidden, out;
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return hidden * in; }
  std::size_t w2() const { return b1() + hidden; }
  std::size_t b2() const { return w2() + out * hidden; }
  std::size_t total() const { return b2() + out; }
};

MlpLayout policy_layout(const PolicyArch& a) { return {a.input_dim(), a.hidden, a.n_actions}; }
MlpLayout value_layout(const PolicyArch& a) { return {a.input_dim(), a.hidden, 1}; }

void check_id(const PolicyArch& arch, AgentId id) {
  if (id.index >= arch.n_ids) throw std::out_of_range("agent id outside population");
}

std::size_t tabular_row(const PolicyArch& arch, const Observation& obs, AgentId id) {
  if (obs.state_index >= arch.n_states) throw std::out_of_range("state index out of range");
  return (obs.state_index * arch.n_ids + id.index) * arch.n_actions;
}

void build_input(const PolicyArch& arch, const Observation& obs, AgentId id,
                 std::vector<double>& x) {
  if (obs.features.size() != arch.obs_dim) {
    throw std::invalid_argument("observation size does not match architecture");
  }
  x.assign(arch.input_dim(), 0.0);
  std::copy(obs.features.begin(), obs.features.end(), x.begin());
  x[arch.obs_dim + id.index] = 1.0;
}

// h = tanh(W1 x + b1).
void hidden_layer(const std::vector<double>& w, const MlpLayout& l,
                  const std::vector<double>& x, std::vector<double>& h) {
  h.resize(l.hidden);
  for (std::size_t j = 0; j < l.hidden; ++j) {
    const double* row = &w[l.w1() + j * l.in];
    double z = w[l.b1() + j];
    for (std::size_t i = 0; i < l.in; ++i) z += row[i] * x[i];
    h[j] = std::tanh(z);
  }
}

void mlp_logits(const PolicyParams& p, const std::vector<double>& h,
                std::vector<double>& logits) {
  const MlpLayout l = policy_layout(p.arch);
  logits.resize(l.out);
  for (std::size_t a = 0; a < l.out; ++a) {
    const double* row = &p.flat[l.w2() + a * l.hidden];
    double z = p.flat[l.b2() + a];
    for (std::size_t j = 0; j < l.hidden; ++j) z += row[j] * h[j];
    logits[a] = z;
  }
}

ActionDistribution masked_softmax(std::span<const double> logits, const ActionMask& mask) {
  if (mask.size() != logits.size()) throw std::invalid_argument("mask size mismatch");
  double mx = kNegInf;
  for (std::size_t a = 0; a < logits.size(); ++a) {
    if (mask[a]) mx = std::max(mx, logits[a]);
  }
  if (mx == kNegInf) throw std::invalid_argument("every action is masked");
  double sum = 0.0;
  for (std::size_t a = 0; a < logits.size(); ++a) {
    if (mask[a]) sum += std::exp(logits[a] - mx);
  }
  const double log_z = mx + std::log(sum);
  ActionDistribution d;
  d.probs.assign(logits.size(), 0.0);
  d.log_probs.assign(logits.size(), kNegInf);
  for (std::size_t a = 0; a < logits.size(); ++a) {
    if (!mask[a]) continue;
    d.log_probs[a] = logits[a] - log_z;
    d.probs[a] = std::exp(d.log_probs[a]);
  }
  return d;
}

}  // namespace

std::string to_string(PolicyKind k) { return k == PolicyKind::kTabular ? "tabular" : "mlp"; }

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "tabular" || s == "tabular_softmax") return PolicyKind::kTabular;
  if (s == "mlp") return PolicyKind::kMlp;
  throw std::invalid_argument("unknown policy kind '" + s + "'");
}

std::size_t PolicyArch::policy_param_count() const {
  if (kind == PolicyKind::kTabular) return n_states * n_ids * n_actions;
  return policy_layout(*this).total();
}

std::size_t PolicyArch::value_param_count() const {
  if (kind == PolicyKind::kTabular) return n_states * n_ids;
  return value_layout(*this).total();
}

void PolicyParams::validate() const {
  if (arch.n_ids == 0 || arch.n_actions == 0) throw std::invalid_argument("empty architecture");
  if (flat.size() != arch.policy_param_count()) {
    throw std::invalid_argument("parameter count does not match architecture");
  }
  for (double v : flat) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite policy parameter");
  }
}

PolicyParams init_policy(const PolicyArch& arch, Rng& rng, double init_scale) {
  PolicyParams p{arch, std::vector<double>(arch.policy_param_count(), 0.0)};
  if (arch.kind == PolicyKind::kMlp) {
    for (double& v : p.flat) v = rng.uniform(-init_scale, init_scale);
  }
  return p;
}

ValueHead init_value_head(const PolicyArch& arch, Rng& rng, double init_scale) {
  ValueHead v{arch, std::vector<double>(arch.value_param_count(), 0.0)};
  if (arch.kind == PolicyKind::kMlp) {
    const MlpLayout l = value_layout(arch);
    // Readout starts at zero so a fresh head predicts exactly 0.
    for (std::size_t i = 0; i < l.w2(); ++i) v.flat[i] = rng.uniform(-init_scale, init_scale);
  }
  return v;
}

ActionDistribution forward(const PolicyParams& params, const Observation& obs,
                           AgentId id, const ActionMask& mask) {
  const PolicyArch& arch = params.arch;
  check_id(arch, id);
  if (arch.kind == PolicyKind::kTabular) {
    const std::size_t row = tabular_row(arch, obs, id);
    return masked_softmax(std::span(params.flat).subspan(row, arch.n_actions), mask);
  }
  std::vector<double> x, h, logits;
  build_input(arch, obs, id, x);
  hidden_layer(params.flat, policy_layout(arch), x, h);
  mlp_logits(params, h, logits);
  return masked_softmax(logits, mask);
}

std::size_t sample(const ActionDistribution& dist, Rng& rng) {
  const double u = rng.uniform();
  double c = 0.0;
  std::size_t last = 0;
  for (std::size_t a = 0; a < dist.probs.size(); ++a) {
    if (dist.probs[a] <= 0.0) continue;
    c += dist.probs[a];
    last = a;
    if (u < c) return a;
  }
  return last;  // rounding left u above the final cumulative sum
}

double log_prob(const PolicyParams& params, const Observation& obs, AgentId id,
                const ActionMask& mask, std::size_t action) {
  if (action >= mask.size() || !mask[action]) {
    throw std::invalid_argument("log_prob of a masked action");
  }
  return forward(params, obs, id, mask).log_probs[action];
}

double joint_log_prob(const PolicyParams& params, const Observation& obs_i, AgentId id_i,
                      std::size_t a_i, const ActionMask& mask_i,
                      const Observation& obs_ii, AgentId id_ii, std::size_t a_ii,
                      const ActionMask& mask_ii) {
  return log_prob(params, obs_i, id_i, mask_i, a_i) +
         log_prob(params, obs_ii, id_ii, mask_ii, a_ii);
}

void accumulate_logit_backward(const PolicyParams& params, const Observation& obs,
                               AgentId id, const ActionMask& mask,
                               std::span<const double> dlogits, double scale,
                               std::span<double> out) {
  const PolicyArch& arch = params.arch;
  check_id(arch, id);
  if (out.size() != params.flat.size()) throw std::invalid_argument("gradient size mismatch");
  if (dlogits.size() != arch.n_actions) throw std::invalid_argument("dlogits size mismatch");
  if (arch.kind == PolicyKind::kTabular) {
    const std::size_t row = tabular_row(arch, obs, id);
    for (std::size_t a = 0; a < arch.n_actions; ++a) {
      if (mask[a]) out[row + a] += scale * dlogits[a];
    }
    return;
  }
  const MlpLayout l = policy_layout(arch);
  std::vector<double> x, h;
  build_input(arch, obs, id, x);
  hidden_layer(params.flat, l, x, h);
  std::vector<double> dh(l.hidden, 0.0);
  for (std::size_t a = 0; a < l.out; ++a) {
    if (!mask[a]) continue;
    const double g = scale * dlogits[a];
    if (g == 0.0) continue;
    const std::size_t row = l.w2() + a * l.hidden;
    for (std::size_t j = 0; j < l.hidden; ++j) {
      out[row + j] += g * h[j];
      dh[j] += g * params.flat[row + j];
    }
    out[l.b2() + a] += g;
  }
  for (std::size_t j = 0; j < l.hidden; ++j) {
    const double dz = dh[j] * (1.0 - h[j] * h[j]);
    if (dz == 0.0) continue;
    const std::size_t row = l.w1() + j * l.in;
    for (std::size_t i = 0; i < l.in; ++i) out[row + i] += dz * x[i];
    out[l.b1() + j] += dz;
  }
}

void accumulate_grad_log_prob(const PolicyParams& params, const Observation& obs,
                              AgentId id, const ActionMask& mask, std::size_t action,
                              double scale, std::span<double> out) {
  if (action >= mask.size() || !mask[action]) {
    throw std::invalid_argument("grad_log_prob of a masked action");
  }
  const ActionDistribution d = forward(params, obs, id, mask);
  std::vector<double> dlogits(d.probs.size());
  for (std::size_t a = 0; a < dlogits.size(); ++a) {
    dlogits[a] = (a == action ? 1.0 : 0.0) - d.probs[a];
  }
  accumulate_logit_backward(params, obs, id, mask, dlogits, scale, out);
}

std::vector<double> grad_log_prob(const PolicyParams& params, const Observation& obs,
                                  AgentId id, const ActionMask& mask, std::size_t action) {
  std::vector<double> g(params.flat.size(), 0.0);
  accumulate_grad_log_prob(params, obs, id, mask, action, 1.0, g);
  return g;
}

double value(const ValueHead& head, const Observation& obs, AgentId id) {
  const PolicyArch& arch = head.arch;
  check_id(arch, id);
  if (arch.kind == PolicyKind::kTabular) {
    if (obs.state_index >= arch.n_states) throw std::out_of_range("state index out of range");
    return head.flat[obs.state_index * arch.n_ids + id.index];
  }
  const MlpLayout l = value_layout(arch);
  std::vector<double> x, h;
  build_input(arch, obs, id, x);
  hidden_layer(head.flat, l, x, h);
  double v = head.flat[l.b2()];
  for (std::size_t j = 0; j < l.hidden; ++j) v += head.flat[l.w2() + j] * h[j];
  return v;
}

void accumulate_value_grad(const ValueHead& head, const Observation& obs, AgentId id,
                           double scale, std::span<double> out) {
  const PolicyArch& arch = head.arch;
  check_id(arch, id);
  if (arch.kind == PolicyKind::kTabular) {
    out[obs.state_index * arch.n_ids + id.index] += scale;
    return;
  }
  const MlpLayout l = value_layout(arch);
  std::vector<double> x, h;
  build_input(arch, obs, id, x);
  hidden_layer(head.flat, l, x, h);
  for (std::size_t j = 0; j < l.hidden; ++j) {
    out[l.w2() + j] += scale * h[j];
    const double dz = scale * head.flat[l.w2() + j] * (1.0 - h[j] * h[j]);
    const std::size_t row = l.w1() + j * l.in;
    for (std::size_t i = 0; i < l.in; ++i) out[row + i] += dz * x[i];
    out[l.b1() + j] += dz;
  }
  out[l.b2()] += scale;
}

double value_regression_step(ValueHead& head, std::span<const Observation> obs,
                             std::span<const AgentId> ids,
                             std::span<const double> targets, double learning_rate) {
  if (obs.size() != ids.size() || obs.size() != targets.size()) {
    throw std::invalid_argument("value regression inputs are not aligned");
  }
  if (obs.empty()) return 0.0;
  std::vector<double> grad(head.flat.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(obs.size());
  double loss = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const double err = value(head, obs[k], ids[k]) - targets[k];
    loss += 0.5 * err * err * inv_n;
    accumulate_value_grad(head, obs[k], ids[k], err * inv_n, grad);
  }
  for (std::size_t i = 0; i < grad.size(); ++i) head.flat[i] -= learning_rate * grad[i];
  return loss;
}

PolicyParams clone_for_specialist(const PolicyParams& params, AgentId id) {
  check_id(params.arch, id);
  return params;
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
  const double norm = std::sqrt(std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
  return norm;
}

}  // namespace cam
