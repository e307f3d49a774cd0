#include "cam/exact.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cam {

namespace {

ActionMask prefix_mask(std::size_t available, std::size_t n_actions) {
  if (available > n_actions) throw std::invalid_argument("problem has more actions than policy");
  ActionMask m(n_actions, 0);
  for (std::size_t a = 0; a < available; ++a) m[a] = 1;
  return m;
}

// Per-action scores for both seats and the joint table they induce.
struct Enumerated {
  JointTable joint;
  std::vector<std::vector<double>> score_i;
  std::vector<std::vector<double>> score_ii;
};

JointTable build_joint(const PolicyParams& params, const ExactMatrixProblem& pr) {
  pr.validate();
  const std::size_t n = params.arch.n_actions;
  const auto pi = forward(params, pr.obs, pr.id_i, pr.mask_i(n));
  const auto pii = forward(params, pr.obs, pr.id_ii, pr.mask_ii(n));
  JointTable t{pr.rows(), pr.cols(), std::vector<double>(pr.rows() * pr.cols())};
  double z = 0.0;
  for (std::size_t a = 0; a < t.rows; ++a) {
    for (std::size_t b = 0; b < t.cols; ++b) {
      double v = pi.probs[a] * pii.probs[b];
      if (!pr.coupling.empty()) v *= std::exp(pr.coupling[a][b]);
      t.p[a * t.cols + b] = v;
      z += v;
    }
  }
  if (!pr.coupling.empty()) {
    for (double& v : t.p) v /= z;
  }
  return t;
}

Enumerated enumerate(const PolicyParams& params, const ExactMatrixProblem& pr,
                     const ScoreFn& score) {
  const ScoreFn fn = score ? score : ScoreFn(grad_log_prob);
  Enumerated e;
  e.joint = build_joint(params, pr);
  const std::size_t n = params.arch.n_actions;
  const ActionMask mi = pr.mask_i(n);
  const ActionMask mii = pr.mask_ii(n);
  for (std::size_t a = 0; a < pr.rows(); ++a) e.score_i.push_back(fn(params, pr.obs, pr.id_i, mi, a));
  for (std::size_t b = 0; b < pr.cols(); ++b) {
    e.score_ii.push_back(fn(params, pr.obs, pr.id_ii, mii, b));
  }
  return e;
}

// sum_{a,b} p(a,b) w(a,b) grad log p(a,b).
template <class W>
std::vector<double> weighted_score(const Enumerated& e, const ExactMatrixProblem& pr,
                                   std::size_t dim, W weight) {
  const JointTable& t = e.joint;
  std::vector<double> mean_score(dim, 0.0);
  if (!pr.coupling.empty()) {
    for (std::size_t a = 0; a < t.rows; ++a) {
      for (std::size_t b = 0; b < t.cols; ++b) {
        const double p = t.at(a, b);
        for (std::size_t i = 0; i < dim; ++i) {
          mean_score[i] += p * (e.score_i[a][i] + e.score_ii[b][i]);
        }
      }
    }
  }
  std::vector<double> g(dim, 0.0);
  for (std::size_t a = 0; a < t.rows; ++a) {
    for (std::size_t b = 0; b < t.cols; ++b) {
      const double c = t.at(a, b) * weight(a, b);
      if (c == 0.0) continue;
      for (std::size_t i = 0; i < dim; ++i) {
        g[i] += c * (e.score_i[a][i] + e.score_ii[b][i] - mean_score[i]);
      }
    }
  }
  return g;
}

double log_ratio(const JointTable& t, const std::vector<double>& pa,
                 const std::vector<double>& pb, std::size_t a, std::size_t b) {
  const double p = t.at(a, b);
  return p > 0.0 ? std::log(p / (pa[a] * pb[b])) : 0.0;
}

}  // namespace

ActionMask ExactMatrixProblem::mask_i(std::size_t n_actions) const {
  return prefix_mask(rows(), n_actions);
}

ActionMask ExactMatrixProblem::mask_ii(std::size_t n_actions) const {
  return prefix_mask(cols(), n_actions);
}

void ExactMatrixProblem::validate() const {
  auto check = [&](const Table& t, const char* what) {
    if (t.size() != rows()) throw std::invalid_argument(std::string(what) + " has wrong shape");
    for (const auto& r : t) {
      if (r.size() != cols()) throw std::invalid_argument(std::string(what) + " has wrong shape");
      for (double v : r) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " not finite");
      }
    }
  };
  if (rows() == 0 || cols() == 0) throw std::invalid_argument("empty problem");
  check(q_i, "q_i");
  check(q_ii, "q_ii");
  if (!coupling.empty()) check(coupling, "coupling");
}

ExactMatrixProblem ExactMatrixProblem::zero_sum(const MatrixGameSpec& game) {
  game.validate();
  ExactMatrixProblem p;
  p.q_i = game.payoff;
  p.q_ii = game.payoff;
  for (auto& row : p.q_ii) {
    for (double& v : row) v = -v;
  }
  return p;
}

JointTable exact_joint(const PolicyParams& params, const ExactMatrixProblem& problem) {
  return build_joint(params, problem);
}

double exact_J(const PolicyParams& params, const ExactMatrixProblem& problem) {
  const JointTable t = build_joint(params, problem);
  double j = 0.0;
  for (std::size_t a = 0; a < t.rows; ++a) {
    for (std::size_t b = 0; b < t.cols; ++b) {
      j += t.at(a, b) * 0.5 * (problem.q_i[a][b] + problem.q_ii[a][b]);
    }
  }
  return j;
}

std::vector<double> exact_J_gradient(const PolicyParams& params,
                                     const ExactMatrixProblem& problem, const ScoreFn& score) {
  const Enumerated e = enumerate(params, problem, score);
  return weighted_score(e, problem, params.size(), [&](std::size_t a, std::size_t b) {
    return 0.5 * (problem.q_i[a][b] + problem.q_ii[a][b]);
  });
}

double exact_mi(const PolicyParams& params, const ExactMatrixProblem& problem) {
  return mutual_information(build_joint(params, problem));
}

std::vector<double> exact_mi_gradient(const PolicyParams& params,
                                      const ExactMatrixProblem& problem, const ScoreFn& score) {
  const Enumerated e = enumerate(params, problem, score);
  const auto pa = e.joint.row_marginal();
  const auto pb = e.joint.col_marginal();
  return weighted_score(e, problem, params.size(), [&](std::size_t a, std::size_t b) {
    return log_ratio(e.joint, pa, pb, a, b);
  });
}

double exact_augmented(const PolicyParams& params, const ExactMatrixProblem& problem,
                       double lambda) {
  return exact_J(params, problem) + lambda * exact_mi(params, problem);
}

std::vector<double> exact_augmented_gradient(const PolicyParams& params,
                                             const ExactMatrixProblem& problem, double lambda,
                                             const ScoreFn& score) {
  auto g = exact_J_gradient(params, problem, score);
  if (lambda == 0.0) return g;
  const auto m = exact_mi_gradient(params, problem, score);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += lambda * m[i];
  return g;
}

std::vector<double> finite_difference(const std::function<double(const PolicyParams&)>& f,
                                      const PolicyParams& params, double step) {
  std::vector<double> g(params.size());
  PolicyParams probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double x = params.flat[i];
    probe.flat[i] = x + step;
    const double up = f(probe);
    probe.flat[i] = x - step;
    const double down = f(probe);
    probe.flat[i] = x;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

double relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw std::invalid_argument("vector sizes differ");
  double na = 0.0, nb = 0.0, nd = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] * a[i];
    nb += b[i] * b[i];
    nd += (a[i] - b[i]) * (a[i] - b[i]);
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nb));
  if (scale < floor) return 0.0;
  return std::sqrt(nd) / scale;
}

}  // namespace cam
