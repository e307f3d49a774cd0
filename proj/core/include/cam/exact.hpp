#pragma once

// Exact objectives and gradients by enumeration over one-shot matrix
// problems. These back the finite-difference oracles.
//
// Each seat k has its own action-value table q_k[a_i][a_ii]. With the
// zero-sum tables (payoff, -payoff) the shared-policy return is identically
// zero, so non-trivial checks use general tables. An optional coupling table
// C turns the factorized joint into p(a, b) ~ Pi_i(a) Pi_ii(b) exp(C[a][b]),
// which gives the mutual information a non-zero gradient.

#include <functional>
#include <vector>

#include "cam/matrix_game.hpp"
#include "cam/objectives.hpp"
#include "cam/policy.hpp"

namespace cam {

using Table = std::vector<std::vector<double>>;

struct ExactMatrixProblem {
  Table q_i;
  Table q_ii;
  Table coupling;  // empty: factorized joint
  AgentId id_i{0};
  AgentId id_ii{1};
  Observation obs{{1.0}, 0};

  std::size_t rows() const { return q_i.size(); }
  std::size_t cols() const { return q_i.empty() ? 0 : q_i[0].size(); }
  ActionMask mask_i(std::size_t n_actions) const;
  ActionMask mask_ii(std::size_t n_actions) const;
  void validate() const;

  // Seat tables (payoff, -payoff).
  static ExactMatrixProblem zero_sum(const MatrixGameSpec& game);
};

// Score function hook; defaults to grad_log_prob. Lets the check harness
// inject a faulty implementation.
using ScoreFn = std::function<std::vector<double>(const PolicyParams&, const Observation&,
                                                  AgentId, const ActionMask&, std::size_t)>;

JointTable exact_joint(const PolicyParams& params, const ExactMatrixProblem& problem);

// (1/2) sum_k sum_{a,b} p(a,b) q_k[a][b].
double exact_J(const PolicyParams& params, const ExactMatrixProblem& problem);
// (1/2) sum_k sum_{a,b} p(a,b) q_k[a][b] grad log p(a,b).
std::vector<double> exact_J_gradient(const PolicyParams& params,
                                     const ExactMatrixProblem& problem,
                                     const ScoreFn& score = {});

double exact_mi(const PolicyParams& params, const ExactMatrixProblem& problem);
// sum_{a,b} p(a,b) log(p(a,b) / (p(a) p(b))) grad log p(a,b).
std::vector<double> exact_mi_gradient(const PolicyParams& params,
                                      const ExactMatrixProblem& problem,
                                      const ScoreFn& score = {});

// J + lambda I and its gradient.
double exact_augmented(const PolicyParams& params, const ExactMatrixProblem& problem,
                       double lambda);
std::vector<double> exact_augmented_gradient(const PolicyParams& params,
                                             const ExactMatrixProblem& problem,
                                             double lambda, const ScoreFn& score = {});

// Central finite differences of f around params.flat.
std::vector<double> finite_difference(const std::function<double(const PolicyParams&)>& f,
                                      const PolicyParams& params, double step = 1e-5);

// ||a - b|| / max(||a||, ||b||), or 0 when both norms are below `floor`.
double relative_error(std::span<const double> a, std::span<const double> b,
                      double floor = 1e-10);

}  // namespace cam
