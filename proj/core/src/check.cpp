#include "cam/check.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cam/eval.hpp"

namespace cam {

namespace {

Table random_table(std::size_t rows, std::size_t cols, Rng& rng, double scale) {
  Table t(rows, std::vector<double>(cols));
  for (auto& r : t) {
    for (double& v : r) v = rng.uniform(-scale, scale);
  }
  return t;
}

PolicyParams random_params(const PolicyArch& arch, Rng& rng) {
  PolicyParams p = init_policy(arch, rng, 0.5);
  for (double& v : p.flat) v = rng.uniform(-1.0, 1.0);
  return p;
}

PolicyArch tabular_arch(const MatrixGameSpec& g) {
  PolicyArch a;
  a.kind = PolicyKind::kTabular;
  a.n_ids = 2;
  a.n_actions = std::max(g.n_actions_i(), g.n_actions_ii());
  a.n_states = 1;
  return a;
}

PolicyArch mlp_arch(const MatrixGameSpec& g) {
  PolicyArch a = tabular_arch(g);
  a.kind = PolicyKind::kMlp;
  a.obs_dim = 1;
  a.hidden = 5;
  return a;
}

CheckResult make(std::string name, double err, double tol) {
  return {std::move(name), err, tol, std::isfinite(err) && err < tol};
}

double score_error(const PolicyParams& params, const ExactMatrixProblem& pr, const ScoreFn& score) {
  const ScoreFn fn = score ? score : ScoreFn(grad_log_prob);
  const std::size_t n = params.arch.n_actions;
  double worst = 0.0;
  for (int seat = 0; seat < 2; ++seat) {
    const AgentId id = seat == 0 ? pr.id_i : pr.id_ii;
    const ActionMask mask = seat == 0 ? pr.mask_i(n) : pr.mask_ii(n);
    const std::size_t k = seat == 0 ? pr.rows() : pr.cols();
    for (std::size_t a = 0; a < k; ++a) {
      const auto analytic = fn(params, pr.obs, id, mask, a);
      const auto numeric = finite_difference(
          [&](const PolicyParams& p) { return log_prob(p, pr.obs, id, mask, a); }, params);
      worst = std::max(worst, relative_error(analytic, numeric));
    }
  }
  return worst;
}

double ppo_error(const PolicyParams& params, const ExactMatrixProblem& pr, double clip, Rng& rng) {
  const std::size_t n = params.arch.n_actions;
  std::vector<Transition> transitions;
  std::vector<double> advantages;
  for (int seat = 0; seat < 2; ++seat) {
    const AgentId id = seat == 0 ? pr.id_i : pr.id_ii;
    const ActionMask mask = seat == 0 ? pr.mask_i(n) : pr.mask_ii(n);
    const std::size_t k = seat == 0 ? pr.rows() : pr.cols();
    for (std::size_t a = 0; a < k; ++a) {
      Transition t;
      t.state = pr.obs;
      t.next_state = pr.obs;
      t.action_self = a;
      t.mask_self = mask;
      t.log_prob_self = log_prob(params, pr.obs, id, mask, a);
      t.id_opp = seat == 0 ? pr.id_ii : pr.id_i;
      t.done = true;
      transitions.push_back(std::move(t));
      advantages.push_back(rng.uniform(-1.0, 1.0));
    }
  }
  std::vector<PolicySample> samples;
  std::size_t idx = 0;
  for (int seat = 0; seat < 2; ++seat) {
    const std::size_t k = seat == 0 ? pr.rows() : pr.cols();
    for (std::size_t a = 0; a < k; ++a, ++idx) {
      samples.push_back({&transitions[idx], seat == 0 ? pr.id_i : pr.id_ii, 0.0, 0.0,
                         advantages[idx]});
    }
  }
  const auto analytic = ppo_surrogate(samples, params, clip).loss_grad;
  const auto numeric = finite_difference(
      [&](const PolicyParams& p) { return ppo_surrogate(samples, p, clip).loss; }, params);
  return relative_error(analytic, numeric);
}

}  // namespace

std::vector<MatrixGameSpec> gradient_check_games() {
  std::vector<MatrixGameSpec> games{games::matching_pennies(), games::rock_paper_scissors(),
                                    games::biased_rps()};
  games.push_back({"asymmetric_2x3", {{1.0, -0.5, 0.25}, {-1.0, 0.75, -0.25}}});
  Rng rng(derive_seed(7, 0, 0));
  games.push_back({"random_4x4", random_table(4, 4, rng, 1.0)});
  return games;
}

std::vector<CheckResult> gradient_checks(const ScoreFn& score) {
  std::vector<CheckResult> out;
  const double tol = kGradientTolerance;
  std::uint64_t case_index = 0;
  for (const MatrixGameSpec& game : gradient_check_games()) {
    for (const PolicyArch& arch : {tabular_arch(game), mlp_arch(game)}) {
      Rng rng(derive_seed(11, 0, case_index++));
      const std::string tag = game.name + "/" + to_string(arch.kind);
      const PolicyParams params = random_params(arch, rng);

      ExactMatrixProblem pr = ExactMatrixProblem::zero_sum(game);
      pr.q_ii = random_table(pr.rows(), pr.cols(), rng, 1.0);
      ExactMatrixProblem coupled = pr;
      coupled.coupling = random_table(pr.rows(), pr.cols(), rng, 1.0);

      out.push_back(make("grad_log_prob " + tag, score_error(params, pr, score), tol));

      auto fd = finite_difference([&](const PolicyParams& p) { return exact_J(p, pr); }, params);
      out.push_back(make("policy_gradient " + tag,
                         relative_error(exact_J_gradient(params, pr, score), fd), tol));

      fd = finite_difference([&](const PolicyParams& p) { return exact_mi(p, coupled); }, params);
      out.push_back(make("mi_gradient " + tag,
                         relative_error(exact_mi_gradient(params, coupled, score), fd), tol));

      const double lambda = 0.5;
      fd = finite_difference(
          [&](const PolicyParams& p) { return exact_augmented(p, coupled, lambda); }, params);
      out.push_back(
          make("augmented_gradient " + tag,
               relative_error(exact_augmented_gradient(params, coupled, lambda, score), fd), tol));

      out.push_back(make("ppo_gradient " + tag, ppo_error(params, pr, 0.2, rng), tol));
    }
  }
  return out;
}

std::vector<CheckResult> oracle_checks(std::size_t mi_draws) {
  std::vector<CheckResult> out;
  {
    double worst = 0.0;
    const MatrixGameSpec game = games::biased_rps();
    for (std::size_t d = 0; d < mi_draws; ++d) {
      Rng rng(derive_seed(13, 0, d));
      const PolicyArch arch = d % 2 == 0 ? tabular_arch(game) : mlp_arch(game);
      const PolicyParams p = random_params(arch, rng);
      const ExactMatrixProblem pr = ExactMatrixProblem::zero_sum(game);
      worst = std::max(worst, std::abs(exact_mi(p, pr)));
    }
    out.push_back(make("factorized_mi_zero", worst, 1e-12));
  }
  {
    std::vector<JointActionSample> s;
    for (std::size_t k = 0; k < 1000; ++k) s.push_back({k % 2, k % 2, 0});
    out.push_back(make("correlated_mi_ln2", std::abs(mutual_information_sampled(s) - std::log(2.0)),
                       1e-6));
  }
  {
    Rng rng(derive_seed(17, 0, 0));
    std::vector<JointActionSample> s;
    for (std::size_t k = 0; k < 100000; ++k) s.push_back({rng.below(2), rng.below(2), 0});
    out.push_back(make("independent_mi_small", mutual_information_sampled(s), 0.01));
  }
  {
    const auto rps = games::rock_paper_scissors();
    const std::vector<double> u{1.0 / 3, 1.0 / 3, 1.0 / 3};
    out.push_back(make("exploitability_uniform_rps", exploitability(u, u, rps), 1e-12));
    const std::vector<double> half{0.5, 0.5};
    out.push_back(make("exploitability_pennies_ne",
                       exploitability(half, half, games::matching_pennies()), 1e-12));
    const std::vector<double> rock{1.0, 0.0, 0.0};
    out.push_back(
        make("exploitability_pure_rock", std::abs(exploitability(rock, rock, rps) - 1.0), 1e-12));
    const std::vector<double> ne{0.25, 0.5, 0.25};
    out.push_back(
        make("exploitability_biased_rps_ne", exploitability(ne, ne, games::biased_rps()), 1e-12));
  }
  out.push_back(make("epsilon_ne_0.576", std::abs(epsilon_ne(0.576) - 0.076), 1e-12));
  out.push_back(
      make("relative_change_diversity", std::abs(relative_change(0.9210, 1.0585) - 0.149294), 1e-6));
  return out;
}

bool print_checks(const std::vector<CheckResult>& results, std::ostream& out) {
  bool all = true;
  char buf[64];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "max_error=%.3e tol=%.0e", r.max_error, r.tolerance);
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " " << buf << "\n";
    all = all && r.passed;
  }
  return all;
}

}  // namespace cam
