#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace cam {

// One-shot zero-sum matrix game. payoff[a_i][a_ii] is agent i's payoff;
// agent ii receives the negation. Action counts may differ per side.
struct MatrixGameSpec {
  std::string name;
  std::vector<std::vector<double>> payoff;

  std::size_t n_actions_i() const { return payoff.size(); }
  std::size_t n_actions_ii() const { return payoff.empty() ? 0 : payoff[0].size(); }

  // True when the game is square with payoff = -payoff^T, i.e. both seats
  // face the same problem.
  bool symmetric() const;

  void validate() const;

  friend bool operator==(const MatrixGameSpec&, const MatrixGameSpec&) = default;
};

constexpr std::size_t kMinMatrixActions = 2;
constexpr std::size_t kMaxMatrixActions = 8;

// (payoff[a_i][a_ii], -payoff[a_i][a_ii]).
std::pair<double, double> matrix_play(const MatrixGameSpec& spec, std::size_t a_i,
                                      std::size_t a_ii);

namespace games {
MatrixGameSpec matching_pennies();
MatrixGameSpec rock_paper_scissors();
// Rock loses 1 to paper, beats scissors by 2; paper beats scissors by 1.
// Unique equilibrium (1/4, 1/2, 1/4).
MatrixGameSpec biased_rps();
// Named lookup used by configuration files.
MatrixGameSpec by_name(const std::string& name);
}  // namespace games

}  // namespace cam
