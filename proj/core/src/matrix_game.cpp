#include "cam/matrix_game.hpp"

#include <cmath>
#include <stdexcept>

namespace cam {

bool MatrixGameSpec::symmetric() const {
  const std::size_t n = n_actions_i();
  if (n != n_actions_ii()) return false;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (payoff[a][b] != -payoff[b][a]) return false;
    }
  }
  return true;
}

void MatrixGameSpec::validate() const {
  const std::size_t ni = n_actions_i();
  const std::size_t nii = n_actions_ii();
  if (ni < kMinMatrixActions || ni > kMaxMatrixActions ||
      nii < kMinMatrixActions || nii > kMaxMatrixActions) {
    throw std::invalid_argument("matrix game needs 2..8 actions per side");
  }
  for (const auto& row : payoff) {
    if (row.size() != nii) throw std::invalid_argument("ragged payoff table");
    for (double v : row) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite payoff");
    }
  }
}

std::pair<double, double> matrix_play(const MatrixGameSpec& spec, std::size_t a_i,
                                      std::size_t a_ii) {
  if (a_i >= spec.n_actions_i() || a_ii >= spec.n_actions_ii()) {
    throw std::out_of_range("matrix_play: action index out of range");
  }
  const double u = spec.payoff[a_i][a_ii];
  return {u, -u};
}

namespace games {

MatrixGameSpec matching_pennies() {
  return {"matching_pennies", {{1.0, -1.0}, {-1.0, 1.0}}};
}

MatrixGameSpec rock_paper_scissors() {
  return {"rps", {{0.0, -1.0, 1.0}, {1.0, 0.0, -1.0}, {-1.0, 1.0, 0.0}}};
}

MatrixGameSpec biased_rps() {
  return {"biased_rps", {{0.0, -1.0, 2.0}, {1.0, 0.0, -1.0}, {-2.0, 1.0, 0.0}}};
}

MatrixGameSpec by_name(const std::string& name) {
  if (name == "matching_pennies") return matching_pennies();
  if (name == "rps") return rock_paper_scissors();
  if (name == "biased_rps") return biased_rps();
  throw std::invalid_argument("unknown matrix game '" + name + "'");
}

}  // namespace games
}  // namespace cam
