#pragma once

// Self-checks run by `cam check`: analytic gradients against central
// finite differences, and closed-form values of the measurement oracles.

#include <ostream>
#include <string>
#include <vector>

#include "cam/exact.hpp"

namespace cam {

struct CheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

constexpr double kGradientTolerance = 1e-4;

// The five fixed tabular games used by the gradient checks.
std::vector<MatrixGameSpec> gradient_check_games();

// `score` replaces grad_log_prob everywhere it is injectable.
std::vector<CheckResult> gradient_checks(const ScoreFn& score = {});

// `mi_draws` random parameter draws for the factorized-MI check.
std::vector<CheckResult> oracle_checks(std::size_t mi_draws = 1000);

// One line per check; returns true when all passed.
bool print_checks(const std::vector<CheckResult>& results, std::ostream& out);

}  // namespace cam
