#pragma once

// Measurements: win-rate matrices, the epsilon-NE gap, behavior-category
// frequency vectors and their diversity, mutual-information reports and the
// brute-force exploitability oracle.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cam/env.hpp"
#include "cam/matrix_game.hpp"
#include "cam/objectives.hpp"
#include "cam/policy.hpp"

namespace cam {

struct LabeledActor {
  Actor actor;
  std::string label;
};

struct WinRateMatrix {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<std::size_t>> games;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;

  // Mean of the off-diagonal entries for a shared population, of every
  // entry otherwise.
  double mean(bool shared_population) const;
};

// Row x, column y: score of pop_a[x] against pop_b[y]. Pass the same vector
// twice for an intra-population matrix; each unordered pair is then played
// once and the mirrored entry is 1 - w.
WinRateMatrix win_rate_matrix(const EnvSpec& env, const std::vector<LabeledActor>& pop_a,
                              const std::vector<LabeledActor>& pop_b, std::size_t games_per_pair,
                              std::uint64_t seed, std::size_t workers);

double epsilon_ne(double winrate_vs_prev);

constexpr std::size_t kTimingBins = 10;

struct ActionFrequencyVector {
  std::vector<double> freq;
  std::size_t episodes_observed = 0;
  // Category counts per phase of the episode (kTimingBins equal slices of
  // the tick limit), row-major [bin][category].
  std::vector<std::size_t> timing;
};

// Plays `episodes` episodes of `agent`, cycling through `opponents`, and
// counts its executed actions by category.
ActionFrequencyVector action_frequency_vector(const EnvSpec& env, const Actor& agent,
                                              const std::vector<Actor>& opponents,
                                              std::size_t episodes, std::uint64_t seed,
                                              std::size_t workers);

std::vector<std::string> category_names(const EnvSpec& env);

struct PairDistance {
  std::size_t a = 0;
  std::size_t b = 0;
  double distance = 0.0;
};

struct DiversityReport {
  std::vector<PairDistance> pairwise;
  double expected_distance = 0.0;
};

DiversityReport diversity_score(const std::vector<ActionFrequencyVector>& vectors);

// (after - before) / before.
double relative_change(double before, double after);
// Signed percentage with one decimal, e.g. "+14.9%".
std::string format_relative_change(double before, double after);

struct PairMi {
  std::size_t a = 0;
  std::size_t b = 0;
  double mi = 0.0;
  std::size_t samples = 0;
};

struct MiReport {
  std::vector<PairMi> pairs;
  double aggregate = 0.0;
};

// For every unordered pair, plays `episodes` episodes and estimates the
// mutual information of the two agents' simultaneous actions given the
// shared state bucket.
MiReport mi_report(const EnvSpec& env, const std::vector<Actor>& population,
                   std::size_t episodes, std::size_t state_buckets, std::uint64_t seed,
                   std::size_t workers);

// Largest gain either seat gets from a best response to the other's mixed
// strategy, by enumeration.
double exploitability(const std::vector<double>& x, const std::vector<double>& y,
                      const MatrixGameSpec& game);
// Same for the policy's id_i distribution in seat i and id_ii in seat ii.
double exploitability(const PolicyParams& params, AgentId id_i, AgentId id_ii,
                      const MatrixGameSpec& game);

struct RadialRow {
  std::string agent;
  std::string category;
  double frequency = 0.0;
  double deviation = 0.0;
};

// Per-agent, per-category deviation from the population mean.
std::vector<RadialRow> radial_export(const std::vector<ActionFrequencyVector>& vectors,
                                     const std::vector<std::string>& labels,
                                     const std::vector<std::string>& categories);

std::string matrix_csv(const WinRateMatrix& m);
std::string diversity_json(const DiversityReport& r, const std::vector<std::string>& labels);
std::string radial_csv(const std::vector<RadialRow>& rows);
std::string mi_json(const MiReport& r, const std::vector<std::string>& labels);

}  // namespace cam
