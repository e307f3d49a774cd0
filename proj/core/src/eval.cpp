#include "cam/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cam/parallel.hpp"
#include "json.hpp"

namespace cam {

namespace {

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

double WinRateMatrix::mean(bool shared_population) const {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t x = 0; x < w.size(); ++x) {
    for (std::size_t y = 0; y < w[x].size(); ++y) {
      if (shared_population && x == y) continue;
      total += w[x][y];
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.5;
}

WinRateMatrix win_rate_matrix(const EnvSpec& env, const std::vector<LabeledActor>& pop_a,
                              const std::vector<LabeledActor>& pop_b, std::size_t games_per_pair,
                              std::uint64_t seed, std::size_t workers) {
  if (pop_a.empty() || pop_b.empty()) throw std::invalid_argument("empty population");
  if (games_per_pair < 1) throw std::invalid_argument("games_per_pair must be at least 1");
  const bool shared = &pop_a == &pop_b;
  WinRateMatrix m;
  m.w.assign(pop_a.size(), std::vector<double>(pop_b.size(), 0.5));
  m.games.assign(pop_a.size(), std::vector<std::size_t>(pop_b.size(), 0));
  for (const auto& a : pop_a) m.row_labels.push_back(a.label);
  for (const auto& b : pop_b) m.col_labels.push_back(b.label);
  for (std::size_t x = 0; x < pop_a.size(); ++x) {
    for (std::size_t y = shared ? x + 1 : 0; y < pop_b.size(); ++y) {
      const Actor& a = pop_a[x].actor;
      const Actor& b = pop_b[y].actor;
      if (env.seat_by_id() && a.id == b.id) continue;
      m.w[x][y] = match_score(env, a, b, games_per_pair, derive_seed(seed, x, y), workers);
      m.games[x][y] = games_per_pair;
      if (shared) {
        m.w[y][x] = 1.0 - m.w[x][y];
        m.games[y][x] = games_per_pair;
      }
    }
  }
  return m;
}

double epsilon_ne(double winrate_vs_prev) {
  if (!(winrate_vs_prev >= 0.0 && winrate_vs_prev <= 1.0)) {
    throw std::invalid_argument("win rate outside [0, 1]");
  }
  return std::abs(winrate_vs_prev - 0.5);
}

ActionFrequencyVector action_frequency_vector(const EnvSpec& env, const Actor& agent,
                                              const std::vector<Actor>& opponents,
                                              std::size_t episodes, std::uint64_t seed,
                                              std::size_t workers) {
  if (episodes < 1) throw std::invalid_argument("episodes must be at least 1");
  if (opponents.empty()) throw std::invalid_argument("no opponents");
  const std::size_t n_cat = env.n_categories();
  const int tick_limit = env.kind == EnvKind::kDuel ? env.duel.tick_limit : 1;
  struct Counts {
    std::vector<std::size_t> total;
    std::vector<std::size_t> timing;
  };
  const auto runs = parallel_map(episodes, workers, [&](std::size_t e) {
    const Actor& opp = opponents[e % opponents.size()];
    Rng rng(derive_seed(seed, 0, e));
    const Seat seat = learner_seat(env, agent.id, opp.id, e / opponents.size());
    const EpisodeRecord rec = seat == Seat::kI ? play_episode(env, agent, opp, rng, 0, false)
                                               : play_episode(env, opp, agent, rng, 0, false);
    Counts c;
    c.total = rec.category_counts[seat_index(seat)];
    c.timing.assign(kTimingBins * n_cat, 0);
    const auto& ticks = rec.category_by_tick[seat_index(seat)];
    for (std::size_t t = 0; t < ticks.size(); ++t) {
      const std::size_t bin = std::min(kTimingBins - 1, t * kTimingBins / static_cast<std::size_t>(tick_limit));
      ++c.timing[bin * n_cat + ticks[t]];
    }
    return c;
  });
  ActionFrequencyVector v;
  v.episodes_observed = episodes;
  v.timing.assign(kTimingBins * n_cat, 0);
  std::vector<std::size_t> total(n_cat, 0);
  for (const auto& r : runs) {
    for (std::size_t k = 0; k < n_cat; ++k) total[k] += r.total[k];
    for (std::size_t k = 0; k < v.timing.size(); ++k) v.timing[k] += r.timing[k];
  }
  const double sum = static_cast<double>(std::accumulate(total.begin(), total.end(), std::size_t{0}));
  v.freq.resize(n_cat);
  for (std::size_t k = 0; k < n_cat; ++k) v.freq[k] = static_cast<double>(total[k]) / sum;
  return v;
}

std::vector<std::string> category_names(const EnvSpec& env) {
  std::vector<std::string> names;
  if (env.kind == EnvKind::kDuel) {
    for (std::size_t k = 0; k < kActionCategoryCount; ++k) {
      names.emplace_back(to_string(static_cast<ActionCategory>(k)));
    }
  } else {
    for (std::size_t k = 0; k < env.n_actions(); ++k) names.push_back("action" + std::to_string(k));
  }
  return names;
}

DiversityReport diversity_score(const std::vector<ActionFrequencyVector>& vectors) {
  if (vectors.size() < 2) throw std::invalid_argument("diversity needs at least two vectors");
  const std::size_t dim = vectors[0].freq.size();
  for (const auto& v : vectors) {
    if (v.freq.size() != dim) throw std::invalid_argument("frequency vectors differ in size");
  }
  DiversityReport r;
  double total = 0.0;
  for (std::size_t a = 0; a < vectors.size(); ++a) {
    for (std::size_t b = a + 1; b < vectors.size(); ++b) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = vectors[a].freq[k] - vectors[b].freq[k];
        d2 += d * d;
      }
      r.pairwise.push_back({a, b, std::sqrt(d2)});
      total += r.pairwise.back().distance;
    }
  }
  r.expected_distance = total / static_cast<double>(r.pairwise.size());
  return r;
}

double relative_change(double before, double after) {
  if (before == 0.0) throw std::invalid_argument("relative change from zero");
  return (after - before) / before;
}

std::string format_relative_change(double before, double after) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f%%", 100.0 * relative_change(before, after));
  return buf;
}

MiReport mi_report(const EnvSpec& env, const std::vector<Actor>& population,
                   std::size_t episodes, std::size_t state_buckets, std::uint64_t seed,
                   std::size_t workers) {
  if (population.size() < 2) throw std::invalid_argument("mi report needs at least two agents");
  if (episodes < 1) throw std::invalid_argument("episodes must be at least 1");
  MiReport r;
  for (std::size_t a = 0; a < population.size(); ++a) {
    for (std::size_t b = a + 1; b < population.size(); ++b) {
      const Actor& x = population[a];
      const Actor& y = population[b];
      const auto runs = parallel_map(episodes, workers, [&](std::size_t e) {
        Rng rng(derive_seed(derive_seed(seed, a, b), 0, e));
        const Seat seat = learner_seat(env, x.id, y.id, e);
        EpisodeRecord rec = seat == Seat::kI ? play_episode(env, x, y, rng, state_buckets, true)
                                             : play_episode(env, y, x, rng, state_buckets, true);
        std::vector<JointActionSample> s;
        for (const auto& t : rec.transitions[seat_index(seat)]) {
          s.push_back({t.action_self, t.action_opp, t.bucket});
        }
        return s;
      });
      std::vector<JointActionSample> joint;
      for (const auto& run : runs) joint.insert(joint.end(), run.begin(), run.end());
      r.pairs.push_back({a, b, mutual_information_sampled(joint), joint.size()});
    }
  }
  double total = 0.0;
  for (const auto& p : r.pairs) total += p.mi;
  r.aggregate = total / static_cast<double>(r.pairs.size());
  return r;
}

double exploitability(const std::vector<double>& x, const std::vector<double>& y,
                      const MatrixGameSpec& game) {
  game.validate();
  const std::size_t m = game.n_actions_i();
  const std::size_t n = game.n_actions_ii();
  if (x.size() < m || y.size() < n) throw std::invalid_argument("strategy shorter than action set");
  std::vector<double> ay(m, 0.0), xa(n, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      ay[a] += game.payoff[a][b] * y[b];
      xa[b] += x[a] * game.payoff[a][b];
    }
  }
  double value = 0.0;
  for (std::size_t a = 0; a < m; ++a) value += x[a] * ay[a];
  const double br_i = *std::max_element(ay.begin(), ay.end());
  double br_ii = -xa[0];
  for (double v : xa) br_ii = std::max(br_ii, -v);
  return std::max(br_i - value, br_ii + value);
}

double exploitability(const PolicyParams& params, AgentId id_i, AgentId id_ii,
                      const MatrixGameSpec& game) {
  EnvSpec env;
  env.kind = EnvKind::kMatrix;
  env.matrix = game;
  if (env.n_actions() != params.arch.n_actions) {
    throw std::invalid_argument("policy action count does not match the game");
  }
  const Observation obs{{1.0}, 0};
  const auto x = forward(params, obs, id_i, env.matrix_mask(Seat::kI)).probs;
  const auto y = forward(params, obs, id_ii, env.matrix_mask(Seat::kII)).probs;
  return exploitability(x, y, game);
}

std::vector<RadialRow> radial_export(const std::vector<ActionFrequencyVector>& vectors,
                                     const std::vector<std::string>& labels,
                                     const std::vector<std::string>& categories) {
  if (vectors.empty()) throw std::invalid_argument("radial export needs at least one vector");
  if (labels.size() != vectors.size()) throw std::invalid_argument("one label per vector");
  const std::size_t dim = categories.size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.freq.size() != dim) throw std::invalid_argument("category count mismatch");
    for (std::size_t k = 0; k < dim; ++k) mean[k] += v.freq[k] / static_cast<double>(vectors.size());
  }
  std::vector<RadialRow> rows;
  for (std::size_t a = 0; a < vectors.size(); ++a) {
    for (std::size_t k = 0; k < dim; ++k) {
      rows.push_back({labels[a], categories[k], vectors[a].freq[k], vectors[a].freq[k] - mean[k]});
    }
  }
  return rows;
}

std::string matrix_csv(const WinRateMatrix& m) {
  std::ostringstream out;
  out << "agent";
  for (const auto& l : m.col_labels) out << ',' << csv_field(l);
  out << '\n';
  for (std::size_t x = 0; x < m.w.size(); ++x) {
    out << csv_field(m.row_labels[x]);
    for (double v : m.w[x]) out << ',' << num(v);
    out << '\n';
  }
  return out.str();
}

std::string diversity_json(const DiversityReport& r, const std::vector<std::string>& labels) {
  nlohmann::ordered_json j;
  j["pairwise"] = nlohmann::ordered_json::array();
  for (const auto& p : r.pairwise) {
    j["pairwise"].push_back({{"a", labels.at(p.a)}, {"b", labels.at(p.b)}, {"distance", p.distance}});
  }
  j["expected_distance"] = r.expected_distance;
  return j.dump(2) + "\n";
}

std::string radial_csv(const std::vector<RadialRow>& rows) {
  std::ostringstream out;
  out << "agent,category,frequency,deviation\n";
  for (const auto& r : rows) {
    out << csv_field(r.agent) << ',' << csv_field(r.category) << ',' << num(r.frequency) << ','
        << num(r.deviation) << '\n';
  }
  return out.str();
}

std::string mi_json(const MiReport& r, const std::vector<std::string>& labels) {
  nlohmann::ordered_json j;
  j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& p : r.pairs) {
    j["pairs"].push_back(
        {{"a", labels.at(p.a)}, {"b", labels.at(p.b)}, {"mi", p.mi}, {"samples", p.samples}});
  }
  j["aggregate"] = r.aggregate;
  return j.dump(2) + "\n";
}

}  // namespace cam
