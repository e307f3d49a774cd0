#include "cam/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cam/parallel.hpp"

namespace cam {

std::size_t GenerationStore::add(PolicyParams params, std::string stage, std::uint64_t seed) {
  params.validate();
  GenerationEntry e;
  e.generation = entries_.size();
  e.stage = std::move(stage);
  if (!entries_.empty()) e.parent = entries_.size() - 1;
  e.seed = seed;
  e.params = std::move(params);
  entries_.push_back(std::move(e));
  return entries_.size() - 1;
}

const GenerationEntry& GenerationStore::at(std::size_t generation) const {
  if (generation >= entries_.size()) throw std::out_of_range("generation not in store");
  return entries_[generation];
}

const GenerationEntry& GenerationStore::latest() const {
  if (entries_.empty()) throw std::out_of_range("empty generation store");
  return entries_.back();
}

PayoffMatrix::PayoffMatrix(std::size_t n) : n_(n), points_(n * n, 0.0), games_(n * n, 0) {}

void PayoffMatrix::record(std::size_t x, std::size_t y, double points, std::size_t games) {
  if (x >= n_ || y >= n_) throw std::out_of_range("payoff index out of range");
  if (x == y) throw std::invalid_argument("self-play pairs are not tallied");
  if (points < 0.0 || points > static_cast<double>(games)) {
    throw std::invalid_argument("points outside [0, games]");
  }
  if (x < y) {
    points_[x * n_ + y] += points;
  } else {
    points_[y * n_ + x] += static_cast<double>(games) - points;
  }
  games_[std::min(x, y) * n_ + std::max(x, y)] += games;
}

double PayoffMatrix::u(std::size_t x, std::size_t y) const {
  if (x >= n_ || y >= n_) throw std::out_of_range("payoff index out of range");
  if (x == y) return 0.5;
  const std::size_t k = std::min(x, y) * n_ + std::max(x, y);
  if (games_[k] == 0) return 0.5;
  const double lo = points_[k] / static_cast<double>(games_[k]);
  return x < y ? lo : 1.0 - lo;
}

std::size_t PayoffMatrix::games(std::size_t x, std::size_t y) const {
  if (x >= n_ || y >= n_) throw std::out_of_range("payoff index out of range");
  if (x == y) return 0;
  return games_[std::min(x, y) * n_ + std::max(x, y)];
}

std::vector<std::vector<double>> PayoffMatrix::matrix() const {
  std::vector<std::vector<double>> m(n_, std::vector<double>(n_));
  for (std::size_t x = 0; x < n_; ++x) {
    for (std::size_t y = 0; y < n_; ++y) m[x][y] = u(x, y);
  }
  return m;
}

std::vector<double> graph_solve_row(std::span<const double> win_rates, double exponent,
                                    std::optional<std::size_t> exclude) {
  if (!(exponent >= 0.0) || !std::isfinite(exponent)) {
    throw std::invalid_argument("solver exponent must be non-negative");
  }
  const std::size_t n = win_rates.size();
  std::vector<double> w(n, 0.0);
  std::size_t eligible = 0;
  double total = 0.0;
  for (std::size_t y = 0; y < n; ++y) {
    if (exclude && *exclude == y) continue;
    const double u = win_rates[y];
    if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("win rate outside [0, 1]");
    ++eligible;
    w[y] = std::pow(1.0 - u, exponent);
    total += w[y];
  }
  if (eligible == 0) throw std::invalid_argument("no eligible opponents");
  for (std::size_t y = 0; y < n; ++y) {
    if (exclude && *exclude == y) continue;
    w[y] = total > 0.0 ? w[y] / total : 1.0 / static_cast<double>(eligible);
  }
  return w;
}

InteractionGraph graph_solve(const PayoffMatrix& u, double exponent) {
  const std::size_t n = u.size();
  if (n < 2) throw std::invalid_argument("interaction graph needs at least 2 members");
  InteractionGraph g;
  g.sigma.reserve(n);
  std::vector<double> row(n);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) row[y] = u.u(x, y);
    g.sigma.push_back(graph_solve_row(row, exponent, x));
  }
  return g;
}

std::size_t sample_opponent(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("negative opponent weight");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("opponent weights sum to zero");
  const double u = rng.uniform() * total;
  double c = 0.0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    c += weights[k];
    last = k;
    if (u < c) return k;
  }
  return last;
}

NplBatch npl_collect(const EnvSpec& env, const Actor& learner, std::span<const double> sigma,
                     std::span<const OpponentHandle> opponents, std::size_t episodes,
                     std::uint64_t seed, std::size_t state_buckets, std::size_t workers) {
  if (episodes < 1) throw std::invalid_argument("at least one episode required");
  if (sigma.size() != opponents.size()) {
    throw std::invalid_argument("opponent weights and opponent set differ in size");
  }
  struct Episode {
    std::vector<Transition> transitions;
    double score = 0.0;
    std::size_t opponent = 0;
  };
  const auto runs = parallel_map(episodes, workers, [&](std::size_t e) {
    try {
      Rng rng(derive_seed(seed, 1, e));
      Episode out;
      out.opponent = sample_opponent(sigma, rng);
      const OpponentHandle& h = opponents[out.opponent];
      const Actor opp{h.params, h.id};
      const Seat seat = learner_seat(env, learner.id, h.id, e);
      EpisodeRecord rec = seat == Seat::kI ? play_episode(env, learner, opp, rng, state_buckets, true)
                                           : play_episode(env, opp, learner, rng, state_buckets, true);
      out.score = seat == Seat::kI ? rec.score_i : 1.0 - rec.score_i;
      out.transitions = std::move(rec.transitions[seat_index(seat)]);
      for (auto& t : out.transitions) {
        t.opponent = h.source;
        t.opponent_index = h.index;
      }
      return out;
    } catch (const std::exception& ex) {
      throw std::runtime_error("episode " + std::to_string(e) + ": " + ex.what());
    }
  });
  NplBatch out;
  out.batch.agent = learner.id;
  for (const auto& r : runs) {
    out.batch.episode_starts.push_back(out.batch.transitions.size());
    out.batch.transitions.insert(out.batch.transitions.end(), r.transitions.begin(),
                                 r.transitions.end());
    out.episode_scores.push_back(r.score);
    out.episode_opponent.push_back(r.opponent);
  }
  return out;
}

std::size_t RunConfig::resolved_eval_games() const {
  if (eval_games > 0) return eval_games;
  return env.kind == EnvKind::kMatrix ? 200 : 50;
}

void RunConfig::validate() const {
  env.validate(population_size);
  objective.validate();
  if (policy.hidden < 1) throw std::invalid_argument("policy.hidden must be at least 1");
  if (!(policy.init_scale >= 0.0)) throw std::invalid_argument("policy.init_scale must be >= 0");
  if (episodes_per_generation < 1) {
    throw std::invalid_argument("episodes_per_generation must be at least 1");
  }
  if (updates_per_generation < 1) {
    throw std::invalid_argument("updates_per_generation must be at least 1");
  }
  if (!(solver_exponent >= 0.0)) throw std::invalid_argument("solver_exponent must be >= 0");
  if (!(convergence.threshold >= 0.0 && convergence.threshold <= 0.5)) {
    throw std::invalid_argument("convergence.threshold must lie in [0, 0.5]");
  }
  if (convergence.patience < 1) throw std::invalid_argument("convergence.patience must be >= 1");
  if (!(past_mix >= 0.0 && past_mix <= 1.0)) throw std::invalid_argument("past_mix must lie in [0, 1]");
  if (!(cam.mia_weight >= 0.0 && cam.mia_weight <= 1.0)) {
    throw std::invalid_argument("cam.mia_weight must lie in [0, 1]");
  }
  if (cam.episodes_per_sweep < 1) throw std::invalid_argument("cam.episodes_per_sweep must be >= 1");
  if (cam.updates_per_sweep < 1) throw std::invalid_argument("cam.updates_per_sweep must be >= 1");
  if (cam.eval_games < 1) throw std::invalid_argument("cam.eval_games must be >= 1");
  if (!(cam.learning_rate >= 0.0)) throw std::invalid_argument("cam.learning_rate must be >= 0");
}

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::runtime_error(std::string("non-finite ") + what);
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

struct FrozenSubset {
  TrajectoryBatch batch;
  ValueEstimates values;
};

FrozenSubset frozen_subset(const TrajectoryBatch& batch, const ValueEstimates& values) {
  FrozenSubset s;
  s.batch.agent = batch.agent;
  for (std::size_t k = 0; k < batch.transitions.size(); ++k) {
    if (batch.transitions[k].opponent != OpponentSource::kFrozenMia) continue;
    s.batch.transitions.push_back(batch.transitions[k]);
    s.values.q.push_back(values.q[k]);
    s.values.v.push_back(values.v[k]);
    s.values.advantage.push_back(values.advantage[k]);
  }
  return s;
}

}  // namespace

UpdateStats policy_update(PolicyParams& params, ValueHead& value,
                          std::span<const TrajectoryBatch> batches, const ObjectiveConfig& config,
                          double learning_rate, const PolicyParams* anchor, Stage stage,
                          std::uint64_t seed) {
  UpdateStats st;
  std::vector<ValueEstimates> values;
  values.reserve(batches.size());
  for (const auto& b : batches) {
    values.push_back(compute_value_estimates(b, value, config));
    if (config.normalize_advantages) normalize_advantages(values.back().advantage);
  }
  std::vector<AgentSamples> agents;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    if (!batches[i].empty()) agents.push_back({&batches[i], &values[i]});
  }
  if (agents.empty()) throw std::invalid_argument("no transitions to learn from");
  const auto samples = flatten(agents);
  st.samples = samples.size();
  st.objective_J = estimate_J(agents);

  std::vector<JointActionSample> joint;
  for (const auto& a : agents) {
    for (auto s : joint_action_samples(*a.batch, params.arch.n_ids)) {
      s.bucket = s.bucket * params.arch.n_ids + a.batch->agent.index;
      joint.push_back(s);
    }
  }
  st.mi = mutual_information_sampled(joint);

  std::optional<FrozenSubset> frozen;
  if (stage == Stage::kMia) {
    st.literal_loss = mia_loss(agents, params);
  } else {
    if (agents.size() != 1) throw std::invalid_argument("specialist update takes one batch");
    frozen = frozen_subset(*agents[0].batch, *agents[0].values);
    if (!frozen->batch.empty()) {
      const AgentSamples fs{&frozen->batch, &frozen->values};
      const PolicyParams* p = &params;
      st.literal_loss = cam_loss(std::span(&fs, 1), std::span(&p, 1));
    }
  }
  require_finite(st.objective_J, "return estimate");
  require_finite(st.literal_loss, "objective");

  auto apply = [&](std::vector<double> g, std::span<const PolicySample> kl_samples) {
    if (anchor != nullptr && config.anchor_kl > 0.0) {
      const KlResult kl = kl_to_anchor(kl_samples, params, *anchor);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= config.anchor_kl * kl.grad[i];
      st.kl_anchor = kl.value;
    }
    st.grad_norm = clip_grad_norm(g, config.max_grad_norm);
    require_finite(st.grad_norm, "gradient");
    params = sgd_step(params, g, learning_rate);
  };

  switch (config.update_mode) {
    case UpdateMode::kPpo: {
      Rng rng(seed);
      const std::size_t mb = config.minibatch_size == 0
                                 ? samples.size()
                                 : std::min(config.minibatch_size, samples.size());
      std::vector<PolicySample> chunk;
      double loss_sum = 0.0, clip_sum = 0.0;
      std::size_t chunks = 0;
      for (std::size_t epoch = 0; epoch < config.ppo_epochs; ++epoch) {
        const auto order = mb == samples.size() ? std::vector<std::size_t>()
                                                : permutation(samples.size(), rng);
        for (std::size_t start = 0; start < samples.size(); start += mb) {
          chunk.clear();
          for (std::size_t k = start; k < std::min(start + mb, samples.size()); ++k) {
            chunk.push_back(samples[order.empty() ? k : order[k]]);
          }
          const PpoResult r = ppo_surrogate(chunk, params, config.ppo_clip);
          require_finite(r.loss, "surrogate loss");
          if (epoch == 0) {
            loss_sum += r.loss;
            clip_sum += r.clip_fraction;
            ++chunks;
          }
          std::vector<double> g(r.loss_grad.size());
          for (std::size_t i = 0; i < g.size(); ++i) g[i] = -r.loss_grad[i];
          if (epoch == 0 && start == 0) st.reward_term_norm = clip_grad_norm(g, INFINITY);
          apply(std::move(g), chunk);
        }
      }
      st.surrogate_loss = loss_sum / static_cast<double>(chunks);
      st.clip_fraction = clip_sum / static_cast<double>(chunks);
      break;
    }
    case UpdateMode::kAugmented: {
      GradEstimate g = stage == Stage::kMia ? augmented_gradient(agents, params, config)
                                            : policy_gradient(agents, params);
      st.reward_term_norm = g.reward_term_norm;
      st.mi_term_norm = g.mi_term_norm;
      apply(std::move(g.grad), samples);
      break;
    }
    case UpdateMode::kLiteral: {
      std::vector<double> g;
      if (stage == Stage::kMia) {
        g = mia_loss_gradient(agents, params);
      } else if (frozen && !frozen->batch.empty()) {
        const AgentSamples fs{&frozen->batch, &frozen->values};
        const PolicyParams* p = &params;
        g = cam_loss_gradient(std::span(&fs, 1), std::span(&p, 1), 0);
      } else {
        g.assign(params.size(), 0.0);
      }
      st.reward_term_norm = clip_grad_norm(g, INFINITY);
      apply(std::move(g), samples);
      break;
    }
  }

  if (config.value_learning_rate > 0.0) {
    std::vector<Observation> obs;
    std::vector<AgentId> ids;
    std::vector<double> targets;
    for (std::size_t i = 0; i < batches.size(); ++i) {
      for (std::size_t k = 0; k < batches[i].transitions.size(); ++k) {
        obs.push_back(batches[i].transitions[k].state);
        ids.push_back(batches[i].agent);
        targets.push_back(values[i].q[k]);
      }
    }
    for (std::size_t e = 0; e < config.value_epochs; ++e) {
      const double l = value_regression_step(value, obs, ids, targets, config.value_learning_rate);
      if (e == 0) st.value_loss = l;
    }
    require_finite(st.value_loss, "value loss");
  }
  return st;
}

bool convergence_check(std::span<const double> winrate_history, double threshold,
                       std::size_t patience) {
  if (patience == 0 || winrate_history.size() < patience) return false;
  for (std::size_t k = winrate_history.size() - patience; k < winrate_history.size(); ++k) {
    if (!(std::abs(winrate_history[k] - 0.5) <= threshold)) return false;
  }
  return true;
}

namespace {

enum Stream : std::uint64_t {
  kInitStream = 1,
  kPayoffStream = 2,
  kCollectStream = 3,
  kProgressStream = 4,
  kUpdateStream = 5,
  kCamInitStream = 11,
  kCamCollectStream = 12,
  kCamEvalStream = 13,
  kCamUpdateStream = 14,
};

std::uint64_t seed_for(std::uint64_t master, Stream stream, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c = 0) {
  return derive_seed(derive_seed(derive_seed(master, stream, a), b, c), 0, 0);
}

PayoffMatrix evaluate_population(const RunConfig& cfg, const PolicyParams& params,
                                 std::size_t games, std::uint64_t seed, std::size_t workers) {
  const std::size_t n = cfg.population_size;
  PayoffMatrix u(n);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = x + 1; y < n; ++y) {
      const double s = match_score(cfg.env, {&params, AgentId{x}}, {&params, AgentId{y}}, games,
                                   derive_seed(seed, x, y), workers);
      u.record(x, y, s * static_cast<double>(games), games);
    }
  }
  return u;
}

// Mean score of `next` against `prev` over ordered pairs of distinct ids.
double population_score(const RunConfig& cfg, const PolicyParams& next, const PolicyParams& prev,
                        std::size_t games, std::uint64_t seed, std::size_t workers) {
  const std::size_t n = cfg.population_size;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      if (x == y) continue;
      total += match_score(cfg.env, {&next, AgentId{x}}, {&prev, AgentId{y}}, games,
                           derive_seed(seed, x, y), workers);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

}  // namespace

MiaResult mia_train(const RunConfig& config, const TrainHooks& hooks) {
  config.validate();
  const std::size_t n = config.population_size;
  const std::uint64_t master = config.master_seed;
  const std::size_t games = config.resolved_eval_games();
  Rng init(derive_seed(master, kInitStream, 0));
  PolicyParams theta = init_policy(config.arch(), init, config.policy.init_scale);
  MiaResult res{{}, init_value_head(config.arch(), init, config.policy.init_scale), {}};
  res.store.add(theta, "mia", master);
  std::vector<double> progress;

  for (std::size_t tau = 1; tau <= config.generations; ++tau) {
    GenerationMetrics m;
    m.tau = tau;
    try {
      const PayoffMatrix u = evaluate_population(
          config, theta, games, seed_for(master, kPayoffStream, tau, 0), hooks.workers);
      const InteractionGraph graph = graph_solve(u, config.solver_exponent);
      m.payoff = u.matrix();
      m.sigma = graph.sigma;
      const PolicyParams anchor = theta;

      for (std::size_t k = 0; k < config.updates_per_generation; ++k) {
        std::vector<TrajectoryBatch> batches;
        for (std::size_t x = 0; x < n; ++x) {
          std::vector<OpponentHandle> handles;
          std::vector<double> weights;
          const std::size_t stored = res.store.size();
          for (std::size_t y = 0; y < n; ++y) {
            if (y == x) continue;
            const double s = graph.sigma[x][y];
            handles.push_back({&theta, AgentId{y}, OpponentSource::kLive, 0});
            weights.push_back(s * (1.0 - config.past_mix));
            if (config.past_mix <= 0.0) continue;
            for (std::size_t g = 0; g < stored; ++g) {
              handles.push_back(
                  {&res.store.at(g).params, AgentId{y}, OpponentSource::kGeneration, g});
              weights.push_back(s * config.past_mix / static_cast<double>(stored));
            }
          }
          batches.push_back(npl_collect(config.env, {&theta, AgentId{x}}, weights, handles,
                                        config.episodes_per_generation,
                                        seed_for(master, kCollectStream, tau, k, x),
                                        config.objective.state_buckets, hooks.workers)
                                .batch);
        }
        m.update = policy_update(theta, res.value, batches, config.objective,
                                 config.objective.learning_rate,
                                 config.objective.anchor_kl > 0.0 ? &anchor : nullptr, Stage::kMia,
                                 seed_for(master, kUpdateStream, tau, k));
      }
      res.store.add(theta, "mia", seed_for(master, kCollectStream, tau, 0));
      m.winrate_vs_prev =
          population_score(config, theta, res.store.at(tau - 1).params, games,
                           seed_for(master, kProgressStream, tau, 0), hooks.workers);
      m.epsilon = std::abs(m.winrate_vs_prev - 0.5);
    } catch (const TrainingError&) {
      throw;
    } catch (const std::exception& e) {
      throw TrainingError(tau, e.what());
    }
    progress.push_back(m.winrate_vs_prev);
    res.state.tau = tau;
    res.state.converged = convergence_check(progress, config.convergence.threshold,
                                            config.convergence.patience);
    res.state.history.push_back(m);
    if (hooks.on_generation) hooks.on_generation(m);
    if (res.state.converged && config.convergence.early_stop) break;
  }
  return res;
}

CamResult cam_specialize(const GenerationStore& mia_store, const ValueHead* mia_value,
                         const RunConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (mia_store.empty()) throw std::invalid_argument("missing stage-1 checkpoint");
  const PolicyParams& frozen = mia_store.latest().params;
  const std::size_t n = config.population_size;
  if (frozen.arch.n_ids != n) {
    throw std::invalid_argument("stage-1 checkpoint population size differs from config");
  }
  const CamConfig& cc = config.cam;
  const std::uint64_t master = config.master_seed;
  const double lr = cc.learning_rate > 0.0 ? cc.learning_rate : config.objective.learning_rate;

  CamResult res;
  std::vector<ValueHead> values;
  Rng init(derive_seed(master, kCamInitStream, 0));
  for (std::size_t x = 0; x < n; ++x) {
    res.specialists.push_back(clone_for_specialist(frozen, AgentId{x}));
    values.push_back(mia_value != nullptr
                         ? *mia_value
                         : init_value_head(frozen.arch, init, config.policy.init_scale));
  }
  std::vector<PolicyParams> pool;
  if (cc.include_specialists_from_start) pool = res.specialists;

  auto evaluate_row = [&](std::size_t x, std::uint64_t seed) {
    std::vector<double> row(n, 0.5);
    for (std::size_t y = 0; y < n; ++y) {
      if (y == x) continue;
      const PolicyParams& opp = pool.empty() ? frozen : pool[y];
      row[y] = match_score(config.env, {&res.specialists[x], AgentId{x}}, {&opp, AgentId{y}},
                           cc.eval_games, derive_seed(seed, x, y), hooks.workers);
    }
    return row;
  };

  std::vector<std::vector<double>> u(n);
  for (std::size_t x = 0; x < n; ++x) u[x] = evaluate_row(x, seed_for(master, kCamEvalStream, 0, x));

  for (std::size_t sweep = 1; sweep <= cc.sweeps; ++sweep) {
    SweepMetrics m;
    m.sweep = sweep;
    for (std::size_t x = 0; x < n; ++x) {
      const std::vector<double> row = graph_solve_row(u[x], config.solver_exponent, x);
      double vs_mia = 0.0;
      std::size_t vs_mia_games = 0;
      UpdateStats last;
      for (std::size_t k = 0; k < cc.updates_per_sweep; ++k) {
        std::vector<OpponentHandle> handles;
        std::vector<double> weights;
        for (std::size_t y = 0; y < n; ++y) {
          if (y == x) continue;
          const double w_mia = pool.empty() ? 1.0 : cc.mia_weight;
          handles.push_back({&frozen, AgentId{y}, OpponentSource::kFrozenMia, 0});
          weights.push_back(row[y] * w_mia);
          if (!pool.empty()) {
            handles.push_back({&pool[y], AgentId{y}, OpponentSource::kSpecialist, y});
            weights.push_back(row[y] * (1.0 - w_mia));
          }
        }
        NplBatch nb = npl_collect(config.env, {&res.specialists[x], AgentId{x}}, weights, handles,
                                  cc.episodes_per_sweep,
                                  seed_for(master, kCamCollectStream, sweep, k, x),
                                  config.objective.state_buckets, hooks.workers);
        for (std::size_t e = 0; e < nb.episode_scores.size(); ++e) {
          if (handles[nb.episode_opponent[e]].source != OpponentSource::kFrozenMia) continue;
          vs_mia += nb.episode_scores[e];
          ++vs_mia_games;
        }
        try {
          last = policy_update(res.specialists[x], values[x], std::span(&nb.batch, 1),
                               config.objective, lr, nullptr, Stage::kCam,
                               seed_for(master, kCamUpdateStream, sweep, k, x));
        } catch (const std::exception& e) {
          throw TrainingError(sweep, std::string("specialist ") + std::to_string(x) + ": " +
                                         e.what());
        }
      }
      u[x] = evaluate_row(x, seed_for(master, kCamEvalStream, sweep, x));
      double pool_mean = 0.0;
      for (std::size_t y = 0; y < n; ++y) {
        if (y != x) pool_mean += u[x][y] / static_cast<double>(n - 1);
      }
      m.winrate_vs_mia.push_back(vs_mia_games ? vs_mia / static_cast<double>(vs_mia_games) : 0.5);
      m.winrate_vs_pool.push_back(pool_mean);
      m.cam_loss.push_back(last.literal_loss);
      m.update.push_back(last);
    }
    pool = res.specialists;
    res.history.push_back(std::move(m));
  }
  return res;
}

}  // namespace cam
