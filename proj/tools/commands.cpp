#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>

#include "CLI11.hpp"
#include "cam/check.hpp"
#include "cam/config.hpp"
#include "cam/eval.hpp"
#include "cam/parallel.hpp"
#include "cam/population.hpp"
#include "json.hpp"

namespace cam {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

ordered_json stats_json(const UpdateStats& s) {
  return {{"objective_J", s.objective_J},       {"mi", s.mi},
          {"literal_loss", s.literal_loss},     {"surrogate_loss", s.surrogate_loss},
          {"clip_fraction", s.clip_fraction},   {"kl_anchor", s.kl_anchor},
          {"value_loss", s.value_loss},         {"grad_norm", s.grad_norm},
          {"reward_term_norm", s.reward_term_norm}, {"mi_term_norm", s.mi_term_norm},
          {"samples", s.samples}};
}

std::vector<std::string> id_labels(std::size_t n, const std::string& prefix) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// Files named <prefix><n>.ckpt in `dir`, keyed by n.
std::map<std::size_t, fs::path> numbered(const fs::path& dir, const std::string& prefix) {
  std::map<std::size_t, fs::path> out;
  if (!fs::is_directory(dir)) return out;
  const std::regex re(prefix + "([0-9]+)\\.ckpt");
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (std::regex_match(name, m, re)) out[std::stoul(m[1].str())] = e.path();
  }
  return out;
}

std::map<fs::path, std::uint64_t> hash_files(const std::map<std::size_t, fs::path>& files) {
  std::map<fs::path, std::uint64_t> out;
  for (const auto& [n, p] : files) out[p] = fnv1a(read_file(p.string()));
  return out;
}

RunConfig resolve_config(const std::string& path, std::optional<std::uint64_t> seed) {
  RunConfig c = load_config(path);
  if (seed) c.master_seed = *seed;
  return c;
}

void prepare_out(const std::string& out_dir, const RunConfig& config) {
  fs::create_directories(out_dir);
  write_file((fs::path(out_dir) / "config.json").string(), serialize_config(config));
}

int train_mia(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed, std::size_t workers, std::ostream& out) {
  const RunConfig config = resolve_config(config_path, seed);
  prepare_out(out_dir, config);
  const fs::path dir(out_dir);
  const std::string hash = config_hash(config);
  std::ofstream metrics(dir / "metrics.jsonl", std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot write metrics.jsonl");

  TrainHooks hooks;
  hooks.workers = workers;
  hooks.on_generation = [&](const GenerationMetrics& m) {
    ordered_json j;
    j["generation"] = m.tau;
    j["winrate_vs_prev"] = m.winrate_vs_prev;
    j["epsilon"] = m.epsilon;
    j["sigma"] = m.sigma;
    j["update"] = stats_json(m.update);
    metrics << j.dump() << "\n" << std::flush;
    WinRateMatrix w;
    w.w = m.payoff;
    w.row_labels = w.col_labels = id_labels(m.payoff.size(), "id");
    write_file((dir / ("payoff_gen" + std::to_string(m.tau) + ".csv")).string(), matrix_csv(w));
  };
  const MiaResult result = mia_train(config, hooks);

  for (const auto& e : result.store.entries()) {
    Checkpoint ck;
    ck.stage = e.stage;
    ck.generation = e.generation;
    ck.params = e.params;
    if (e.generation + 1 == result.store.size()) ck.value = result.value;
    ck.master_seed = config.master_seed;
    ck.config_hash = hash;
    save_checkpoint((dir / ("gen_" + std::to_string(e.generation) + ".ckpt")).string(), ck);
  }
  const double eps = result.state.history.empty() ? 0.0 : result.state.history.back().epsilon;
  out << "generations=" << result.state.tau << " converged=" << (result.state.converged ? 1 : 0)
      << " epsilon=" << fixed(eps) << "\n";
  return 0;
}

int train_cam(const std::string& mia_dir, const std::string& config_path,
              const std::string& out_dir, std::optional<std::uint64_t> seed, std::size_t workers,
              std::ostream& out) {
  const auto gens = numbered(mia_dir, "gen_");
  if (gens.empty()) throw std::runtime_error("no MIA checkpoint in " + mia_dir);
  const std::string cfg_path =
      config_path.empty() ? (fs::path(mia_dir) / "config.json").string() : config_path;
  const RunConfig config = resolve_config(cfg_path, seed);
  const auto before = hash_files(gens);

  GenerationStore store;
  std::optional<ValueHead> value;
  for (const auto& [g, path] : gens) {
    Checkpoint ck = load_checkpoint(path.string());
    if (ck.generation != store.size()) {
      throw std::runtime_error("MIA checkpoints are not contiguous at " + path.string());
    }
    if (ck.params.arch != config.arch()) {
      throw std::runtime_error("checkpoint architecture does not match the config: " +
                               path.string());
    }
    value = ck.value;
    store.add(std::move(ck.params), ck.stage, ck.master_seed);
  }

  prepare_out(out_dir, config);
  const fs::path dir(out_dir);
  std::ofstream metrics(dir / "metrics.jsonl", std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot write metrics.jsonl");
  TrainHooks hooks;
  hooks.workers = workers;
  const CamResult result = cam_specialize(store, value ? &*value : nullptr, config, hooks);
  for (const auto& s : result.history) {
    ordered_json j;
    j["sweep"] = s.sweep;
    j["winrate_vs_mia"] = s.winrate_vs_mia;
    j["winrate_vs_pool"] = s.winrate_vs_pool;
    j["cam_loss"] = s.cam_loss;
    j["update"] = ordered_json::array();
    for (const auto& u : s.update) j["update"].push_back(stats_json(u));
    metrics << j.dump() << "\n";
  }

  const std::string hash = config_hash(config);
  for (std::size_t n = 0; n < result.specialists.size(); ++n) {
    Checkpoint ck;
    ck.stage = "cam";
    ck.generation = result.history.size();
    ck.agent = n;
    ck.params = result.specialists[n];
    ck.master_seed = config.master_seed;
    ck.config_hash = hash;
    save_checkpoint((dir / ("spec_" + std::to_string(n) + ".ckpt")).string(), ck);
  }

  if (hash_files(numbered(mia_dir, "gen_")) != before) {
    throw std::runtime_error("MIA checkpoints changed during specialization");
  }
  out << "specialists=" << result.specialists.size() << " sweeps=" << result.history.size()
      << "\n";
  out << "mia checkpoints unchanged (" << before.size() << " files)\n";
  return 0;
}

struct Population {
  std::deque<PolicyParams> params;
  std::vector<LabeledActor> actors;
  std::optional<std::string> config_path;

  std::vector<Actor> plain() const {
    std::vector<Actor> out;
    for (const auto& a : actors) out.push_back(a.actor);
    return out;
  }
};

void add_checkpoint(Population& pop, const fs::path& path, const std::string& label) {
  Checkpoint ck = load_checkpoint(path.string());
  pop.params.push_back(std::move(ck.params));
  const PolicyParams* p = &pop.params.back();
  if (ck.agent) {
    if (*ck.agent >= p->arch.n_ids) throw std::runtime_error("agent id out of range in " + path.string());
    pop.actors.push_back({{p, AgentId{*ck.agent}}, label});
    return;
  }
  for (std::size_t i = 0; i < p->arch.n_ids; ++i) {
    pop.actors.push_back({{p, AgentId{i}}, label + "/id" + std::to_string(i)});
  }
}

// A run directory (its specialists, else its latest generation) or a single
// checkpoint file.
Population load_population(const std::string& input) {
  Population pop;
  const fs::path path(input);
  if (fs::is_directory(path)) {
    const std::string name = path.filename().empty() ? path.parent_path().filename().string()
                                                     : path.filename().string();
    const auto specs = numbered(path, "spec_");
    if (!specs.empty()) {
      for (const auto& [n, p] : specs) add_checkpoint(pop, p, name + "/spec" + std::to_string(n));
    } else {
      const auto gens = numbered(path, "gen_");
      if (gens.empty()) throw std::runtime_error("no checkpoints in " + input);
      add_checkpoint(pop, gens.rbegin()->second, name);
    }
    if (fs::exists(path / "config.json")) pop.config_path = (path / "config.json").string();
  } else if (fs::is_regular_file(path)) {
    add_checkpoint(pop, path, path.stem().string());
    const fs::path cfg = path.parent_path() / "config.json";
    if (fs::exists(cfg)) pop.config_path = cfg.string();
  } else {
    throw std::runtime_error("no such input: " + input);
  }
  return pop;
}

void check_compatible(const EnvSpec& env, const Population& pop, const std::string& what) {
  for (const auto& p : pop.params) {
    const PolicyArch& a = p.arch;
    const bool ok = a.n_actions == env.n_actions() &&
                    (a.kind == PolicyKind::kMlp ? a.obs_dim == env.obs_dim()
                                                : a.n_states == env.n_states());
    if (!ok) throw std::runtime_error("incompatible checkpoint architecture in " + what);
  }
}

struct EvalContext {
  RunConfig config;
  Population inputs;
  std::optional<Population> other;
  std::optional<Population> opponents;
};

EvalContext eval_context(const std::string& config_path, const std::string& inputs,
                         const std::string& other, const std::string& opponents) {
  EvalContext ctx;
  ctx.inputs = load_population(inputs);
  if (!other.empty()) ctx.other = load_population(other);
  if (!opponents.empty()) ctx.opponents = load_population(opponents);
  std::string cfg = config_path;
  if (cfg.empty() && ctx.inputs.config_path) cfg = *ctx.inputs.config_path;
  if (cfg.empty()) throw ConfigError("config", "no --config given and none found beside the inputs");
  ctx.config = load_config(cfg);
  check_compatible(ctx.config.env, ctx.inputs, inputs);
  if (ctx.other) check_compatible(ctx.config.env, *ctx.other, other);
  if (ctx.opponents) check_compatible(ctx.config.env, *ctx.opponents, opponents);
  return ctx;
}

std::vector<std::string> labels_of(const Population& pop) {
  std::vector<std::string> out;
  for (const auto& a : pop.actors) out.push_back(a.label);
  return out;
}

std::vector<ActionFrequencyVector> frequency_vectors(const EnvSpec& env, const Population& pop,
                                                     const std::vector<Actor>& opponents,
                                                     std::size_t episodes, std::uint64_t seed,
                                                     std::size_t workers) {
  std::vector<ActionFrequencyVector> out;
  for (std::size_t x = 0; x < pop.actors.size(); ++x) {
    out.push_back(action_frequency_vector(env, pop.actors[x].actor, opponents, episodes,
                                          derive_seed(seed, 21, x), workers));
  }
  return out;
}

struct EvalOptions {
  std::string config;
  std::string inputs;
  std::string against;
  std::string baseline;
  std::string opponents;
  std::string out = ".";
  std::size_t games = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
};

int eval_matrix(const EvalOptions& o, std::ostream& out) {
  const EvalContext ctx = eval_context(o.config, o.inputs, o.against, "");
  const std::size_t games = o.games ? o.games : ctx.config.resolved_eval_games();
  const bool shared = !ctx.other;
  const auto& b = shared ? ctx.inputs.actors : ctx.other->actors;
  const WinRateMatrix m =
      win_rate_matrix(ctx.config.env, ctx.inputs.actors, b, games, o.seed, o.workers);
  fs::create_directories(o.out);
  write_file((fs::path(o.out) / "matrix.csv").string(), matrix_csv(m));
  out << "mean_win_rate=" << fixed(m.mean(shared)) << "\n";
  return 0;
}

int eval_diversity(const EvalOptions& o, std::ostream& out) {
  const EvalContext ctx = eval_context(o.config, o.inputs, o.baseline, o.opponents);
  const EnvSpec& env = ctx.config.env;
  const std::size_t episodes = o.games ? o.games : ctx.config.resolved_eval_games();
  const Population& opp = ctx.opponents ? *ctx.opponents : ctx.other ? *ctx.other : ctx.inputs;
  const std::vector<Actor> opponents = opp.plain();
  const auto cats = category_names(env);
  fs::create_directories(o.out);

  const auto vectors = frequency_vectors(env, ctx.inputs, opponents, episodes, o.seed, o.workers);
  const DiversityReport report = diversity_score(vectors);
  const auto labels = labels_of(ctx.inputs);
  write_file((fs::path(o.out) / "diversity.json").string(), diversity_json(report, labels));
  write_file((fs::path(o.out) / "radial.csv").string(),
             radial_csv(radial_export(vectors, labels, cats)));
  out << "expected_distance=" << fixed(report.expected_distance) << "\n";

  if (ctx.other) {
    const auto base = frequency_vectors(env, *ctx.other, opponents, episodes, o.seed, o.workers);
    const DiversityReport base_report = diversity_score(base);
    const auto base_labels = labels_of(*ctx.other);
    write_file((fs::path(o.out) / "baseline_diversity.json").string(),
               diversity_json(base_report, base_labels));
    write_file((fs::path(o.out) / "baseline_radial.csv").string(),
               radial_csv(radial_export(base, base_labels, cats)));
    out << "baseline_expected_distance=" << fixed(base_report.expected_distance) << "\n";
    if (base_report.expected_distance > 0.0) {
      out << "relative_change="
          << format_relative_change(base_report.expected_distance, report.expected_distance)
          << "\n";
    }
  }
  return 0;
}

int eval_mi(const EvalOptions& o, std::ostream& out) {
  const EvalContext ctx = eval_context(o.config, o.inputs, "", "");
  const std::size_t episodes = o.games ? o.games : ctx.config.resolved_eval_games();
  const MiReport r = mi_report(ctx.config.env, ctx.inputs.plain(), episodes,
                               ctx.config.objective.state_buckets, o.seed, o.workers);
  fs::create_directories(o.out);
  write_file((fs::path(o.out) / "mi.json").string(), mi_json(r, labels_of(ctx.inputs)));
  out << "aggregate_mi=" << fixed(r.aggregate, 6) << "\n";
  return 0;
}

int run_checks(const std::vector<CheckResult>& results, std::ostream& out) {
  const bool ok = print_checks(results, out);
  const auto failed = std::count_if(results.begin(), results.end(),
                                    [](const CheckResult& r) { return !r.passed; });
  out << (ok ? "all " + std::to_string(results.size()) + " checks passed"
             : std::to_string(failed) + " of " + std::to_string(results.size()) +
                   " checks failed")
      << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage population training on matrix games and the skirmish duel", "cam"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  std::string mia_dir;

  auto* mia = app.add_subcommand("train-mia", "Stage 1: train the shared conditional policy");
  mia->add_option("--config", config_path, "Run configuration (JSON)")->required();
  mia->add_option("--out", out_dir, "Run directory")->required();
  mia->add_option("--seed", seed, "Override the master seed");
  mia->add_option("--workers", workers, "Worker threads (0: all cores)");

  auto* cam = app.add_subcommand("train-cam", "Stage 2: specialize one policy per agent");
  cam->add_option("mia_dir", mia_dir, "Stage-1 run directory")->required();
  cam->add_option("--config", config_path, "Run configuration (default: the stage-1 copy)");
  cam->add_option("--out", out_dir, "Run directory")->required();
  cam->add_option("--seed", seed, "Override the master seed");
  cam->add_option("--workers", workers, "Worker threads (0: all cores)");

  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "Evaluate checkpoints");
  eval->require_subcommand(1);
  auto common = [&](CLI::App* c) {
    c->add_option("--inputs", eo.inputs, "Run directory or checkpoint")->required();
    c->add_option("--config", eo.config, "Run configuration (default: beside the inputs)");
    c->add_option("--out", eo.out, "Report directory");
    c->add_option("--games", eo.games, "Games or episodes per entry");
    c->add_option("--seed", eo.seed, "Evaluation seed");
    c->add_option("--workers", eo.workers, "Worker threads (0: all cores)");
  };
  auto* ematrix = eval->add_subcommand("matrix", "Win-rate matrix");
  common(ematrix);
  ematrix->add_option("--against", eo.against, "Column population (default: the inputs)");
  auto* ediv = eval->add_subcommand("diversity", "Behavioral diversity");
  common(ediv);
  ediv->add_option("--baseline", eo.baseline, "Population to compare against");
  ediv->add_option("--opponents", eo.opponents, "Opponent population (default: baseline or inputs)");
  auto* emi = eval->add_subcommand("mi", "Pairwise mutual information");
  common(emi);

  auto* check = app.add_subcommand("check", "Gradient and oracle self-checks");
  check->require_subcommand(1);
  auto* cgrad = check->add_subcommand("gradients", "Analytic gradients against finite differences");
  auto* coracle = check->add_subcommand("oracle", "Closed-form oracle values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*mia) return train_mia(config_path, out_dir, seed, workers, out);
    if (*cam) return train_cam(mia_dir, config_path, out_dir, seed, workers, out);
    if (*ematrix) return eval_matrix(eo, out);
    if (*ediv) return eval_diversity(eo, out);
    if (*emi) return eval_mi(eo, out);
    if (*cgrad) return run_checks(gradient_checks(), out);
    if (*coracle) return run_checks(oracle_checks(), out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace cam
