#include "cam/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cam {

using nlohmann::ordered_json;

namespace {

// Walks one JSON object, remembering which keys were read so leftovers can
// be reported as unknown.
class Reader {
 public:
  Reader(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const ordered_json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const auto* v = get(key)) {
      if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      out = v->get<double>();
    }
  }

  template <class T>
  void count(const std::string& key, T& out) {
    if (const auto* v = get(key)) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                      v->get<std::int64_t>() < 0)) {
        throw ConfigError(field(key), "expected a non-negative integer");
      }
      out = static_cast<T>(v->get<std::uint64_t>());
    }
  }

  void integer(const std::string& key, int& out) {
    if (const auto* v = get(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
      out = v->get<int>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const auto* v = get(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const auto* v = get(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

 private:
  const ordered_json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto guarded(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(field, e.what());
  }
}

std::vector<std::vector<double>> read_table(const ordered_json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field, "expected an array of rows");
  std::vector<std::vector<double>> t;
  for (const auto& row : j) {
    if (!row.is_array()) throw ConfigError(field, "expected an array of rows");
    t.emplace_back();
    for (const auto& v : row) {
      if (!v.is_number()) throw ConfigError(field, "expected numbers");
      t.back().push_back(v.get<double>());
    }
  }
  return t;
}

SkillSpec read_skill(const ordered_json& j, const std::string& path) {
  Reader r(j, path);
  SkillSpec s;
  std::string category = to_string(s.category);
  r.string("category", category);
  s.category = guarded(r.field("category"), [&] { return skill_category_from_string(category); });
  r.integer("cooldown", s.cooldown);
  r.integer("damage", s.damage);
  r.integer("range", s.range);
  r.integer("mana_cost", s.mana_cost);
  r.integer("effect_duration", s.effect_duration);
  return s;
}

CharacterSpec read_character(const ordered_json& j, const std::string& path) {
  Reader r(j, path);
  CharacterSpec c;
  r.string("name", c.name);
  r.integer("move_speed", c.move_speed);
  r.integer("attack_range", c.attack_range);
  r.integer("attack_damage", c.attack_damage);
  r.integer("max_hp", c.max_hp);
  r.integer("max_mana", c.max_mana);
  if (const auto* skills = r.get("skills")) {
    if (!skills->is_array()) throw ConfigError(r.field("skills"), "expected an array");
    for (std::size_t k = 0; k < skills->size(); ++k) {
      c.skills.push_back(read_skill((*skills)[k], r.field("skills") + "[" + std::to_string(k) + "]"));
    }
  }
  guarded(path, [&] { c.validate(); return 0; });
  return c;
}

EnvSpec read_env(const ordered_json& j) {
  Reader r(j, "env");
  EnvSpec env;
  std::string kind = "matrix";
  r.string("kind", kind);
  if (kind == "matrix") {
    env.kind = EnvKind::kMatrix;
    std::string game;
    r.string("game", game);
    const auto* payoff = r.get("payoff");
    std::string name;
    r.string("name", name);
    if (payoff != nullptr && !game.empty()) {
      throw ConfigError("env.game", "give either game or payoff, not both");
    }
    if (payoff != nullptr) {
      env.matrix.payoff = read_table(*payoff, "env.payoff");
      env.matrix.name = name.empty() ? "custom" : name;
    } else {
      env.matrix = guarded("env.game", [&] {
        return games::by_name(game.empty() ? (name.empty() ? "biased_rps" : name) : game);
      });
    }
    guarded("env.payoff", [&] { env.matrix.validate(); return 0; });
  } else if (kind == "duel") {
    env.kind = EnvKind::kDuel;
    r.integer("arena_length", env.duel.arena_length);
    r.integer("tick_limit", env.duel.tick_limit);
    r.integer("mana_regen_interval", env.duel.mana_regen_interval);
    if (const auto* w = r.get("reward_weights")) {
      Reader rw(*w, "env.reward_weights");
      rw.number("own_hp", env.duel.reward_weights.own_hp);
      rw.number("opp_hp", env.duel.reward_weights.opp_hp);
      rw.number("result", env.duel.reward_weights.result);
      rw.number("combo", env.duel.reward_weights.combo);
      rw.number("mana", env.duel.reward_weights.mana);
    }
    if (const auto* roster = r.get("roster")) {
      if (!roster->is_array() || roster->empty()) {
        throw ConfigError("env.roster", "expected a non-empty array");
      }
      env.duel.roster.clear();
      for (std::size_t k = 0; k < roster->size(); ++k) {
        env.duel.roster.push_back(
            read_character((*roster)[k], "env.roster[" + std::to_string(k) + "]"));
      }
    }
  } else {
    throw ConfigError("env.kind", "expected \"matrix\" or \"duel\"");
  }
  return env;
}

ordered_json write_env(const EnvSpec& env) {
  ordered_json j;
  if (env.kind == EnvKind::kMatrix) {
    j["kind"] = "matrix";
    j["name"] = env.matrix.name;
    j["payoff"] = env.matrix.payoff;
    return j;
  }
  const DuelSettings& d = env.duel;
  j["kind"] = "duel";
  j["arena_length"] = d.arena_length;
  j["tick_limit"] = d.tick_limit;
  j["mana_regen_interval"] = d.mana_regen_interval;
  j["reward_weights"] = {{"own_hp", d.reward_weights.own_hp},
                         {"opp_hp", d.reward_weights.opp_hp},
                         {"result", d.reward_weights.result},
                         {"combo", d.reward_weights.combo},
                         {"mana", d.reward_weights.mana}};
  j["roster"] = ordered_json::array();
  for (const auto& c : d.roster) {
    ordered_json cj;
    cj["name"] = c.name;
    cj["move_speed"] = c.move_speed;
    cj["attack_range"] = c.attack_range;
    cj["attack_damage"] = c.attack_damage;
    cj["max_hp"] = c.max_hp;
    cj["max_mana"] = c.max_mana;
    cj["skills"] = ordered_json::array();
    for (const auto& s : c.skills) {
      cj["skills"].push_back({{"category", to_string(s.category)},
                              {"cooldown", s.cooldown},
                              {"damage", s.damage},
                              {"range", s.range},
                              {"mana_cost", s.mana_cost},
                              {"effect_duration", s.effect_duration}});
    }
    j["roster"].push_back(cj);
  }
  return j;
}

ordered_json write_arch(const PolicyArch& a) {
  return {{"kind", to_string(a.kind)}, {"n_ids", a.n_ids},     {"n_actions", a.n_actions},
          {"n_states", a.n_states},    {"obs_dim", a.obs_dim}, {"hidden", a.hidden}};
}

PolicyArch read_arch(const ordered_json& j) {
  Reader r(j, "policy");
  PolicyArch a;
  std::string kind = to_string(a.kind);
  r.string("kind", kind);
  a.kind = guarded("policy.kind", [&] { return policy_kind_from_string(kind); });
  r.count("n_ids", a.n_ids);
  r.count("n_actions", a.n_actions);
  r.count("n_states", a.n_states);
  r.count("obs_dim", a.obs_dim);
  r.count("hidden", a.hidden);
  return a;
}

std::vector<double> read_doubles(const ordered_json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(field, "expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  RunConfig c;
  {
    Reader r(j, "");
    if (const auto* env = r.get("env")) c.env = read_env(*env);
    if (const auto* p = r.get("policy")) {
      Reader rp(*p, "policy");
      std::string kind = to_string(c.policy.kind);
      rp.string("kind", kind);
      c.policy.kind = guarded("policy.kind", [&] { return policy_kind_from_string(kind); });
      rp.count("hidden", c.policy.hidden);
      rp.number("init_scale", c.policy.init_scale);
    }
    r.count("population_size", c.population_size);
    r.count("generations", c.generations);
    r.count("episodes_per_generation", c.episodes_per_generation);
    r.count("updates_per_generation", c.updates_per_generation);
    if (const auto* o = r.get("objective")) {
      Reader ro(*o, "objective");
      ObjectiveConfig& ob = c.objective;
      ro.number("gamma", ob.gamma);
      ro.number("lambda_mi", ob.lambda_mi);
      ro.number("ppo_clip", ob.ppo_clip);
      ro.count("n_step", ob.n_step);
      ro.number("learning_rate", ob.learning_rate);
      std::string mi = to_string(ob.mi_mode);
      ro.string("mi_mode", mi);
      ob.mi_mode = guarded("objective.mi_mode", [&] { return mi_mode_from_string(mi); });
      ro.count("state_buckets", ob.state_buckets);
      ro.count("ppo_epochs", ob.ppo_epochs);
      ro.count("minibatch_size", ob.minibatch_size);
      ro.number("max_grad_norm", ob.max_grad_norm);
      ro.number("value_learning_rate", ob.value_learning_rate);
      ro.count("value_epochs", ob.value_epochs);
      ro.boolean("normalize_advantages", ob.normalize_advantages);
      ro.number("anchor_kl", ob.anchor_kl);
      std::string mode = to_string(ob.update_mode);
      ro.string("update_mode", mode);
      ob.update_mode = guarded("objective.update_mode", [&] { return update_mode_from_string(mode); });
    }
    r.number("solver_exponent", c.solver_exponent);
    r.count("eval_games", c.eval_games);
    if (const auto* v = r.get("convergence")) {
      Reader rc(*v, "convergence");
      rc.number("threshold", c.convergence.threshold);
      rc.count("patience", c.convergence.patience);
      rc.boolean("early_stop", c.convergence.early_stop);
    }
    r.number("past_mix", c.past_mix);
    r.count("master_seed", c.master_seed);
    if (const auto* v = r.get("cam")) {
      Reader rc(*v, "cam");
      rc.count("sweeps", c.cam.sweeps);
      rc.count("episodes_per_sweep", c.cam.episodes_per_sweep);
      rc.count("updates_per_sweep", c.cam.updates_per_sweep);
      rc.count("eval_games", c.cam.eval_games);
      rc.number("mia_weight", c.cam.mia_weight);
      rc.boolean("include_specialists_from_start", c.cam.include_specialists_from_start);
      rc.number("learning_rate", c.cam.learning_rate);
    }
  }
  guarded("", [&] { c.validate(); return 0; });
  return c;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("", e.what());
  }
  return parse_config(text);
}

std::string serialize_config(const RunConfig& c) {
  ordered_json j;
  j["env"] = write_env(c.env);
  j["policy"] = {{"kind", to_string(c.policy.kind)},
                 {"hidden", c.policy.hidden},
                 {"init_scale", c.policy.init_scale}};
  j["population_size"] = c.population_size;
  j["generations"] = c.generations;
  j["episodes_per_generation"] = c.episodes_per_generation;
  j["updates_per_generation"] = c.updates_per_generation;
  const ObjectiveConfig& o = c.objective;
  j["objective"] = {{"gamma", o.gamma},
                    {"lambda_mi", o.lambda_mi},
                    {"ppo_clip", o.ppo_clip},
                    {"n_step", o.n_step},
                    {"learning_rate", o.learning_rate},
                    {"mi_mode", to_string(o.mi_mode)},
                    {"state_buckets", o.state_buckets},
                    {"ppo_epochs", o.ppo_epochs},
                    {"minibatch_size", o.minibatch_size},
                    {"max_grad_norm", o.max_grad_norm},
                    {"value_learning_rate", o.value_learning_rate},
                    {"value_epochs", o.value_epochs},
                    {"normalize_advantages", o.normalize_advantages},
                    {"anchor_kl", o.anchor_kl},
                    {"update_mode", to_string(o.update_mode)}};
  j["solver_exponent"] = c.solver_exponent;
  j["eval_games"] = c.eval_games;
  j["convergence"] = {{"threshold", c.convergence.threshold},
                      {"patience", c.convergence.patience},
                      {"early_stop", c.convergence.early_stop}};
  j["past_mix"] = c.past_mix;
  j["master_seed"] = c.master_seed;
  j["cam"] = {{"sweeps", c.cam.sweeps},
              {"episodes_per_sweep", c.cam.episodes_per_sweep},
              {"updates_per_sweep", c.cam.updates_per_sweep},
              {"eval_games", c.cam.eval_games},
              {"mia_weight", c.cam.mia_weight},
              {"include_specialists_from_start", c.cam.include_specialists_from_start},
              {"learning_rate", c.cam.learning_rate}};
  return j.dump(2) + "\n";
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_hash(const RunConfig& config) { return hex64(fnv1a(serialize_config(config))); }

std::string serialize_checkpoint(const Checkpoint& ck) {
  ordered_json j;
  j["format_version"] = ck.format_version;
  j["stage"] = ck.stage;
  j["generation"] = ck.generation;
  if (ck.agent) j["agent"] = *ck.agent;
  j["policy"] = write_arch(ck.params.arch);
  j["params"] = ck.params.flat;
  if (ck.value) j["value_params"] = ck.value->flat;
  j["master_seed"] = ck.master_seed;
  j["config_hash"] = ck.config_hash;
  return j.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError("checkpoint", std::string("malformed JSON: ") + e.what());
  }
  Checkpoint ck;
  Reader r(j, "");
  ck.format_version = 0;
  r.integer("format_version", ck.format_version);
  if (ck.format_version != 1) throw ConfigError("format_version", "unsupported checkpoint format");
  r.string("stage", ck.stage);
  r.count("generation", ck.generation);
  if (const auto* a = r.get("agent")) {
    if (!a->is_number_unsigned()) throw ConfigError("agent", "expected a non-negative integer");
    ck.agent = a->get<std::size_t>();
  }
  const auto* arch = r.get("policy");
  const auto* params = r.get("params");
  if (arch == nullptr || params == nullptr) throw ConfigError("policy", "missing policy or params");
  ck.params.arch = read_arch(*arch);
  ck.params.flat = read_doubles(*params, "params");
  guarded("params", [&] { ck.params.validate(); return 0; });
  if (const auto* v = r.get("value_params")) {
    ck.value = ValueHead{ck.params.arch, read_doubles(*v, "value_params")};
    if (ck.value->flat.size() != ck.params.arch.value_param_count()) {
      throw ConfigError("value_params", "parameter count does not match architecture");
    }
  }
  r.count("master_seed", ck.master_seed);
  r.string("config_hash", ck.config_hash);
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace cam
