#include <string>

#include "cam/config.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cam;

namespace {

std::string field_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("defaults") {
  const RunConfig c = parse_config("{}");
  CHECK(c == RunConfig{});
  CHECK(c.objective.learning_rate == 1e-4);
  CHECK(c.convergence.threshold == 0.076);
  CHECK(c.convergence.patience == 2);
  CHECK(c.resolved_eval_games() == 200);
  RunConfig d;
  d.env.kind = EnvKind::kDuel;
  CHECK(d.resolved_eval_games() == 50);
}

TEST_CASE("config round trip is a fixed point") {
  RunConfig c;
  c.env.kind = EnvKind::kDuel;
  c.env.duel.arena_length = 9;
  c.env.duel.reward_weights.combo = 2.5;
  c.population_size = 4;
  c.policy.hidden = 24;
  c.objective.gamma = 0.9;
  c.objective.anchor_kl = 0.25;
  c.objective.mi_mode = MiMode::kExact;
  c.objective.update_mode = UpdateMode::kAugmented;
  c.cam.sweeps = 7;
  c.cam.include_specialists_from_start = false;
  c.master_seed = 123456789012345ULL;
  const std::string once = serialize_config(c);
  const RunConfig back = parse_config(once);
  CHECK(back == c);
  CHECK(serialize_config(back) == once);
  CHECK(config_hash(back) == config_hash(c));

  RunConfig m;
  m.env.matrix = {"custom", {{0.0, 1.5, -2.0}, {-1.5, 0.0, 0.25}, {2.0, -0.25, 0.0}}};
  CHECK(parse_config(serialize_config(m)) == m);
  CHECK(config_hash(m) != config_hash(c));
  CHECK(config_hash(m).size() == 16);
}

TEST_CASE("matrix games by name") {
  const RunConfig c = parse_config(R"({"env": {"kind": "matrix", "game": "matching_pennies"}})");
  CHECK(c.env.matrix == games::matching_pennies());
  CHECK(field_of(R"({"env": {"kind": "matrix", "game": "chess"}})") == "env.game");
  CHECK(field_of(R"({"env": {"kind": "matrix", "game": "rps", "payoff": [[0]]}})") == "env.game");
}

TEST_CASE("errors name the offending key") {
  CHECK(field_of(R"({"generatoins": 3})") == "generatoins");
  CHECK(field_of(R"({"objective": {"gama": 0.9}})") == "objective.gama");
  CHECK(field_of(R"({"objective": {"gamma": "high"}})") == "objective.gamma");
  CHECK(field_of(R"({"population_size": -2})") == "population_size");
  CHECK(field_of(R"({"population_size": 2.5})") == "population_size");
  CHECK(field_of(R"({"cam": {"include_specialists_from_start": 1}})") ==
        "cam.include_specialists_from_start");
  CHECK(field_of(R"({"policy": {"kind": "transformer"}})") == "policy.kind");
  CHECK(field_of(R"({"env": {"kind": "maze"}})") == "env.kind");
  CHECK(field_of(R"({"env": {"kind": "duel", "roster": [{"name": "x", "spd": 1}]}})")
            .rfind("env.roster", 0) == 0);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"objective": {"gamma": 1.0}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"population_size": 1})"), ConfigError);
}

TEST_CASE("checkpoint round trip") {
  Rng rng(3);
  for (const PolicyArch& arch : {test::tabular(3, 2, 4), test::mlp(5, 6, 4, 12)}) {
    Checkpoint c;
    c.stage = "cam";
    c.generation = 0;
    c.agent = 3;
    c.params = test::random_params(arch, 31, 3.0);
    Rng init(4);
    c.value = init_value_head(arch, init, 0.7);
    c.master_seed = 99;
    c.config_hash = config_hash(RunConfig{});
    const std::string text = serialize_checkpoint(c);
    const Checkpoint back = parse_checkpoint(text);
    CHECK(back.params == c.params);
    REQUIRE(back.value);
    CHECK(back.value->flat == c.value->flat);
    CHECK(back.agent == std::optional<std::size_t>(3));
    CHECK(back.stage == "cam");
    CHECK(back.config_hash == c.config_hash);
    CHECK(serialize_checkpoint(back) == text);
    for (int k = 0; k < 100; ++k) {
      const Observation s = test::random_obs(arch.obs_dim, rng, arch.n_states);
      const AgentId id{rng.below(arch.n_ids)};
      const ActionMask m = test::full_mask(arch.n_actions);
      const auto a = forward(c.params, s, id, m);
      const auto b = forward(back.params, s, id, m);
      CHECK(a.probs == b.probs);
      CHECK(a.log_probs == b.log_probs);
      CHECK(value(*back.value, s, id) == value(*c.value, s, id));
    }
  }
}

TEST_CASE("malformed checkpoints are rejected") {
  Checkpoint c;
  c.params = test::random_params(test::tabular(2), 1);
  std::string text = serialize_checkpoint(c);
  CHECK_NOTHROW(parse_checkpoint(text));
  std::string v2 = text;
  v2.replace(v2.find("\"format_version\":1"), 18, "\"format_version\":2");
  CHECK_THROWS_AS(parse_checkpoint(v2), ConfigError);
  CHECK_THROWS_AS(parse_checkpoint("[]"), ConfigError);
  Checkpoint bad = c;
  bad.params.flat.pop_back();
  CHECK_THROWS(parse_checkpoint(serialize_checkpoint(bad)));
}

TEST_CASE("fnv1a") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}
