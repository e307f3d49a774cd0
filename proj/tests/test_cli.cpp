#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cam/check.hpp"
#include "cam/config.hpp"
#include "cam/eval.hpp"
#include "commands.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace cam;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cam");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cam_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "input.json";
  write_file(p.string(), body);
  return p.string();
}

std::map<std::string, std::string> files_of(const fs::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) m[e.path().filename().string()] = read_file(e.path().string());
  }
  return m;
}

const char* kMatrixConfig = R"({
  "env": {"kind": "matrix", "game": "biased_rps"},
  "policy": {"kind": "tabular"},
  "population_size": 2,
  "generations": 1,
  "episodes_per_generation": 32,
  "eval_games": 20,
  "objective": {"learning_rate": 0.5},
  "cam": {"sweeps": 0, "episodes_per_sweep": 16, "eval_games": 10},
  "master_seed": 5
})";

const char* kDuelConfig = R"({
  "env": {"kind": "duel"},
  "policy": {"kind": "mlp", "hidden": 8},
  "population_size": 4,
  "generations": 1,
  "episodes_per_generation": 4,
  "eval_games": 2,
  "objective": {"learning_rate": 0.01, "minibatch_size": 128},
  "cam": {"sweeps": 1, "episodes_per_sweep": 4, "eval_games": 2},
  "master_seed": 8
})";

}  // namespace

TEST_CASE("usage errors") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"train-mia", "--out", "x"}).code == 2);
  CHECK(cli({"bogus"}).code == 2);
}

TEST_CASE("train-mia writes the run directory") {
  const fs::path dir = scratch("mia");
  const std::string cfg = write_config(dir, kMatrixConfig);
  const Run r = cli({"train-mia", "--config", cfg, "--out", (dir / "a").string(), "--workers", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("generations=1") != std::string::npos);
  for (const char* f : {"gen_0.ckpt", "gen_1.ckpt", "metrics.jsonl", "config.json", "payoff_gen1.csv"}) {
    CHECK(fs::exists(dir / "a" / f));
  }
  const RunConfig resolved = load_config((dir / "a" / "config.json").string());
  CHECK(resolved.master_seed == 5);
  const Checkpoint ck = load_checkpoint((dir / "a" / "gen_1.ckpt").string());
  CHECK(ck.generation == 1);
  CHECK(ck.config_hash == config_hash(resolved));

  SUBCASE("reruns are byte-identical") {
    REQUIRE(cli({"train-mia", "--config", cfg, "--out", (dir / "b").string(), "--workers", "2"}).code == 0);
    REQUIRE(cli({"train-mia", "--config", (dir / "a" / "config.json").string(), "--out",
                 (dir / "c").string()})
                .code == 0);
    const auto a = files_of(dir / "a");
    CHECK(a == files_of(dir / "b"));
    CHECK(a == files_of(dir / "c"));
  }
  SUBCASE("seed override changes the run") {
    REQUIRE(cli({"train-mia", "--config", cfg, "--out", (dir / "s").string(), "--seed", "6"}).code == 0);
    CHECK(load_config((dir / "s" / "config.json").string()).master_seed == 6);
    CHECK(read_file((dir / "s" / "metrics.jsonl").string()) !=
          read_file((dir / "a" / "metrics.jsonl").string()));
  }
}

TEST_CASE("configuration errors exit with code 2 and name the key") {
  const fs::path dir = scratch("bad");
  const std::string cfg = write_config(dir, R"({"generatoins": 3})");
  const Run r = cli({"train-mia", "--config", cfg, "--out", (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("generatoins") != std::string::npos);
  const Run missing = cli({"train-mia", "--config", (dir / "none.json").string(), "--out",
                           (dir / "o").string()});
  CHECK(missing.code != 0);
}

TEST_CASE("train-cam") {
  const fs::path dir = scratch("cam");
  const std::string cfg = write_config(dir, kMatrixConfig);
  REQUIRE(cli({"train-mia", "--config", cfg, "--out", (dir / "mia").string()}).code == 0);

  SUBCASE("zero sweeps give the initialization clones") {
    const Run r = cli({"train-cam", (dir / "mia").string(), "--out", (dir / "cam").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("mia checkpoints unchanged (2 files)") != std::string::npos);
    const PolicyParams mia = load_checkpoint((dir / "mia" / "gen_1.ckpt").string()).params;
    for (std::size_t x = 0; x < 2; ++x) {
      const Checkpoint s =
          load_checkpoint((dir / "cam" / ("spec_" + std::to_string(x) + ".ckpt")).string());
      CHECK(s.agent == std::optional<std::size_t>(x));
      CHECK(s.params == clone_for_specialist(mia, AgentId{x}));
    }
  }
  SUBCASE("missing stage-1 run") {
    CHECK(cli({"train-cam", (dir / "nowhere").string(), "--out", (dir / "x").string()}).code == 1);
  }
}

TEST_CASE("duel pipeline and evaluation") {
  const fs::path dir = scratch("duel");
  const std::string cfg = write_config(dir, kDuelConfig);
  REQUIRE(cli({"train-mia", "--config", cfg, "--out", (dir / "mia").string()}).code == 0);
  const auto before = files_of(dir / "mia");
  const Run cam = cli({"train-cam", (dir / "mia").string(), "--out", (dir / "cam").string()});
  REQUIRE(cam.code == 0);
  std::size_t specs = 0;
  for (const auto& e : fs::directory_iterator(dir / "cam")) {
    specs += e.path().filename().string().rfind("spec_", 0) == 0;
  }
  CHECK(specs == 4);
  CHECK(files_of(dir / "mia") == before);

  const Run m = cli({"eval", "matrix", "--inputs", (dir / "mia").string(), "--out",
                     (dir / "em").string(), "--games", "4"});
  REQUIRE(m.code == 0);
  CHECK(m.out.find("mean_win_rate=") != std::string::npos);
  CHECK(fs::exists(dir / "em" / "matrix.csv"));

  const Run d = cli({"eval", "diversity", "--inputs", (dir / "cam").string(), "--config",
                     (dir / "mia" / "config.json").string(), "--baseline", (dir / "mia").string(),
                     "--out", (dir / "ed").string(), "--games", "3"});
  REQUIRE(d.code == 0);
  CHECK(d.out.find("expected_distance=") != std::string::npos);
  CHECK(d.out.find("relative_change=") != std::string::npos);
  CHECK(fs::exists(dir / "ed" / "diversity.json"));
  CHECK(fs::exists(dir / "ed" / "radial.csv"));

  const Run mi = cli({"eval", "mi", "--inputs", (dir / "mia").string(), "--out",
                      (dir / "ei").string(), "--games", "3"});
  REQUIRE(mi.code == 0);
  CHECK(mi.out.find("aggregate_mi=") != std::string::npos);
  CHECK(fs::exists(dir / "ei" / "mi.json"));

  // A matrix-game checkpoint does not fit the duel.
  const fs::path other = scratch("duel_other");
  const std::string mcfg = write_config(other, kMatrixConfig);
  REQUIRE(cli({"train-mia", "--config", mcfg, "--out", (other / "mia").string()}).code == 0);
  CHECK(cli({"eval", "matrix", "--inputs", (other / "mia" / "gen_1.ckpt").string(), "--config",
             (dir / "mia" / "config.json").string(), "--out", (dir / "bad").string()})
            .code != 0);
}

TEST_CASE("matrix report over a population of two") {
  const fs::path dir = scratch("pair");
  const std::string cfg = write_config(dir, kMatrixConfig);
  REQUIRE(cli({"train-mia", "--config", cfg, "--out", (dir / "mia").string()}).code == 0);
  REQUIRE(cli({"eval", "matrix", "--inputs", (dir / "mia").string(), "--out", (dir / "em").string(),
               "--games", "30"})
              .code == 0);
  std::istringstream csv(read_file((dir / "em" / "matrix.csv").string()));
  std::string line;
  std::getline(csv, line);
  std::vector<std::vector<double>> w;
  while (std::getline(csv, line)) {
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    w.emplace_back();
    while (std::getline(row, cell, ',')) w.back().push_back(std::stod(cell));
  }
  REQUIRE(w.size() == 2);
  REQUIRE(w[0].size() == 2);
  CHECK(w[0][1] + w[1][0] == doctest::Approx(1.0).epsilon(1e-9));

  // Identical specialists have no behavioral spread.
  REQUIRE(cli({"train-cam", (dir / "mia").string(), "--out", (dir / "cam").string()}).code == 0);
  fs::create_directories(dir / "twins");
  fs::copy_file(dir / "cam" / "spec_0.ckpt", dir / "twins" / "spec_0.ckpt");
  Checkpoint second = load_checkpoint((dir / "cam" / "spec_0.ckpt").string());
  second.agent = 1;
  const PolicyParams first = second.params;
  // id 1 gets the same row as id 0 so both agents act identically.
  second.params.flat[3] = first.flat[0];
  second.params.flat[4] = first.flat[1];
  second.params.flat[5] = first.flat[2];
  save_checkpoint((dir / "twins" / "spec_1.ckpt").string(), second);
  Checkpoint zero = load_checkpoint((dir / "twins" / "spec_0.ckpt").string());
  zero.params = second.params;
  save_checkpoint((dir / "twins" / "spec_0.ckpt").string(), zero);
  const Run d = cli({"eval", "diversity", "--inputs", (dir / "twins").string(), "--config",
                     (dir / "mia" / "config.json").string(), "--out", (dir / "ed").string(),
                     "--games", "500"});
  REQUIRE(d.code == 0);
  // Same policy, but each agent samples its own episodes; the distance is the
  // sampling noise of two 500-episode frequency estimates.
  const double dist = std::stod(d.out.substr(d.out.find('=') + 1));
  CHECK(dist < 0.1);
}

TEST_CASE("check commands") {
  const Run g = cli({"check", "gradients"});
  CHECK(g.code == 0);
  CHECK(g.out.find("PASS") != std::string::npos);
  CHECK(g.out.find("max_error=") != std::string::npos);
  CHECK(g.out.find("FAIL") == std::string::npos);
  const Run o = cli({"check", "oracle"});
  CHECK(o.code == 0);
  CHECK(o.out.find("FAIL") == std::string::npos);
}

TEST_CASE("an injected sign error fails the gradient checks") {
  const ScoreFn flipped = [](const PolicyParams& p, const Observation& s, AgentId id,
                             const ActionMask& m, std::size_t a) {
    auto g = grad_log_prob(p, s, id, m, a);
    for (double& v : g) v = -v;
    return g;
  };
  const auto results = gradient_checks(flipped);
  std::size_t failed = 0;
  for (const auto& r : results) {
    if (!r.passed) {
      ++failed;
      CHECK(r.max_error > r.tolerance);
    }
  }
  CHECK(failed > 0);
  std::ostringstream report;
  CHECK_FALSE(print_checks(results, report));
  CHECK(report.str().find("FAIL") != std::string::npos);
}
