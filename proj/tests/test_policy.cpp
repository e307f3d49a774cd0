#include <cmath>

#include "cam/exact.hpp"
#include "cam/objectives.hpp"
#include "cam/policy.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cam;
using test::full_mask;

TEST_CASE("forward on zero logits") {
  Rng rng(0);
  const PolicyParams p = init_policy(test::tabular(3), rng);
  const Observation s{{}, 0};
  const auto d = forward(p, s, AgentId{0}, full_mask(3));
  for (double v : d.probs) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
  const auto half = forward(p, s, AgentId{1}, ActionMask{1, 1, 0});
  CHECK(half.probs[0] == 0.5);
  CHECK(half.probs[1] == 0.5);
  CHECK(half.probs[2] == 0.0);
  const auto one = forward(p, s, AgentId{1}, ActionMask{0, 0, 1});
  CHECK(one.probs[2] == 1.0);
  CHECK_THROWS_AS(forward(p, s, AgentId{0}, ActionMask{0, 0, 0}), std::invalid_argument);
  CHECK_THROWS(forward(p, s, AgentId{2}, full_mask(3)));
}

TEST_CASE("masked mass is exactly zero for both parameterizations") {
  Rng rng(1);
  for (const PolicyArch& arch : {test::tabular(6, 3, 4), test::mlp(6, 5, 3)}) {
    const PolicyParams p = test::random_params(arch, 7, 2.0);
    for (int k = 0; k < 200; ++k) {
      const Observation s = test::random_obs(arch.obs_dim, rng, arch.n_states);
      ActionMask m(6);
      for (auto& v : m) v = rng.uniform() < 0.5;
      m[rng.below(6)] = 1;
      const auto d = forward(p, s, AgentId{rng.below(3)}, m);
      double sum = 0.0;
      for (std::size_t a = 0; a < 6; ++a) {
        if (!m[a]) {
          CHECK(d.probs[a] == 0.0);
        } else {
          CHECK(std::isfinite(d.log_probs[a]));
        }
        sum += d.probs[a];
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("sample") {
  Rng rng(2);
  const ActionDistribution certain{{0.0, 1.0, 0.0}, {}};
  for (int k = 0; k < 100; ++k) CHECK(sample(certain, rng) == 1);
  const ActionDistribution coin{{0.5, 0.5}, {}};
  std::size_t ones = 0;
  for (int k = 0; k < 100000; ++k) ones += sample(coin, rng);
  CHECK(std::abs(ones / 100000.0 - 0.5) < 0.01);
  Rng a(9), b(9);
  const ActionDistribution three{{0.2, 0.3, 0.5}, {}};
  for (int k = 0; k < 100; ++k) CHECK(sample(three, a) == sample(three, b));
}

TEST_CASE("joint_log_prob") {
  PolicyParams p{test::tabular(2), {0.0, 0.0, 0.0, 0.0}};
  // id 1 row gets probabilities (0.2, 0.8).
  p.flat[2] = std::log(0.2);
  p.flat[3] = std::log(0.8);
  const Observation s{{}, 0};
  CHECK(joint_log_prob(p, s, AgentId{0}, 0, full_mask(2), s, AgentId{1}, 0, full_mask(2)) ==
        doctest::Approx(std::log(0.1)).epsilon(1e-12));
  CHECK(joint_log_prob(p, s, AgentId{0}, 0, ActionMask{1, 0}, s, AgentId{1}, 1, ActionMask{0, 1}) ==
        0.0);
  CHECK_THROWS(joint_log_prob(p, s, AgentId{0}, 1, ActionMask{1, 0}, s, AgentId{1}, 0,
                              full_mask(2)));

  Rng rng(3);
  const PolicyArch arch = test::mlp(4, 3);
  const PolicyParams q = test::random_params(arch, 4);
  for (int k = 0; k < 100; ++k) {
    const Observation a = test::random_obs(3, rng);
    const Observation b = test::random_obs(3, rng);
    const std::size_t x = rng.below(4), y = rng.below(4);
    const double sum = log_prob(q, a, AgentId{0}, full_mask(4), x) +
                       log_prob(q, b, AgentId{1}, full_mask(4), y);
    CHECK(std::abs(joint_log_prob(q, a, AgentId{0}, x, full_mask(4), b, AgentId{1}, y,
                                  full_mask(4)) -
                   sum) < 1e-12);
  }
}

TEST_CASE("tabular score in closed form") {
  PolicyParams p{test::tabular(2, 2, 2), std::vector<double>(8, 0.0)};
  // state 1, id 0 row: logits (0.3, -0.4).
  const std::size_t row = (1 * 2 + 0) * 2;
  p.flat[row] = 0.3;
  p.flat[row + 1] = -0.4;
  const Observation s{{}, 1};
  const double prob = forward(p, s, AgentId{0}, full_mask(2)).probs[0];
  const auto g = grad_log_prob(p, s, AgentId{0}, full_mask(2), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i == row) {
      CHECK(g[i] == doctest::Approx(1.0 - prob).epsilon(1e-14));
    } else if (i == row + 1) {
      CHECK(g[i] == doctest::Approx(-(1.0 - prob)).epsilon(1e-14));
    } else {
      CHECK(g[i] == 0.0);
    }
  }
}

TEST_CASE("grad_log_prob matches finite differences") {
  Rng rng(5);
  for (const PolicyArch& arch : {test::tabular(5, 3, 3), test::mlp(5, 4, 3, 6)}) {
    for (int trial = 0; trial < 20; ++trial) {
      const PolicyParams p = test::random_params(arch, 100 + trial);
      const Observation s = test::random_obs(arch.obs_dim, rng, arch.n_states);
      ActionMask m{1, 1, 0, 1, 1};
      const AgentId id{rng.below(3)};
      for (std::size_t a : {0u, 1u, 3u, 4u}) {
        const auto fd = finite_difference(
            [&](const PolicyParams& q) { return log_prob(q, s, id, m, a); }, p);
        CHECK(relative_error(grad_log_prob(p, s, id, m, a), fd) < 1e-4);
      }
    }
  }
}

TEST_CASE("expected score under the policy vanishes") {
  const PolicyArch arch = test::mlp(4, 2, 2, 5);
  const PolicyParams p = test::random_params(arch, 11);
  const Observation s{{0.3, -0.2}, 0};
  const AgentId id{1};
  const auto d = forward(p, s, id, full_mask(4));
  Rng rng(12);
  const std::size_t n = 100000;
  std::vector<double> sum(p.size(), 0.0), sq(p.size(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto g = grad_log_prob(p, s, id, full_mask(4), sample(d, rng));
    for (std::size_t i = 0; i < g.size(); ++i) {
      sum[i] += g[i];
      sq[i] += g[i] * g[i];
    }
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double mean = sum[i] / n;
    const double se = std::sqrt(std::max(0.0, sq[i] / n - mean * mean) / n);
    CHECK(std::abs(mean) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("value head") {
  Rng rng(0);
  for (const PolicyArch& arch : {test::tabular(3, 2, 1), test::mlp(3, 2, 2)}) {
    ValueHead h = init_value_head(arch, rng, 0.0);
    const Observation s{std::vector<double>(arch.obs_dim, 0.5), 0};
    CHECK(value(h, s, AgentId{0}) == 0.0);
    std::vector<Observation> obs(8, s);
    std::vector<AgentId> ids(8, AgentId{1});
    std::vector<double> targets(8, 2.5);
    for (int k = 0; k < 2000; ++k) value_regression_step(h, obs, ids, targets, 0.05);
    CHECK(std::abs(value(h, s, AgentId{1}) - 2.5) < 1e-3);
  }
}

TEST_CASE("tabular value regresses to the empirical mean") {
  Rng rng(1);
  ValueHead h = init_value_head(test::tabular(2), rng);
  const Observation s{{}, 0};
  std::vector<Observation> obs(5, s);
  std::vector<AgentId> ids(5, AgentId{0});
  const std::vector<double> returns{1.0, -2.0, 0.5, 3.0, 0.0};
  for (int k = 0; k < 3000; ++k) value_regression_step(h, obs, ids, returns, 0.1);
  CHECK(std::abs(value(h, s, AgentId{0}) - 0.5) < 1e-9);
}

TEST_CASE("clone_for_specialist") {
  Rng rng(6);
  const PolicyArch arch = test::mlp(4, 3, 3);
  const PolicyParams src = test::random_params(arch, 13);
  const AgentId id{2};
  PolicyParams clone = clone_for_specialist(src, id);
  for (int k = 0; k < 100; ++k) {
    const Observation s = test::random_obs(3, rng);
    CHECK(forward(clone, s, id, full_mask(4)).probs == forward(src, s, id, full_mask(4)).probs);
  }
  CHECK(clone_for_specialist(clone, id) == clone);
  const PolicyParams before = src;
  clone.flat[0] += 1.0;
  CHECK(src == before);
}

TEST_CASE("clip_grad_norm") {
  std::vector<double> g{3.0, 4.0};
  CHECK(clip_grad_norm(g, 10.0) == 5.0);
  CHECK(g == std::vector<double>{3.0, 4.0});
  CHECK(clip_grad_norm(g, 1.0) == 5.0);
  CHECK(std::hypot(g[0], g[1]) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("parameter validation") {
  PolicyParams p{test::tabular(3), std::vector<double>(5, 0.0)};
  CHECK_THROWS(p.validate());
  p.flat.resize(6);
  CHECK_NOTHROW(p.validate());
  p.flat[0] = std::nan("");
  CHECK_THROWS(p.validate());
}

TEST_CASE("an update from one id moves the other id only with shared weights") {
  Rng rng(8);
  for (const PolicyArch& arch : {test::tabular(3, 2, 2), test::mlp(3, 2, 2)}) {
    const PolicyParams p = test::random_params(arch, 21, 0.5);
    std::vector<double> g(p.size(), 0.0);
    const Observation s{{0.4, -0.1}, 1};
    accumulate_grad_log_prob(p, s, AgentId{0}, full_mask(3), 2, 1.0, g);
    const PolicyParams q = sgd_step(p, g, 0.5);
    const auto own_before = forward(p, s, AgentId{0}, full_mask(3)).probs;
    const auto own_after = forward(q, s, AgentId{0}, full_mask(3)).probs;
    CHECK(own_after[2] > own_before[2]);
    bool moved = false;
    for (int k = 0; k < 10; ++k) {
      const Observation probe = test::random_obs(2, rng, 2);
      moved = moved || forward(p, probe, AgentId{1}, full_mask(3)).probs !=
                           forward(q, probe, AgentId{1}, full_mask(3)).probs;
    }
    CHECK(moved == (arch.kind == PolicyKind::kMlp));
  }
}
