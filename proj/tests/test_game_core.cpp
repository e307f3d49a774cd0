#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cam/game_core.hpp"
#include "cam/rng.hpp"
#include "doctest.h"

using namespace cam;

TEST_CASE("zero_sum_reward") {
  CHECK(zero_sum_reward(3.0, 1.0) == 2.0);
  CHECK(zero_sum_reward(1.0, 3.0) == -2.0);
  CHECK(zero_sum_reward(0.7, 0.7) == 0.0);
  CHECK(zero_sum_reward(10.0, -5.0) == 15.0);
  CHECK_THROWS_AS(zero_sum_reward(std::nan(""), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(zero_sum_reward(1.0, std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("zero_sum_reward negates exactly when seats swap") {
  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    const double a = rng.uniform(-100.0, 100.0);
    const double b = rng.uniform(-100.0, 100.0);
    CHECK(zero_sum_reward(a, b) + zero_sum_reward(b, a) == 0.0);
  }
}

TEST_CASE("discounted_return") {
  const std::vector<double> one{5.0};
  CHECK(discounted_return(one, 0.0) == 5.0);
  CHECK(discounted_return(one, 0.9) == 5.0);
  const std::vector<double> zeros{0.0, 0.0, 0.0};
  CHECK(discounted_return(zeros, 0.9) == 0.0);
  const std::vector<double> ones{1.0, 1.0, 1.0};
  CHECK(discounted_return(ones, 0.5) == doctest::Approx(1.75).epsilon(1e-15));
  CHECK_THROWS_AS(discounted_return(ones, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(discounted_return(ones, -0.1), std::invalid_argument);
}

TEST_CASE("n_step_return") {
  const std::vector<double> r{1.0, 2.0};
  CHECK(n_step_return(r, 0.5, 10.0) == doctest::Approx(4.5).epsilon(1e-15));
  const std::vector<double> single{-3.25};
  CHECK(n_step_return(single, 0.0, 123.0) == -3.25);
  const std::vector<double> zeros(100, 0.0);
  CHECK(n_step_return(zeros, 0.995, 0.0) == 0.0);
  CHECK_THROWS_AS(n_step_return(std::vector<double>{}, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("discounted_return equals n_step_return without bootstrap") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(1 + rng.below(50));
    for (double& v : r) v = rng.uniform(-10.0, 10.0);
    const double g = rng.uniform(0.0, 0.999);
    CHECK(discounted_return(r, g) == doctest::Approx(n_step_return(r, g, 0.0)).epsilon(1e-12));
  }
}

TEST_CASE("discounted_return is linear in rewards") {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(1 + rng.below(30));
    for (double& v : r) v = rng.uniform(-5.0, 5.0);
    const double a = rng.uniform(-3.0, 3.0);
    const double g = rng.uniform(0.0, 0.99);
    std::vector<double> scaled = r;
    for (double& v : scaled) v *= a;
    CHECK(std::abs(discounted_return(scaled, g) - a * discounted_return(r, g)) < 1e-12);
  }
}

TEST_CASE("skill and character invariants") {
  SkillSpec sub{SkillCategory::kSubstitute, 3, 0, 0, 1, 1};
  CHECK_NOTHROW(sub.validate());
  sub.damage = 4;
  CHECK_THROWS_AS(sub.validate(), std::invalid_argument);
  sub.damage = 0;
  sub.effect_duration = 0;
  CHECK_THROWS_AS(sub.validate(), std::invalid_argument);
  SkillSpec neg{SkillCategory::kForcingMove, -1, 5, 1, 0, 0};
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);

  CharacterSpec c{"c", 1, 1, 5, 50, 3,
                  {{SkillCategory::kForcingMove, 2, 5, 1, 1, 0},
                   {SkillCategory::kCounterMove, 2, 5, 1, 1, 0},
                   {SkillCategory::kSubstitute, 2, 0, 0, 1, 1}}};
  CHECK_NOTHROW(c.validate());
  CharacterSpec missing = c;
  missing.skills.pop_back();
  CHECK_THROWS_AS(missing.validate(), std::invalid_argument);
  CharacterSpec dead = c;
  dead.max_hp = 0;
  CHECK_THROWS_AS(dead.validate(), std::invalid_argument);
  CharacterSpec slow = c;
  slow.move_speed = 0;
  CHECK_THROWS_AS(slow.validate(), std::invalid_argument);
  CHECK(skill_category_from_string(to_string(SkillCategory::kCounterMove)) ==
        SkillCategory::kCounterMove);
  CHECK_THROWS(skill_category_from_string("teleport"));
}

TEST_CASE("trajectory batch partition") {
  TrajectoryBatch b;
  b.transitions.resize(3);
  b.transitions[1].done = true;
  b.transitions[2].done = true;
  b.episode_starts = {0, 2};
  CHECK_NOTHROW(b.check_partition());
  CHECK(b.episode_count() == 2);
  CHECK(b.episode_end(0) == 2);
  CHECK(b.episode_end(1) == 3);

  TrajectoryBatch c = b;
  c.append(b);
  CHECK(c.episode_starts == std::vector<std::size_t>{0, 2, 3, 5});
  CHECK_NOTHROW(c.check_partition());

  b.transitions[1].done = false;
  CHECK_THROWS_AS(b.check_partition(), std::logic_error);
}

TEST_CASE("derived seeds are stable and distinct") {
  static_assert(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(0, 0, 0) != derive_seed(0, 0, 1));
  CHECK(derive_seed(0, 1, 0) != derive_seed(0, 0, 1));
  Rng a(42), b(42);
  for (int k = 0; k < 100; ++k) CHECK(a.uniform() == b.uniform());
}
