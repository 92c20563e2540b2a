#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "itolat/martingale.hpp"
#include "itolat/random_instances.hpp"

using namespace itolat;

TEST_CASE("two-step walk enumerates all sign paths", "[martingale]") {
  const ScalarMartingale m = random_walk_martingale(2, 1.0);
  CHECK(m.leaf_count() == 4);
  CHECK(m.step_count() == 2);
  CHECK(m.times() == std::vector<double>{0.0, 1.0, 2.0});
  // Leaf bits read most significant first: leaf 0 = up/up, leaf 3 = down/down.
  for (std::size_t leaf = 0; leaf < 4; ++leaf) CHECK(m.value(0, leaf) == 0.0);
  CHECK(m.value(1, 0) == 1.0);
  CHECK(m.value(1, 1) == 1.0);
  CHECK(m.value(1, 2) == -1.0);
  CHECK(m.value(1, 3) == -1.0);
  CHECK(m.value(2, 0) == 2.0);
  CHECK(m.value(2, 1) == 0.0);
  CHECK(m.value(2, 2) == 0.0);
  CHECK(m.value(2, 3) == -2.0);
  CHECK(m.increment(1, 3) == -1.0);
  CHECK(m.value_at_time(1.5, 0) == 1.0);

  // Second moment at the horizon: E[M(T)^2] = steps * scale^2 = 2.
  double second = 0.0;
  for (std::size_t leaf = 0; leaf < 4; ++leaf)
    second += m.omega()->prob(leaf) * m.value(2, leaf) * m.value(2, leaf);
  CHECK(second == 2.0);
}

TEST_CASE("walk martingale property holds exactly at every step", "[martingale]") {
  for (std::size_t steps : {1u, 3u, 5u}) {
    const ScalarMartingale m = random_walk_martingale(steps, 0.75);
    for (std::size_t j = 0; j < m.step_count(); ++j) {
      const RandomScalar next = m.at(j + 1);
      const RandomScalar cond = cond_expectation(next, m.filtration()->partition(j));
      for (std::size_t leaf = 0; leaf < m.leaf_count(); ++leaf)
        CHECK(cond.value(leaf) == Catch::Approx(m.value(j, leaf)).margin(1e-13));
      CHECK(is_measurable(m.at(j), m.filtration()->partition(j)));
    }
  }
}

TEST_CASE("walk arguments are validated", "[martingale]") {
  CHECK_THROWS_AS(random_walk_martingale(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(random_walk_martingale(21, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(random_walk_martingale(3, 0.0), std::invalid_argument);
}

TEST_CASE("quadratic variation accumulates squared jumps", "[martingale]") {
  const double scale = 0.5;
  const ScalarMartingale m = random_walk_martingale(4, scale);
  const QuadraticVariation qv(m);
  for (std::size_t leaf = 0; leaf < m.leaf_count(); ++leaf) {
    CHECK(qv.value(0, leaf) == 0.0);
    for (std::size_t j = 0; j <= 4; ++j)
      // Every jump has magnitude scale, so the bracket is deterministic.
      CHECK(qv.value(j, leaf) == static_cast<double>(j) * scale * scale);
    for (std::size_t j = 0; j < 4; ++j) {
      const double d = m.increment(j, leaf);
      CHECK(qv.step_increment(j, leaf) == d * d);
    }
  }
}

TEST_CASE("qv properties verify on the exact tree", "[martingale]") {
  const QvPropertyReport rep = verify_qv_properties(random_walk_martingale(6, 1.25));
  CHECK(rep.starts_at_zero);
  CHECK(rep.jump_identity);
  CHECK(rep.max_compensation_residual <= 1e-12);
  CHECK(rep.pass);
}

TEST_CASE("qv properties verify statistically on monte carlo backends", "[martingale]") {
  const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
  const QvPropertyReport br = verify_qv_properties(mc_brownian(20000, grid, 97));
  CHECK(br.starts_at_zero);
  CHECK(br.jump_identity);
  CHECK(br.max_compensation_zscore <= 4.0);
  CHECK(br.pass);

  const QvPropertyReport pr = verify_qv_properties(mc_compensated_poisson(2.0, grid, 20000, 98));
  CHECK(pr.pass);
}

TEST_CASE("brownian sampling is deterministic in the seed", "[martingale]") {
  const std::vector<double> grid{0.0, 0.5, 1.0};
  const ScalarMartingale a = mc_brownian(50, grid, 1234);
  const ScalarMartingale b = mc_brownian(50, grid, 1234);
  const ScalarMartingale c = mc_brownian(50, grid, 1235);
  bool same = true, differs = false;
  for (std::size_t j = 0; j < grid.size(); ++j)
    for (std::size_t leaf = 0; leaf < 50; ++leaf) {
      same = same && a.value(j, leaf) == b.value(j, leaf);
      differs = differs || a.value(j, leaf) != c.value(j, leaf);
    }
  CHECK(same);
  CHECK(differs);
  // Path draws are indexed by leaf, so a path keeps its values when the
  // ensemble grows.
  const ScalarMartingale wide = mc_brownian(80, grid, 1234);
  CHECK(wide.value(2, 17) == a.value(2, 17));
}

TEST_CASE("brownian increments have the right first two moments", "[martingale]") {
  const std::vector<double> grid{0.0, 0.3, 1.0};
  const std::size_t n = 40000;
  const ScalarMartingale w = mc_brownian(n, grid, 2024);
  for (std::size_t j = 0; j < 2; ++j) {
    const double dt = grid[j + 1] - grid[j];
    double mean = 0.0, sq = 0.0;
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
      const double d = w.increment(j, leaf);
      mean += d;
      sq += d * d;
    }
    mean /= static_cast<double>(n);
    sq /= static_cast<double>(n);
    const double se_mean = std::sqrt(dt / static_cast<double>(n));
    CHECK(std::abs(mean) <= 4.0 * se_mean);
    // Var(d^2) = 2 dt^2 for a centered normal.
    const double se_sq = std::sqrt(2.0 * dt * dt / static_cast<double>(n));
    CHECK(std::abs(sq - dt) <= 4.0 * se_sq);
  }
}

TEST_CASE("compensated poisson paths are centered with variance rate times t", "[martingale]") {
  const std::vector<double> grid{0.0, 0.5, 1.0};
  const double rate = 3.0;
  const std::size_t n = 40000;
  const ScalarMartingale m = mc_compensated_poisson(rate, grid, n, 7);
  double mean = 0.0, sq = 0.0;
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    const double v = m.value(2, leaf);
    mean += v;
    sq += v * v;
  }
  mean /= static_cast<double>(n);
  sq /= static_cast<double>(n);
  const double var = rate * grid.back();
  CHECK(std::abs(mean) <= 4.0 * std::sqrt(var / static_cast<double>(n)));
  // Kurtosis of the compensated Poisson: Var(v^2) = E[v^4] - var^2; for a
  // centered Poisson E[v^4] = lambda + 3 lambda^2 with lambda = rate * t.
  const double lambda = rate * grid.back();
  const double var_sq = lambda + 3.0 * lambda * lambda - var * var;
  CHECK(std::abs(sq - var) <= 4.0 * std::sqrt(var_sq / static_cast<double>(n)));
}

TEST_CASE("monte carlo grids are validated", "[martingale]") {
  CHECK_THROWS_AS(mc_brownian(0, {0.0, 1.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(mc_brownian(10, {0.5, 1.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(mc_brownian(10, {0.0, 1.0, 1.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(mc_brownian(10, {0.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(mc_compensated_poisson(0.0, {0.0, 1.0}, 10, 1), std::invalid_argument);
}

TEST_CASE("random tree martingales satisfy the martingale property", "[martingale]") {
  RngStream rng(61, 0);
  for (int i = 0; i < 40; ++i) {
    const ProbSpacePtr omega = random_prob_space(rng, 32);
    const FiltrationPtr filtration = random_filtration(rng, omega);
    const ScalarMartingale m = random_tree_martingale(rng, omega, filtration);
    for (std::size_t j = 0; j < m.step_count(); ++j) {
      const RandomScalar cond = cond_expectation(m.at(j + 1), m.filtration()->partition(j));
      for (std::size_t leaf = 0; leaf < m.leaf_count(); ++leaf)
        CHECK(cond.value(leaf) == Catch::Approx(m.value(j, leaf)).margin(1e-12));
      CHECK(is_measurable(m.at(j), m.filtration()->partition(j)));
    }
    CHECK(verify_qv_properties(m).pass);
  }
}
