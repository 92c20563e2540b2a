#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "itolat/prob.hpp"
#include "itolat/random_instances.hpp"

using namespace itolat;

TEST_CASE("partitions normalize block order and answer refinement", "[prob]") {
  const Partition p(4, {{3, 2}, {1, 0}});
  REQUIRE(p.block_count() == 2);
  // Blocks are sorted internally and ordered by least leaf.
  CHECK(p.block(0)[0] == 0);
  CHECK(p.block(0)[1] == 1);
  CHECK(p.block(1)[0] == 2);
  CHECK(p.block_of(3) == 1);
  CHECK(p == Partition(4, {{0, 1}, {2, 3}}));

  const Partition fine = Partition::discrete(4);
  const Partition coarse = Partition::trivial(4);
  CHECK(fine.refines(p));
  CHECK(p.refines(coarse));
  CHECK(p.refines(p));
  CHECK_FALSE(coarse.refines(p));
  CHECK_FALSE(p.refines(fine));
  CHECK_FALSE(p.refines(Partition(4, {{0, 2}, {1, 3}})));
}

TEST_CASE("partition constructor rejects malformed block systems", "[prob]") {
  CHECK_THROWS_AS(Partition(4, {{0, 1}, {1, 2, 3}}), std::invalid_argument);  // overlap
  CHECK_THROWS_AS(Partition(4, {{0, 1}, {3}}), std::invalid_argument);        // missing leaf
  CHECK_THROWS_AS(Partition(4, {{0, 1}, {2, 4}}), std::invalid_argument);     // out of range
  CHECK_THROWS_AS(Partition(4, {{0, 1}, {2, 3}, {}}), std::invalid_argument); // empty block
}

TEST_CASE("probability spaces validate their weights", "[prob]") {
  CHECK_THROWS_AS(FiniteProbabilitySpace(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(FiniteProbabilitySpace({0.5, 0.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(FiniteProbabilitySpace({0.5, 0.6}), std::invalid_argument);
  const auto omega = FiniteProbabilitySpace::uniform(4);
  CHECK(omega->prob(2) == 0.25);
}

TEST_CASE("filtrations enforce increasing refining structure", "[prob]") {
  const auto p0 = Partition::trivial(4);
  const Partition p1(4, {{0, 1}, {2, 3}});
  const auto p2 = Partition::discrete(4);
  const Filtration f({0.0, 1.0, 2.0}, {p0, p1, p2});
  CHECK(f.horizon() == 2.0);
  CHECK(f.step_count() == 2);
  CHECK(f.floor_index(0.0) == 0);
  CHECK(f.floor_index(1.5) == 1);
  CHECK(f.floor_index(2.0) == 2);
  CHECK_THROWS_AS(f.floor_index(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(f.floor_index(2.1), std::invalid_argument);

  CHECK_THROWS_AS(Filtration({0.0}, {p0}), std::invalid_argument);
  CHECK_THROWS_AS(Filtration({0.5, 1.0}, {p0, p1}), std::invalid_argument);
  CHECK_THROWS_AS(Filtration({0.0, 1.0}, {p1, p0}), std::invalid_argument);  // coarsens
  CHECK_THROWS_AS(Filtration({0.0, 0.0}, {p0, p1}), std::invalid_argument);
}

TEST_CASE("conditional expectation averages within blocks", "[prob]") {
  const auto omega = FiniteProbabilitySpace::uniform(4);
  const Partition blocks(4, {{0, 1}, {2, 3}});
  const RandomScalar x(omega, {1.0, 3.0, 2.0, 6.0});
  const RandomScalar y = cond_expectation(x, blocks);
  CHECK(y.values() == std::vector<double>{2.0, 2.0, 4.0, 4.0});
  CHECK(expectation(x) == 3.0);
  CHECK(expectation(y) == 3.0);

  // Weighted leaves reweight the block averages.
  const auto skew = std::make_shared<const FiniteProbabilitySpace>(
      std::vector<double>{0.1, 0.3, 0.2, 0.4});
  const RandomScalar z = cond_expectation(RandomScalar(skew, {1.0, 3.0, 2.0, 6.0}), blocks);
  CHECK(z.value(0) == Catch::Approx(2.5).margin(1e-15));
  CHECK(z.value(1) == Catch::Approx(2.5).margin(1e-15));
  CHECK(z.value(2) == Catch::Approx(14.0 / 3.0).margin(1e-14));
  CHECK(z.value(3) == Catch::Approx(14.0 / 3.0).margin(1e-14));
}

TEST_CASE("vector conditional expectation works coordinatewise", "[prob]") {
  const auto omega = FiniteProbabilitySpace::uniform(4);
  const Partition blocks(4, {{0, 1}, {2, 3}});
  const RandomElement x(omega, SpaceDescriptor::sup_grid(2),
                        {1.0, 0.0, 3.0, 2.0, 2.0, 4.0, 6.0, 0.0});
  const RandomElement y = cond_expectation(x, blocks);
  CHECK(y.values() == std::vector<double>{2.0, 1.0, 2.0, 1.0, 4.0, 2.0, 4.0, 2.0});
  CHECK(expectation(x).coords == std::vector<double>{3.0, 1.5});
  CHECK(is_measurable(y, blocks));
  CHECK_FALSE(is_measurable(x, blocks));
  CHECK(is_measurable(x, Partition::discrete(4)));
}

TEST_CASE("conditional expectation laws hold exactly on random instances", "[prob]") {
  RngStream rng(51, 0);
  for (int i = 0; i < 120; ++i) {
    const ProbSpacePtr omega = random_prob_space(rng, 32);
    const std::size_t n = omega->leaf_count();
    const Partition coarse = random_partition(rng, n);
    const Partition fine = random_refinement(rng, coarse);
    const SpaceDescriptor space = random_mult_space(rng);
    const RandomElement x = random_random_element(rng, omega, space);
    const RandomElement y = random_random_element(rng, omega, space);

    const double tol = 1e-12;
    {  // linearity: E[2x - 3y | G] = 2 E[x|G] - 3 E[y|G]
      std::vector<double> combo(x.values().size());
      for (std::size_t k = 0; k < combo.size(); ++k)
        combo[k] = 2.0 * x.values()[k] - 3.0 * y.values()[k];
      const RandomElement lhs =
          cond_expectation(RandomElement(omega, space, std::move(combo)), coarse);
      const RandomElement ex = cond_expectation(x, coarse);
      const RandomElement ey = cond_expectation(y, coarse);
      for (std::size_t k = 0; k < lhs.values().size(); ++k)
        CHECK(lhs.values()[k] ==
              Catch::Approx(2.0 * ex.values()[k] - 3.0 * ey.values()[k]).margin(tol));
    }
    {  // tower: conditioning down through a finer partition changes nothing
      const RandomElement two_step = cond_expectation(cond_expectation(x, fine), coarse);
      const RandomElement one_step = cond_expectation(x, coarse);
      for (std::size_t k = 0; k < two_step.values().size(); ++k)
        CHECK(two_step.values()[k] == Catch::Approx(one_step.values()[k]).margin(tol));
    }
    {  // taking out what is known: G-measurable scalar factors pull out
      const RandomScalar a = cond_expectation(random_random_scalar(rng, omega), coarse);
      std::vector<double> ax(x.values().size());
      const std::size_t d = space.dim();
      for (std::size_t leaf = 0; leaf < n; ++leaf)
        for (std::size_t c = 0; c < d; ++c)
          ax[leaf * d + c] = a.value(leaf) * x.values()[leaf * d + c];
      const RandomElement lhs = cond_expectation(RandomElement(omega, space, std::move(ax)), coarse);
      const RandomElement xbar = cond_expectation(x, coarse);
      for (std::size_t leaf = 0; leaf < n; ++leaf)
        for (std::size_t c = 0; c < d; ++c)
          CHECK(lhs.values()[leaf * d + c] ==
                Catch::Approx(a.value(leaf) * xbar.values()[leaf * d + c]).margin(tol));
    }
    {  // measurable integrands are fixed points
      const RandomElement xm = random_measurable_element(rng, omega, coarse, space);
      const RandomElement back = cond_expectation(xm, coarse);
      for (std::size_t k = 0; k < back.values().size(); ++k)
        CHECK(back.values()[k] == Catch::Approx(xm.values()[k]).margin(tol));
      CHECK(is_measurable(cond_expectation(x, coarse), coarse));
    }
    {  // trivial partition reproduces the plain expectation on every leaf
      const RandomElement all = cond_expectation(x, Partition::trivial(n));
      const Element mean = expectation(x);
      for (std::size_t leaf = 0; leaf < n; ++leaf)
        for (std::size_t c = 0; c < space.dim(); ++c)
          CHECK(all.values()[leaf * space.dim() + c] == Catch::Approx(mean.coords[c]).margin(tol));
    }
  }
}

TEST_CASE("independence detects product structure", "[prob]") {
  const ProductStructure prod = product_prob_space(5, 4);
  CHECK(independent(*prod.omega, prod.by_first, prod.by_second));
  CHECK(independent(*prod.omega, prod.by_first, Partition::trivial(prod.omega->leaf_count())));

  // Two copies of the same nontrivial partition are dependent.
  const auto omega = FiniteProbabilitySpace::uniform(2);
  CHECK_FALSE(independent(*omega, Partition::discrete(2), Partition::discrete(2)));
}

TEST_CASE("independent factors drop out of conditional expectations", "[prob]") {
  RngStream rng(53, 0);
  for (int i = 0; i < 40; ++i) {
    const std::size_t first = static_cast<std::size_t>(rng.uniform_int(2, 6));
    const std::size_t second = static_cast<std::size_t>(rng.uniform_int(2, 6));
    const ProductStructure prod = product_prob_space(first, second);
    // A quantity depending only on the second factor, conditioned on the first.
    std::vector<double> vals(prod.omega->leaf_count());
    std::vector<double> per_second(second);
    for (double& v : per_second) v = rng.uniform_range(-2.0, 2.0);
    for (std::size_t i1 = 0; i1 < first; ++i1)
      for (std::size_t j = 0; j < second; ++j)
        vals[i1 * second + j] = per_second[j];
    const RandomScalar x(prod.omega, std::move(vals));
    const RandomScalar out = cond_expectation(x, prod.by_first);
    const double mean = expectation(x);
    for (std::size_t leaf = 0; leaf < out.leaf_count(); ++leaf)
      CHECK(out.value(leaf) == Catch::Approx(mean).margin(1e-12));
  }
}

TEST_CASE("jensen gap reproduces the variance identity", "[prob]") {
  const auto omega = FiniteProbabilitySpace::uniform(2);
  const SpaceDescriptor line = SpaceDescriptor::sup_grid(1);
  const RandomElement x(omega, line, {0.0, 2.0});
  // E[x^2] - (E[x])^2 = 2 - 1 = 1 on the trivial partition.
  const RandomElement gap = jensen_gap(ConvexMap::square(line), x, Partition::trivial(2));
  CHECK(gap.values() == std::vector<double>{1.0, 1.0});

  // E[|x|] - |E[x]| = 1 - 0 = 1 for the symmetric two-point variable.
  const RandomElement sym(omega, line, {-1.0, 1.0});
  const RandomElement agap = jensen_gap(ConvexMap::abs_value(line), sym, Partition::trivial(2));
  CHECK(agap.values() == std::vector<double>{1.0, 1.0});

  // E[||x||] - ||E[x]|| = 1 for antipodal unit vectors in the plane.
  const SpaceDescriptor plane = SpaceDescriptor::hilbert(2);
  const RandomElement vec(omega, plane, {1.0, 0.0, -1.0, 0.0});
  const RandomElement ngap = jensen_gap(ConvexMap::norm_as_scalar(plane), vec, Partition::trivial(2));
  CHECK(ngap.values() == std::vector<double>{1.0, 1.0});
}

TEST_CASE("jensen gap is nonnegative for convex maps and zero for linear ones", "[prob]") {
  RngStream rng(54, 0);
  for (int i = 0; i < 120; ++i) {
    const ProbSpacePtr omega = random_prob_space(rng, 24);
    const Partition part = random_partition(rng, omega->leaf_count());
    const SpaceDescriptor space = random_mult_space(rng);
    const RandomElement x = random_random_element(rng, omega, space);

    for (const ConvexMap& f : {ConvexMap::square(space), ConvexMap::abs_value(space),
                               ConvexMap::norm_as_scalar(space)}) {
      const RandomElement gap = jensen_gap(f, x, part);
      for (double v : gap.values()) CHECK(v >= -1e-10);
    }

    std::vector<double> matrix(2 * space.dim());
    for (double& v : matrix) v = rng.uniform_range(-1.0, 1.0);
    const ConvexMap lin = ConvexMap::linear(space, SpaceDescriptor::sup_grid(2), matrix);
    const RandomElement lgap = jensen_gap(lin, x, part);
    for (double v : lgap.values()) CHECK(std::abs(v) <= 1e-12);
  }
}

TEST_CASE("structural mismatches are rejected", "[prob]") {
  const auto omega = FiniteProbabilitySpace::uniform(4);
  const RandomScalar x(omega, {1.0, 2.0, 3.0, 4.0});
  CHECK_THROWS_AS(cond_expectation(x, Partition::trivial(3)), std::invalid_argument);
  CHECK_THROWS_AS(RandomScalar(omega, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(RandomElement(omega, SpaceDescriptor::sup_grid(2), {1.0, 2.0}),
                  std::invalid_argument);
  const ConvexMap sq = ConvexMap::square(SpaceDescriptor::sup_grid(2));
  CHECK_THROWS_AS(sq.apply(Element(SpaceDescriptor::sup_grid(3), {1.0, 2.0, 3.0})),
                  std::invalid_argument);
}
