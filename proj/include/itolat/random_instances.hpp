#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "itolat/integral.hpp"
#include "itolat/martingale.hpp"
#include "itolat/mspace.hpp"
#include "itolat/prob.hpp"
#include "itolat/rng.hpp"
#include "itolat/spaces.hpp"

/// Deterministic generators for randomized property campaigns. Every function
/// draws only from the RngStream it is handed, so a campaign seeded once
/// reproduces its instances bit for bit.
namespace itolat {

inline std::vector<double> random_coords(RngStream& rng, std::size_t dim, double amplitude) {
  std::vector<double> c(dim);
  for (double& v : c) v = rng.uniform_range(-amplitude, amplitude);
  return c;
}

inline std::vector<double> random_weights(RngStream& rng, std::size_t dim) {
  std::vector<double> w(dim);
  for (double& v : w) v = rng.uniform_range(0.25, 2.0);
  return w;
}

/// A random space from the catalogue; only kinds carrying a multiplication.
inline SpaceDescriptor random_mult_space(RngStream& rng, std::size_t max_dim = 5) {
  const std::size_t dim = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_dim)));
  switch (rng.uniform_int(0, 3)) {
    case 0:
      return SpaceDescriptor::sup_grid(dim);
    case 1: {
      const double exps[] = {2.0, 4.0, infinite_exponent};
      return SpaceDescriptor::lp(random_weights(rng, dim), exps[rng.uniform_int(0, 2)]);
    }
    case 2:
      return SpaceDescriptor::hilbert(dim);
    default: {
      const std::size_t count = dim + static_cast<std::size_t>(rng.uniform_int(0, 2));
      std::vector<std::vector<double>> fs;
      for (std::size_t attempt = 0; attempt < 64; ++attempt) {
        fs.clear();
        for (std::size_t k = 0; k < count; ++k) {
          std::vector<double> f = random_coords(rng, dim, 1.0);
          double n = 0.0;
          for (double v : f) n += v * v;
          n = std::sqrt(n);
          if (n < 1e-6) { f.assign(dim, 0.0); f[k % dim] = 1.0; n = 1.0; }
          for (double& v : f) v /= n;
          fs.push_back(std::move(f));
        }
        try {
          return SpaceDescriptor::seq_sup(dim, fs);
        } catch (const std::invalid_argument&) {
          continue;  // rank-deficient draw; try again
        }
      }
      return SpaceDescriptor::hilbert(dim);
    }
  }
}

/// Restricted draw: kinds whose operator norms and dominations stay exactly
/// computable (sup grids, weighted Lp with p in {2, inf}, hilbert).
inline SpaceDescriptor random_operator_space(RngStream& rng, std::size_t max_dim = 4) {
  const std::size_t dim = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_dim)));
  switch (rng.uniform_int(0, 2)) {
    case 0:
      return SpaceDescriptor::sup_grid(dim);
    case 1: {
      const double exps[] = {2.0, infinite_exponent};
      return SpaceDescriptor::lp(random_weights(rng, dim), exps[rng.uniform_int(0, 1)]);
    }
    default:
      return SpaceDescriptor::hilbert(dim);
  }
}

inline Element random_element(RngStream& rng, const SpaceDescriptor& space, double amplitude = 1.0) {
  return Element(space, random_coords(rng, space.dim(), amplitude));
}

inline ProbSpacePtr random_prob_space(RngStream& rng, std::size_t max_leaves = 64) {
  const std::size_t n =
      static_cast<std::size_t>(rng.uniform_int(2, static_cast<std::int64_t>(max_leaves)));
  if (rng.uniform() < 0.5) return FiniteProbabilitySpace::uniform(n);
  std::vector<double> p(n);
  double total = 0.0;
  for (double& v : p) { v = rng.uniform_range(0.1, 1.0); total += v; }
  for (double& v : p) v /= total;
  // Renormalize the largest entry so the exact-sum validation holds.
  double sum = std::accumulate(p.begin(), p.end(), 0.0);
  p[0] += 1.0 - sum;
  return std::make_shared<const FiniteProbabilitySpace>(p);
}

inline Partition random_partition(RngStream& rng, std::size_t leaf_count) {
  std::vector<std::size_t> order(leaf_count);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = leaf_count; i > 1; --i)
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  std::vector<std::vector<std::size_t>> blocks;
  for (std::size_t i = 0; i < leaf_count; ++i) {
    if (blocks.empty() || rng.uniform() < 0.35) blocks.emplace_back();
    blocks.back().push_back(order[i]);
  }
  return Partition(leaf_count, blocks);
}

/// Merge the blocks of a partition into random groups, producing something it
/// refines.
inline Partition random_coarsening(RngStream& rng, const Partition& fine) {
  const std::size_t groups =
      static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(std::max<std::size_t>(1, fine.block_count() / 2 + 1))));
  std::vector<std::vector<std::size_t>> merged(groups);
  for (std::size_t b = 0; b < fine.block_count(); ++b) {
    const std::size_t g = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(groups) - 1));
    const auto blk = fine.block(b);
    merged[g].insert(merged[g].end(), blk.begin(), blk.end());
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const std::vector<std::size_t>& g) { return g.empty(); }),
               merged.end());
  return Partition(fine.leaf_count(), merged);
}

/// Split some blocks of a partition, producing something refining it.
inline Partition random_refinement(RngStream& rng, const Partition& coarse) {
  std::vector<std::vector<std::size_t>> blocks;
  for (std::size_t b = 0; b < coarse.block_count(); ++b) {
    const auto blk = coarse.block(b);
    std::vector<std::size_t> leaves(blk.begin(), blk.end());
    if (leaves.size() >= 2 && rng.uniform() < 0.6) {
      for (std::size_t i = leaves.size(); i > 1; --i)
        std::swap(leaves[i - 1],
                  leaves[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
      const std::size_t cut =
          static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(leaves.size()) - 1));
      blocks.emplace_back(leaves.begin(), leaves.begin() + static_cast<std::ptrdiff_t>(cut));
      blocks.emplace_back(leaves.begin() + static_cast<std::ptrdiff_t>(cut), leaves.end());
    } else {
      blocks.push_back(std::move(leaves));
    }
  }
  return Partition(coarse.leaf_count(), blocks);
}

/// A random filtration over omega: trivial at time 0, then successive random
/// refinements at unit-spaced-ish random times.
inline FiltrationPtr random_filtration(RngStream& rng, const ProbSpacePtr& omega,
                                       std::size_t max_steps = 5) {
  const std::size_t steps =
      static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_steps)));
  std::vector<double> times{0.0};
  std::vector<Partition> parts{Partition::trivial(omega->leaf_count())};
  for (std::size_t j = 0; j < steps; ++j) {
    times.push_back(times.back() + rng.uniform_range(0.25, 1.5));
    parts.push_back(random_refinement(rng, parts.back()));
  }
  return std::make_shared<const Filtration>(std::move(times), std::move(parts));
}

/// A block-constant random element: measurable for the given partition.
inline RandomElement random_measurable_element(RngStream& rng, const ProbSpacePtr& omega,
                                               const Partition& grouping,
                                               const SpaceDescriptor& space,
                                               double amplitude = 1.0) {
  std::vector<double> values(omega->leaf_count() * space.dim());
  for (std::size_t b = 0; b < grouping.block_count(); ++b) {
    const std::vector<double> c = random_coords(rng, space.dim(), amplitude);
    for (std::size_t leaf : grouping.block(b))
      std::copy(c.begin(), c.end(), values.begin() + static_cast<std::ptrdiff_t>(leaf * space.dim()));
  }
  return RandomElement(omega, space, std::move(values));
}

inline RandomElement random_random_element(RngStream& rng, const ProbSpacePtr& omega,
                                           const SpaceDescriptor& space, double amplitude = 1.0) {
  return RandomElement(omega, space, random_coords(rng, omega->leaf_count() * space.dim(), amplitude));
}

inline RandomScalar random_random_scalar(RngStream& rng, const ProbSpacePtr& omega,
                                         double amplitude = 1.0) {
  return RandomScalar(omega, random_coords(rng, omega->leaf_count(), amplitude));
}

/// A martingale on an arbitrary filtration: center a random terminal variable
/// and pull it back by conditional expectation, so the martingale property
/// holds by the tower rule.
inline ScalarMartingale random_tree_martingale(RngStream& rng, const ProbSpacePtr& omega,
                                               const FiltrationPtr& filtration,
                                               double amplitude = 1.0) {
  const std::size_t leaves = omega->leaf_count();
  const std::size_t time_count = filtration->times().size();
  std::vector<double> terminal = random_coords(rng, leaves, amplitude);
  double mean = 0.0;
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) mean += omega->prob(leaf) * terminal[leaf];
  for (double& v : terminal) v -= mean;
  std::vector<double> paths(time_count * leaves);
  const RandomScalar x(omega, terminal);
  for (std::size_t j = 0; j < time_count; ++j) {
    const RandomScalar mj = cond_expectation(x, filtration->partition(j));
    std::copy(mj.values().begin(), mj.values().end(),
              paths.begin() + static_cast<std::ptrdiff_t>(j * leaves));
  }
  return ScalarMartingale(omega, filtration, std::move(paths), MartingaleBackend::exact_tree);
}

/// A random integrand adapted to the martingale's filtration: block-constant
/// at every grid time.
inline AdaptedProcess random_adapted_process(RngStream& rng, const ScalarMartingale& m,
                                            const SpaceDescriptor& space, double amplitude = 1.0) {
  const std::size_t leaves = m.leaf_count();
  const std::size_t dim = space.dim();
  const Filtration& f = *m.filtration();
  std::vector<double> values(f.times().size() * leaves * dim);
  for (std::size_t j = 0; j < f.times().size(); ++j) {
    const Partition& part = f.partition(j);
    for (std::size_t b = 0; b < part.block_count(); ++b) {
      const std::vector<double> c = random_coords(rng, dim, amplitude);
      for (std::size_t leaf : part.block(b))
        std::copy(c.begin(), c.end(),
                  values.begin() + static_cast<std::ptrdiff_t>((j * leaves + leaf) * dim));
    }
  }
  return AdaptedProcess(m.omega(), m.filtration(), space, std::move(values));
}

/// A random piecewise-constant integrand: random breakpoints (possibly with a
/// degenerate duplicate) and block-constant pieces at their left endpoints.
inline ElementaryProcess random_elementary_process(RngStream& rng, const ScalarMartingale& m,
                                                  const SpaceDescriptor& space,
                                                  double amplitude = 1.0,
                                                  std::size_t max_pieces = 6) {
  const std::size_t steps = m.step_count();
  const Filtration& f = *m.filtration();
  std::size_t pieces =
      static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(std::min(max_pieces, steps))));
  std::vector<std::size_t> interior;
  for (std::size_t j = 1; j < steps; ++j) interior.push_back(j);
  for (std::size_t i = interior.size(); i > 1; --i)
    std::swap(interior[i - 1],
              interior[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  std::vector<std::size_t> breaks{0};
  for (std::size_t i = 0; i + 1 < pieces && i < interior.size(); ++i) breaks.push_back(interior[i]);
  std::sort(breaks.begin(), breaks.end());
  if (rng.uniform() < 0.2 && breaks.size() > 1)
    breaks.push_back(breaks[static_cast<std::size_t>(
        rng.uniform_int(1, static_cast<std::int64_t>(breaks.size()) - 1))]);
  std::sort(breaks.begin(), breaks.end());
  breaks.push_back(steps);
  std::vector<RandomElement> piece_values;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    piece_values.push_back(
        random_measurable_element(rng, m.omega(), f.partition(breaks[i]), space, amplitude));
  return ElementaryProcess(m.filtration(), std::move(breaks), std::move(piece_values));
}

inline DualFunctional random_dual(RngStream& rng, const SpaceDescriptor& space,
                                  double amplitude = 1.0) {
  return DualFunctional(space, random_coords(rng, space.dim(), amplitude));
}

inline LinearOperator random_operator(RngStream& rng, const SpaceDescriptor& from,
                                      const SpaceDescriptor& to, double amplitude = 1.0) {
  return LinearOperator(from, to, random_coords(rng, from.dim() * to.dim(), amplitude));
}

inline MeasureSpacePtr random_measure_space(RngStream& rng, std::size_t max_atoms = 8) {
  const std::size_t n =
      static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_atoms)));
  std::vector<double> w(n);
  for (double& v : w) v = rng.uniform_range(0.25, 2.0);
  return std::make_shared<const FiniteMeasureSpace>(std::move(w));
}

inline MeasureField random_measure_field(RngStream& rng, const MeasureSpacePtr& base,
                                         const SpaceDescriptor& space, double amplitude = 1.0) {
  return MeasureField(base, space, random_coords(rng, base->atom_count() * space.dim(), amplitude));
}

/// A probability space with product structure: leaf = i * second + j, with the
/// two marginal partitions (by first and by second factor). Marginal-dependent
/// variables are independent by construction.
struct ProductStructure {
  ProbSpacePtr omega;
  Partition by_first;
  Partition by_second;
};

inline ProductStructure product_prob_space(std::size_t first, std::size_t second) {
  if (first == 0 || second == 0) throw std::invalid_argument("product_prob_space: empty factor");
  const std::size_t n = first * second;
  std::vector<std::vector<std::size_t>> byf(first), bys(second);
  for (std::size_t i = 0; i < first; ++i)
    for (std::size_t j = 0; j < second; ++j) {
      byf[i].push_back(i * second + j);
      bys[j].push_back(i * second + j);
    }
  return ProductStructure{FiniteProbabilitySpace::uniform(n), Partition(n, byf), Partition(n, bys)};
}

}  // namespace itolat
