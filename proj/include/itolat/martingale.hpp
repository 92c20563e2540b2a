#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "itolat/prob.hpp"
#include "itolat/rng.hpp"

namespace itolat {

/// exact_tree martingales enumerate all outcomes and satisfy the conditional
/// identities exactly; monte_carlo martingales carry sampled paths (leaves are
/// equiprobable paths) and are checked statistically.
enum class MartingaleBackend { exact_tree, monte_carlo };

/// A scalar process on the filtration's grid with M(t_0) = 0, adapted, and on
/// the exact_tree backend a martingale to within 1e-12 (verified at
/// construction). Values are stored time-major.
class ScalarMartingale {
 public:
  ScalarMartingale(ProbSpacePtr omega, FiltrationPtr filtration, std::vector<double> paths,
                   MartingaleBackend backend)
      : omega_(std::move(omega)), filtration_(std::move(filtration)), paths_(std::move(paths)),
        backend_(backend) {
    if (!omega_ || !filtration_) throw std::invalid_argument("martingale: null space/filtration");
    const std::size_t leaves = omega_->leaf_count();
    const std::size_t m = filtration_->times().size();
    if (paths_.size() != leaves * m)
      throw std::invalid_argument("martingale: path buffer size != times * leaves");
    if (filtration_->partition(0).leaf_count() != leaves)
      throw std::invalid_argument("martingale: filtration leaf count mismatch");
    for (std::size_t leaf = 0; leaf < leaves; ++leaf)
      if (std::abs(value(0, leaf)) > 1e-12)
        throw std::invalid_argument("martingale: must start at 0");
    for (std::size_t j = 0; j < m; ++j) {
      const RandomScalar vj = at(j);
      if (!is_measurable(vj, filtration_->partition(j), 1e-12))
        throw std::invalid_argument("martingale: not adapted to the filtration");
    }
    if (backend_ == MartingaleBackend::exact_tree) {
      for (std::size_t j = 0; j + 1 < m; ++j) {
        const RandomScalar next = at(j + 1);
        const RandomScalar cond = cond_expectation(next, filtration_->partition(j));
        for (std::size_t leaf = 0; leaf < leaves; ++leaf)
          if (std::abs(cond.value(leaf) - value(j, leaf)) > 1e-12)
            throw std::invalid_argument("martingale: conditional mean drifts on the tree");
      }
    }
  }

  const ProbSpacePtr& omega() const noexcept { return omega_; }
  const FiltrationPtr& filtration() const noexcept { return filtration_; }
  MartingaleBackend backend() const noexcept { return backend_; }
  const std::vector<double>& times() const noexcept { return filtration_->times(); }
  double horizon() const noexcept { return filtration_->horizon(); }
  std::size_t step_count() const noexcept { return filtration_->step_count(); }
  std::size_t leaf_count() const noexcept { return omega_->leaf_count(); }

  double value(std::size_t time_idx, std::size_t leaf) const {
    return paths_[time_idx * leaf_count() + leaf];
  }

  /// Cadlag step evaluation at arbitrary t in the grid span.
  double value_at_time(double t, std::size_t leaf) const {
    return value(filtration_->floor_index(t), leaf);
  }

  double increment(std::size_t step, std::size_t leaf) const {
    return value(step + 1, leaf) - value(step, leaf);
  }

  RandomScalar at(std::size_t time_idx) const {
    const std::size_t leaves = leaf_count();
    std::vector<double> v(paths_.begin() + time_idx * leaves,
                          paths_.begin() + (time_idx + 1) * leaves);
    return RandomScalar(omega_, std::move(v));
  }

 private:
  ProbSpacePtr omega_;
  FiltrationPtr filtration_;
  std::vector<double> paths_;  // [time][leaf]
  MartingaleBackend backend_;
};

/// The symmetric +-scale random walk on 2^steps equiprobable leaves, grid times
/// 0,1,...,steps. Leaf bit (steps-1-j), read most significant first, is the
/// sign of step j (0 = up), so filtration blocks are runs of consecutive
/// leaves sharing their first j signs.
inline ScalarMartingale random_walk_martingale(std::size_t steps, double scale) {
  if (steps == 0) throw std::invalid_argument("random_walk_martingale: needs at least one step");
  if (steps > 20)
    throw std::invalid_argument("random_walk_martingale: more than 20 steps is not tractable");
  if (!(scale > 0.0)) throw std::invalid_argument("random_walk_martingale: scale must be positive");
  const std::size_t leaves = std::size_t{1} << steps;
  ProbSpacePtr omega = FiniteProbabilitySpace::uniform(leaves);

  std::vector<double> times(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) times[j] = static_cast<double>(j);
  std::vector<Partition> partitions;
  partitions.reserve(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) {
    const std::size_t block_size = leaves >> j;
    std::vector<std::vector<std::size_t>> blocks(std::size_t{1} << j);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      blocks[b].resize(block_size);
      for (std::size_t i = 0; i < block_size; ++i) blocks[b][i] = b * block_size + i;
    }
    partitions.emplace_back(leaves, blocks);
  }
  FiltrationPtr filtration =
      std::make_shared<const Filtration>(std::move(times), std::move(partitions));

  std::vector<double> paths((steps + 1) * leaves, 0.0);
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
    double m = 0.0;
    for (std::size_t j = 0; j < steps; ++j) {
      const bool down = (leaf >> (steps - 1 - j)) & 1u;
      m += down ? -scale : scale;
      paths[(j + 1) * leaves + leaf] = m;
    }
  }
  return ScalarMartingale(std::move(omega), std::move(filtration), std::move(paths),
                          MartingaleBackend::exact_tree);
}

namespace detail {

/// Monte-Carlo filtration: trivial at t_0, one singleton block per path after.
/// Continuum filtrations have no finite partition; this realization keeps the
/// adaptedness bookkeeping trivially consistent while conditional statements
/// about the backend are checked statistically.
inline FiltrationPtr mc_filtration(std::vector<double> grid, std::size_t paths) {
  std::vector<Partition> partitions;
  partitions.reserve(grid.size());
  partitions.push_back(Partition::trivial(paths));
  const Partition singletons = Partition::discrete(paths);
  for (std::size_t j = 1; j < grid.size(); ++j) partitions.push_back(singletons);
  return std::make_shared<const Filtration>(std::move(grid), std::move(partitions));
}

inline void check_mc_grid(const std::vector<double>& grid) {
  if (grid.size() < 2) throw std::invalid_argument("monte carlo grid: needs at least two times");
  if (grid.front() != 0.0) throw std::invalid_argument("monte carlo grid: must start at 0");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] < grid[i + 1]))
      throw std::invalid_argument("monte carlo grid: times must be strictly increasing");
}

}  // namespace detail

/// Brownian paths sampled on the grid: independent Normal(0, dt) increments.
/// Each path draws from its own (seed, leaf) stream, so the result is
/// reproducible bit for bit and independent of evaluation order.
inline ScalarMartingale mc_brownian(std::size_t path_count, std::vector<double> grid,
                                    std::uint64_t seed) {
  if (path_count == 0) throw std::invalid_argument("mc_brownian: path count must be positive");
  detail::check_mc_grid(grid);
  const std::size_t m = grid.size();
  std::vector<double> paths(m * path_count, 0.0);
  for (std::size_t leaf = 0; leaf < path_count; ++leaf) {
    RngStream rng(seed, leaf);
    double w = 0.0;
    for (std::size_t j = 1; j < m; ++j) {
      const double dt = grid[j] - grid[j - 1];
      w += std::sqrt(dt) * rng.normal();
      paths[j * path_count + leaf] = w;
    }
  }
  ProbSpacePtr omega = FiniteProbabilitySpace::uniform(path_count);
  FiltrationPtr filtration = detail::mc_filtration(std::move(grid), path_count);
  return ScalarMartingale(std::move(omega), std::move(filtration), std::move(paths),
                          MartingaleBackend::monte_carlo);
}

/// Compensated Poisson paths N(t) - rate * t sampled on the grid.
inline ScalarMartingale mc_compensated_poisson(double rate, std::vector<double> grid,
                                               std::size_t path_count, std::uint64_t seed) {
  if (!(rate > 0.0)) throw std::invalid_argument("mc_compensated_poisson: rate must be positive");
  if (path_count == 0)
    throw std::invalid_argument("mc_compensated_poisson: path count must be positive");
  detail::check_mc_grid(grid);
  const std::size_t m = grid.size();
  std::vector<double> paths(m * path_count, 0.0);
  for (std::size_t leaf = 0; leaf < path_count; ++leaf) {
    RngStream rng(seed, leaf);
    double n = 0.0;
    for (std::size_t j = 1; j < m; ++j) {
      const double dt = grid[j] - grid[j - 1];
      n += static_cast<double>(rng.poisson(rate * dt));
      paths[j * path_count + leaf] = n - rate * grid[j];
    }
  }
  ProbSpacePtr omega = FiniteProbabilitySpace::uniform(path_count);
  FiltrationPtr filtration = detail::mc_filtration(std::move(grid), path_count);
  return ScalarMartingale(std::move(omega), std::move(filtration), std::move(paths),
                          MartingaleBackend::monte_carlo);
}

// ---------------------------------------------------------------------------
// Quadratic variation.
// ---------------------------------------------------------------------------

/// Pathwise running sum of squared increments over the grid. The mass a step
/// contributes, (M(t_{j+1}) - M(t_j))^2, is stored as computed: deriving it
/// from adjacent cumulative values would pick up rounding from the running
/// sum and break the identity "step mass equals squared increment".
class QuadraticVariation {
 public:
  QuadraticVariation(const ScalarMartingale& m) : leaves_(m.leaf_count()) {
    const std::size_t times = m.times().size();
    cumulative_.assign(times * leaves_, 0.0);
    masses_.assign((times - 1) * leaves_, 0.0);
    for (std::size_t leaf = 0; leaf < leaves_; ++leaf) {
      double acc = 0.0;
      for (std::size_t j = 0; j + 1 < times; ++j) {
        const double d = m.increment(j, leaf);
        masses_[j * leaves_ + leaf] = d * d;
        acc += d * d;
        cumulative_[(j + 1) * leaves_ + leaf] = acc;
      }
    }
  }

  double value(std::size_t time_idx, std::size_t leaf) const {
    return cumulative_[time_idx * leaves_ + leaf];
  }

  /// Mass carried by step j, i.e. the interval (t_j, t_{j+1}].
  double step_increment(std::size_t step, std::size_t leaf) const {
    return masses_[step * leaves_ + leaf];
  }

  std::size_t leaf_count() const noexcept { return leaves_; }

 private:
  std::size_t leaves_;
  std::vector<double> cumulative_;  // [time][leaf]
  std::vector<double> masses_;      // [step][leaf], exactly the squared increments
};

inline QuadraticVariation quadratic_variation(const ScalarMartingale& m) {
  return QuadraticVariation(m);
}

struct QvPropertyReport {
  bool starts_at_zero = false;
  bool jump_identity = false;           // step mass == squared increment, as an identity
  double max_compensation_residual = 0.0;  // tree: exact residual of M^2 - [M] being a martingale
  double max_compensation_zscore = 0.0;    // monte carlo: |mean| / se of the same increments
  bool compensation_martingale = false;
  bool pass = false;
};

/// Checks the defining properties of [M]: it starts at 0, its jumps are the
/// squared increments of M, and M^2 - [M] is a martingale. The last check is
/// exact (block conditional means, tolerance 1e-12) on exact_tree and
/// statistical (mean and regression against M(t_j), 4 standard errors) on
/// monte_carlo.
inline QvPropertyReport verify_qv_properties(const ScalarMartingale& m) {
  const QuadraticVariation qv(m);
  const std::size_t leaves = m.leaf_count();
  const std::size_t steps = m.step_count();
  QvPropertyReport rep;

  rep.starts_at_zero = true;
  for (std::size_t leaf = 0; leaf < leaves; ++leaf)
    if (qv.value(0, leaf) != 0.0) rep.starts_at_zero = false;

  rep.jump_identity = true;
  for (std::size_t leaf = 0; leaf < leaves && rep.jump_identity; ++leaf)
    for (std::size_t j = 0; j < steps; ++j) {
      const double d = m.increment(j, leaf);
      if (qv.step_increment(j, leaf) != d * d) {
        rep.jump_identity = false;
        break;
      }
    }

  auto compensated = [&](std::size_t time_idx, std::size_t leaf) {
    const double v = m.value(time_idx, leaf);
    return v * v - qv.value(time_idx, leaf);
  };

  if (m.backend() == MartingaleBackend::exact_tree) {
    for (std::size_t j = 0; j < steps; ++j) {
      std::vector<double> next(leaves);
      for (std::size_t leaf = 0; leaf < leaves; ++leaf) next[leaf] = compensated(j + 1, leaf);
      const RandomScalar cond =
          cond_expectation(RandomScalar(m.omega(), std::move(next)), m.filtration()->partition(j));
      for (std::size_t leaf = 0; leaf < leaves; ++leaf)
        rep.max_compensation_residual = std::max(
            rep.max_compensation_residual, std::abs(cond.value(leaf) - compensated(j, leaf)));
    }
    rep.compensation_martingale = rep.max_compensation_residual <= 1e-12;
  } else {
    // E[d_j] = 0 and E[d_j M(t_j)] = 0, where d_j is the increment of M^2-[M].
    for (std::size_t j = 0; j < steps; ++j) {
      for (int moment = 0; moment < 2; ++moment) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
          const double d = compensated(j + 1, leaf) - compensated(j, leaf);
          const double s = moment == 0 ? d : d * m.value(j, leaf);
          mean += s;
          sq += s * s;
        }
        mean /= static_cast<double>(leaves);
        const double var =
            std::max(0.0, sq / static_cast<double>(leaves) - mean * mean);
        const double se = std::sqrt(var / static_cast<double>(leaves));
        const double z = se > 0.0 ? std::abs(mean) / se : (mean == 0.0 ? 0.0 : 1e300);
        rep.max_compensation_zscore = std::max(rep.max_compensation_zscore, z);
      }
    }
    rep.compensation_martingale = rep.max_compensation_zscore <= 4.0;
  }

  rep.pass = rep.starts_at_zero && rep.jump_identity && rep.compensation_martingale;
  return rep;
}

}  // namespace itolat
