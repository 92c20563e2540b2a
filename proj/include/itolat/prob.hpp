#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "itolat/spaces.hpp"

namespace itolat {

/// Finitely many atomic outcomes ("leaves") with strictly positive weights
/// summing to 1, up to an accumulation allowance that grows with the leaf
/// count (summing n rounded weights can drift by n ulps, so a fixed cutoff
/// would reject large uniform spaces).
class FiniteProbabilitySpace {
 public:
  explicit FiniteProbabilitySpace(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw std::invalid_argument("probability space: needs at least one leaf");
    double total = 0.0;
    for (double p : probs_) {
      if (!(p > 0.0) || !std::isfinite(p))
        throw std::invalid_argument("probability space: leaf weights must be strictly positive");
      total += p;
    }
    const double allowance =
        1e-12 + static_cast<double>(probs_.size()) * std::numeric_limits<double>::epsilon();
    if (std::abs(total - 1.0) > allowance)
      throw std::invalid_argument("probability space: leaf weights must sum to 1");
  }

  static std::shared_ptr<const FiniteProbabilitySpace> uniform(std::size_t leaves) {
    return std::make_shared<const FiniteProbabilitySpace>(
        std::vector<double>(leaves, 1.0 / static_cast<double>(leaves)));
  }

  std::size_t leaf_count() const noexcept { return probs_.size(); }
  double prob(std::size_t leaf) const { return probs_.at(leaf); }
  const std::vector<double>& probs() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

using ProbSpacePtr = std::shared_ptr<const FiniteProbabilitySpace>;

/// An exact set partition of the leaves. Blocks are kept sorted internally and
/// ordered by least contained leaf, so every computation that iterates blocks
/// is deterministic. Cheap to copy (shared immutable data).
class Partition {
 public:
  Partition(std::size_t leaf_count, const std::vector<std::vector<std::size_t>>& blocks) {
    if (leaf_count == 0) throw std::invalid_argument("partition: leaf count must be positive");
    std::vector<std::vector<std::size_t>> sorted = blocks;
    for (auto& b : sorted) {
      if (b.empty()) throw std::invalid_argument("partition: empty block");
      std::sort(b.begin(), b.end());
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    Data d;
    d.leaf_count = leaf_count;
    d.leaf_to_block.assign(leaf_count, leaf_count);
    d.offsets.push_back(0);
    for (std::size_t bi = 0; bi < sorted.size(); ++bi) {
      for (std::size_t leaf : sorted[bi]) {
        if (leaf >= leaf_count) throw std::invalid_argument("partition: leaf index out of range");
        if (d.leaf_to_block[leaf] != leaf_count)
          throw std::invalid_argument("partition: leaf appears in two blocks");
        d.leaf_to_block[leaf] = bi;
        d.flat.push_back(leaf);
      }
      d.offsets.push_back(d.flat.size());
    }
    for (std::size_t leaf = 0; leaf < leaf_count; ++leaf)
      if (d.leaf_to_block[leaf] == leaf_count)
        throw std::invalid_argument("partition: leaf missing from every block");
    data_ = std::make_shared<const Data>(std::move(d));
  }

  static Partition trivial(std::size_t leaf_count) {
    std::vector<std::size_t> all(leaf_count);
    for (std::size_t i = 0; i < leaf_count; ++i) all[i] = i;
    return Partition(leaf_count, {all});
  }

  static Partition discrete(std::size_t leaf_count) {
    std::vector<std::vector<std::size_t>> blocks(leaf_count);
    for (std::size_t i = 0; i < leaf_count; ++i) blocks[i] = {i};
    return Partition(leaf_count, blocks);
  }

  std::size_t leaf_count() const noexcept { return data_->leaf_count; }
  std::size_t block_count() const noexcept { return data_->offsets.size() - 1; }

  std::span<const std::size_t> block(std::size_t i) const {
    if (i >= block_count()) throw std::invalid_argument("partition: block index out of range");
    return std::span<const std::size_t>(data_->flat).subspan(data_->offsets[i],
                                                             data_->offsets[i + 1] -
                                                                 data_->offsets[i]);
  }

  std::size_t block_of(std::size_t leaf) const { return data_->leaf_to_block.at(leaf); }

  /// True when every block of *this lies inside one block of coarser.
  bool refines(const Partition& coarser) const {
    if (leaf_count() != coarser.leaf_count()) return false;
    for (std::size_t bi = 0; bi < block_count(); ++bi) {
      const auto leaves = block(bi);
      const std::size_t target = coarser.block_of(leaves.front());
      for (std::size_t leaf : leaves)
        if (coarser.block_of(leaf) != target) return false;
    }
    return true;
  }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.data_ == b.data_ ||
           (a.data_->leaf_count == b.data_->leaf_count &&
            a.data_->offsets == b.data_->offsets && a.data_->flat == b.data_->flat);
  }

 private:
  struct Data {
    std::size_t leaf_count = 0;
    std::vector<std::size_t> flat;      // blocks back to back, each sorted
    std::vector<std::size_t> offsets;   // block boundaries in flat
    std::vector<std::size_t> leaf_to_block;
  };
  std::shared_ptr<const Data> data_;
};

/// An increasing time grid starting at 0 together with one partition per grid
/// time, each refining its predecessor.
class Filtration {
 public:
  Filtration(std::vector<double> times, std::vector<Partition> partitions)
      : times_(std::move(times)), partitions_(std::move(partitions)) {
    if (times_.size() < 2) throw std::invalid_argument("filtration: needs at least two grid times");
    if (times_.front() != 0.0) throw std::invalid_argument("filtration: grid must start at 0");
    for (std::size_t i = 0; i + 1 < times_.size(); ++i)
      if (!(times_[i] < times_[i + 1]))
        throw std::invalid_argument("filtration: grid times must be strictly increasing");
    if (partitions_.size() != times_.size())
      throw std::invalid_argument("filtration: one partition per grid time required");
    for (std::size_t i = 0; i + 1 < partitions_.size(); ++i)
      if (!partitions_[i + 1].refines(partitions_[i]))
        throw std::invalid_argument("filtration: partitions must refine over time");
  }

  const std::vector<double>& times() const noexcept { return times_; }
  double horizon() const noexcept { return times_.back(); }
  std::size_t step_count() const noexcept { return times_.size() - 1; }
  const Partition& partition(std::size_t i) const { return partitions_.at(i); }

  /// Index of the last grid time <= t (cadlag step convention).
  std::size_t floor_index(double t) const {
    if (t < times_.front() || t > times_.back())
      throw std::invalid_argument("filtration: time outside grid span");
    std::size_t lo = 0;
    for (std::size_t i = 0; i < times_.size(); ++i)
      if (times_[i] <= t) lo = i;
    return lo;
  }

 private:
  std::vector<double> times_;
  std::vector<Partition> partitions_;
};

using FiltrationPtr = std::shared_ptr<const Filtration>;

// ---------------------------------------------------------------------------
// Random quantities.
// ---------------------------------------------------------------------------

/// A scalar random variable: one value per leaf.
class RandomScalar {
 public:
  RandomScalar(ProbSpacePtr omega, std::vector<double> values)
      : omega_(std::move(omega)), values_(std::move(values)) {
    if (!omega_) throw std::invalid_argument("RandomScalar: null probability space");
    if (values_.size() != omega_->leaf_count())
      throw std::invalid_argument("RandomScalar: one value per leaf required");
  }

  const ProbSpacePtr& omega() const noexcept { return omega_; }
  std::size_t leaf_count() const noexcept { return values_.size(); }
  double value(std::size_t leaf) const { return values_.at(leaf); }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& mutable_values() noexcept { return values_; }

 private:
  ProbSpacePtr omega_;
  std::vector<double> values_;
};

/// A space-valued random variable: one Element per leaf, stored flat
/// (leaf-major) against a shared descriptor.
class RandomElement {
 public:
  RandomElement(ProbSpacePtr omega, SpaceDescriptor space, std::vector<double> values)
      : omega_(std::move(omega)), space_(std::move(space)), values_(std::move(values)) {
    if (!omega_) throw std::invalid_argument("RandomElement: null probability space");
    if (values_.size() != omega_->leaf_count() * space_.dim())
      throw std::invalid_argument("RandomElement: value buffer size != leaves * dim");
  }

  static RandomElement constant(ProbSpacePtr omega, const Element& x) {
    std::vector<double> vals(omega->leaf_count() * x.space.dim());
    for (std::size_t leaf = 0; leaf < omega->leaf_count(); ++leaf)
      std::copy(x.coords.begin(), x.coords.end(), vals.begin() + leaf * x.space.dim());
    return RandomElement(std::move(omega), x.space, std::move(vals));
  }

  static RandomElement zero(ProbSpacePtr omega, SpaceDescriptor space) {
    std::vector<double> vals(omega->leaf_count() * space.dim(), 0.0);
    return RandomElement(std::move(omega), std::move(space), std::move(vals));
  }

  const ProbSpacePtr& omega() const noexcept { return omega_; }
  const SpaceDescriptor& space() const noexcept { return space_; }
  std::size_t leaf_count() const noexcept { return omega_->leaf_count(); }

  std::span<const double> leaf(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * space_.dim(), space_.dim());
  }
  std::span<double> mutable_leaf(std::size_t i) {
    return std::span<double>(values_).subspan(i * space_.dim(), space_.dim());
  }
  Element element(std::size_t i) const {
    const auto s = leaf(i);
    return Element(space_, std::vector<double>(s.begin(), s.end()));
  }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  ProbSpacePtr omega_;
  SpaceDescriptor space_;
  std::vector<double> values_;
};

inline void require_same_omega(const ProbSpacePtr& a, const ProbSpacePtr& b, const char* op) {
  if (a == b) return;
  if (a->leaf_count() != b->leaf_count() || a->probs() != b->probs())
    throw std::invalid_argument(std::string(op) + ": different probability spaces");
}

// ---------------------------------------------------------------------------
// Expectation and conditional expectation (exact block averages).
// ---------------------------------------------------------------------------

inline double expectation(const RandomScalar& x) {
  double acc = 0.0;
  for (std::size_t leaf = 0; leaf < x.leaf_count(); ++leaf)
    acc += x.omega()->prob(leaf) * x.value(leaf);
  return acc;
}

inline Element expectation(const RandomElement& x) {
  Element out = zero_element(x.space());
  for (std::size_t leaf = 0; leaf < x.leaf_count(); ++leaf) {
    const double p = x.omega()->prob(leaf);
    const auto v = x.leaf(leaf);
    for (std::size_t c = 0; c < v.size(); ++c) out.coords[c] += p * v[c];
  }
  return out;
}

namespace detail {

/// Per block: weighted mean of the rows, written back to every member leaf.
/// This is the defining property of conditional expectation on atomic spaces;
/// blocks are visited in least-leaf order and leaves in ascending order, so the
/// result is bit-for-bit deterministic.
inline void block_average(const FiniteProbabilitySpace& omega, const Partition& partition,
                          std::span<const double> in, std::size_t stride, std::span<double> out) {
  std::vector<double> acc(stride);
  for (std::size_t bi = 0; bi < partition.block_count(); ++bi) {
    const auto leaves = partition.block(bi);
    std::fill(acc.begin(), acc.end(), 0.0);
    double mass = 0.0;
    for (std::size_t leaf : leaves) {
      const double p = omega.prob(leaf);
      mass += p;
      for (std::size_t c = 0; c < stride; ++c) acc[c] += p * in[leaf * stride + c];
    }
    for (std::size_t c = 0; c < stride; ++c) acc[c] /= mass;
    for (std::size_t leaf : leaves)
      for (std::size_t c = 0; c < stride; ++c) out[leaf * stride + c] = acc[c];
  }
}

}  // namespace detail

inline RandomScalar cond_expectation(const RandomScalar& x, const Partition& partition) {
  if (partition.leaf_count() != x.leaf_count())
    throw std::invalid_argument("cond_expectation: partition/space leaf mismatch");
  std::vector<double> out(x.leaf_count());
  detail::block_average(*x.omega(), partition, x.values(), 1, out);
  return RandomScalar(x.omega(), std::move(out));
}

inline RandomElement cond_expectation(const RandomElement& x, const Partition& partition) {
  if (partition.leaf_count() != x.leaf_count())
    throw std::invalid_argument("cond_expectation: partition/space leaf mismatch");
  std::vector<double> out(x.values().size());
  detail::block_average(*x.omega(), partition, x.values(), x.space().dim(), out);
  return RandomElement(x.omega(), x.space(), std::move(out));
}

/// True when the values are constant on every block (within tol, absolute).
inline bool is_measurable(const RandomScalar& x, const Partition& partition, double tol = 1e-12) {
  if (partition.leaf_count() != x.leaf_count())
    throw std::invalid_argument("is_measurable: partition/space leaf mismatch");
  for (std::size_t bi = 0; bi < partition.block_count(); ++bi) {
    const auto leaves = partition.block(bi);
    const double ref = x.value(leaves.front());
    for (std::size_t leaf : leaves)
      if (std::abs(x.value(leaf) - ref) > tol) return false;
  }
  return true;
}

inline bool is_measurable(const RandomElement& x, const Partition& partition, double tol = 1e-12) {
  if (partition.leaf_count() != x.leaf_count())
    throw std::invalid_argument("is_measurable: partition/space leaf mismatch");
  for (std::size_t bi = 0; bi < partition.block_count(); ++bi) {
    const auto leaves = partition.block(bi);
    const auto ref = x.leaf(leaves.front());
    for (std::size_t leaf : leaves) {
      const auto v = x.leaf(leaf);
      for (std::size_t c = 0; c < v.size(); ++c)
        if (std::abs(v[c] - ref[c]) > tol) return false;
    }
  }
  return true;
}

/// Independence of two partition sigma-algebras: P(A cap B) = P(A) P(B) for
/// every block pair, within tol.
inline bool independent(const FiniteProbabilitySpace& omega, const Partition& a,
                        const Partition& b, double tol = 1e-12) {
  if (a.leaf_count() != omega.leaf_count() || b.leaf_count() != omega.leaf_count())
    throw std::invalid_argument("independent: partition/space leaf mismatch");
  std::vector<double> pa(a.block_count(), 0.0), pb(b.block_count(), 0.0);
  std::vector<double> joint(a.block_count() * b.block_count(), 0.0);
  for (std::size_t leaf = 0; leaf < omega.leaf_count(); ++leaf) {
    const double p = omega.prob(leaf);
    const std::size_t ba = a.block_of(leaf);
    const std::size_t bb = b.block_of(leaf);
    pa[ba] += p;
    pb[bb] += p;
    joint[ba * b.block_count() + bb] += p;
  }
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t j = 0; j < pb.size(); ++j)
      if (std::abs(joint[i * pb.size() + j] - pa[i] * pb[j]) > tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Convex maps and the conditional Jensen gap.
// ---------------------------------------------------------------------------

/// A convex map between spaces, order-convex with respect to the target's
/// coordinatewise cone. The factories cover the catalogue used by the Jensen
/// checks; `linear` is the degenerate member whose gap must vanish.
class ConvexMap {
 public:
  static ConvexMap square(const SpaceDescriptor& domain) {
    SpaceDescriptor target = domain.mult_target();
    return ConvexMap("square", domain, target, [domain](const Element& x) {
      return multiply(x, x);
    });
  }

  static ConvexMap abs_value(const SpaceDescriptor& domain) {
    return ConvexMap("abs", domain, domain, [](const Element& x) { return lattice_abs(x); });
  }

  static ConvexMap norm_as_scalar(const SpaceDescriptor& domain) {
    SpaceDescriptor target = SpaceDescriptor::sup_grid(1);
    return ConvexMap("norm", domain, target, [target](const Element& x) {
      return Element(target, {norm(x)});
    });
  }

  /// matrix is row-major, target.dim() x domain.dim().
  static ConvexMap linear(const SpaceDescriptor& domain, const SpaceDescriptor& target,
                          std::vector<double> matrix) {
    if (matrix.size() != domain.dim() * target.dim())
      throw std::invalid_argument("ConvexMap::linear: matrix shape mismatch");
    return ConvexMap("linear", domain, target,
                     [domain, target, m = std::move(matrix)](const Element& x) {
                       std::vector<double> out(target.dim(), 0.0);
                       for (std::size_t r = 0; r < target.dim(); ++r)
                         for (std::size_t c = 0; c < domain.dim(); ++c)
                           out[r] += m[r * domain.dim() + c] * x.coords[c];
                       return Element(target, std::move(out));
                     });
  }

  const std::string& name() const noexcept { return name_; }
  const SpaceDescriptor& domain() const noexcept { return domain_; }
  const SpaceDescriptor& target() const noexcept { return target_; }
  Element apply(const Element& x) const {
    if (!(x.space == domain_)) throw std::invalid_argument("ConvexMap: element not in domain");
    return fn_(x);
  }

 private:
  ConvexMap(std::string name, SpaceDescriptor domain, SpaceDescriptor target,
            std::function<Element(const Element&)> fn)
      : name_(std::move(name)), domain_(std::move(domain)), target_(std::move(target)),
        fn_(std::move(fn)) {}

  std::string name_;
  SpaceDescriptor domain_;
  SpaceDescriptor target_;
  std::function<Element(const Element&)> fn_;
};

/// E[f(x)|G] - f(E[x|G]) as a target-valued random element. Convexity makes
/// every coordinate nonnegative up to floating-point slack; for linear f the
/// gap vanishes identically.
inline RandomElement jensen_gap(const ConvexMap& f, const RandomElement& x,
                                const Partition& partition) {
  if (!(x.space() == f.domain()))
    throw std::invalid_argument("jensen_gap: integrand not in the map's domain");
  const std::size_t tdim = f.target().dim();
  std::vector<double> mapped(x.leaf_count() * tdim);
  for (std::size_t leaf = 0; leaf < x.leaf_count(); ++leaf) {
    const Element fx = f.apply(x.element(leaf));
    std::copy(fx.coords.begin(), fx.coords.end(), mapped.begin() + leaf * tdim);
  }
  RandomElement lhs =
      cond_expectation(RandomElement(x.omega(), f.target(), std::move(mapped)), partition);
  const RandomElement xbar = cond_expectation(x, partition);
  std::vector<double> gap(x.leaf_count() * tdim);
  for (std::size_t leaf = 0; leaf < x.leaf_count(); ++leaf) {
    const Element fxbar = f.apply(xbar.element(leaf));
    const auto l = lhs.leaf(leaf);
    for (std::size_t c = 0; c < tdim; ++c) gap[leaf * tdim + c] = l[c] - fxbar.coords[c];
  }
  return RandomElement(x.omega(), f.target(), std::move(gap));
}

}  // namespace itolat
