#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "itolat/integral.hpp"
#include "itolat/prob.hpp"
#include "itolat/rng.hpp"
#include "itolat/spaces.hpp"

namespace itolat {

/// A finite measure on finitely many atoms; the total is arbitrary positive.
class FiniteMeasureSpace {
 public:
  explicit FiniteMeasureSpace(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw std::invalid_argument("FiniteMeasureSpace: no atoms");
    total_ = 0.0;
    for (double w : weights_) {
      if (!(w > 0.0) || !std::isfinite(w))
        throw std::invalid_argument("FiniteMeasureSpace: weights must be positive and finite");
      total_ += w;
    }
  }

  static std::shared_ptr<const FiniteMeasureSpace> uniform(std::size_t atoms, double total = 1.0) {
    return std::make_shared<const FiniteMeasureSpace>(
        std::vector<double>(atoms, total / static_cast<double>(atoms)));
  }

  std::size_t atom_count() const noexcept { return weights_.size(); }
  double weight(std::size_t s) const { return weights_.at(s); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double total() const noexcept { return total_; }

 private:
  std::vector<double> weights_;
  double total_ = 0.0;
};

using MeasureSpacePtr = std::shared_ptr<const FiniteMeasureSpace>;

/// A map from the atoms of a finite measure space into a vector space,
/// stored atom-major.
class MeasureField {
 public:
  MeasureField(MeasureSpacePtr base, SpaceDescriptor space, std::vector<double> values)
      : base_(std::move(base)), space_(std::move(space)), values_(std::move(values)) {
    if (!base_) throw std::invalid_argument("MeasureField: null measure space");
    if (values_.size() != base_->atom_count() * space_.dim())
      throw std::invalid_argument("MeasureField: value buffer size != atoms * dim");
  }

  const MeasureSpacePtr& base() const noexcept { return base_; }
  const SpaceDescriptor& space() const noexcept { return space_; }
  std::size_t atom_count() const noexcept { return base_->atom_count(); }

  std::span<const double> atom(std::size_t s) const {
    return std::span<const double>(values_).subspan(s * space_.dim(), space_.dim());
  }

  Element atom_element(std::size_t s) const {
    const auto v = atom(s);
    return Element(space_, std::vector<double>(v.begin(), v.end()));
  }

  const std::vector<double>& values() const noexcept { return values_; }

 private:
  MeasureSpacePtr base_;
  SpaceDescriptor space_;
  std::vector<double> values_;  // [atom][coord]
};

inline void require_same_base(const MeasureField& a, const MeasureField& b, const char* op) {
  if (a.base() != b.base() &&
      !(a.base()->weights() == b.base()->weights()))
    throw std::invalid_argument(std::string(op) + ": fields over different measure spaces");
  if (!(a.space() == b.space()))
    throw std::invalid_argument(std::string(op) + ": fields into different spaces");
}

/// int x . y dmu, an element of the multiplication target.
inline Element circ_multiply(const MeasureField& x, const MeasureField& y) {
  require_same_base(x, y, "circ_multiply");
  Element out = zero_element(x.space().mult_target());
  std::vector<double> scratch(x.space().mult_dim());
  for (std::size_t s = 0; s < x.atom_count(); ++s)
    multiply_accumulate(x.space(), x.atom(s), y.atom(s), x.base()->weight(s), out.coords, scratch);
  return out;
}

/// int x^2 dmu.
inline Element second_moment_mass(const MeasureField& x) { return circ_multiply(x, x); }

/// The square-integral norm || int x^2 dmu ||_Y^{1/2} on fields.
inline double m_norm(const MeasureField& x) { return std::sqrt(norm(second_moment_mass(x))); }

/// E[x^2] for a random element, and the induced second-moment norm.
inline Element second_moment_mass(const RandomElement& x) {
  Element out = zero_element(x.space().mult_target());
  std::vector<double> scratch(x.space().mult_dim());
  for (std::size_t leaf = 0; leaf < x.leaf_count(); ++leaf)
    multiply_accumulate(x.space(), x.leaf(leaf), x.leaf(leaf), x.omega()->prob(leaf), out.coords,
                        scratch);
  return out;
}

inline double m_norm(const RandomElement& x) { return std::sqrt(norm(second_moment_mass(x))); }

/// View of a random element as a field over its probability space.
inline MeasureField as_measure_field(const RandomElement& x) {
  return MeasureField(std::make_shared<const FiniteMeasureSpace>(x.omega()->probs()), x.space(),
                      x.values());
}

struct CauchySchwarzReport {
  double lhs = 0.0;     // || int x.y dmu ||^2
  double rhs = 0.0;     // || int x^2 dmu || * || int y^2 dmu ||
  double excess = 0.0;  // lhs - rhs; nonpositive up to tolerance
  bool pass = false;
};

inline CauchySchwarzReport cauchy_schwarz_residual(const MeasureField& x, const MeasureField& y) {
  CauchySchwarzReport r;
  const double cross = norm(circ_multiply(x, y));
  r.lhs = cross * cross;
  r.rhs = norm(second_moment_mass(x)) * norm(second_moment_mass(y));
  r.excess = r.lhs - r.rhs;
  r.pass = r.excess <= exact_rel_tol * std::max(1.0, r.rhs);
  return r;
}

struct ContractionReport {
  double fine_norm = 0.0;    // second-moment norm of x
  double coarse_norm = 0.0;  // second-moment norm of E[x | G]
  bool coordinatewise = false;  // E[E[x|G]^2] <= E[x^2] in the lattice order
  bool pass = false;
};

/// Conditional expectation contracts the second-moment norm; the masses are
/// even ordered coordinatewise.
inline ContractionReport condexp_contraction(const RandomElement& x, const Partition& grouping) {
  ContractionReport r;
  const RandomElement coarse = cond_expectation(x, grouping);
  const Element fine_mass = second_moment_mass(x);
  const Element coarse_mass = second_moment_mass(coarse);
  r.fine_norm = std::sqrt(norm(fine_mass));
  r.coarse_norm = std::sqrt(norm(coarse_mass));
  const double scale = std::max(1.0, norm(fine_mass));
  r.coordinatewise = lattice_leq(coarse_mass, fine_mass, exact_abs_tol * scale);
  r.pass = r.coordinatewise && r.coarse_norm <= r.fine_norm + exact_abs_tol * std::max(1.0, r.fine_norm);
  return r;
}

// ---------------------------------------------------------------------------
// Linear operators with exactly computable norms.
// ---------------------------------------------------------------------------

namespace detail {

/// Largest eigenvalue of a symmetric PSD matrix by cyclic Jacobi rotations.
inline double jacobi_largest_eigenvalue(std::vector<double> a, std::size_t n) {
  if (n == 0) return 0.0;
  for (std::size_t sweep = 0; sweep < 128; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += std::abs(a[i * n + j]);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
    if (off <= 1e-15 * std::max(scale, 1e-300)) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
    }
  }
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) best = std::max(best, a[i * n + i]);
  return best;
}

inline bool is_sup_like(const SpaceDescriptor& s) {
  return s.kind() == SpaceKind::sup_grid ||
         (s.kind() == SpaceKind::lp && s.exponent() == infinite_exponent);
}

inline bool is_l1(const SpaceDescriptor& s) {
  return s.kind() == SpaceKind::lp && s.exponent() == 1.0;
}

inline bool is_hilbert_like(const SpaceDescriptor& s) {
  return s.kind() == SpaceKind::hilbert ||
         (s.kind() == SpaceKind::lp && s.exponent() == 2.0);
}

}  // namespace detail

/// A matrix operator between two catalogue spaces, stored row-major
/// (target dim rows by source dim columns).
struct LinearOperator {
  SpaceDescriptor from;
  SpaceDescriptor to;
  std::vector<double> matrix;

  LinearOperator(SpaceDescriptor from_, SpaceDescriptor to_, std::vector<double> matrix_)
      : from(std::move(from_)), to(std::move(to_)), matrix(std::move(matrix_)) {
    if (matrix.size() != from.dim() * to.dim())
      throw std::invalid_argument("LinearOperator: matrix size != to.dim * from.dim");
    for (double v : matrix)
      if (!std::isfinite(v)) throw std::invalid_argument("LinearOperator: nonfinite entry");
  }

  std::size_t rows() const noexcept { return to.dim(); }
  std::size_t cols() const noexcept { return from.dim(); }
  double entry(std::size_t i, std::size_t j) const { return matrix[i * cols() + j]; }
};

inline void apply_into(const LinearOperator& a, std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a.matrix[i * a.cols() + j] * x[j];
    out[i] = acc;
  }
}

inline Element apply(const LinearOperator& a, const Element& x) {
  if (!(x.space == a.from)) throw std::invalid_argument("apply: element not in operator source");
  Element out = zero_element(a.to);
  apply_into(a, x.coords, out.coords);
  return out;
}

inline MeasureField map_field(const LinearOperator& a, const MeasureField& x) {
  if (!(x.space() == a.from))
    throw std::invalid_argument("map_field: field not in operator source");
  std::vector<double> vals(x.atom_count() * a.to.dim());
  for (std::size_t s = 0; s < x.atom_count(); ++s)
    apply_into(a, x.atom(s), std::span<double>(vals).subspan(s * a.to.dim(), a.to.dim()));
  return MeasureField(x.base(), a.to, std::move(vals));
}

/// Exact operator norm for the computable source/target pairs:
///   - sup-like source: enumerate the sign vectors (extreme points of the cube);
///   - weighted-L1 source: scaled columns;
///   - hilbert-like source to hilbert-like target: largest singular value;
///   - hilbert-like source to sup-like target: row Euclidean norms.
/// Every other pair has no exact finite formula here and is rejected.
inline double operator_norm(const LinearOperator& a) {
  const std::size_t n = a.cols();
  if (detail::is_sup_like(a.from)) {
    if (n > 24) throw std::invalid_argument("operator_norm: sup-like source too wide to enumerate");
    std::vector<double> image(a.rows());
    std::vector<double> sign(n);
    double best = 0.0;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
      for (std::size_t j = 0; j < n; ++j) sign[j] = (mask >> j) & 1u ? 1.0 : -1.0;
      apply_into(a, sign, image);
      best = std::max(best, norm_of(a.to, image));
    }
    return best;
  }
  if (detail::is_l1(a.from)) {
    const auto& w = a.from.weights();
    std::vector<double> column(a.rows());
    double best = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < a.rows(); ++i) column[i] = a.entry(i, j) / w[j];
      best = std::max(best, norm_of(a.to, column));
    }
    return best;
  }
  if (detail::is_hilbert_like(a.from)) {
    // Substituting u_j = sqrt(w_j) x_j turns a weighted-L2 source into a plain
    // Euclidean one with scaled columns; same for a weighted-L2 target by rows.
    std::vector<double> scaled = a.matrix;
    if (a.from.kind() == SpaceKind::lp)
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < n; ++j) scaled[i * n + j] /= std::sqrt(a.from.weights()[j]);
    if (detail::is_hilbert_like(a.to)) {
      if (a.to.kind() == SpaceKind::lp)
        for (std::size_t i = 0; i < a.rows(); ++i)
          for (std::size_t j = 0; j < n; ++j) scaled[i * n + j] *= std::sqrt(a.to.weights()[i]);
      std::vector<double> gram(n * n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < a.rows(); ++k) acc += scaled[k * n + i] * scaled[k * n + j];
          gram[i * n + j] = acc;
        }
      return std::sqrt(detail::jacobi_largest_eigenvalue(std::move(gram), n));
    }
    if (detail::is_sup_like(a.to)) {
      double best = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += scaled[i * n + j] * scaled[i * n + j];
        best = std::max(best, std::sqrt(row));
      }
      return best;
    }
  }
  throw std::invalid_argument("operator_norm: no exact formula for this source/target pair");
}

/// The canonical positive operator B with (A xi)^2 <= B(xi^2) coordinatewise,
/// from Cauchy-Schwarz row by row. Sources and targets must carry a
/// multiplication; the matrix of B is entrywise nonnegative, hence monotone.
inline LinearOperator dominating_operator(const LinearOperator& a) {
  const SpaceKind sk = a.from.kind();
  const SpaceKind tk = a.to.kind();
  if (sk == SpaceKind::seq_sup || tk == SpaceKind::seq_sup)
    throw std::invalid_argument("dominating_operator: sequence-sup spaces unsupported");
  const SpaceDescriptor source_sq = a.from.mult_target();
  const SpaceDescriptor target_sq = a.to.mult_target();
  const std::size_t n = a.cols();

  if (sk == SpaceKind::hilbert) {
    if (tk == SpaceKind::hilbert) {
      const double nrm = operator_norm(a);
      return LinearOperator(source_sq, target_sq, {nrm * nrm});
    }
    std::vector<double> column(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += a.entry(i, j) * a.entry(i, j);
      column[i] = row;
    }
    return LinearOperator(source_sq, target_sq, std::move(column));
  }

  std::vector<double> row_sums(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) row_sums[i] += std::abs(a.entry(i, j));

  if (tk == SpaceKind::hilbert) {
    std::vector<double> row(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < a.rows(); ++i) row[j] += row_sums[i] * std::abs(a.entry(i, j));
    return LinearOperator(source_sq, target_sq, std::move(row));
  }

  std::vector<double> b(a.rows() * n);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) b[i * n + j] = row_sums[i] * std::abs(a.entry(i, j));
  return LinearOperator(source_sq, target_sq, std::move(b));
}

struct MappingEstimateReport {
  double domination_margin = 0.0;   // (i) min coordinate of B(xi^2) - (A xi)^2 over samples
  bool domination_ok = false;
  double integrated_gap = 0.0;      // (ii) min coordinate of B(int x^2) - int (Ax)^2
  bool integrated_domination_ok = false;
  double atom_transfer_worst = 0.0;  // (iii) max of ||A x(s)||^2 - ||B|| ||x(s)||^2
  bool atom_transfer_ok = false;
  double integral_transfer_gap = 0.0;  // (iv) ||B|| m(x)^2 - m(A x)^2
  bool integral_transfer_ok = false;
  bool positivity_ok = false;       // (v) B is entrywise nonnegative and order-preserving
  double operator_norm_b = 0.0;
  bool pass = false;
};

/// The five transfer estimates an operator A with dominating B satisfies on a
/// field x: pointwise domination, integrated domination, the per-atom and
/// integrated norm transfers through ||B||, and positivity of B itself.
inline MappingEstimateReport operator_bounds(const LinearOperator& a, const LinearOperator& b,
                                             const MeasureField& x, std::size_t cert_samples,
                                             std::uint64_t seed) {
  if (!(x.space() == a.from)) throw std::invalid_argument("operator_bounds: field not in source");
  if (!(b.from == a.from.mult_target()) || !(b.to == a.to.mult_target()))
    throw std::invalid_argument("operator_bounds: B must map the squared source to the squared target");
  MappingEstimateReport r;
  r.operator_norm_b = operator_norm(b);

  const std::size_t n = a.cols();
  std::vector<double> xi(n);
  std::vector<double> image(a.rows());
  std::vector<double> image_sq(a.to.mult_dim());
  std::vector<double> source_sq(a.from.mult_dim());
  std::vector<double> dominated(b.rows());
  RngStream rng(seed, 0);
  double margin = std::numeric_limits<double>::infinity();
  double margin_scale = 1.0;
  const std::size_t total = x.atom_count() + cert_samples;
  for (std::size_t s = 0; s < total; ++s) {
    if (s < x.atom_count()) {
      const auto v = x.atom(s);
      std::copy(v.begin(), v.end(), xi.begin());
    } else {
      for (double& c : xi) c = rng.uniform_range(-1.0, 1.0);
    }
    apply_into(a, xi, image);
    multiply_into(a.to, image, image, image_sq);
    multiply_into(a.from, xi, xi, source_sq);
    apply_into(b, source_sq, dominated);
    for (std::size_t i = 0; i < dominated.size(); ++i) {
      margin = std::min(margin, dominated[i] - image_sq[i]);
      margin_scale = std::max(margin_scale, std::abs(dominated[i]));
    }
  }
  r.domination_margin = margin;
  r.domination_ok = margin >= -exact_abs_tol * margin_scale;

  const Element mass_source = second_moment_mass(x);
  const MeasureField mapped = map_field(a, x);
  const Element mass_target = second_moment_mass(mapped);
  const Element dominated_mass = apply(b, mass_source);
  double gap = std::numeric_limits<double>::infinity();
  double gap_scale = 1.0;
  for (std::size_t i = 0; i < dominated_mass.coords.size(); ++i) {
    gap = std::min(gap, dominated_mass.coords[i] - mass_target.coords[i]);
    gap_scale = std::max(gap_scale, std::abs(dominated_mass.coords[i]));
  }
  r.integrated_gap = gap;
  r.integrated_domination_ok = gap >= -exact_abs_tol * gap_scale;

  double worst = -std::numeric_limits<double>::infinity();
  double atom_scale = 1.0;
  for (std::size_t s = 0; s < x.atom_count(); ++s) {
    const auto v = x.atom(s);
    apply_into(a, v, image);
    const double lhs = norm_of(a.to, image);
    const double rhs = norm_of(a.from, v);
    worst = std::max(worst, lhs * lhs - r.operator_norm_b * rhs * rhs);
    atom_scale = std::max(atom_scale, r.operator_norm_b * rhs * rhs);
  }
  r.atom_transfer_worst = worst;
  r.atom_transfer_ok = worst <= exact_rel_tol * atom_scale;

  const double m_source = std::sqrt(norm(mass_source));
  const double m_target = std::sqrt(norm(mass_target));
  r.integral_transfer_gap = r.operator_norm_b * m_source * m_source - m_target * m_target;
  r.integral_transfer_ok =
      r.integral_transfer_gap >= -exact_rel_tol * std::max(1.0, r.operator_norm_b * m_source * m_source);

  r.positivity_ok = true;
  for (double v : b.matrix) r.positivity_ok = r.positivity_ok && v >= 0.0;

  r.pass = r.domination_ok && r.integrated_domination_ok && r.atom_transfer_ok &&
           r.integral_transfer_ok && r.positivity_ok;
  return r;
}

// ---------------------------------------------------------------------------
// Product spaces, iterated integrals, norm characterizations.
// ---------------------------------------------------------------------------

struct ProductSpaceReport {
  double first_sq = 0.0;   // || int x1^2 ||
  double second_sq = 0.0;  // || int x2^2 ||
  double pair_sq = 0.0;    // sum norm of the joint mass on Y1 (+) Y2
  double ratio = 0.0;      // pair_sq / max(first_sq, second_sq)
  bool component_bound_ok = false;  // each component mass <= joint mass
  bool additivity_ok = false;       // pair_sq == first_sq + second_sq
};

/// On a product of two component spaces with the sum norm, multiplication acts
/// componentwise, so the joint second-moment mass is the pair of component
/// masses and its norm is literally the sum of the component norms. Equal
/// components give ratio exactly 2.
inline ProductSpaceReport product_space_norms(const MeasureField& x1, const MeasureField& x2) {
  if (x1.base() != x2.base() && !(x1.base()->weights() == x2.base()->weights()))
    throw std::invalid_argument("product_space_norms: fields over different measure spaces");
  ProductSpaceReport r;
  r.first_sq = norm(second_moment_mass(x1));
  r.second_sq = norm(second_moment_mass(x2));
  r.pair_sq = r.first_sq + r.second_sq;
  r.ratio = r.pair_sq / std::max(r.first_sq, r.second_sq);
  r.component_bound_ok = r.first_sq <= r.pair_sq && r.second_sq <= r.pair_sq;
  r.additivity_ok = r.pair_sq == r.first_sq + r.second_sq;
  return r;
}

struct FubiniReport {
  double flat_norm = 0.0;     // mass over the product measure in one pass
  double nested_norm = 0.0;   // inner integral over the second factor first
  double swapped_norm = 0.0;  // inner integral over the first factor first
  double residual = 0.0;
  bool pass = false;
};

/// The second-moment mass over a product measure computed flat and as either
/// iterated sum; the three agree to floating-point accumulation error.
inline FubiniReport fubini_norm_check(const MeasureSpacePtr& s_base, const MeasureSpacePtr& t_base,
                                      const SpaceDescriptor& space,
                                      const std::vector<double>& values) {
  if (!s_base || !t_base) throw std::invalid_argument("fubini_norm_check: null measure space");
  const std::size_t ns = s_base->atom_count();
  const std::size_t nt = t_base->atom_count();
  const std::size_t dim = space.dim();
  if (values.size() != ns * nt * dim)
    throw std::invalid_argument("fubini_norm_check: value buffer size != |S| * |T| * dim");
  const SpaceDescriptor target = space.mult_target();
  std::vector<double> scratch(space.mult_dim());
  const auto cell = [&](std::size_t s, std::size_t t) {
    return std::span<const double>(values).subspan((s * nt + t) * dim, dim);
  };

  Element flat = zero_element(target);
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t t = 0; t < nt; ++t)
      multiply_accumulate(space, cell(s, t), cell(s, t), s_base->weight(s) * t_base->weight(t),
                          flat.coords, scratch);

  Element nested = zero_element(target);
  for (std::size_t s = 0; s < ns; ++s) {
    Element inner = zero_element(target);
    for (std::size_t t = 0; t < nt; ++t)
      multiply_accumulate(space, cell(s, t), cell(s, t), t_base->weight(t), inner.coords, scratch);
    for (std::size_t c = 0; c < inner.coords.size(); ++c)
      nested.coords[c] += s_base->weight(s) * inner.coords[c];
  }

  Element swapped = zero_element(target);
  for (std::size_t t = 0; t < nt; ++t) {
    Element inner = zero_element(target);
    for (std::size_t s = 0; s < ns; ++s)
      multiply_accumulate(space, cell(s, t), cell(s, t), s_base->weight(s), inner.coords, scratch);
    for (std::size_t c = 0; c < inner.coords.size(); ++c)
      swapped.coords[c] += t_base->weight(t) * inner.coords[c];
  }

  FubiniReport r;
  r.flat_norm = std::sqrt(norm(flat));
  r.nested_norm = std::sqrt(norm(nested));
  r.swapped_norm = std::sqrt(norm(swapped));
  const double scale = std::max(1.0, r.flat_norm);
  r.residual = std::max(std::abs(r.flat_norm - r.nested_norm),
                        std::abs(r.flat_norm - r.swapped_norm)) / scale;
  r.pass = r.residual <= exact_abs_tol;
  return r;
}

struct CharacterizationReport {
  double m_norm_value = 0.0;    // martingale norm of the process
  double characterized = 0.0;   // recomputed through scalar coordinate norms
  double residual = 0.0;
  bool pass = false;
};

/// For function-space integrands the martingale norm is determined by the
/// scalar coordinate processes: the sup-grid norm is the largest coordinate
/// norm, the weighted-Lp norm aggregates them with exponent p, and the hilbert
/// norm collapses to the scalar norm of the whole.
inline CharacterizationReport characterization_norms(const AdaptedProcess& x,
                                                     const ScalarMartingale& m) {
  detail::require_aligned(x.filtration(), m.filtration(), "characterization_norms");
  const SpaceKind kind = x.space().kind();
  if (kind == SpaceKind::seq_sup)
    throw std::invalid_argument("characterization_norms: sequence-sup integrands unsupported");
  const QuadraticVariation qv(m);
  const std::size_t steps = x.filtration()->step_count();
  const std::size_t dim = x.space().dim();
  std::vector<double> coordinate_sq(dim, 0.0);  // squared scalar norm per coordinate
  for (std::size_t leaf = 0; leaf < x.leaf_count(); ++leaf) {
    const double p = x.omega()->prob(leaf);
    for (std::size_t j = 0; j < steps; ++j) {
      const double w = qv.step_increment(j, leaf);
      if (w == 0.0) continue;
      const auto v = x.at(j, leaf);
      for (std::size_t c = 0; c < dim; ++c) coordinate_sq[c] += p * w * v[c] * v[c];
    }
  }

  CharacterizationReport r;
  r.m_norm_value = m_norm_process(x, m);
  switch (kind) {
    case SpaceKind::sup_grid: {
      double best = 0.0;
      for (double s : coordinate_sq) best = std::max(best, s);
      r.characterized = std::sqrt(best);
      break;
    }
    case SpaceKind::lp: {
      const auto& w = x.space().weights();
      const double p = x.space().exponent();
      if (p == infinite_exponent) {
        double best = 0.0;
        for (double s : coordinate_sq) best = std::max(best, s);
        r.characterized = std::sqrt(best);
      } else {
        double acc = 0.0;
        for (std::size_t c = 0; c < dim; ++c)
          acc += w[c] * std::pow(std::sqrt(coordinate_sq[c]), p);
        r.characterized = std::pow(acc, 1.0 / p);
      }
      break;
    }
    case SpaceKind::hilbert: {
      double acc = 0.0;
      for (double s : coordinate_sq) acc += s;
      r.characterized = std::sqrt(acc);
      break;
    }
    case SpaceKind::seq_sup:
      break;
  }
  const double scale = std::max(1.0, r.m_norm_value);
  r.residual = std::abs(r.m_norm_value - r.characterized) / scale;
  r.pass = r.residual <= exact_rel_tol;
  return r;
}

}  // namespace itolat
