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

#include "itolat/rng.hpp"

namespace itolat {

/// Shared tolerance policy: "exact" assertions allow this much floating-point slack.
inline constexpr double exact_rel_tol = 1e-9;
inline constexpr double exact_abs_tol = 1e-12;

inline constexpr double infinite_exponent = std::numeric_limits<double>::infinity();

/// The catalogue of finite space representations.
///
/// - sup_grid: continuous functions sampled on n grid points, sup norm,
///   pointwise product landing in the same space.
/// - lp: weighted atoms with exponent p in [1, inf]; pointwise product lands in
///   the p/2 space (p >= 2) or back in the same space (p = inf).
/// - hilbert: Euclidean coordinates; the product is the inner product, landing
///   in the 1-dimensional lattice (represented as sup_grid(1)).
/// - seq_sup: a space normed by finitely many unit functionals phi_k on host
///   coordinates; the product is (x*y)_k = phi_k(x) phi_k(y), landing in the
///   sup lattice over functional indices.
enum class SpaceKind { sup_grid, lp, hilbert, seq_sup };

inline const char* kind_name(SpaceKind k) {
  switch (k) {
    case SpaceKind::sup_grid: return "sup_grid";
    case SpaceKind::lp: return "lp";
    case SpaceKind::hilbert: return "hilbert";
    case SpaceKind::seq_sup: return "seq_sup";
  }
  return "?";
}

/// Immutable description of a space in the catalogue. Cheap to copy.
class SpaceDescriptor {
 public:
  static SpaceDescriptor sup_grid(std::size_t points) {
    if (points == 0) throw std::invalid_argument("sup_grid: needs at least one grid point");
    Data d;
    d.kind = SpaceKind::sup_grid;
    d.dim = points;
    return SpaceDescriptor(std::move(d));
  }

  static SpaceDescriptor lp(std::vector<double> weights, double exponent) {
    if (weights.empty()) throw std::invalid_argument("lp: needs at least one atom");
    for (double w : weights) {
      if (!(w > 0.0) || !std::isfinite(w))
        throw std::invalid_argument("lp: atom weights must be strictly positive and finite");
    }
    if (!(exponent >= 1.0)) throw std::invalid_argument("lp: exponent must be >= 1");
    Data d;
    d.kind = SpaceKind::lp;
    d.dim = weights.size();
    d.weights = std::move(weights);
    d.exponent = exponent;
    return SpaceDescriptor(std::move(d));
  }

  static SpaceDescriptor hilbert(std::size_t dim) {
    if (dim == 0) throw std::invalid_argument("hilbert: dimension must be positive");
    Data d;
    d.kind = SpaceKind::hilbert;
    d.dim = dim;
    return SpaceDescriptor(std::move(d));
  }

  /// Host coordinates live in R^dim; each functional is a unit vector there and
  /// the list must have full rank so that the sup of |phi_k| is a norm.
  static SpaceDescriptor seq_sup(std::size_t dim, std::vector<std::vector<double>> functionals) {
    if (dim == 0) throw std::invalid_argument("seq_sup: dimension must be positive");
    if (functionals.size() < dim)
      throw std::invalid_argument("seq_sup: needs at least dim functionals for a norm");
    for (const auto& f : functionals) {
      if (f.size() != dim) throw std::invalid_argument("seq_sup: functional length != dim");
      double sq = 0.0;
      for (double c : f) {
        if (!std::isfinite(c)) throw std::invalid_argument("seq_sup: non-finite functional");
        sq += c * c;
      }
      if (std::abs(std::sqrt(sq) - 1.0) > 1e-9)
        throw std::invalid_argument("seq_sup: functionals must be unit vectors");
    }
    if (matrix_rank(functionals, dim) != dim)
      throw std::invalid_argument("seq_sup: functionals must have full rank");
    Data d;
    d.kind = SpaceKind::seq_sup;
    d.dim = dim;
    d.functionals = std::move(functionals);
    return SpaceDescriptor(std::move(d));
  }

  SpaceKind kind() const noexcept { return data_->kind; }

  /// Coordinate count of the representation (for seq_sup: the host dimension).
  std::size_t dim() const noexcept { return data_->dim; }

  const std::vector<double>& weights() const {
    require_kind(SpaceKind::lp, "weights");
    return data_->weights;
  }

  double exponent() const {
    require_kind(SpaceKind::lp, "exponent");
    return data_->exponent;
  }

  const std::vector<std::vector<double>>& functionals() const {
    require_kind(SpaceKind::seq_sup, "functionals");
    return data_->functionals;
  }

  /// True for the kinds whose representation is a genuine normed lattice
  /// (coordinatewise order compatible with the norm). seq_sup carries the
  /// coordinatewise order but its norm is not monotone under |.|.
  bool is_normed_lattice() const noexcept { return data_->kind != SpaceKind::seq_sup; }

  bool has_multiplication() const noexcept {
    if (data_->kind == SpaceKind::lp)
      return data_->exponent >= 2.0 || data_->exponent == infinite_exponent;
    return true;
  }

  /// Where products x*y live.
  SpaceDescriptor mult_target() const {
    switch (data_->kind) {
      case SpaceKind::sup_grid:
        return *this;
      case SpaceKind::lp: {
        const double p = data_->exponent;
        if (p == infinite_exponent) return *this;
        if (p < 2.0)
          throw std::invalid_argument("lp: multiplication needs exponent >= 2 (or inf)");
        return lp(data_->weights, p / 2.0);
      }
      case SpaceKind::hilbert:
        return sup_grid(1);
      case SpaceKind::seq_sup:
        return sup_grid(data_->functionals.size());
    }
    throw std::logic_error("mult_target: bad kind");
  }

  std::size_t mult_dim() const {
    switch (data_->kind) {
      case SpaceKind::sup_grid: return data_->dim;
      case SpaceKind::lp: return data_->dim;
      case SpaceKind::hilbert: return 1;
      case SpaceKind::seq_sup: return data_->functionals.size();
    }
    throw std::logic_error("mult_dim: bad kind");
  }

  friend bool operator==(const SpaceDescriptor& a, const SpaceDescriptor& b) {
    if (a.data_ == b.data_) return true;
    const Data& x = *a.data_;
    const Data& y = *b.data_;
    return x.kind == y.kind && x.dim == y.dim && x.weights == y.weights &&
           x.exponent == y.exponent && x.functionals == y.functionals;
  }
  friend bool operator!=(const SpaceDescriptor& a, const SpaceDescriptor& b) { return !(a == b); }

 private:
  struct Data {
    SpaceKind kind = SpaceKind::sup_grid;
    std::size_t dim = 0;
    std::vector<double> weights;               // lp
    double exponent = 0.0;                     // lp
    std::vector<std::vector<double>> functionals;  // seq_sup
  };

  explicit SpaceDescriptor(Data d) : data_(std::make_shared<const Data>(std::move(d))) {}

  void require_kind(SpaceKind k, const char* what) const {
    if (data_->kind != k)
      throw std::invalid_argument(std::string(what) + ": only defined for " + kind_name(k));
  }

  static std::size_t matrix_rank(const std::vector<std::vector<double>>& rows, std::size_t cols) {
    std::vector<std::vector<double>> m = rows;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < cols && rank < m.size(); ++col) {
      std::size_t pivot = rank;
      for (std::size_t r = rank + 1; r < m.size(); ++r)
        if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
      if (std::abs(m[pivot][col]) < 1e-12) continue;
      std::swap(m[rank], m[pivot]);
      for (std::size_t r = 0; r < m.size(); ++r) {
        if (r == rank) continue;
        const double f = m[r][col] / m[rank][col];
        for (std::size_t c = col; c < cols; ++c) m[r][c] -= f * m[rank][c];
      }
      ++rank;
    }
    return rank;
  }

  std::shared_ptr<const Data> data_;
};

// ---------------------------------------------------------------------------
// Low-level kernels on raw coordinate spans. These are the single source of
// truth for norms and products; Element wrappers and all bulk code call them.
// ---------------------------------------------------------------------------

inline double norm_of(const SpaceDescriptor& space, std::span<const double> coords) {
  if (coords.size() != space.dim()) throw std::invalid_argument("norm_of: dimension mismatch");
  switch (space.kind()) {
    case SpaceKind::sup_grid: {
      double m = 0.0;
      for (double c : coords) m = std::max(m, std::abs(c));
      return m;
    }
    case SpaceKind::lp: {
      const double p = space.exponent();
      const auto& w = space.weights();
      if (p == infinite_exponent) {
        double m = 0.0;
        for (double c : coords) m = std::max(m, std::abs(c));
        return m;
      }
      double acc = 0.0;
      for (std::size_t i = 0; i < coords.size(); ++i)
        acc += w[i] * std::pow(std::abs(coords[i]), p);
      return std::pow(acc, 1.0 / p);
    }
    case SpaceKind::hilbert: {
      double acc = 0.0;
      for (double c : coords) acc += c * c;
      return std::sqrt(acc);
    }
    case SpaceKind::seq_sup: {
      double m = 0.0;
      for (const auto& f : space.functionals()) {
        double v = 0.0;
        for (std::size_t i = 0; i < coords.size(); ++i) v += f[i] * coords[i];
        m = std::max(m, std::abs(v));
      }
      return m;
    }
  }
  throw std::logic_error("norm_of: bad kind");
}

/// Writes x*y into out, whose length must be space.mult_dim().
inline void multiply_into(const SpaceDescriptor& space, std::span<const double> x,
                          std::span<const double> y, std::span<double> out) {
  if (x.size() != space.dim() || y.size() != space.dim())
    throw std::invalid_argument("multiply_into: dimension mismatch");
  if (out.size() != space.mult_dim())
    throw std::invalid_argument("multiply_into: output dimension mismatch");
  switch (space.kind()) {
    case SpaceKind::sup_grid:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
      return;
    case SpaceKind::lp: {
      const double p = space.exponent();
      if (p < 2.0 && p != infinite_exponent)
        throw std::invalid_argument("multiply_into: lp multiplication needs p >= 2 (or inf)");
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
      return;
    }
    case SpaceKind::hilbert: {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
      out[0] = acc;
      return;
    }
    case SpaceKind::seq_sup: {
      const auto& fs = space.functionals();
      for (std::size_t k = 0; k < fs.size(); ++k) {
        double a = 0.0;
        double b = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          a += fs[k][i] * x[i];
          b += fs[k][i] * y[i];
        }
        out[k] = a * b;
      }
      return;
    }
  }
  throw std::logic_error("multiply_into: bad kind");
}

/// Accumulates scale * (x*y) into acc (length mult_dim). Used by bulk loops to
/// avoid temporaries.
inline void multiply_accumulate(const SpaceDescriptor& space, std::span<const double> x,
                                std::span<const double> y, double scale, std::span<double> acc,
                                std::span<double> scratch) {
  multiply_into(space, x, y, scratch);
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * scratch[i];
}

// ---------------------------------------------------------------------------
// Element: one point of a space.
// ---------------------------------------------------------------------------

struct Element {
  SpaceDescriptor space;
  std::vector<double> coords;

  Element(SpaceDescriptor s, std::vector<double> c) : space(std::move(s)), coords(std::move(c)) {
    if (coords.size() != space.dim())
      throw std::invalid_argument("Element: coordinate count != space dimension");
    for (double v : coords)
      if (!std::isfinite(v)) throw std::invalid_argument("Element: non-finite coordinate");
  }
};

inline Element zero_element(const SpaceDescriptor& space) {
  return Element(space, std::vector<double>(space.dim(), 0.0));
}

inline double norm(const Element& x) { return norm_of(x.space, x.coords); }

inline void require_same_space(const Element& a, const Element& b, const char* op) {
  if (!(a.space == b.space))
    throw std::invalid_argument(std::string(op) + ": elements from different spaces");
}

inline Element multiply(const Element& x, const Element& y) {
  require_same_space(x, y, "multiply");
  Element out = zero_element(x.space.mult_target());
  multiply_into(x.space, x.coords, y.coords, out.coords);
  return out;
}

inline Element operator+(const Element& a, const Element& b) {
  require_same_space(a, b, "operator+");
  Element r = a;
  for (std::size_t i = 0; i < r.coords.size(); ++i) r.coords[i] += b.coords[i];
  return r;
}

inline Element operator-(const Element& a, const Element& b) {
  require_same_space(a, b, "operator-");
  Element r = a;
  for (std::size_t i = 0; i < r.coords.size(); ++i) r.coords[i] -= b.coords[i];
  return r;
}

inline Element operator*(double s, const Element& a) {
  Element r = a;
  for (double& c : r.coords) c *= s;
  return r;
}

inline Element operator-(const Element& a) { return -1.0 * a; }

// ---------------------------------------------------------------------------
// Coordinatewise lattice structure.
// ---------------------------------------------------------------------------

inline bool lattice_leq(const Element& a, const Element& b, double tol = 0.0) {
  require_same_space(a, b, "lattice_leq");
  for (std::size_t i = 0; i < a.coords.size(); ++i)
    if (a.coords[i] > b.coords[i] + tol) return false;
  return true;
}

inline Element lattice_join(const Element& a, const Element& b) {
  require_same_space(a, b, "lattice_join");
  Element r = a;
  for (std::size_t i = 0; i < r.coords.size(); ++i) r.coords[i] = std::max(a.coords[i], b.coords[i]);
  return r;
}

inline Element lattice_abs(const Element& a) {
  Element r = a;
  for (double& c : r.coords) c = std::abs(c);
  return r;
}

// ---------------------------------------------------------------------------
// Dual functionals.
// ---------------------------------------------------------------------------

/// A continuous linear functional in the representation the kind prescribes:
/// coordinate combination for sup_grid, weighted pairing for lp, inner product
/// for hilbert. seq_sup duals are not represented (the descriptor's defining
/// functionals already norm the space exactly).
struct DualFunctional {
  SpaceDescriptor space;
  std::vector<double> coeffs;

  DualFunctional(SpaceDescriptor s, std::vector<double> c)
      : space(std::move(s)), coeffs(std::move(c)) {
    if (space.kind() == SpaceKind::seq_sup)
      throw std::invalid_argument("DualFunctional: seq_sup duals are not representable here; "
                                  "use the descriptor's defining functionals");
    if (coeffs.size() != space.dim())
      throw std::invalid_argument("DualFunctional: coefficient count != space dimension");
    for (double v : coeffs)
      if (!std::isfinite(v)) throw std::invalid_argument("DualFunctional: non-finite coefficient");
  }
};

inline double apply(const DualFunctional& phi, std::span<const double> coords) {
  if (coords.size() != phi.space.dim())
    throw std::invalid_argument("apply: dimension mismatch");
  double acc = 0.0;
  if (phi.space.kind() == SpaceKind::lp) {
    const auto& w = phi.space.weights();
    for (std::size_t i = 0; i < coords.size(); ++i) acc += w[i] * phi.coeffs[i] * coords[i];
  } else {
    for (std::size_t i = 0; i < coords.size(); ++i) acc += phi.coeffs[i] * coords[i];
  }
  return acc;
}

inline double apply(const DualFunctional& phi, const Element& x) {
  if (!(phi.space == x.space)) throw std::invalid_argument("apply: functional/element space mismatch");
  return apply(phi, std::span<const double>(x.coords));
}

inline double operator_norm(const DualFunctional& phi) {
  switch (phi.space.kind()) {
    case SpaceKind::sup_grid: {
      double acc = 0.0;
      for (double c : phi.coeffs) acc += std::abs(c);
      return acc;
    }
    case SpaceKind::lp: {
      const double p = phi.space.exponent();
      const auto& w = phi.space.weights();
      if (p == infinite_exponent) {  // dual norm is weighted l1
        double acc = 0.0;
        for (std::size_t i = 0; i < phi.coeffs.size(); ++i) acc += w[i] * std::abs(phi.coeffs[i]);
        return acc;
      }
      if (p == 1.0) {
        double m = 0.0;
        for (double c : phi.coeffs) m = std::max(m, std::abs(c));
        return m;
      }
      const double q = p / (p - 1.0);
      double acc = 0.0;
      for (std::size_t i = 0; i < phi.coeffs.size(); ++i)
        acc += w[i] * std::pow(std::abs(phi.coeffs[i]), q);
      return std::pow(acc, 1.0 / q);
    }
    case SpaceKind::hilbert: {
      double acc = 0.0;
      for (double c : phi.coeffs) acc += c * c;
      return std::sqrt(acc);
    }
    case SpaceKind::seq_sup:
      break;
  }
  throw std::logic_error("operator_norm: bad kind");
}

/// Splits phi into a difference of positive functionals, coordinatewise on the
/// representing coefficients. Requires a normed-lattice kind.
inline std::pair<DualFunctional, DualFunctional> dual_decompose(const DualFunctional& phi) {
  if (!phi.space.is_normed_lattice())
    throw std::invalid_argument("dual_decompose: space kind has no lattice dual representation");
  std::vector<double> plus(phi.coeffs.size()), minus(phi.coeffs.size());
  for (std::size_t i = 0; i < phi.coeffs.size(); ++i) {
    plus[i] = std::max(phi.coeffs[i], 0.0);
    minus[i] = std::max(-phi.coeffs[i], 0.0);
  }
  return {DualFunctional(phi.space, std::move(plus)), DualFunctional(phi.space, std::move(minus))};
}

// ---------------------------------------------------------------------------
// Norming families.
// ---------------------------------------------------------------------------

namespace detail {

/// Recursive geodesic net of the Euclidean unit sphere in R^dim with covering
/// radius <= delta (angle). Sizes grow like delta^-(dim-1); callers guard.
inline void sphere_net(std::size_t dim, double delta, std::vector<double>& prefix,
                       std::vector<std::vector<double>>& out) {
  if (dim == 1) {
    for (double s : {1.0, -1.0}) {
      std::vector<double> v = prefix;
      v.push_back(s);
      out.push_back(std::move(v));
    }
    return;
  }
  // Budget one slice of delta/(dim-1) per recursion level; polar spacing twice
  // the per-level radius keeps the nearest slice within budget.
  const double per_level = delta / static_cast<double>(dim - 1);
  const double spacing = 2.0 * per_level;
  const std::size_t slices = static_cast<std::size_t>(std::ceil(3.14159265358979323846 / spacing));
  for (std::size_t s = 0; s <= slices; ++s) {
    const double theta = std::min(3.14159265358979323846,
                                  static_cast<double>(s) * spacing);
    const double c = std::cos(theta);
    const double snt = std::sin(theta);
    if (std::abs(snt) < 1e-15) {  // pole: tail direction is irrelevant
      std::vector<double> v = prefix;
      v.push_back(c);
      for (std::size_t i = 1; i < dim; ++i) v.push_back(0.0);
      out.push_back(std::move(v));
      continue;
    }
    std::vector<std::vector<double>> tails;
    std::vector<double> empty;
    sphere_net(dim - 1, delta - per_level, empty, tails);
    for (auto& t : tails) {
      std::vector<double> v = prefix;
      v.push_back(c);
      for (double ti : t) v.push_back(snt * ti);
      out.push_back(std::move(v));
    }
  }
}

}  // namespace detail

/// A finite family of unit functionals with sup_k |phi_k(x)| >= (1-epsilon)||x||.
///
/// Exact (epsilon irrelevant) for sup_grid and lp(p=inf): coordinate
/// evaluations. Exact for any one-dimensional space. For hilbert(n>=2) an
/// epsilon-net of directions is returned; epsilon = 0 there is unsupported
/// (no finite family norms a smooth ball exactly), as is lp with p < inf and
/// n >= 2. seq_sup spaces are normed exactly by their defining functionals, so
/// no separate family is produced.
inline std::vector<DualFunctional> norming_functionals(const SpaceDescriptor& space,
                                                       double epsilon) {
  if (!(epsilon >= 0.0) || epsilon >= 1.0)
    throw std::invalid_argument("norming_functionals: epsilon must lie in [0,1)");
  std::vector<DualFunctional> out;
  switch (space.kind()) {
    case SpaceKind::sup_grid: {
      for (std::size_t i = 0; i < space.dim(); ++i) {
        std::vector<double> c(space.dim(), 0.0);
        c[i] = 1.0;
        out.emplace_back(space, std::move(c));
      }
      return out;
    }
    case SpaceKind::lp: {
      const double p = space.exponent();
      const auto& w = space.weights();
      if (p == infinite_exponent) {
        for (std::size_t i = 0; i < space.dim(); ++i) {
          std::vector<double> c(space.dim(), 0.0);
          c[i] = 1.0 / w[i];
          out.emplace_back(space, std::move(c));
        }
        return out;
      }
      if (space.dim() == 1) {
        out.emplace_back(space, std::vector<double>{std::pow(w[0], 1.0 / p - 1.0)});
        return out;
      }
      throw std::invalid_argument(
          "norming_functionals: no exact finite family for lp with p < inf in dimension >= 2");
    }
    case SpaceKind::hilbert: {
      const std::size_t n = space.dim();
      if (n == 1) {
        out.emplace_back(space, std::vector<double>{1.0});
        return out;
      }
      if (epsilon == 0.0)
        throw std::invalid_argument(
            "norming_functionals: exactness unsupported for hilbert spaces of dimension >= 2");
      const double delta = std::acos(1.0 - epsilon);
      if (n == 2) {
        // Directions spaced over half the circle; |phi| covers antipodes.
        const std::size_t m =
            static_cast<std::size_t>(std::ceil(3.14159265358979323846 / (2.0 * delta)));
        for (std::size_t k = 0; k < m; ++k) {
          const double theta = 3.14159265358979323846 * static_cast<double>(k) / m;
          out.emplace_back(space, std::vector<double>{std::cos(theta), std::sin(theta)});
        }
        return out;
      }
      std::vector<std::vector<double>> net;
      std::vector<double> prefix;
      detail::sphere_net(n, delta, prefix, net);
      if (net.size() > 200000)
        throw std::invalid_argument("norming_functionals: epsilon too small for this dimension");
      for (auto& v : net) {
        double sq = 0.0;
        for (double c : v) sq += c * c;
        const double inv = 1.0 / std::sqrt(sq);
        for (double& c : v) c *= inv;
        out.emplace_back(space, std::move(v));
      }
      return out;
    }
    case SpaceKind::seq_sup:
      throw std::invalid_argument(
          "norming_functionals: a seq_sup space is normed exactly by its defining functionals; "
          "read them from the descriptor");
  }
  throw std::logic_error("norming_functionals: bad kind");
}

// ---------------------------------------------------------------------------
// Multiplication axiom check.
// ---------------------------------------------------------------------------

struct MultiplicationAxiomReport {
  std::size_t samples = 0;
  double max_bound_violation = 0.0;     // relative excess of ||x*y|| over ||x|| ||y||
  double max_symmetry_residual = 0.0;   // relative ||x*y - y*x||
  double max_bilinearity_residual = 0.0;
  double min_square_coordinate = 0.0;   // most negative coordinate of any x*x
  double max_square_norm_mismatch = 0.0;  // relative | ||x*x|| - ||x||^2 |
  bool zero_square_ok = false;
  bool pass = false;
};

/// Samples random pairs/triples and measures every multiplication axiom:
/// the norm bound, symmetry, bilinearity, positivity of squares, and the
/// square-norm identity (exact for all catalogue kinds). Bound violations are
/// judged at 1e-9 relative, algebraic identities at 1e-12 relative.
inline MultiplicationAxiomReport check_multiplication_axioms(const SpaceDescriptor& space,
                                                             std::size_t sample_count,
                                                             std::uint64_t seed) {
  if (sample_count == 0)
    throw std::invalid_argument("check_multiplication_axioms: sample_count must be positive");
  if (!space.has_multiplication())
    throw std::invalid_argument("check_multiplication_axioms: space has no multiplication");
  RngStream rng(seed, 0);
  MultiplicationAxiomReport rep;
  rep.samples = sample_count;

  const std::size_t n = space.dim();
  auto random_coords = [&] {
    std::vector<double> c(n);
    for (double& v : c) v = rng.uniform_range(-1.0, 1.0);
    return c;
  };

  const Element zero = zero_element(space);
  rep.zero_square_ok = norm(multiply(zero, zero)) == 0.0;

  for (std::size_t s = 0; s < sample_count; ++s) {
    const Element x(space, random_coords());
    const Element y(space, random_coords());
    const Element z(space, random_coords());
    const double a = rng.uniform_range(-2.0, 2.0);
    const double b = rng.uniform_range(-2.0, 2.0);

    const Element xy = multiply(x, y);
    const Element yx = multiply(y, x);
    const Element xx = multiply(x, x);

    const double nx = norm(x);
    const double ny = norm(y);
    const double scale = std::max(1.0, nx * ny);
    rep.max_bound_violation =
        std::max(rep.max_bound_violation, (norm(xy) - nx * ny) / scale);
    rep.max_symmetry_residual = std::max(rep.max_symmetry_residual, norm(xy - yx) / scale);

    const Element lhs = multiply(a * x + b * z, y);
    const Element rhs = a * xy + b * multiply(z, y);
    const double bscale = std::max(1.0, (std::abs(a) * nx + std::abs(b) * norm(z)) * ny);
    rep.max_bilinearity_residual =
        std::max(rep.max_bilinearity_residual, norm(lhs - rhs) / bscale);

    for (double c : xx.coords) rep.min_square_coordinate = std::min(rep.min_square_coordinate, c);
    rep.max_square_norm_mismatch =
        std::max(rep.max_square_norm_mismatch,
                 std::abs(norm(xx) - nx * nx) / std::max(1.0, nx * nx));
  }

  rep.pass = rep.zero_square_ok && rep.max_bound_violation <= exact_rel_tol &&
             rep.max_symmetry_residual <= 1e-12 && rep.max_bilinearity_residual <= 1e-12 &&
             rep.min_square_coordinate >= -exact_abs_tol &&
             rep.max_square_norm_mismatch <= exact_rel_tol;
  return rep;
}

}  // namespace itolat
