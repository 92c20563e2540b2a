#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "itolat/martingale.hpp"
#include "itolat/prob.hpp"
#include "itolat/rng.hpp"
#include "itolat/spaces.hpp"

namespace itolat {

namespace detail {

inline void require_aligned(const FiltrationPtr& a, const FiltrationPtr& b, const char* op) {
  if (a == b) return;
  if (!a || !b || a->times() != b->times())
    throw std::invalid_argument(std::string(op) + ": process and martingale grids differ");
  for (std::size_t j = 0; j < a->times().size(); ++j)
    if (!(a->partition(j) == b->partition(j)))
      throw std::invalid_argument(std::string(op) + ": process and martingale filtrations differ");
}

/// Number of whole steps [t_j, t_{j+1}] completed by time t.
inline std::size_t steps_completed_by(const Filtration& f, double t) {
  if (t < 0.0 || t > f.horizon())
    throw std::invalid_argument("time outside the martingale's grid span");
  const auto& times = f.times();
  std::size_t k = 0;
  while (k < f.step_count() && times[k + 1] <= t) ++k;
  return k;
}

}  // namespace detail

/// A grid-indexed integrand: one Element per (grid time, leaf), with the value
/// at t_j measurable for the partition at t_j (validated at construction).
class AdaptedProcess {
 public:
  AdaptedProcess(ProbSpacePtr omega, FiltrationPtr filtration, SpaceDescriptor space,
                 std::vector<double> values)
      : omega_(std::move(omega)), filtration_(std::move(filtration)), space_(std::move(space)),
        values_(std::move(values)) {
    if (!omega_ || !filtration_) throw std::invalid_argument("AdaptedProcess: null space/filtration");
    const std::size_t expect =
        filtration_->times().size() * omega_->leaf_count() * space_.dim();
    if (values_.size() != expect)
      throw std::invalid_argument("AdaptedProcess: value buffer size != times * leaves * dim");
    if (filtration_->partition(0).leaf_count() != omega_->leaf_count())
      throw std::invalid_argument("AdaptedProcess: filtration leaf count mismatch");
    for (std::size_t j = 0; j < filtration_->times().size(); ++j)
      if (!is_measurable(at_time(j), filtration_->partition(j), 1e-12))
        throw std::invalid_argument("AdaptedProcess: value at a grid time is not measurable "
                                    "for that time's partition");
  }

  const ProbSpacePtr& omega() const noexcept { return omega_; }
  const FiltrationPtr& filtration() const noexcept { return filtration_; }
  const SpaceDescriptor& space() const noexcept { return space_; }
  std::size_t leaf_count() const noexcept { return omega_->leaf_count(); }
  std::size_t time_count() const noexcept { return filtration_->times().size(); }

  std::span<const double> at(std::size_t time_idx, std::size_t leaf) const {
    const std::size_t dim = space_.dim();
    return std::span<const double>(values_).subspan(
        (time_idx * leaf_count() + leaf) * dim, dim);
  }

  RandomElement at_time(std::size_t time_idx) const {
    const std::size_t dim = space_.dim();
    const std::size_t leaves = leaf_count();
    std::vector<double> v(values_.begin() + time_idx * leaves * dim,
                          values_.begin() + (time_idx + 1) * leaves * dim);
    return RandomElement(omega_, space_, std::move(v));
  }

  const std::vector<double>& values() const noexcept { return values_; }

 private:
  ProbSpacePtr omega_;
  FiltrationPtr filtration_;
  SpaceDescriptor space_;
  std::vector<double> values_;  // [time][leaf][coord]
};

/// Per-time measurability flags of an adapted process (all true after a
/// successful construction; exposed for reporting).
inline std::vector<bool> adaptedness_flags(const AdaptedProcess& x) {
  std::vector<bool> flags(x.time_count());
  for (std::size_t j = 0; j < x.time_count(); ++j)
    flags[j] = is_measurable(x.at_time(j), x.filtration()->partition(j), 1e-12);
  return flags;
}

/// A piecewise-constant integrand sum x_i 1_[t_{b_i}, t_{b_{i+1}}), with
/// breakpoints given as grid indices 0 = b_0 <= ... <= b_{n+1} = m and each
/// piece measurable for the partition at its left breakpoint.
class ElementaryProcess {
 public:
  ElementaryProcess(FiltrationPtr filtration, std::vector<std::size_t> break_idx,
                    std::vector<RandomElement> pieces)
      : filtration_(std::move(filtration)), break_idx_(std::move(break_idx)),
        pieces_(std::move(pieces)) {
    if (!filtration_) throw std::invalid_argument("ElementaryProcess: null filtration");
    if (pieces_.empty()) throw std::invalid_argument("ElementaryProcess: needs at least one piece");
    if (break_idx_.size() != pieces_.size() + 1)
      throw std::invalid_argument("ElementaryProcess: breakpoint count != pieces + 1");
    const std::size_t m = filtration_->step_count();
    if (break_idx_.front() != 0 || break_idx_.back() != m)
      throw std::invalid_argument("ElementaryProcess: breakpoints must span the whole grid");
    for (std::size_t i = 0; i + 1 < break_idx_.size(); ++i)
      if (break_idx_[i] > break_idx_[i + 1])
        throw std::invalid_argument("ElementaryProcess: breakpoints must be nondecreasing");
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
      if (!(pieces_[i].space() == pieces_[0].space()))
        throw std::invalid_argument("ElementaryProcess: pieces from different spaces");
      require_same_omega(pieces_[i].omega(), pieces_[0].omega(), "ElementaryProcess");
    }
    if (pieces_[0].leaf_count() != filtration_->partition(0).leaf_count())
      throw std::invalid_argument("ElementaryProcess: piece/filtration leaf mismatch");
    for (std::size_t i = 0; i < pieces_.size(); ++i)
      if (!is_measurable(pieces_[i], filtration_->partition(break_idx_[i]), 1e-12))
        throw std::invalid_argument("ElementaryProcess: piece " + std::to_string(i) +
                                    " is not measurable at its left breakpoint");
    step_to_piece_.assign(m, 0);
    for (std::size_t i = 0; i < pieces_.size(); ++i)
      for (std::size_t j = break_idx_[i]; j < break_idx_[i + 1]; ++j) step_to_piece_[j] = i;
  }

  const FiltrationPtr& filtration() const noexcept { return filtration_; }
  const SpaceDescriptor& space() const noexcept { return pieces_[0].space(); }
  const ProbSpacePtr& omega() const noexcept { return pieces_[0].omega(); }
  std::size_t leaf_count() const noexcept { return pieces_[0].leaf_count(); }
  const std::vector<std::size_t>& breakpoints() const noexcept { return break_idx_; }
  std::size_t piece_count() const noexcept { return pieces_.size(); }
  const RandomElement& piece(std::size_t i) const { return pieces_.at(i); }

  /// The piece whose value holds on [t_step, t_{step+1}).
  std::size_t piece_for_step(std::size_t step) const { return step_to_piece_.at(step); }

  std::span<const double> step_value(std::size_t step, std::size_t leaf) const {
    return pieces_[step_to_piece_[step]].leaf(leaf);
  }

 private:
  FiltrationPtr filtration_;
  std::vector<std::size_t> break_idx_;
  std::vector<RandomElement> pieces_;
  std::vector<std::size_t> step_to_piece_;
};

/// The finest elementary representation of an adapted process: one piece per
/// grid step, freezing the step's left-endpoint value.
inline ElementaryProcess full_resolution_elementary(const AdaptedProcess& x) {
  const std::size_t m = x.filtration()->step_count();
  std::vector<std::size_t> breaks(m + 1);
  for (std::size_t j = 0; j <= m; ++j) breaks[j] = j;
  std::vector<RandomElement> pieces;
  pieces.reserve(m);
  for (std::size_t j = 0; j < m; ++j) pieces.push_back(x.at_time(j));
  return ElementaryProcess(x.filtration(), std::move(breaks), std::move(pieces));
}

// ---------------------------------------------------------------------------
// Integration and the two norms.
// ---------------------------------------------------------------------------

namespace detail {

/// Core sum: per leaf, sum_j x(t_j) (M(t_{j+1} ^ t) - M(t_j ^ t)). Only whole
/// steps contribute because M is a step path; steps are visited in ascending
/// order so the arithmetic is deterministic.
template <class StepValue>
RandomElement integrate_impl(const ProbSpacePtr& omega, const SpaceDescriptor& space,
                             const ScalarMartingale& m, double t, StepValue&& step_value) {
  const std::size_t k = steps_completed_by(*m.filtration(), t);
  const std::size_t dim = space.dim();
  std::vector<double> out(omega->leaf_count() * dim, 0.0);
  for (std::size_t leaf = 0; leaf < omega->leaf_count(); ++leaf) {
    double* acc = out.data() + leaf * dim;
    for (std::size_t j = 0; j < k; ++j) {
      const double dm = m.increment(j, leaf);
      const std::span<const double> v = step_value(j, leaf);
      for (std::size_t c = 0; c < dim; ++c) acc[c] += v[c] * dm;
    }
  }
  return RandomElement(omega, space, std::move(out));
}

/// E[ sum_j x(t_j)^2 d[M] ] up to time t, as an element of the product target.
template <class StepValue>
Element isometry_mass_impl(const ProbSpacePtr& omega, const SpaceDescriptor& space,
                           const ScalarMartingale& m, double t, StepValue&& step_value) {
  const QuadraticVariation qv(m);
  const std::size_t k = steps_completed_by(*m.filtration(), t);
  Element mass = zero_element(space.mult_target());
  std::vector<double> scratch(space.mult_dim());
  for (std::size_t leaf = 0; leaf < omega->leaf_count(); ++leaf) {
    const double p = omega->prob(leaf);
    for (std::size_t j = 0; j < k; ++j) {
      const double w = qv.step_increment(j, leaf);
      if (w == 0.0) continue;
      const std::span<const double> v = step_value(j, leaf);
      multiply_accumulate(space, v, v, p * w, mass.coords, scratch);
    }
  }
  return mass;
}

template <class StepValue>
double l2m_norm_impl(const ProbSpacePtr& omega, const SpaceDescriptor& space,
                     const ScalarMartingale& m, double t, StepValue&& step_value) {
  const QuadraticVariation qv(m);
  const std::size_t k = steps_completed_by(*m.filtration(), t);
  double acc = 0.0;
  for (std::size_t leaf = 0; leaf < omega->leaf_count(); ++leaf) {
    const double p = omega->prob(leaf);
    for (std::size_t j = 0; j < k; ++j) {
      const double w = qv.step_increment(j, leaf);
      if (w == 0.0) continue;
      const std::span<const double> v = step_value(j, leaf);
      const double n = norm_of(space, v);
      acc += p * w * n * n;
    }
  }
  return std::sqrt(acc);
}

}  // namespace detail

/// Elementary integral sum x_i (M(t_{i+1} ^ t) - M(t_i ^ t)); any t in [0, T].
inline RandomElement integrate_elementary(const ElementaryProcess& x, const ScalarMartingale& m,
                                          double t) {
  detail::require_aligned(x.filtration(), m.filtration(), "integrate_elementary");
  return detail::integrate_impl(x.omega(), x.space(), m, t,
                                [&](std::size_t j, std::size_t leaf) { return x.step_value(j, leaf); });
}

/// The L^2 norm of the integrand against d[M] x dP up to time t:
/// ( E[ sum_j ||x(t_j)||^2 d[M] ] )^{1/2}.
inline double l2m_norm(const AdaptedProcess& x, const ScalarMartingale& m) {
  detail::require_aligned(x.filtration(), m.filtration(), "l2m_norm");
  return detail::l2m_norm_impl(x.omega(), x.space(), m, m.horizon(),
                               [&](std::size_t j, std::size_t leaf) { return x.at(j, leaf); });
}

inline double l2m_norm(const ElementaryProcess& x, const ScalarMartingale& m) {
  detail::require_aligned(x.filtration(), m.filtration(), "l2m_norm");
  return detail::l2m_norm_impl(x.omega(), x.space(), m, m.horizon(),
                               [&](std::size_t j, std::size_t leaf) { return x.step_value(j, leaf); });
}

/// E[ sum_j x(t_j)^2 d[M] ] up to t: the product-space mass whose norm square-
/// roots to the martingale norm of the process.
inline Element m_norm_mass(const AdaptedProcess& x, const ScalarMartingale& m, double t) {
  detail::require_aligned(x.filtration(), m.filtration(), "m_norm_mass");
  return detail::isometry_mass_impl(x.omega(), x.space(), m, t,
                                    [&](std::size_t j, std::size_t leaf) { return x.at(j, leaf); });
}

inline double m_norm_process(const AdaptedProcess& x, const ScalarMartingale& m) {
  return std::sqrt(norm(m_norm_mass(x, m, m.horizon())));
}

inline double m_norm_process(const ElementaryProcess& x, const ScalarMartingale& m) {
  detail::require_aligned(x.filtration(), m.filtration(), "m_norm_process");
  const Element mass = detail::isometry_mass_impl(
      x.omega(), x.space(), m, m.horizon(),
      [&](std::size_t j, std::size_t leaf) { return x.step_value(j, leaf); });
  return std::sqrt(norm(mass));
}

/// Both sides of the isometry at time t: lhs = E[(int_0^t x dM)^2] and
/// rhs = E[int_0^t x^2 d[M]], with their relative gap.
struct IsometryResidual {
  Element lhs;
  Element rhs;
  double residual = 0.0;
};

inline IsometryResidual ito_isometry_residual(const ElementaryProcess& x,
                                              const ScalarMartingale& m, double t) {
  detail::require_aligned(x.filtration(), m.filtration(), "ito_isometry_residual");
  const RandomElement integral = integrate_elementary(x, m, t);
  Element lhs = zero_element(x.space().mult_target());
  std::vector<double> scratch(x.space().mult_dim());
  for (std::size_t leaf = 0; leaf < integral.leaf_count(); ++leaf) {
    const auto v = integral.leaf(leaf);
    multiply_accumulate(x.space(), v, v, x.omega()->prob(leaf), lhs.coords, scratch);
  }
  Element rhs = detail::isometry_mass_impl(
      x.omega(), x.space(), m, t,
      [&](std::size_t j, std::size_t leaf) { return x.step_value(j, leaf); });
  const double denom = std::max(norm(lhs), norm(rhs));
  const double gap = norm(lhs - rhs);
  IsometryResidual out{std::move(lhs), std::move(rhs), 0.0};
  out.residual = denom > 1e-300 ? gap / denom : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Shift and elementary approximation.
// ---------------------------------------------------------------------------

struct ShiftedProcess {
  AdaptedProcess process;
  double applied_shift = 0.0;
  bool snapped = false;  // requested shift was not a grid time and was snapped down
};

/// x_t(s) = x(s - t_shift) for s >= t_shift, 0 before. Values at grid times
/// use the cadlag step convention for s - t_shift; a non-grid shift snaps down
/// to the previous grid time and flags it.
inline ShiftedProcess shift_process(const AdaptedProcess& x, double t_shift) {
  const Filtration& f = *x.filtration();
  if (t_shift < 0.0 || t_shift > f.horizon())
    throw std::invalid_argument("shift_process: shift outside the grid span");
  const std::size_t shift_idx = f.floor_index(t_shift);
  const double applied = f.times()[shift_idx];
  const bool snapped = applied != t_shift;
  const std::size_t dim = x.space().dim();
  const std::size_t leaves = x.leaf_count();
  std::vector<double> vals(x.time_count() * leaves * dim, 0.0);
  for (std::size_t j = 0; j < x.time_count(); ++j) {
    const double s = f.times()[j];
    if (s < applied) continue;
    const std::size_t src = f.floor_index(s - applied);
    for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
      const auto v = x.at(src, leaf);
      std::copy(v.begin(), v.end(), vals.begin() + (j * leaves + leaf) * dim);
    }
  }
  return ShiftedProcess{AdaptedProcess(x.omega(), x.filtration(), x.space(), std::move(vals)),
                        applied, snapped};
}

/// ||x - y||_{L^2_M} for two integrands on the same grid.
inline double l2m_distance(const AdaptedProcess& x, const ElementaryProcess& y,
                           const ScalarMartingale& m) {
  detail::require_aligned(x.filtration(), m.filtration(), "l2m_distance");
  detail::require_aligned(y.filtration(), m.filtration(), "l2m_distance");
  const std::size_t dim = x.space().dim();
  std::vector<double> diff(dim);
  return detail::l2m_norm_impl(
      x.omega(), x.space(), m, m.horizon(), [&](std::size_t j, std::size_t leaf) {
        const auto a = x.at(j, leaf);
        const auto b = y.step_value(j, leaf);
        for (std::size_t c = 0; c < dim; ++c) diff[c] = a[c] - b[c];
        return std::span<const double>(diff);
      });
}

/// Martingale-norm distance ||x - y||_{M_M}; never exceeds the L^2_M distance.
inline double m_norm_distance(const AdaptedProcess& x, const ElementaryProcess& y,
                              const ScalarMartingale& m) {
  detail::require_aligned(x.filtration(), m.filtration(), "m_norm_distance");
  detail::require_aligned(y.filtration(), m.filtration(), "m_norm_distance");
  const std::size_t dim = x.space().dim();
  std::vector<double> diff(dim);
  const Element mass = detail::isometry_mass_impl(
      x.omega(), x.space(), m, m.horizon(), [&](std::size_t j, std::size_t leaf) {
        const auto a = x.at(j, leaf);
        const auto b = y.step_value(j, leaf);
        for (std::size_t c = 0; c < dim; ++c) diff[c] = a[c] - b[c];
        return std::span<const double>(diff);
      });
  return std::sqrt(norm(mass));
}

struct ElementaryApproximation {
  ElementaryProcess process;
  double achieved_error = 0.0;  // ||x - y||_{L^2_M}
};

/// Coarsens x to N equal windows of grid steps, freezing on each window the
/// value at the window's left endpoint. Window boundaries are grid times, so
/// adaptedness of x already makes every frozen piece measurable there. The
/// error is nonincreasing as N doubles on ramp-like integrands and is exactly
/// 0 once each window is a single step.
inline ElementaryApproximation approximate_elementary(const AdaptedProcess& x,
                                                      const ScalarMartingale& m,
                                                      std::size_t coarseness) {
  detail::require_aligned(x.filtration(), m.filtration(), "approximate_elementary");
  const std::size_t steps = x.filtration()->step_count();
  if (coarseness < 2) throw std::invalid_argument("approximate_elementary: coarseness must be >= 2");
  if (coarseness > steps || steps % coarseness != 0)
    throw std::invalid_argument("approximate_elementary: coarseness must divide the step count");
  const std::size_t window = steps / coarseness;
  std::vector<std::size_t> breaks(coarseness + 1);
  std::vector<RandomElement> pieces;
  pieces.reserve(coarseness);
  for (std::size_t k = 0; k < coarseness; ++k) {
    breaks[k] = k * window;
    pieces.push_back(x.at_time(k * window));
  }
  breaks[coarseness] = steps;
  ElementaryProcess y(x.filtration(), std::move(breaks), std::move(pieces));
  const double err = l2m_distance(x, y, m);
  return ElementaryApproximation{std::move(y), err};
}

// ---------------------------------------------------------------------------
// The integral of an adapted process.
// ---------------------------------------------------------------------------

struct ItoIntegralResult {
  RandomElement value;
  double error_bound = 0.0;      // martingale-norm distance of the integrand approximation;
                                 // by the isometry this bounds the integral error in M_t
  std::size_t coarseness = 0;    // windows used (step count when fully resolved)
};

/// Integrates x against M up to t by elementary approximation, escalating the
/// window count through the divisors of the grid until the approximation error
/// (in the martingale norm) is within target_error. On a finite grid the
/// escalation always terminates: at full resolution the error is exactly 0.
inline ItoIntegralResult ito_integral(const AdaptedProcess& x, const ScalarMartingale& m, double t,
                                      double target_error = 0.0) {
  detail::require_aligned(x.filtration(), m.filtration(), "ito_integral");
  if (target_error < 0.0) throw std::invalid_argument("ito_integral: negative target error");
  const std::size_t steps = x.filtration()->step_count();
  for (std::size_t n = 2; n < steps; ++n) {
    if (steps % n != 0) continue;
    ElementaryApproximation approx = approximate_elementary(x, m, n);
    const double err = m_norm_distance(x, approx.process, m);
    if (err <= target_error)
      return ItoIntegralResult{integrate_elementary(approx.process, m, t), err, n};
  }
  ElementaryProcess full = full_resolution_elementary(x);
  return ItoIntegralResult{integrate_elementary(full, m, t), 0.0, steps};
}

// ---------------------------------------------------------------------------
// Commutation checks.
// ---------------------------------------------------------------------------

/// Relative gap between phi(int x dM) and int phi(x) dM, evaluated per leaf.
inline double functional_commutes(const DualFunctional& phi, const AdaptedProcess& x,
                                  const ScalarMartingale& m, double t) {
  if (!(phi.space == x.space()))
    throw std::invalid_argument("functional_commutes: functional/integrand space mismatch");
  detail::require_aligned(x.filtration(), m.filtration(), "functional_commutes");
  const std::size_t k = detail::steps_completed_by(*m.filtration(), t);
  const RandomElement integral =
      integrate_elementary(full_resolution_elementary(x), m, t);
  double max_gap = 0.0;
  double magnitude = 1.0;
  for (std::size_t leaf = 0; leaf < x.leaf_count(); ++leaf) {
    double scalar_route = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      scalar_route += apply(phi, x.at(j, leaf)) * m.increment(j, leaf);
    const double vector_route = apply(phi, integral.leaf(leaf));
    max_gap = std::max(max_gap, std::abs(scalar_route - vector_route));
    magnitude = std::max({magnitude, std::abs(scalar_route), std::abs(vector_route)});
  }
  return max_gap / magnitude;
}

/// The canonical certificate psi with phi(z)^2 <= psi(z^2) on all of X,
/// obtained from Cauchy-Schwarz in each representation.
inline DualFunctional psi_certificate_for(const DualFunctional& phi) {
  const SpaceDescriptor target = phi.space.mult_target();
  switch (phi.space.kind()) {
    case SpaceKind::sup_grid: {
      double total = 0.0;
      for (double c : phi.coeffs) total += std::abs(c);
      std::vector<double> d(phi.coeffs.size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = total * std::abs(phi.coeffs[i]);
      return DualFunctional(target, std::move(d));
    }
    case SpaceKind::lp: {
      const auto& w = phi.space.weights();
      if (phi.space.exponent() == infinite_exponent) {
        double total = 0.0;
        for (std::size_t i = 0; i < phi.coeffs.size(); ++i) total += w[i] * std::abs(phi.coeffs[i]);
        std::vector<double> d(phi.coeffs.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = total * std::abs(phi.coeffs[i]);
        return DualFunctional(target, std::move(d));
      }
      double total = 0.0;
      for (std::size_t i = 0; i < phi.coeffs.size(); ++i)
        total += w[i] * phi.coeffs[i] * phi.coeffs[i];
      return DualFunctional(target, std::vector<double>(phi.coeffs.size(), total));
    }
    case SpaceKind::hilbert: {
      double sq = 0.0;
      for (double c : phi.coeffs) sq += c * c;
      return DualFunctional(target, {sq});
    }
    case SpaceKind::seq_sup:
      break;
  }
  throw std::invalid_argument("psi_certificate_for: unsupported kind");
}

struct CertifiedCommutation {
  double commutation_residual = 0.0;
  double certificate_margin = 0.0;  // min over samples of psi(z^2) - phi(z)^2
  bool certificate_ok = false;
};

/// Commutation together with a sampled verification of the domination
/// certificate phi(z)^2 <= psi(z^2).
inline CertifiedCommutation functional_commutes_certified(
    const DualFunctional& phi, const DualFunctional& psi, const AdaptedProcess& x,
    const ScalarMartingale& m, double t, std::size_t cert_samples, std::uint64_t seed) {
  if (!(psi.space == phi.space.mult_target()))
    throw std::invalid_argument("functional_commutes_certified: psi must live on the product target");
  CertifiedCommutation out;
  out.commutation_residual = functional_commutes(phi, x, m, t);
  RngStream rng(seed, 0);
  double margin = std::numeric_limits<double>::infinity();
  std::vector<double> coords(phi.space.dim());
  std::vector<double> square(phi.space.mult_dim());
  for (std::size_t s = 0; s < cert_samples; ++s) {
    for (double& c : coords) c = rng.uniform_range(-1.0, 1.0);
    const double value = apply(phi, std::span<const double>(coords));
    multiply_into(phi.space, coords, coords, square);
    margin = std::min(margin, apply(psi, std::span<const double>(square)) - value * value);
  }
  out.certificate_margin = margin;
  out.certificate_ok = margin >= -exact_abs_tol;
  return out;
}

/// For function-space integrands: integrating the scalar coordinate process
/// must equal the coordinate of the vector integral. Both routes run the same
/// ascending-step sums, so the residual is floating-point noise.
inline double evaluation_commutes(const AdaptedProcess& x, const ScalarMartingale& m, double t,
                                  std::size_t coordinate) {
  const SpaceKind kind = x.space().kind();
  if (kind != SpaceKind::sup_grid && kind != SpaceKind::lp)
    throw std::invalid_argument("evaluation_commutes: needs a function-space kind (sup_grid/lp)");
  if (coordinate >= x.space().dim())
    throw std::invalid_argument("evaluation_commutes: coordinate out of range");
  detail::require_aligned(x.filtration(), m.filtration(), "evaluation_commutes");
  const std::size_t k = detail::steps_completed_by(*m.filtration(), t);
  const RandomElement integral = integrate_elementary(full_resolution_elementary(x), m, t);
  double max_gap = 0.0;
  double magnitude = 1.0;
  for (std::size_t leaf = 0; leaf < x.leaf_count(); ++leaf) {
    double scalar_route = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      scalar_route += x.at(j, leaf)[coordinate] * m.increment(j, leaf);
    const double vector_route = integral.leaf(leaf)[coordinate];
    max_gap = std::max(max_gap, std::abs(scalar_route - vector_route));
    magnitude = std::max(magnitude, std::abs(vector_route));
  }
  return max_gap / magnitude;
}

// ---------------------------------------------------------------------------
// Continuity and parameter regularity.
// ---------------------------------------------------------------------------

/// || int_0^t x dM ||_{M_t} for each requested time: the norm of E[(integral)^2]
/// in the product target, square-rooted. Tends to 0 as t -> 0 and on exact
/// trees is dominated by sqrt(accumulated bracket mass).
inline std::vector<double> continuity_profile(const AdaptedProcess& x, const ScalarMartingale& m,
                                              std::span<const double> times) {
  detail::require_aligned(x.filtration(), m.filtration(), "continuity_profile");
  const ElementaryProcess full = full_resolution_elementary(x);
  std::vector<double> out;
  out.reserve(times.size());
  std::vector<double> scratch(x.space().mult_dim());
  for (double t : times) {
    const RandomElement integral = integrate_elementary(full, m, t);
    Element mass = zero_element(x.space().mult_target());
    for (std::size_t leaf = 0; leaf < integral.leaf_count(); ++leaf) {
      const auto v = integral.leaf(leaf);
      multiply_accumulate(x.space(), v, v, x.omega()->prob(leaf), mass.coords, scratch);
    }
    out.push_back(std::sqrt(norm(mass)));
  }
  return out;
}

struct HolderRow {
  double gap = 0.0;        // |tau - sigma|
  double mean_square = 0.0;  // realized E[(I(tau) - I(sigma))^2]
  double std_error = 0.0;
  double bound = 0.0;      // t * E[L^2] * gap^{2 beta}
  bool within_bound = false;
};

struct HolderTable {
  std::vector<HolderRow> rows;  // all parameter pairs, in (i, j) order
  double fitted_slope = 0.0;    // log-log slope of mean_square against gap
  double lipschitz_second_moment = 0.0;
  bool bounds_pass = false;
};

/// Parameter regularity of the integral of a parametrized family. The family
/// is a sup_grid-valued integrand whose coordinate k is the integrand at
/// parameter params[k]; lipschitz holds the pathwise Holder constant of the
/// family in the parameter. Exponents beta <= 1/2 are rejected (the transfer
/// needs beta' < beta - 1/2 headroom).
inline HolderTable holder_scaling_check(const AdaptedProcess& family,
                                        std::span<const double> params,
                                        const RandomScalar& lipschitz, double beta,
                                        const ScalarMartingale& m, double t) {
  if (!(beta > 0.5)) throw std::invalid_argument("holder_scaling_check: beta must exceed 1/2");
  if (family.space().kind() != SpaceKind::sup_grid)
    throw std::invalid_argument("holder_scaling_check: family must be sup_grid-valued");
  if (params.size() != family.space().dim())
    throw std::invalid_argument("holder_scaling_check: one parameter per coordinate required");
  if (params.size() < 2)
    throw std::invalid_argument("holder_scaling_check: needs at least two parameters");
  require_same_omega(lipschitz.omega(), family.omega(), "holder_scaling_check");
  detail::require_aligned(family.filtration(), m.filtration(), "holder_scaling_check");

  const RandomElement integral =
      integrate_elementary(full_resolution_elementary(family), m, t);
  const std::size_t leaves = family.leaf_count();
  const ProbSpacePtr& omega = family.omega();

  HolderTable table;
  double el2 = 0.0;
  double inv_neff = 0.0;
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
    const double p = omega->prob(leaf);
    el2 += p * lipschitz.value(leaf) * lipschitz.value(leaf);
    inv_neff += p * p;
  }
  table.lipschitz_second_moment = el2;
  const double n_eff = 1.0 / inv_neff;

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t fit_count = 0;
  table.bounds_pass = true;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = i + 1; j < params.size(); ++j) {
      HolderRow row;
      row.gap = std::abs(params[i] - params[j]);
      double mean = 0.0;
      for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
        const double d = integral.leaf(leaf)[i] - integral.leaf(leaf)[j];
        mean += omega->prob(leaf) * d * d;
      }
      double var = 0.0;
      for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
        const double d = integral.leaf(leaf)[i] - integral.leaf(leaf)[j];
        const double dev = d * d - mean;
        var += omega->prob(leaf) * dev * dev;
      }
      row.mean_square = mean;
      row.std_error = std::sqrt(var / n_eff);
      row.bound = t * el2 * std::pow(row.gap, 2.0 * beta);
      row.within_bound = mean <= row.bound + 4.0 * row.std_error + exact_abs_tol;
      table.bounds_pass = table.bounds_pass && row.within_bound;
      if (row.gap > 0.0 && row.mean_square > 0.0) {
        const double lx = std::log(row.gap);
        const double ly = std::log(row.mean_square);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++fit_count;
      }
      table.rows.push_back(row);
    }
  }
  if (fit_count >= 2) {
    const double n = static_cast<double>(fit_count);
    const double denom = n * sxx - sx * sx;
    table.fitted_slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
  }
  return table;
}

}  // namespace itolat
