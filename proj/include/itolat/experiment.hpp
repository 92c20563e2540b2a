#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "itolat/integral.hpp"
#include "itolat/io.hpp"
#include "itolat/martingale.hpp"
#include "itolat/mspace.hpp"
#include "itolat/prob.hpp"
#include "itolat/random_instances.hpp"
#include "itolat/report.hpp"
#include "itolat/rng.hpp"
#include "itolat/spaces.hpp"

namespace itolat {

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{
      "multiplication_axioms", "cond_exp_suite", "jensen",        "qv_properties",
      "ito_isometry",          "mnorm_estimate", "cauchy_schwarz", "mapping_estimates",
      "product_space",         "fubini",         "characterization", "density",
      "shift",                 "continuity",     "holder"};
  return names;
}

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::optional<SpaceDescriptor> space;
  nlohmann::json martingale;  // object, or null when unused
  nlohmann::json integrand;   // object, or null when unused
  std::vector<double> times;
  std::size_t samples = 100;
  std::vector<std::string> checks;
  std::string out_dir;
  nlohmann::json raw;
};

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("(root)", "config must be a JSON object");
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.seed = detail::as<std::uint64_t>(detail::need(j, "seed", "(root)"), "seed");
  const nlohmann::json& checks = detail::need(j, "checks", "(root)");
  if (!checks.is_array() || checks.empty())
    throw ConfigError("checks", "expected a nonempty array of check names");
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const std::string name =
        detail::as<std::string>(checks[i], "checks[" + std::to_string(i) + "]");
    if (std::find(known_checks().begin(), known_checks().end(), name) == known_checks().end())
      throw ConfigError("checks[" + std::to_string(i) + "]", "unknown check '" + name + "'");
    cfg.checks.push_back(name);
  }
  if (j.contains("space")) cfg.space = space_from_json(j["space"], "space");
  if (j.contains("martingale")) cfg.martingale = j["martingale"];
  if (j.contains("integrand")) cfg.integrand = j["integrand"];
  if (j.contains("times"))
    cfg.times = detail::as<std::vector<double>>(j["times"], "times");
  if (j.contains("samples")) {
    cfg.samples = detail::as<std::size_t>(j["samples"], "samples");
    if (cfg.samples == 0) throw ConfigError("samples", "must be positive");
  }
  if (j.contains("out_dir")) cfg.out_dir = detail::as<std::string>(j["out_dir"], "out_dir");
  return cfg;
}

// ---------------------------------------------------------------------------
// Integrand catalogue.
// ---------------------------------------------------------------------------

struct BuiltIntegrand {
  std::string type;
  AdaptedProcess adapted;
  std::optional<ElementaryProcess> elementary;  // present for piecewise-constant specs
};

namespace detail {

inline AdaptedProcess elementary_as_adapted(const ElementaryProcess& x) {
  const std::size_t leaves = x.leaf_count();
  const std::size_t dim = x.space().dim();
  const std::size_t steps = x.filtration()->step_count();
  std::vector<double> vals((steps + 1) * leaves * dim);
  for (std::size_t j = 0; j <= steps; ++j) {
    const std::size_t src = j < steps ? j : steps - 1;
    for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
      const auto v = x.step_value(src, leaf);
      std::copy(v.begin(), v.end(), vals.begin() + static_cast<std::ptrdiff_t>((j * leaves + leaf) * dim));
    }
  }
  return AdaptedProcess(x.omega(), x.filtration(), x.space(), std::move(vals));
}

inline AdaptedProcess scaled_profile_process(const ScalarMartingale& m,
                                             const SpaceDescriptor& space,
                                             const std::vector<double>& coords,
                                             const std::function<double(std::size_t, std::size_t)>& scale) {
  if (coords.size() != space.dim())
    throw ConfigError("integrand.coords", "length must equal the space dimension");
  const std::size_t leaves = m.leaf_count();
  const std::size_t dim = space.dim();
  std::vector<double> vals(m.times().size() * leaves * dim);
  for (std::size_t j = 0; j < m.times().size(); ++j)
    for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
      const double s = scale(j, leaf);
      for (std::size_t c = 0; c < dim; ++c) vals[(j * leaves + leaf) * dim + c] = s * coords[c];
    }
  return AdaptedProcess(m.omega(), m.filtration(), space, std::move(vals));
}

}  // namespace detail

/// Builds the integrand described by `recipe` on the martingale's grid:
///   {"type":"zero"} | {"type":"constant","coords":[...]}
///   {"type":"ramp","coords":[...]}          x(t) = t * v
///   {"type":"bracket_ramp","coords":[...]}  x(t) = M(t) * v
///   {"type":"random_adapted","amplitude":a}
///   {"type":"random_elementary","amplitude":a,"max_pieces":q}
///   {"type":"holder_family","params":[...],"beta":b,"exponent":e}
inline BuiltIntegrand build_integrand(const nlohmann::json& recipe, const SpaceDescriptor& space,
                                      const ScalarMartingale& m, std::uint64_t seed) {
  if (!recipe.is_object()) throw ConfigError("integrand", "required by this check");
  const std::string type =
      detail::as<std::string>(detail::need(recipe, "type", "integrand"), "integrand.type");
  if (type == "zero") {
    return BuiltIntegrand{type,
                          detail::scaled_profile_process(
                              m, space, std::vector<double>(space.dim(), 0.0),
                              [](std::size_t, std::size_t) { return 0.0; }),
                          std::nullopt};
  }
  if (type == "constant" || type == "ramp" || type == "bracket_ramp") {
    auto coords = detail::as<std::vector<double>>(detail::need(recipe, "coords", "integrand"),
                                                  "integrand.coords");
    std::function<double(std::size_t, std::size_t)> scale;
    if (type == "constant")
      scale = [](std::size_t, std::size_t) { return 1.0; };
    else if (type == "ramp")
      scale = [&m](std::size_t j, std::size_t) { return m.times()[j]; };
    else
      scale = [&m](std::size_t j, std::size_t leaf) { return m.value(j, leaf); };
    return BuiltIntegrand{type, detail::scaled_profile_process(m, space, coords, scale),
                          std::nullopt};
  }
  if (type == "random_adapted") {
    const double amp =
        recipe.contains("amplitude") ? detail::as<double>(recipe["amplitude"], "integrand.amplitude") : 1.0;
    RngStream rng(seed, 7001);
    return BuiltIntegrand{type, random_adapted_process(rng, m, space, amp), std::nullopt};
  }
  if (type == "random_elementary") {
    const double amp =
        recipe.contains("amplitude") ? detail::as<double>(recipe["amplitude"], "integrand.amplitude") : 1.0;
    const std::size_t pieces = recipe.contains("max_pieces")
                                   ? detail::as<std::size_t>(recipe["max_pieces"], "integrand.max_pieces")
                                   : 6;
    RngStream rng(seed, 7002);
    ElementaryProcess e = random_elementary_process(rng, m, space, amp, pieces);
    AdaptedProcess a = detail::elementary_as_adapted(e);
    return BuiltIntegrand{type, std::move(a), std::move(e)};
  }
  if (type == "holder_family") {
    auto params = detail::as<std::vector<double>>(detail::need(recipe, "params", "integrand"),
                                                  "integrand.params");
    if (params.size() < 2) throw ConfigError("integrand.params", "need at least two parameters");
    const double beta =
        detail::as<double>(detail::need(recipe, "beta", "integrand"), "integrand.beta");
    const double exponent =
        recipe.contains("exponent") ? detail::as<double>(recipe["exponent"], "integrand.exponent") : beta;
    const SpaceDescriptor family_space = SpaceDescriptor::sup_grid(params.size());
    std::vector<double> values(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) values[k] = std::pow(params[k], exponent);
    return BuiltIntegrand{type,
                          detail::scaled_profile_process(m, family_space, values,
                                                         [](std::size_t, std::size_t) { return 1.0; }),
                          std::nullopt};
  }
  throw ConfigError("integrand.type", "unknown integrand type '" + type + "'");
}

// ---------------------------------------------------------------------------
// Statistical helper for simulation backends.
// ---------------------------------------------------------------------------

namespace detail {

/// Max coordinatewise |mean| / SE of the zero-mean isometry statistic
/// (integral)^2 - sum x^2 d[M] over the sample paths.
inline double isometry_max_zscore(const ElementaryProcess& x, const ScalarMartingale& m, double t) {
  const RandomElement integral = integrate_elementary(x, m, t);
  const QuadraticVariation qv(m);
  const std::size_t k = steps_completed_by(*m.filtration(), t);
  const SpaceDescriptor& space = x.space();
  const std::size_t ydim = space.mult_dim();
  const ProbSpacePtr& omega = x.omega();
  std::vector<double> mean(ydim, 0.0), second(ydim, 0.0);
  std::vector<double> sample(ydim), acc(ydim), scratch(ydim);
  double inv_neff = 0.0;
  for (std::size_t leaf = 0; leaf < omega->leaf_count(); ++leaf) {
    const double p = omega->prob(leaf);
    inv_neff += p * p;
    multiply_into(space, integral.leaf(leaf), integral.leaf(leaf), sample);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const double w = qv.step_increment(j, leaf);
      if (w == 0.0) continue;
      multiply_accumulate(space, x.step_value(j, leaf), x.step_value(j, leaf), w, acc, scratch);
    }
    for (std::size_t c = 0; c < ydim; ++c) {
      const double s = sample[c] - acc[c];
      mean[c] += p * s;
      second[c] += p * s * s;
    }
  }
  const double n_eff = 1.0 / inv_neff;
  double worst = 0.0;
  for (std::size_t c = 0; c < ydim; ++c) {
    const double var = std::max(0.0, second[c] - mean[c] * mean[c]);
    const double se = std::sqrt(var / n_eff);
    if (se < 1e-300) {
      if (std::abs(mean[c]) > 1e-12) return std::numeric_limits<double>::infinity();
      continue;
    }
    worst = std::max(worst, std::abs(mean[c]) / se);
  }
  return worst;
}

inline ScalarMartingale martingale_checked(const ExperimentConfig& cfg) {
  if (!cfg.martingale.is_object())
    throw ConfigError("martingale", "required by a configured check");
  return martingale_from_json(cfg.martingale, cfg.seed);
}

inline SpaceDescriptor space_checked(const ExperimentConfig& cfg) {
  if (!cfg.space) throw ConfigError("space", "required by a configured check");
  return *cfg.space;
}

inline std::vector<double> times_or_horizon(const ExperimentConfig& cfg,
                                            const ScalarMartingale& m) {
  if (!cfg.times.empty()) return cfg.times;
  return {m.horizon()};
}

inline CheckReport row(std::string name, double lhs, double rhs, double residual, double tol,
                       bool pass, double t = std::nan("")) {
  CheckReport r;
  r.check = std::move(name);
  r.t = t;
  r.lhs = lhs;
  r.rhs = rhs;
  r.residual = residual;
  r.tolerance = tol;
  r.pass = pass;
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Check runners.
// ---------------------------------------------------------------------------

namespace runners {

inline void multiplication_axioms(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  const SpaceDescriptor space = detail::space_checked(cfg);
  const MultiplicationAxiomReport rep =
      check_multiplication_axioms(space, cfg.samples, cfg.seed);
  out.push_back(detail::row("multiplication/bound", rep.max_bound_violation, 0.0,
                            rep.max_bound_violation, exact_rel_tol,
                            rep.max_bound_violation <= exact_rel_tol));
  out.push_back(detail::row("multiplication/symmetry", rep.max_symmetry_residual, 0.0,
                            rep.max_symmetry_residual, exact_abs_tol,
                            rep.max_symmetry_residual <= exact_abs_tol));
  out.push_back(detail::row("multiplication/bilinearity", rep.max_bilinearity_residual, 0.0,
                            rep.max_bilinearity_residual, exact_abs_tol,
                            rep.max_bilinearity_residual <= exact_abs_tol));
  out.push_back(detail::row("multiplication/square_positive", rep.min_square_coordinate, 0.0,
                            std::max(0.0, -rep.min_square_coordinate), exact_abs_tol,
                            rep.min_square_coordinate >= -exact_abs_tol));
  out.push_back(detail::row("multiplication/square_norm_identity", rep.max_square_norm_mismatch,
                            0.0, rep.max_square_norm_mismatch, exact_rel_tol,
                            rep.max_square_norm_mismatch <= exact_rel_tol));
  out.push_back(detail::row("multiplication/zero_square", rep.zero_square_ok ? 1.0 : 0.0, 1.0,
                            rep.zero_square_ok ? 0.0 : 1.0, 0.0, rep.zero_square_ok));
}

inline void cond_exp_suite(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  RngStream rng(cfg.seed, 101);
  double linearity = 0.0, tower = 0.0, take_out = 0.0, identity = 0.0, indep = 0.0,
         functional = 0.0;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const ProbSpacePtr omega = random_prob_space(rng, 64);
    const Partition fine = random_partition(rng, omega->leaf_count());
    const Partition coarse = random_coarsening(rng, fine);
    const SpaceDescriptor space = random_mult_space(rng);
    const RandomElement x = random_random_element(rng, omega, space);
    const RandomElement y = random_random_element(rng, omega, space);
    const double a = rng.uniform_range(-2.0, 2.0);
    const double b = rng.uniform_range(-2.0, 2.0);

    {  // linearity
      std::vector<double> combo(x.values().size());
      for (std::size_t n = 0; n < combo.size(); ++n)
        combo[n] = a * x.values()[n] + b * y.values()[n];
      const RandomElement ce =
          cond_expectation(RandomElement(omega, space, std::move(combo)), fine);
      const RandomElement cx = cond_expectation(x, fine);
      const RandomElement cy = cond_expectation(y, fine);
      for (std::size_t n = 0; n < ce.values().size(); ++n)
        linearity = std::max(linearity,
                             std::abs(ce.values()[n] - a * cx.values()[n] - b * cy.values()[n]));
    }
    {  // tower
      const RandomElement two_step = cond_expectation(cond_expectation(x, fine), coarse);
      const RandomElement direct = cond_expectation(x, coarse);
      for (std::size_t n = 0; n < direct.values().size(); ++n)
        tower = std::max(tower, std::abs(two_step.values()[n] - direct.values()[n]));
    }
    {  // taking out a measurable scalar factor
      std::vector<double> g(omega->leaf_count());
      for (std::size_t bi = 0; bi < fine.block_count(); ++bi) {
        const double v = rng.uniform_range(-1.5, 1.5);
        for (std::size_t leaf : fine.block(bi)) g[leaf] = v;
      }
      std::vector<double> gx(x.values().size());
      for (std::size_t leaf = 0; leaf < omega->leaf_count(); ++leaf)
        for (std::size_t c = 0; c < space.dim(); ++c)
          gx[leaf * space.dim() + c] = g[leaf] * x.values()[leaf * space.dim() + c];
      const RandomElement lhs = cond_expectation(RandomElement(omega, space, std::move(gx)), fine);
      const RandomElement cx = cond_expectation(x, fine);
      for (std::size_t leaf = 0; leaf < omega->leaf_count(); ++leaf)
        for (std::size_t c = 0; c < space.dim(); ++c)
          take_out = std::max(take_out, std::abs(lhs.values()[leaf * space.dim() + c] -
                                                 g[leaf] * cx.values()[leaf * space.dim() + c]));
    }
    {  // a measurable variable is its own conditional expectation
      const RandomElement z = random_measurable_element(rng, omega, fine, space);
      const RandomElement cz = cond_expectation(z, fine);
      for (std::size_t n = 0; n < cz.values().size(); ++n)
        identity = std::max(identity, std::abs(cz.values()[n] - z.values()[n]));
    }
    if (space.kind() != SpaceKind::seq_sup) {  // commutation with a fixed functional
      const DualFunctional phi = random_dual(rng, space);
      const RandomElement cx = cond_expectation(x, fine);
      std::vector<double> phix(omega->leaf_count());
      for (std::size_t leaf = 0; leaf < omega->leaf_count(); ++leaf)
        phix[leaf] = apply(phi, x.leaf(leaf));
      const RandomScalar cphix = cond_expectation(RandomScalar(omega, std::move(phix)), fine);
      for (std::size_t leaf = 0; leaf < omega->leaf_count(); ++leaf)
        functional =
            std::max(functional, std::abs(cphix.value(leaf) - apply(phi, cx.leaf(leaf))));
    }
  }
  {  // independence via product structure
    RngStream prng(cfg.seed, 102);
    for (std::size_t i = 0; i < std::max<std::size_t>(1, cfg.samples / 10); ++i) {
      const std::size_t a1 = static_cast<std::size_t>(prng.uniform_int(2, 6));
      const std::size_t b1 = static_cast<std::size_t>(prng.uniform_int(2, 6));
      const ProductStructure ps = product_prob_space(a1, b1);
      const SpaceDescriptor space = random_mult_space(prng);
      std::vector<double> per_first(a1 * space.dim());
      for (double& v : per_first) v = prng.uniform_range(-1.0, 1.0);
      std::vector<double> values(ps.omega->leaf_count() * space.dim());
      for (std::size_t leaf = 0; leaf < ps.omega->leaf_count(); ++leaf) {
        const std::size_t first = leaf / b1;
        for (std::size_t c = 0; c < space.dim(); ++c)
          values[leaf * space.dim() + c] = per_first[first * space.dim() + c];
      }
      const RandomElement x(ps.omega, space, std::move(values));
      const Element ex = expectation(x);
      const RandomElement ce = cond_expectation(x, ps.by_second);
      for (std::size_t leaf = 0; leaf < ps.omega->leaf_count(); ++leaf)
        for (std::size_t c = 0; c < space.dim(); ++c)
          indep = std::max(indep, std::abs(ce.values()[leaf * space.dim() + c] - ex.coords[c]));
      if (!independent(*ps.omega, ps.by_first, ps.by_second))
        indep = std::max(indep, 1.0);
    }
  }
  const double tol = exact_abs_tol;
  out.push_back(detail::row("cond_exp/linearity", linearity, 0.0, linearity, tol, linearity <= tol));
  out.push_back(detail::row("cond_exp/tower", tower, 0.0, tower, tol, tower <= tol));
  out.push_back(
      detail::row("cond_exp/take_out_factor", take_out, 0.0, take_out, tol, take_out <= tol));
  out.push_back(detail::row("cond_exp/measurable_identity", identity, 0.0, identity, tol,
                            identity <= tol));
  out.push_back(detail::row("cond_exp/independence", indep, 0.0, indep, tol, indep <= tol));
  out.push_back(detail::row("cond_exp/functional_commutation", functional, 0.0, functional, tol,
                            functional <= tol));
}

inline void jensen(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  RngStream rng(cfg.seed, 103);
  double square_min = std::numeric_limits<double>::infinity();
  double abs_min = std::numeric_limits<double>::infinity();
  double norm_min = std::numeric_limits<double>::infinity();
  double linear_res = 0.0;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const ProbSpacePtr omega = random_prob_space(rng, 32);
    const Partition part = random_partition(rng, omega->leaf_count());
    const SpaceDescriptor space = random_mult_space(rng);
    const RandomElement x = random_random_element(rng, omega, space);
    {
      const RandomElement gap = jensen_gap(ConvexMap::square(space), x, part);
      for (double v : gap.values()) square_min = std::min(square_min, v);
    }
    if (space.is_normed_lattice()) {
      const RandomElement gap = jensen_gap(ConvexMap::abs_value(space), x, part);
      for (double v : gap.values()) abs_min = std::min(abs_min, v);
    }
    {
      const RandomElement gap = jensen_gap(ConvexMap::norm_as_scalar(space), x, part);
      for (double v : gap.values()) norm_min = std::min(norm_min, v);
    }
    {
      const SpaceDescriptor target = random_operator_space(rng);
      const ConvexMap lin = ConvexMap::linear(
          space, target, random_coords(rng, space.dim() * target.dim(), 1.0));
      const RandomElement gap = jensen_gap(lin, x, part);
      for (double v : gap.values()) linear_res = std::max(linear_res, std::abs(v));
    }
  }
  out.push_back(detail::row("jensen/square_gap_min", square_min, 0.0,
                            std::max(0.0, -square_min), exact_rel_tol,
                            square_min >= -exact_rel_tol));
  out.push_back(detail::row("jensen/abs_gap_min", abs_min, 0.0, std::max(0.0, -abs_min),
                            exact_rel_tol, abs_min >= -exact_rel_tol));
  out.push_back(detail::row("jensen/norm_gap_min", norm_min, 0.0, std::max(0.0, -norm_min),
                            exact_rel_tol, norm_min >= -exact_rel_tol));
  out.push_back(detail::row("jensen/linear_residual", linear_res, 0.0, linear_res, exact_abs_tol,
                            linear_res <= exact_abs_tol));
}

inline void qv_properties(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  const ScalarMartingale m = detail::martingale_checked(cfg);
  const QvPropertyReport rep = verify_qv_properties(m);
  out.push_back(detail::row("qv/starts_at_zero", rep.starts_at_zero ? 1.0 : 0.0, 1.0,
                            rep.starts_at_zero ? 0.0 : 1.0, 0.0, rep.starts_at_zero));
  out.push_back(detail::row("qv/jump_identity", rep.jump_identity ? 1.0 : 0.0, 1.0,
                            rep.jump_identity ? 0.0 : 1.0, 0.0, rep.jump_identity));
  if (m.backend() == MartingaleBackend::exact_tree) {
    out.push_back(detail::row("qv/compensation", rep.max_compensation_residual, 0.0,
                              rep.max_compensation_residual, exact_abs_tol,
                              rep.compensation_martingale));
    const std::string backend = cfg.martingale.value("backend", "");
    if (backend == "exact_tree") {
      const double scale = cfg.martingale.value("scale", 1.0);
      const QuadraticVariation qv(m);
      double worst = 0.0;
      for (std::size_t j = 0; j < m.times().size(); ++j) {
        const double want = static_cast<double>(j) * scale * scale;
        for (std::size_t leaf = 0; leaf < m.leaf_count(); ++leaf)
          worst = std::max(worst, std::abs(qv.value(j, leaf) - want) / std::max(1.0, want));
      }
      out.push_back(detail::row("qv/deterministic_bracket", worst, 0.0, worst, exact_rel_tol,
                                worst <= exact_rel_tol));
    }
  } else {
    out.push_back(detail::row("qv/compensation_zscore", rep.max_compensation_zscore, 0.0,
                              rep.max_compensation_zscore, 4.0, rep.compensation_martingale));
    const std::string backend = cfg.martingale.value("backend", "");
    if (backend == "brownian") {
      const QuadraticVariation qv(m);
      const std::size_t last = m.times().size() - 1;
      double mean = 0.0, second = 0.0, inv_neff = 0.0;
      for (std::size_t leaf = 0; leaf < m.leaf_count(); ++leaf) {
        const double p = m.omega()->prob(leaf);
        const double v = qv.value(last, leaf);
        mean += p * v;
        second += p * v * v;
        inv_neff += p * p;
      }
      const double se = std::sqrt(std::max(0.0, second - mean * mean) * inv_neff);
      const double z = se > 0.0 ? std::abs(mean - m.horizon()) / se : 0.0;
      out.push_back(detail::row("qv/bracket_mean_zscore", mean, m.horizon(), z, 4.0, z <= 4.0,
                                m.horizon()));
    }
  }
}

inline void ito_isometry(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  const ScalarMartingale m = detail::martingale_checked(cfg);
  const SpaceDescriptor space =
      cfg.space ? *cfg.space : SpaceDescriptor::sup_grid(2);
  const BuiltIntegrand integrand = build_integrand(cfg.integrand, space, m, cfg.seed);
  const ElementaryProcess elem = integrand.elementary
                                     ? *integrand.elementary
                                     : full_resolution_elementary(integrand.adapted);
  for (double t : detail::times_or_horizon(cfg, m)) {
    const IsometryResidual res = ito_isometry_residual(elem, m, t);
    if (m.backend() == MartingaleBackend::exact_tree) {
      out.push_back(detail::row("ito_isometry", norm(res.lhs), norm(res.rhs), res.residual,
                                exact_rel_tol, res.residual <= exact_rel_tol, t));
    } else {
      const double z = detail::isometry_max_zscore(elem, m, t);
      out.push_back(
          detail::row("ito_isometry_zscore", norm(res.lhs), norm(res.rhs), z, 4.0, z <= 4.0, t));
    }
  }
}

inline void mnorm_estimate(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  RngStream rng(cfg.seed, 104);
  double le_violation = 0.0;
  double hilbert_gap = 0.0;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const std::size_t steps = static_cast<std::size_t>(rng.uniform_int(2, 6));
    const ScalarMartingale m = random_walk_martingale(steps, 1.0);
    const SpaceDescriptor space =
        i % 3 == 0 ? SpaceDescriptor::hilbert(static_cast<std::size_t>(rng.uniform_int(1, 4)))
                   : random_mult_space(rng);
    const ElementaryProcess x = random_elementary_process(rng, m, space);
    const double mn = m_norm_process(x, m);
    const double l2 = l2m_norm(x, m);
    le_violation = std::max(le_violation, (mn - l2) / std::max(1.0, l2));
    if (space.kind() == SpaceKind::hilbert)
      hilbert_gap = std::max(hilbert_gap, std::abs(mn - l2) / std::max(1.0, l2));
  }
  out.push_back(detail::row("mnorm/le_l2m", le_violation, 0.0, std::max(0.0, le_violation),
                            exact_rel_tol, le_violation <= exact_rel_tol));
  out.push_back(detail::row("mnorm/hilbert_equality", hilbert_gap, 0.0, hilbert_gap,
                            exact_abs_tol, hilbert_gap <= exact_abs_tol));
}

inline void cauchy_schwarz(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  RngStream rng(cfg.seed, 105);
  double excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const MeasureSpacePtr base = random_measure_space(rng);
    const SpaceDescriptor space = random_mult_space(rng);
    const MeasureField x = random_measure_field(rng, base, space);
    const MeasureField y = random_measure_field(rng, base, space);
    const CauchySchwarzReport rep = cauchy_schwarz_residual(x, y);
    excess = std::max(excess, rep.excess / std::max(1.0, rep.rhs));
  }
  out.push_back(detail::row("cauchy_schwarz/excess", excess, 0.0, std::max(0.0, excess),
                            exact_rel_tol, excess <= exact_rel_tol));
}

inline void mapping_estimates(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  RngStream rng(cfg.seed, 106);
  double pointwise = std::numeric_limits<double>::infinity();
  double integrated = std::numeric_limits<double>::infinity();
  double atom_transfer = -std::numeric_limits<double>::infinity();
  double integral_transfer = std::numeric_limits<double>::infinity();
  bool positive = true;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const SpaceDescriptor from = random_operator_space(rng);
    const SpaceDescriptor to = random_operator_space(rng);
    const LinearOperator a = random_operator(rng, from, to);
    const LinearOperator b = dominating_operator(a);
    const MeasureSpacePtr base = random_measure_space(rng);
    const MeasureField x = random_measure_field(rng, base, from);
    const MappingEstimateReport rep = operator_bounds(a, b, x, 16, cfg.seed + i);
    pointwise = std::min(pointwise, rep.domination_margin);
    integrated = std::min(integrated, rep.integrated_gap);
    atom_transfer = std::max(atom_transfer, rep.atom_transfer_worst);
    integral_transfer = std::min(integral_transfer, rep.integral_transfer_gap);
    positive = positive && rep.positivity_ok;
    if (!rep.pass) positive = positive && false;
  }
  out.push_back(detail::row("mapping/pointwise_domination", pointwise, 0.0,
                            std::max(0.0, -pointwise), exact_rel_tol,
                            pointwise >= -exact_rel_tol));
  out.push_back(detail::row("mapping/integrated_domination", integrated, 0.0,
                            std::max(0.0, -integrated), exact_rel_tol,
                            integrated >= -exact_rel_tol));
  out.push_back(detail::row("mapping/atom_norm_transfer", atom_transfer, 0.0,
                            std::max(0.0, atom_transfer), exact_rel_tol,
                            atom_transfer <= exact_rel_tol));
  out.push_back(detail::row("mapping/integral_norm_transfer", integral_transfer, 0.0,
                            std::max(0.0, -integral_transfer), exact_rel_tol,
                            integral_transfer >= -exact_rel_tol));
  out.push_back(detail::row("mapping/dominator_positive", positive ? 1.0 : 0.0, 1.0,
                            positive ? 0.0 : 1.0, 0.0, positive));
}

inline void product_space(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  RngStream rng(cfg.seed, 107);
  bool additive = true, component = true;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const MeasureSpacePtr base = random_measure_space(rng);
    const SpaceDescriptor space = random_mult_space(rng);
    const MeasureField x1 = random_measure_field(rng, base, space);
    const MeasureField x2 = random_measure_field(rng, base, space);
    const ProductSpaceReport rep = product_space_norms(x1, x2);
    additive = additive && rep.additivity_ok;
    component = component && rep.component_bound_ok;
  }
  RngStream wrng(cfg.seed, 108);
  const MeasureSpacePtr base = random_measure_space(wrng);
  const SpaceDescriptor space = random_mult_space(wrng);
  const MeasureField witness = random_measure_field(wrng, base, space);
  const ProductSpaceReport equal_pair = product_space_norms(witness, witness);
  out.push_back(detail::row("product/additivity", additive ? 1.0 : 0.0, 1.0,
                            additive ? 0.0 : 1.0, 0.0, additive));
  out.push_back(detail::row("product/component_bound", component ? 1.0 : 0.0, 1.0,
                            component ? 0.0 : 1.0, 0.0, component));
  out.push_back(detail::row("product/equal_pair_ratio", equal_pair.ratio, 2.0,
                            std::abs(equal_pair.ratio - 2.0), 0.0, equal_pair.ratio == 2.0));
}

inline void fubini(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  RngStream rng(cfg.seed, 109);
  double worst = 0.0;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const MeasureSpacePtr s_base = random_measure_space(rng, 5);
    const MeasureSpacePtr t_base = random_measure_space(rng, 5);
    const SpaceDescriptor space = random_mult_space(rng);
    const std::vector<double> values =
        random_coords(rng, s_base->atom_count() * t_base->atom_count() * space.dim(), 1.0);
    const FubiniReport rep = fubini_norm_check(s_base, t_base, space, values);
    worst = std::max(worst, rep.residual);
  }
  out.push_back(
      detail::row("fubini/residual", worst, 0.0, worst, exact_abs_tol, worst <= exact_abs_tol));
}

inline void characterization(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  RngStream rng(cfg.seed, 110);
  double worst = 0.0;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const std::size_t steps = static_cast<std::size_t>(rng.uniform_int(2, 5));
    const ScalarMartingale m = random_walk_martingale(steps, 1.0);
    SpaceDescriptor space = random_mult_space(rng);
    while (space.kind() == SpaceKind::seq_sup) space = random_mult_space(rng);
    const AdaptedProcess x = random_adapted_process(rng, m, space);
    const CharacterizationReport rep = characterization_norms(x, m);
    worst = std::max(worst, rep.residual);
  }
  out.push_back(detail::row("characterization/residual", worst, 0.0, worst, exact_rel_tol,
                            worst <= exact_rel_tol));
}

inline void density(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  const ScalarMartingale m = detail::martingale_checked(cfg);
  const SpaceDescriptor space = detail::space_checked(cfg);
  const BuiltIntegrand integrand = build_integrand(cfg.integrand, space, m, cfg.seed);
  std::vector<std::size_t> values;
  if (cfg.raw.contains("coarseness_values")) {
    values = detail::as<std::vector<std::size_t>>(cfg.raw["coarseness_values"],
                                                  "coarseness_values");
  } else {
    for (std::size_t n = 2; n <= m.step_count(); ++n)
      if (m.step_count() % n == 0) values.push_back(n);
  }
  std::sort(values.begin(), values.end());
  double previous = std::numeric_limits<double>::infinity();
  bool monotone = true;
  double final_error = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t n : values) {
    const ElementaryApproximation approx = approximate_elementary(integrand.adapted, m, n);
    out.push_back(detail::row("density/error_at_" + std::to_string(n), approx.achieved_error, 0.0,
                              approx.achieved_error, std::numeric_limits<double>::infinity(),
                              true));
    monotone = monotone && approx.achieved_error <= previous + exact_abs_tol;
    previous = approx.achieved_error;
    if (n == m.step_count()) final_error = approx.achieved_error;
  }
  out.push_back(detail::row("density/monotone", monotone ? 1.0 : 0.0, 1.0, monotone ? 0.0 : 1.0,
                            0.0, monotone));
  if (!std::isnan(final_error))
    out.push_back(detail::row("density/full_resolution_zero", final_error, 0.0, final_error, 0.0,
                              final_error == 0.0));
}

inline void shift(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  const ScalarMartingale m = detail::martingale_checked(cfg);
  const SpaceDescriptor space = detail::space_checked(cfg);
  const BuiltIntegrand integrand = build_integrand(cfg.integrand, space, m, cfg.seed);
  std::vector<double> shifts;
  if (cfg.raw.contains("shifts")) {
    shifts = detail::as<std::vector<double>>(cfg.raw["shifts"], "shifts");
  } else {
    for (double s = m.horizon() / 2.0; s >= m.horizon() / 16.0; s /= 2.0) shifts.push_back(s);
  }
  std::sort(shifts.begin(), shifts.end(), std::greater<double>());
  double previous = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (double s : shifts) {
    const ShiftedProcess shifted = shift_process(integrand.adapted, s);
    std::vector<double> diff(shifted.process.values().size());
    for (std::size_t n = 0; n < diff.size(); ++n)
      diff[n] = shifted.process.values()[n] - integrand.adapted.values()[n];
    const AdaptedProcess delta(m.omega(), m.filtration(), integrand.adapted.space(),
                               std::move(diff));
    const double distance = l2m_norm(delta, m);
    out.push_back(detail::row("shift/distance", distance, shifted.applied_shift, distance,
                              std::numeric_limits<double>::infinity(), true, s));
    monotone = monotone && distance <= previous + exact_abs_tol;
    previous = distance;
  }
  out.push_back(detail::row("shift/monotone", monotone ? 1.0 : 0.0, 1.0, monotone ? 0.0 : 1.0,
                            0.0, monotone));
}

inline void continuity(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  const ScalarMartingale m = detail::martingale_checked(cfg);
  const SpaceDescriptor space = detail::space_checked(cfg);
  const BuiltIntegrand integrand = build_integrand(cfg.integrand, space, m, cfg.seed);
  std::vector<double> times = cfg.times;
  if (times.empty())
    for (double t = m.horizon(); t >= m.horizon() / 8.0 - 1e-12; t /= 2.0) times.push_back(t);
  std::sort(times.begin(), times.end(), std::greater<double>());
  const std::vector<double> profile = continuity_profile(integrand.adapted, m, times);
  for (std::size_t i = 0; i < times.size(); ++i)
    out.push_back(detail::row("continuity/value", profile[i], 0.0, 0.0,
                              std::numeric_limits<double>::infinity(), true, times[i]));
  const bool exact = m.backend() == MartingaleBackend::exact_tree;
  bool monotone = true;
  for (std::size_t i = 1; i < profile.size(); ++i) {
    const double slack = exact ? exact_abs_tol : 0.05 * profile[i - 1] + exact_abs_tol;
    monotone = monotone && profile[i] <= profile[i - 1] + slack;
  }
  out.push_back(detail::row("continuity/monotone", monotone ? 1.0 : 0.0, 1.0,
                            monotone ? 0.0 : 1.0, 0.0, monotone));
  if (exact && integrand.type == "constant") {
    const QuadraticVariation qv(m);
    double worst = 0.0;
    const Element v(space, detail::as<std::vector<double>>(cfg.integrand["coords"],
                                                           "integrand.coords"));
    const double vnorm = norm(v);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const std::size_t idx = m.filtration()->floor_index(times[i]);
      double bracket_mean = 0.0;
      for (std::size_t leaf = 0; leaf < m.leaf_count(); ++leaf)
        bracket_mean += m.omega()->prob(leaf) * qv.value(idx, leaf);
      const double envelope = vnorm * std::sqrt(bracket_mean);
      worst = std::max(worst, std::abs(profile[i] - envelope) / std::max(1.0, envelope));
    }
    out.push_back(detail::row("continuity/constant_envelope", worst, 0.0, worst, exact_rel_tol,
                              worst <= exact_rel_tol));
  }
}

inline void holder(const ExperimentConfig& cfg, std::vector<CheckReport>& out) {
  const ScalarMartingale m = detail::martingale_checked(cfg);
  if (!cfg.integrand.is_object() || cfg.integrand.value("type", "") != "holder_family")
    throw ConfigError("integrand.type", "the holder check needs a holder_family integrand");
  const double beta =
      detail::as<double>(detail::need(cfg.integrand, "beta", "integrand"), "integrand.beta");
  const auto params = detail::as<std::vector<double>>(
      detail::need(cfg.integrand, "params", "integrand"), "integrand.params");
  const BuiltIntegrand integrand =
      build_integrand(cfg.integrand, SpaceDescriptor::sup_grid(params.size()), m, cfg.seed);
  const double exponent = cfg.integrand.value("exponent", beta);
  double lip = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = i + 1; j < params.size(); ++j) {
      const double gap = std::abs(params[i] - params[j]);
      if (gap <= 0.0) continue;
      lip = std::max(lip, std::abs(std::pow(params[i], exponent) - std::pow(params[j], exponent)) /
                              std::pow(gap, beta));
    }
  const RandomScalar lipschitz(m.omega(), std::vector<double>(m.leaf_count(), lip));
  const double t = cfg.times.empty() ? m.horizon() : cfg.times.front();
  const HolderTable table =
      holder_scaling_check(integrand.adapted, params, lipschitz, beta, m, t);
  std::size_t pair_index = 0;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = i + 1; j < params.size(); ++j, ++pair_index) {
      const HolderRow& r = table.rows[pair_index];
      out.push_back(detail::row(
          "holder/pair_" + std::to_string(i) + "_" + std::to_string(j), r.mean_square, r.bound,
          std::max(0.0, r.mean_square - r.bound), 4.0 * r.std_error + exact_abs_tol,
          r.within_bound, r.gap));
    }
  out.push_back(detail::row("holder/bounds", table.bounds_pass ? 1.0 : 0.0, 1.0,
                            table.bounds_pass ? 0.0 : 1.0, 0.0, table.bounds_pass));
  const double slope_tol = cfg.raw.value("slope_tolerance", 0.35);
  out.push_back(detail::row("holder/slope", table.fitted_slope, 2.0 * beta,
                            std::abs(table.fitted_slope - 2.0 * beta), slope_tol,
                            std::abs(table.fitted_slope - 2.0 * beta) <= slope_tol));
}

}  // namespace runners

// ---------------------------------------------------------------------------
// Campaigns and sweeps.
// ---------------------------------------------------------------------------

struct CampaignResult {
  std::vector<CheckReport> reports;
  bool all_pass = true;
};

inline CampaignResult run_campaign(const ExperimentConfig& cfg) {
  using Runner = void (*)(const ExperimentConfig&, std::vector<CheckReport>&);
  static const std::vector<std::pair<std::string, Runner>> registry{
      {"multiplication_axioms", runners::multiplication_axioms},
      {"cond_exp_suite", runners::cond_exp_suite},
      {"jensen", runners::jensen},
      {"qv_properties", runners::qv_properties},
      {"ito_isometry", runners::ito_isometry},
      {"mnorm_estimate", runners::mnorm_estimate},
      {"cauchy_schwarz", runners::cauchy_schwarz},
      {"mapping_estimates", runners::mapping_estimates},
      {"product_space", runners::product_space},
      {"fubini", runners::fubini},
      {"characterization", runners::characterization},
      {"density", runners::density},
      {"shift", runners::shift},
      {"continuity", runners::continuity},
      {"holder", runners::holder}};
  CampaignResult result;
  for (const std::string& name : cfg.checks) {
    const auto it = std::find_if(registry.begin(), registry.end(),
                                 [&](const auto& entry) { return entry.first == name; });
    if (it == registry.end()) throw ConfigError("checks", "unknown check '" + name + "'");
    const std::size_t first_row = result.reports.size();
    const auto start = std::chrono::steady_clock::now();
    it->second(cfg, result.reports);
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    for (std::size_t i = first_row; i < result.reports.size(); ++i) {
      result.reports[i].wall_ms = wall;
      result.all_pass = result.all_pass && result.reports[i].pass;
    }
  }
  return result;
}

struct SweepRow {
  std::string parameter;
  double value = 0.0;
  std::string metric;
  double result = 0.0;
};

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "parameter,value,metric,result\n";
  for (const SweepRow& r : rows) {
    out += r.parameter;
    out += ',';
    out += format_number(r.value);
    out += ',';
    out += r.metric;
    out += ',';
    out += format_number(r.result);
    out += '\n';
  }
  return out;
}

/// One-parameter sweeps over the configured integrand/martingale:
///   shift        -> distance between the shifted and original integrand
///   coarseness   -> elementary approximation error at that window count
///   path_count   -> isometry z-score with the martingale re-simulated
///   time         -> norm of the integral up to t
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::string& parameter,
                                       std::vector<double> values) {
  if (values.empty()) throw ConfigError("values", "sweep needs at least one value");
  std::sort(values.begin(), values.end());
  std::vector<SweepRow> rows;
  if (parameter == "shift" || parameter == "coarseness" || parameter == "time") {
    const ScalarMartingale m = detail::martingale_checked(cfg);
    const SpaceDescriptor space = detail::space_checked(cfg);
    const BuiltIntegrand integrand = build_integrand(cfg.integrand, space, m, cfg.seed);
    for (double v : values) {
      SweepRow row{parameter, v, "", 0.0};
      if (parameter == "shift") {
        const ShiftedProcess shifted = shift_process(integrand.adapted, v);
        std::vector<double> diff(shifted.process.values().size());
        for (std::size_t n = 0; n < diff.size(); ++n)
          diff[n] = shifted.process.values()[n] - integrand.adapted.values()[n];
        row.metric = "l2m_distance";
        row.result = l2m_norm(
            AdaptedProcess(m.omega(), m.filtration(), integrand.adapted.space(), std::move(diff)),
            m);
      } else if (parameter == "coarseness") {
        row.metric = "approximation_error";
        row.result =
            approximate_elementary(integrand.adapted, m, static_cast<std::size_t>(v)).achieved_error;
      } else {
        row.metric = "integral_norm";
        row.result = continuity_profile(integrand.adapted, m, std::vector<double>{v}).front();
      }
      rows.push_back(std::move(row));
    }
    return rows;
  }
  if (parameter == "path_count") {
    for (double v : values) {
      nlohmann::json mj = cfg.martingale;
      if (!mj.is_object()) throw ConfigError("martingale", "required for a path_count sweep");
      mj["paths"] = static_cast<std::size_t>(v);
      const ScalarMartingale m = martingale_from_json(mj, cfg.seed);
      const SpaceDescriptor space =
          cfg.space ? *cfg.space : SpaceDescriptor::sup_grid(2);
      const BuiltIntegrand integrand = build_integrand(cfg.integrand, space, m, cfg.seed);
      const ElementaryProcess elem = integrand.elementary
                                         ? *integrand.elementary
                                         : full_resolution_elementary(integrand.adapted);
      rows.push_back(SweepRow{parameter, v, "isometry_zscore",
                              detail::isometry_max_zscore(elem, m, m.horizon())});
    }
    return rows;
  }
  throw ConfigError("param", "unknown sweep parameter '" + parameter + "'");
}

}  // namespace itolat
