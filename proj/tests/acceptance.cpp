// Acceptance gate: twelve desk-scale criteria covering the library's core
// guarantees.  Each criterion prints one [PASS]/[FAIL] line; the binary exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstddef>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "itolat/experiment.hpp"

namespace {

using namespace itolat;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, ...) {
  char buffer[256];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buffer, sizeof buffer, pattern, args);
  va_end(args);
  return buffer;
}

AdaptedProcess constant_process(const ScalarMartingale& m, const SpaceDescriptor& space,
                                const std::vector<double>& coords) {
  const std::size_t leaves = m.leaf_count();
  std::vector<double> vals(m.times().size() * leaves * space.dim());
  for (std::size_t j = 0; j < m.times().size(); ++j)
    for (std::size_t leaf = 0; leaf < leaves; ++leaf)
      for (std::size_t c = 0; c < space.dim(); ++c)
        vals[(j * leaves + leaf) * space.dim() + c] = coords[c];
  return AdaptedProcess(m.omega(), m.filtration(), space, std::move(vals));
}

AdaptedProcess time_ramp(const ScalarMartingale& m, const SpaceDescriptor& space,
                         const std::vector<double>& coords) {
  const std::size_t leaves = m.leaf_count();
  std::vector<double> vals(m.times().size() * leaves * space.dim());
  for (std::size_t j = 0; j < m.times().size(); ++j)
    for (std::size_t leaf = 0; leaf < leaves; ++leaf)
      for (std::size_t c = 0; c < space.dim(); ++c)
        vals[(j * leaves + leaf) * space.dim() + c] = m.times()[j] * coords[c];
  return AdaptedProcess(m.omega(), m.filtration(), space, std::move(vals));
}

AdaptedProcess bracket_ramp(const ScalarMartingale& m, const SpaceDescriptor& space,
                            const std::vector<double>& coords) {
  const std::size_t leaves = m.leaf_count();
  std::vector<double> vals(m.times().size() * leaves * space.dim());
  for (std::size_t j = 0; j < m.times().size(); ++j)
    for (std::size_t leaf = 0; leaf < leaves; ++leaf)
      for (std::size_t c = 0; c < space.dim(); ++c)
        vals[(j * leaves + leaf) * space.dim() + c] = m.value(j, leaf) * coords[c];
  return AdaptedProcess(m.omega(), m.filtration(), space, std::move(vals));
}

std::vector<double> uniform_grid(std::size_t steps, double horizon) {
  std::vector<double> grid(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i)
    grid[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
  return grid;
}

double shift_distance(const AdaptedProcess& x, const ScalarMartingale& m, double s) {
  const ShiftedProcess shifted = shift_process(x, s);
  std::vector<double> diff(shifted.process.values().size());
  for (std::size_t n = 0; n < diff.size(); ++n)
    diff[n] = shifted.process.values()[n] - x.values()[n];
  return l2m_norm(AdaptedProcess(m.omega(), m.filtration(), x.space(), std::move(diff)), m);
}

bool rows_all_pass(const std::vector<CheckReport>& rows, double& worst_residual) {
  bool ok = !rows.empty();
  for (const CheckReport& r : rows) {
    ok = ok && r.pass;
    worst_residual = std::max(worst_residual, r.residual);
  }
  return ok;
}

// 1. The isometry holds to 1e-9 relative at every grid time for randomized
//    elementary integrands across the supported space kinds, in under 10 s.
Outcome exact_isometry_everywhere() {
  const auto start = Clock::now();
  const std::vector<double> w4(4, 0.25);
  const std::vector<SpaceDescriptor> spaces{
      SpaceDescriptor::sup_grid(4), SpaceDescriptor::lp(w4, 2.0), SpaceDescriptor::lp(w4, 4.0),
      SpaceDescriptor::lp(w4, infinite_exponent), SpaceDescriptor::hilbert(3)};
  RngStream rng(1201, 0);
  double worst = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    const SpaceDescriptor& space = spaces[i % spaces.size()];
    const std::size_t steps = 2 + i % 9;
    const double scale = rng.uniform_range(0.25, 2.0);
    const ScalarMartingale m = random_walk_martingale(steps, scale);
    const ElementaryProcess x = random_elementary_process(rng, m, space);
    for (double t : m.times()) worst = std::max(worst, ito_isometry_residual(x, m, t).residual);
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-9 && secs < 10.0,
          fmt("max relative residual %.3g over 200 processes, %.2fs", worst, secs)};
}

// 2. Under simulation the isometry statistic stays within four standard errors
//    for scalar and two-coordinate constant integrands at 1e5 paths, under 30 s.
Outcome simulated_isometry_within_error() {
  const auto start = Clock::now();
  const ScalarMartingale m = mc_brownian(100000, uniform_grid(16, 1.0), 7702);
  const AdaptedProcess scalar =
      constant_process(m, SpaceDescriptor::sup_grid(1), {1.5});
  const AdaptedProcess planar =
      constant_process(m, SpaceDescriptor::sup_grid(2), {1.0, -0.5});
  const double z1 = detail::isometry_max_zscore(full_resolution_elementary(scalar), m, 1.0);
  const double z2 = detail::isometry_max_zscore(full_resolution_elementary(planar), m, 1.0);
  const double secs = seconds_since(start);
  return {z1 <= 4.0 && z2 <= 4.0 && secs < 30.0,
          fmt("z-scores %.2f and %.2f at 100000 paths, %.2fs", z1, z2, secs)};
}

// 3. Conditional expectation: linearity, tower, factor take-out, measurable
//    identity, independence, functional commutation, and the norm estimate are
//    exact to 1e-12 on 100 randomized instances with at most 64 leaves.
Outcome conditional_expectation_suite() {
  ExperimentConfig cfg;
  cfg.seed = 303;
  cfg.samples = 100;
  std::vector<CheckReport> rows;
  runners::cond_exp_suite(cfg, rows);
  double worst = 0.0;
  bool ok = rows_all_pass(rows, worst);

  RngStream rng(304, 0);
  double norm_gap_min = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    const ProbSpacePtr omega = random_prob_space(rng, 64);
    const Partition part = random_partition(rng, omega->leaf_count());
    const SpaceDescriptor space = random_mult_space(rng);
    const RandomElement x = random_random_element(rng, omega, space);
    const RandomElement gap = jensen_gap(ConvexMap::norm_as_scalar(space), x, part);
    for (double v : gap.values()) norm_gap_min = std::min(norm_gap_min, v);
  }
  ok = ok && norm_gap_min >= -1e-12;
  return {ok, fmt("worst identity residual %.3g, norm-estimate slack %.3g", worst,
                  norm_gap_min)};
}

// 4. Conditional Jensen: gap coordinates at least -1e-9 for the convex
//    catalogue on 100 randomized instances, and zero gap for linear maps.
Outcome conditional_jensen_gaps() {
  ExperimentConfig cfg;
  cfg.seed = 404;
  cfg.samples = 100;
  std::vector<CheckReport> rows;
  runners::jensen(cfg, rows);
  double worst = 0.0;
  const bool ok = rows_all_pass(rows, worst);
  return {ok, fmt("%zu gap families checked, worst violation %.3g", rows.size(), worst)};
}

// 5. Quadratic variation: deterministic brackets on random walks are exact,
//    the compensated square is a martingale to 1e-12, and the simulated mean
//    bracket matches the horizon within four standard errors at 1e5 paths.
Outcome quadratic_variation_structure() {
  double worst_bracket = 0.0;
  double worst_comp = 0.0;
  bool ok = true;
  const std::vector<std::pair<std::size_t, double>> walks{{4, 0.5}, {6, 1.0}, {7, 0.25}};
  for (const auto& [steps, scale] : walks) {
    const ScalarMartingale m = random_walk_martingale(steps, scale);
    const QuadraticVariation qv(m);
    for (std::size_t j = 0; j < m.times().size(); ++j) {
      const double want = static_cast<double>(j) * scale * scale;
      for (std::size_t leaf = 0; leaf < m.leaf_count(); ++leaf)
        worst_bracket = std::max(worst_bracket, std::abs(qv.value(j, leaf) - want));
    }
    const QvPropertyReport rep = verify_qv_properties(m);
    ok = ok && rep.starts_at_zero && rep.jump_identity && rep.compensation_martingale;
    worst_comp = std::max(worst_comp, rep.max_compensation_residual);
  }
  ok = ok && worst_bracket == 0.0 && worst_comp <= 1e-12;

  const ScalarMartingale w = mc_brownian(100000, uniform_grid(16, 1.0), 7705);
  const QuadraticVariation qw(w);
  const std::size_t last = w.times().size() - 1;
  double mean = 0.0, second = 0.0, inv_neff = 0.0;
  for (std::size_t leaf = 0; leaf < w.leaf_count(); ++leaf) {
    const double p = w.omega()->prob(leaf);
    const double v = qw.value(last, leaf);
    mean += p * v;
    second += p * v * v;
    inv_neff += p * p;
  }
  const double se = std::sqrt(std::max(0.0, second - mean * mean) * inv_neff);
  const double z = se > 0.0 ? std::abs(mean - 1.0) / se : 0.0;
  ok = ok && z <= 4.0;
  return {ok, fmt("bracket error %.3g, compensation %.3g, mean bracket z %.2f", worst_bracket,
                  worst_comp, z)};
}

// 6. The square-function norm never exceeds the step-sum norm on 1000 random
//    processes, agrees with it to 1e-12 in the euclidean case, and the
//    integrated Cauchy-Schwarz inequality holds on 1000 pairs.
Outcome square_function_norms() {
  ExperimentConfig cfg;
  cfg.seed = 606;
  cfg.samples = 1000;
  std::vector<CheckReport> rows;
  runners::mnorm_estimate(cfg, rows);
  runners::cauchy_schwarz(cfg, rows);
  double worst = 0.0;
  const bool ok = rows_all_pass(rows, worst);
  return {ok, fmt("%zu inequality rows, worst violation %.3g", rows.size(), worst)};
}

// 7. Operator domination and norm transfer hold on 1000 randomized instances,
//    the product-space norm obeys its two-sided bound with the exact ratio-2
//    witness, and the iterated-integral norm identity is exact on 2x3 grids.
Outcome mapping_and_product_bounds() {
  ExperimentConfig cfg;
  cfg.seed = 707;
  cfg.samples = 1000;
  std::vector<CheckReport> rows;
  runners::mapping_estimates(cfg, rows);
  runners::product_space(cfg, rows);
  double worst = 0.0;
  bool ok = rows_all_pass(rows, worst);

  RngStream rng(708, 0);
  double fub = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    const MeasureSpacePtr s = std::make_shared<const FiniteMeasureSpace>(
        std::vector<double>{rng.uniform_range(0.1, 2.0), rng.uniform_range(0.1, 2.0)});
    const MeasureSpacePtr t = std::make_shared<const FiniteMeasureSpace>(
        std::vector<double>{rng.uniform_range(0.1, 2.0), rng.uniform_range(0.1, 2.0),
                            rng.uniform_range(0.1, 2.0)});
    const SpaceDescriptor space = random_mult_space(rng);
    const std::vector<double> values = random_coords(rng, 6 * space.dim(), 1.0);
    fub = std::max(fub, fubini_norm_check(s, t, space, values).residual);
  }
  ok = ok && fub <= 1e-12;
  return {ok, fmt("%zu bound rows, iterated-integral residual %.3g", rows.size(), fub)};
}

// 8. Window approximations improve monotonically through N in {2,4,8,16} and
//    vanish at full resolution on a ramp corpus; the shift distance shrinks
//    monotonically as the shift halves.
Outcome approximation_and_shift_monotone() {
  const ScalarMartingale m = random_walk_martingale(16, 1.0);
  const std::vector<AdaptedProcess> corpus{
      time_ramp(m, SpaceDescriptor::sup_grid(1), {1.0}),
      time_ramp(m, SpaceDescriptor::hilbert(2), {1.0, -0.5}),
      time_ramp(m, SpaceDescriptor::lp({0.5, 0.5}, 2.0), {2.0, 1.0}),
      bracket_ramp(m, SpaceDescriptor::sup_grid(2), {0.5, 1.0})};
  bool ok = true;
  double final_error = 0.0;
  for (const AdaptedProcess& x : corpus) {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : {2, 4, 8, 16}) {
      const double err = approximate_elementary(x, m, n).achieved_error;
      ok = ok && err <= prev + 1e-12;
      prev = err;
      if (n == 16) {
        ok = ok && err == 0.0;
        final_error = std::max(final_error, err);
      }
    }
    double prev_shift = std::numeric_limits<double>::infinity();
    for (double s : {8.0, 4.0, 2.0, 1.0}) {
      const double d = shift_distance(x, m, s);
      ok = ok && d <= prev_shift + 1e-12;
      prev_shift = d;
    }
  }
  return {ok, fmt("4 integrands, full-resolution error %.3g", final_error)};
}

// 9. The integral norm decreases strictly toward the time origin under
//    simulation and sits on the square-root envelope for constant integrands
//    on exact trees.
Outcome continuity_at_the_origin() {
  const ScalarMartingale w = mc_brownian(20000, uniform_grid(8, 1.0), 909);
  const AdaptedProcess x = constant_process(w, SpaceDescriptor::sup_grid(2), {1.0, 0.5});
  const std::vector<double> times{1.0, 0.5, 0.25, 0.125};
  const std::vector<double> profile = continuity_profile(x, w, times);
  bool ok = true;
  for (std::size_t i = 1; i < profile.size(); ++i) ok = ok && profile[i] <= 0.9 * profile[i - 1];

  const ScalarMartingale m = random_walk_martingale(16, 0.5);
  const QuadraticVariation qv(m);
  double worst_excess = 0.0;
  const std::vector<std::pair<SpaceDescriptor, std::vector<double>>> cases{
      {SpaceDescriptor::hilbert(2), {0.6, 0.8}},
      {SpaceDescriptor::sup_grid(2), {1.0, 0.25}}};
  for (const auto& [space, coords] : cases) {
    const AdaptedProcess c = constant_process(m, space, coords);
    const std::vector<double> tree_times{16.0, 8.0, 4.0, 2.0};
    const std::vector<double> tree_profile = continuity_profile(c, m, tree_times);
    const double vnorm = norm(Element(space, coords));
    for (std::size_t i = 0; i < tree_times.size(); ++i) {
      const std::size_t idx = m.filtration()->floor_index(tree_times[i]);
      double bracket_mean = 0.0;
      for (std::size_t leaf = 0; leaf < m.leaf_count(); ++leaf)
        bracket_mean += m.omega()->prob(leaf) * qv.value(idx, leaf);
      const double envelope = vnorm * std::sqrt(bracket_mean);
      worst_excess = std::max(worst_excess, tree_profile[i] - envelope);
      ok = ok && tree_profile[i] <= envelope + 1e-9;
    }
  }
  return {ok, fmt("simulated profile strictly decreasing, envelope excess %.3g", worst_excess)};
}

// 10. Parameter regularity: for a linear family the pairwise mean-square gap
//     equals t times the squared parameter gap within four standard errors at
//     1e5 paths, and a concave family fits a log-log slope above 1.4.
Outcome parameter_scaling_families() {
  const ScalarMartingale w = mc_brownian(100000, uniform_grid(8, 1.0), 1010);
  const std::vector<double> params{0.0, 0.5, 1.0};
  const AdaptedProcess family =
      constant_process(w, SpaceDescriptor::sup_grid(3), params);
  const RandomScalar unit_lipschitz(w.omega(), std::vector<double>(w.leaf_count(), 1.0));
  const HolderTable linear = holder_scaling_check(family, params, unit_lipschitz, 1.0, w, 1.0);
  bool ok = true;
  double worst_z = 0.0;
  for (const HolderRow& row : linear.rows) {
    const double target = row.gap * row.gap;  // horizon t = 1
    const double z = row.std_error > 0.0 ? std::abs(row.mean_square - target) / row.std_error
                                         : std::abs(row.mean_square - target);
    worst_z = std::max(worst_z, z);
    ok = ok && std::abs(row.mean_square - target) <= 4.0 * row.std_error + 1e-12;
  }

  const ScalarMartingale m = random_walk_martingale(4, 1.0);
  const std::vector<double> roots{0.0, 0.25, 0.5, 1.0};
  std::vector<double> powered(roots.size());
  for (std::size_t k = 0; k < roots.size(); ++k) powered[k] = std::pow(roots[k], 0.75);
  const AdaptedProcess concave =
      constant_process(m, SpaceDescriptor::sup_grid(roots.size()), powered);
  double lip = 0.0;
  for (std::size_t i = 0; i < roots.size(); ++i)
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      const double gap = std::abs(roots[i] - roots[j]);
      if (gap > 0.0)
        lip = std::max(lip, std::abs(powered[i] - powered[j]) / std::pow(gap, 0.75));
    }
  const RandomScalar lipschitz(m.omega(), std::vector<double>(m.leaf_count(), lip));
  const HolderTable table = holder_scaling_check(concave, roots, lipschitz, 0.75, m, 4.0);
  ok = ok && table.bounds_pass && table.fitted_slope >= 1.4;
  return {ok, fmt("linear-family worst z %.2f, concave slope %.3f", worst_z,
                  table.fitted_slope)};
}

// 11. The process norm computed through coordinate functionals agrees with the
//     direct square-function evaluation to 1e-9 on 100 random adapted
//     processes over coordinate-sup and weighted-power spaces.
Outcome norm_characterization() {
  RngStream rng(1111, 0);
  const std::vector<SpaceDescriptor> spaces{
      SpaceDescriptor::sup_grid(3), SpaceDescriptor::lp({1.0, 0.5, 0.25}, 2.0),
      SpaceDescriptor::lp({0.5, 0.5, 1.0}, 4.0), SpaceDescriptor::lp({0.7, 0.3}, infinite_exponent),
      SpaceDescriptor::hilbert(2)};
  double worst = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t steps = 2 + i % 5;
    const ScalarMartingale m = random_walk_martingale(steps, 1.0);
    const AdaptedProcess x = random_adapted_process(rng, m, spaces[i % spaces.size()]);
    worst = std::max(worst, characterization_norms(x, m).residual);
  }
  return {worst <= 1e-9, fmt("worst characterization residual %.3g", worst)};
}

// 12. Two full-suite campaigns with the same seed produce byte-identical CSV
//     reports and digests.
Outcome deterministic_reports() {
  const ExperimentConfig cfg = parse_config(nlohmann::json::parse(R"({
    "seed": 20260822,
    "samples": 60,
    "checks": ["multiplication_axioms", "cond_exp_suite", "jensen", "qv_properties",
               "ito_isometry", "mnorm_estimate", "cauchy_schwarz", "mapping_estimates",
               "product_space", "fubini", "characterization", "density", "shift",
               "continuity", "holder"],
    "martingale": {"backend": "exact_tree", "steps": 4, "scale": 1.0},
    "space": {"kind": "hilbert", "dim": 2},
    "integrand": {"type": "holder_family", "params": [0.0, 0.25, 0.5, 1.0], "beta": 0.75}
  })"));
  const CampaignResult first = run_campaign(cfg);
  const CampaignResult second = run_campaign(cfg);
  const std::string csv_a = reports_to_csv(first.reports);
  const std::string csv_b = reports_to_csv(second.reports);
  const bool identical = csv_a == csv_b && fnv1a_hex(csv_a) == fnv1a_hex(csv_b);
  return {identical, fmt("digest %s, %zu rows, suite %s", fnv1a_hex(csv_a).c_str(),
                         first.reports.size(), first.all_pass ? "green" : "NOT green")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*fn)();
  };
  const std::vector<Criterion> criteria{
      {"exact isometry for random elementary integrands", exact_isometry_everywhere},
      {"simulated isometry within sampling error", simulated_isometry_within_error},
      {"conditional expectation identity suite", conditional_expectation_suite},
      {"conditional Jensen gaps for the convex catalogue", conditional_jensen_gaps},
      {"quadratic variation structure", quadratic_variation_structure},
      {"square-function norm domination and Cauchy-Schwarz", square_function_norms},
      {"operator, product, and iterated-integral bounds", mapping_and_product_bounds},
      {"window approximation and shift monotonicity", approximation_and_shift_monotone},
      {"integral norm continuity at the origin", continuity_at_the_origin},
      {"parameter scaling for integrand families", parameter_scaling_families},
      {"norm characterization on random processes", norm_characterization},
      {"byte-identical reports for a fixed seed", deterministic_reports}};

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].fn();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    all = all && outcome.pass;
    std::printf("[%s] %02zu %-52s %s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].name, outcome.detail.c_str());
  }
  std::printf("acceptance: %s\n", all ? "all 12 criteria passed" : "FAILURES present");
  return all ? 0 : 1;
}
