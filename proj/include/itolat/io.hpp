#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "itolat/martingale.hpp"
#include "itolat/prob.hpp"
#include "itolat/report.hpp"
#include "itolat/spaces.hpp"

namespace itolat {

/// Raised on malformed configuration or serialized input; carries the JSON
/// field path so a CLI can point at the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::runtime_error(path + ": " + message) {}
};

namespace detail {

inline const nlohmann::json& need(const nlohmann::json& j, const char* key,
                                  const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key, "missing required field");
  return *it;
}

template <class T>
T as(const nlohmann::json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path, std::string("wrong type (") + j.type_name() + ")");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Spaces and elements.
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const SpaceDescriptor& s) {
  switch (s.kind()) {
    case SpaceKind::sup_grid:
      return {{"kind", "sup_grid"}, {"points", s.dim()}};
    case SpaceKind::lp: {
      nlohmann::json j{{"kind", "lp"}, {"weights", s.weights()}};
      if (s.exponent() == infinite_exponent)
        j["exponent"] = "inf";
      else
        j["exponent"] = s.exponent();
      return j;
    }
    case SpaceKind::hilbert:
      return {{"kind", "hilbert"}, {"dim", s.dim()}};
    case SpaceKind::seq_sup:
      return {{"kind", "seq_sup"}, {"dim", s.dim()}, {"functionals", s.functionals()}};
  }
  throw std::logic_error("to_json: unknown kind");
}

inline SpaceDescriptor space_from_json(const nlohmann::json& j, const std::string& path = "space") {
  const std::string kind = detail::as<std::string>(detail::need(j, "kind", path), path + ".kind");
  if (kind == "sup_grid")
    return SpaceDescriptor::sup_grid(
        detail::as<std::size_t>(detail::need(j, "points", path), path + ".points"));
  if (kind == "lp") {
    auto weights =
        detail::as<std::vector<double>>(detail::need(j, "weights", path), path + ".weights");
    const nlohmann::json& e = detail::need(j, "exponent", path);
    double exponent;
    if (e.is_string()) {
      if (detail::as<std::string>(e, path + ".exponent") != "inf")
        throw ConfigError(path + ".exponent", "expected a number or \"inf\"");
      exponent = infinite_exponent;
    } else {
      exponent = detail::as<double>(e, path + ".exponent");
    }
    return SpaceDescriptor::lp(std::move(weights), exponent);
  }
  if (kind == "hilbert")
    return SpaceDescriptor::hilbert(
        detail::as<std::size_t>(detail::need(j, "dim", path), path + ".dim"));
  if (kind == "seq_sup")
    return SpaceDescriptor::seq_sup(
        detail::as<std::size_t>(detail::need(j, "dim", path), path + ".dim"),
        detail::as<std::vector<std::vector<double>>>(detail::need(j, "functionals", path),
                                                     path + ".functionals"));
  throw ConfigError(path + ".kind", "unknown space kind '" + kind + "'");
}

inline nlohmann::json to_json(const Element& x) {
  return {{"space", to_json(x.space)}, {"coords", x.coords}};
}

inline Element element_from_json(const nlohmann::json& j, const std::string& path = "element") {
  return Element(space_from_json(detail::need(j, "space", path), path + ".space"),
                 detail::as<std::vector<double>>(detail::need(j, "coords", path), path + ".coords"));
}

// ---------------------------------------------------------------------------
// Probability objects.
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const FiniteProbabilitySpace& omega) {
  return {{"probs", omega.probs()}};
}

inline ProbSpacePtr prob_space_from_json(const nlohmann::json& j,
                                         const std::string& path = "omega") {
  return std::make_shared<const FiniteProbabilitySpace>(
      detail::as<std::vector<double>>(detail::need(j, "probs", path), path + ".probs"));
}

inline nlohmann::json to_json(const Partition& p) {
  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t b = 0; b < p.block_count(); ++b) {
    const auto blk = p.block(b);
    blocks.push_back(std::vector<std::size_t>(blk.begin(), blk.end()));
  }
  return {{"leaf_count", p.leaf_count()}, {"blocks", std::move(blocks)}};
}

inline Partition partition_from_json(const nlohmann::json& j,
                                     const std::string& path = "partition") {
  return Partition(
      detail::as<std::size_t>(detail::need(j, "leaf_count", path), path + ".leaf_count"),
      detail::as<std::vector<std::vector<std::size_t>>>(detail::need(j, "blocks", path),
                                                        path + ".blocks"));
}

inline nlohmann::json to_json(const Filtration& f) {
  nlohmann::json parts = nlohmann::json::array();
  for (std::size_t i = 0; i < f.times().size(); ++i) parts.push_back(to_json(f.partition(i)));
  return {{"times", f.times()}, {"partitions", std::move(parts)}};
}

inline FiltrationPtr filtration_from_json(const nlohmann::json& j,
                                          const std::string& path = "filtration") {
  auto times = detail::as<std::vector<double>>(detail::need(j, "times", path), path + ".times");
  const nlohmann::json& parts = detail::need(j, "partitions", path);
  if (!parts.is_array()) throw ConfigError(path + ".partitions", "expected an array");
  std::vector<Partition> partitions;
  for (std::size_t i = 0; i < parts.size(); ++i)
    partitions.push_back(
        partition_from_json(parts[i], path + ".partitions[" + std::to_string(i) + "]"));
  return std::make_shared<const Filtration>(std::move(times), std::move(partitions));
}

inline nlohmann::json to_json(const RandomElement& x) {
  return {{"probs", x.omega()->probs()}, {"space", to_json(x.space())}, {"values", x.values()}};
}

inline RandomElement random_element_from_json(const nlohmann::json& j,
                                              const std::string& path = "random_element") {
  auto omega = std::make_shared<const FiniteProbabilitySpace>(
      detail::as<std::vector<double>>(detail::need(j, "probs", path), path + ".probs"));
  return RandomElement(
      std::move(omega), space_from_json(detail::need(j, "space", path), path + ".space"),
      detail::as<std::vector<double>>(detail::need(j, "values", path), path + ".values"));
}

// ---------------------------------------------------------------------------
// Martingale configurations.
// ---------------------------------------------------------------------------

/// Builds a martingale from a JSON description:
///   {"backend": "exact_tree", "steps": k, "scale": s}
///   {"backend": "brownian", "horizon": T, "steps": m, "paths": n}
///   {"backend": "compensated_poisson", "rate": r, "horizon": T, "steps": m, "paths": n}
/// Simulation backends draw from the seed passed in; an explicit "seed" field
/// on the object overrides it.
inline ScalarMartingale martingale_from_json(const nlohmann::json& j, std::uint64_t seed,
                                             const std::string& path = "martingale") {
  const std::string backend =
      detail::as<std::string>(detail::need(j, "backend", path), path + ".backend");
  if (j.contains("seed")) seed = detail::as<std::uint64_t>(j["seed"], path + ".seed");
  if (backend == "exact_tree") {
    const auto steps = detail::as<std::size_t>(detail::need(j, "steps", path), path + ".steps");
    const double scale =
        j.contains("scale") ? detail::as<double>(j["scale"], path + ".scale") : 1.0;
    return random_walk_martingale(steps, scale);
  }
  if (backend == "brownian" || backend == "compensated_poisson") {
    const auto steps = detail::as<std::size_t>(detail::need(j, "steps", path), path + ".steps");
    const double horizon =
        detail::as<double>(detail::need(j, "horizon", path), path + ".horizon");
    const auto paths = detail::as<std::size_t>(detail::need(j, "paths", path), path + ".paths");
    if (steps == 0) throw ConfigError(path + ".steps", "must be positive");
    if (!(horizon > 0.0)) throw ConfigError(path + ".horizon", "must be positive");
    std::vector<double> grid(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i)
      grid[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
    if (backend == "brownian") return mc_brownian(paths, grid, seed);
    const double rate = detail::as<double>(detail::need(j, "rate", path), path + ".rate");
    return mc_compensated_poisson(rate, grid, paths, seed);
  }
  throw ConfigError(path + ".backend", "unknown backend '" + backend + "'");
}

/// Sample-path dump, one row per (leaf, grid time).
inline std::string paths_to_csv(const ScalarMartingale& m) {
  std::string out = "leaf,time,value\n";
  for (std::size_t leaf = 0; leaf < m.leaf_count(); ++leaf)
    for (std::size_t j = 0; j < m.times().size(); ++j) {
      out += std::to_string(leaf);
      out += ',';
      out += format_number(m.times()[j]);
      out += ',';
      out += format_number(m.value(j, leaf));
      out += '\n';
    }
  return out;
}

}  // namespace itolat
