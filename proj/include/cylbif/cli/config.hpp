#ifndef CYLBIF_CLI_CONFIG_HPP
#define CYLBIF_CLI_CONFIG_HPP

// Run configuration: versioned JSON, every default in one table.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cylbif/base_spectrum.hpp"
#include "cylbif/error.hpp"
#include "cylbif/nonlinearity.hpp"

namespace cylbif::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Defaults table. Each entry can be overridden by the same key in the
/// config (grids.*, tolerances.*, t_range.*, continuation.*).
inline const json& defaults() {
  static const json d = {
      {"version", kSchemaVersion},
      {"model", {{"type", "lane_emden"}, {"p", 3.0}}},
      {"base", {{"type", "interval"}, {"length", 1.0}}},
      {"nodal_n", 1},
      {"grids", {{"ode_M", 10000}, {"eig_M", 2000}, {"nx", 100}, {"ny", 100}}},
      {"tolerances",
       {{"tol_amplitude", 1e-12},
        {"tol_terminal", 1e-10},
        {"newton_tol", 1e-9},
        {"tol_zero_rel", 1e-8},
        {"merge_rel_tol", 1e-9},
        {"group_rel_tol", 1e-9},
        {"lanczos_tol", 1e-10}}},
      {"shooting", {{"amplitude_low", 1e-2}, {"amplitude_high", 1e4}, {"max_bisect", 200}}},
      {"t_range", {{"t_min", 0.5}, {"t_max", 5.0}, {"samples", 200}}},
      {"cutoff", 100.0},
      {"eigen_count", 0},  // 0 → max(n + 5, 12)
      {"richardson", false},
      {"write_eigenfunctions", false},
      {"rotation_invariant", false},
      {"random_checks", 0},
      {"decomposition_count", 10},
      {"decomposition_t", 1.0},
      {"continuation",
       {{"steps", 6},
        {"dt0_rel", 1e-2},
        {"eps0_rel", 1e-2},
        {"max_halvings", 6},
        {"backtrack", 5},
        {"backtrack_ratio", 0.1},
        {"pair", {1, 1}},
        {"dump_solutions", true}}},
      {"output_dir", "out"},
  };
  return d;
}

struct RunConfig {
  json raw;  // merged with defaults
  NonlinearityModel model;
  BaseDomain base = Interval{1.0};
  int nodal_n = 1;
  int ode_M = 10000, eig_M = 2000, nx = 100, ny = 100;
  std::map<std::string, double> tolerances;
  double t_min = 0.5, t_max = 5.0;
  int t_samples = 200;
  std::string output_dir = "out";
  std::optional<std::vector<double>> alphas;  // synthetic override

  double tol(const std::string& name) const { return tolerances.at(name); }
};

namespace detail {

inline void merge_into(json& target, const json& patch) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it->is_object() && target.contains(it.key()) && target[it.key()].is_object() && it.key() != "model" &&
        it.key() != "base")
      merge_into(target[it.key()], *it);
    else
      target[it.key()] = *it;
  }
}

inline NonlinearityModel parse_model(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "lane_emden") return LaneEmden{j.at("p").get<double>()};
  if (type == "cubic") return CubicFamily{j.value("c1", 0.0), j.value("c3", 1.0)};
  throw Error(ErrorKind::Validation, "unknown model type '" + type + "'");
}

inline BaseDomain parse_base(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  BaseDomain d;
  if (type == "interval")
    d = Interval{j.value("length", 1.0)};
  else if (type == "rectangle")
    d = Rectangle{j.at("a").get<double>(), j.at("b").get<double>()};
  else if (type == "disk")
    d = Disk{j.value("radius", 1.0)};
  else
    throw Error(ErrorKind::Validation, "unknown base type '" + type + "'");
  validate(d);
  return d;
}

}  // namespace detail

inline RunConfig parse_config(const json& user) {
  RunConfig c;
  try {
    c.raw = defaults();
    detail::merge_into(c.raw, user);
    const json& r = c.raw;
    if (r.at("version").get<int>() != kSchemaVersion)
      throw Error(ErrorKind::Validation, "unsupported config version " + r.at("version").dump());
    c.model = detail::parse_model(r.at("model"));
    c.base = detail::parse_base(r.at("base"));
    c.nodal_n = r.at("nodal_n").get<int>();
    if (c.nodal_n < 1) throw Error(ErrorKind::Validation, "nodal_n must be >= 1");
    const json& g = r.at("grids");
    c.ode_M = g.at("ode_M").get<int>();
    c.eig_M = g.at("eig_M").get<int>();
    c.nx = g.at("nx").get<int>();
    c.ny = g.at("ny").get<int>();
    if (c.ode_M < 100 || c.eig_M < 16 || c.nx < 16 || c.ny < 16)
      throw Error(ErrorKind::Validation, "grid sizes too small (ode_M >= 100, eig_M, nx, ny >= 16)");
    for (auto it = r.at("tolerances").begin(); it != r.at("tolerances").end(); ++it) {
      const double v = it->get<double>();
      if (!(v > 0.0)) throw Error(ErrorKind::Validation, "tolerance '" + it.key() + "' must be positive");
      c.tolerances[it.key()] = v;
    }
    const json& tr = r.at("t_range");
    c.t_min = tr.at("t_min").get<double>();
    c.t_max = tr.at("t_max").get<double>();
    c.t_samples = tr.at("samples").get<int>();
    if (!(c.t_min > 0.0 && c.t_min < c.t_max) || c.t_samples < 2)
      throw Error(ErrorKind::Validation, "t_range needs 0 < t_min < t_max and samples >= 2");
    c.output_dir = r.at("output_dir").get<std::string>();
    if (r.contains("alphas") && !r.at("alphas").is_null()) {
      auto a = r.at("alphas").get<std::vector<double>>();
      if (a.empty() || !std::is_sorted(a.begin(), a.end()))
        throw Error(ErrorKind::Validation, "alphas must be a nonempty ascending list");
      c.alphas = std::move(a);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "cannot read config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

/// FNV-1a 64 of the canonical (sorted-key) dump of the merged config.
inline std::string config_hash(const json& merged) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : merged.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace cylbif::cli

#endif  // CYLBIF_CLI_CONFIG_HPP
