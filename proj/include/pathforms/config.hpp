#pragma once

// Experiment configuration: JSON in, validated struct out, and a stable
// 64-bit digest of the resolved settings.

#include "pathforms/schedule.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathforms {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"bismut_q0", "bismut_q1",    "filtering",
                                              "bracket",   "ibp",          "h2identity",
                                              "h2divergence", "liegroup",  "all"};
  return names;
}

inline const std::vector<std::string>& manifold_names() {
  static const std::vector<std::string> names{"sphere1",  "sphere2",  "sphere3",
                                              "clifford_torus", "so3_left", "so3_right",
                                              "so3_biinvariant"};
  return names;
}

inline std::string join(const std::vector<std::string>& xs) {
  std::string s;
  for (const auto& x : xs) s += (s.empty() ? "" : ", ") + x;
  return s;
}

inline void require_one_of(const std::string& what, const std::string& value,
                           const std::vector<std::string>& valid) {
  for (const auto& v : valid)
    if (v == value) return;
  throw ConfigError("unknown " + what + " '" + value + "' (valid: " + join(valid) + ")");
}

/// Pass thresholds; every field can be overridden from the config file.
struct Tolerances {
  double se_factor = 3.0;         // statistical checks: |mean - target| <= k SE
  double relative = 0.02;         // scalar formula against the spectrum
  double lie_relative = 0.03;     // group formula against the quadrature oracle
  double fd_zero = 1e-2;          // H-norm of the finite-difference bracket on gradient systems
  double fd_relative = 0.05;      // bracket formula against finite differences
  double closed_form = 0.01;      // bracket formula against the group closed form
  double identity_flat = 1e-10;   // two-vector identity on flat spaces
  double identity_curved = 5e-3;  // two-vector identity on curved spaces
  double ratio_min = 1.6;         // first-order ratio window, h -> h/2
  double ratio_max = 2.6;
  double pathwise = 1e-9;         // relative agreement of formulas equal path by path
  double control_factor = 5.0;    // controls must be at least this many SE away from zero

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k{
        "se_factor",     "relative",        "lie_relative", "fd_zero",   "fd_relative",
        "closed_form",   "identity_flat",   "identity_curved", "ratio_min", "ratio_max",
        "pathwise",      "control_factor"};
    return k;
  }

  double& at(const std::string& key) {
    if (key == "se_factor") return se_factor;
    if (key == "relative") return relative;
    if (key == "lie_relative") return lie_relative;
    if (key == "fd_zero") return fd_zero;
    if (key == "fd_relative") return fd_relative;
    if (key == "closed_form") return closed_form;
    if (key == "identity_flat") return identity_flat;
    if (key == "identity_curved") return identity_curved;
    if (key == "ratio_min") return ratio_min;
    if (key == "ratio_max") return ratio_max;
    if (key == "pathwise") return pathwise;
    if (key == "control_factor") return control_factor;
    require_one_of("tolerance", key, keys());
    throw ConfigError("unreachable");
  }
  double at(const std::string& key) const { return const_cast<Tolerances*>(this)->at(key); }
};

struct ExperimentConfig {
  std::string suite;
  std::string manifold;  // empty: suite default
  double t = 0.5;
  double h = 1e-3;
  std::size_t paths = 200000;
  std::uint64_t seed = 1;
  std::string rho = "one";
  std::string rho_alt = "linear";
  std::string lambda = "linear";
  std::string function;  // empty: manifold default
  std::string form;
  std::string form2;
  std::optional<std::vector<double>> x0;
  bool richardson = false;
  int samples = 4;        // paths for the path-by-path suites
  double fd_eps = 1e-4;
  Tolerances tol;
  std::set<std::string> overridden;  // tolerance keys set by the file
};

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> k{
      "suite", "manifold", "t",    "h",    "paths",      "seed",    "rho",     "rho_alt",
      "lambda", "function", "form", "form2", "x0",       "richardson", "samples", "fd_eps",
      "tolerances"};
  return k;
}

namespace detail {

template <class T>
T get_as(const nlohmann::json& j, const std::string& key, const char* type) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' must be " + type + ", got " + j.dump());
  }
}

}  // namespace detail

/// Range and name checks that need no geometry.
inline void check_basic(const ExperimentConfig& c) {
  require_one_of("suite", c.suite, suite_names());
  if (!c.manifold.empty()) require_one_of("manifold", c.manifold, manifold_names());
  if (!(c.t > 0 && std::isfinite(c.t))) throw ConfigError("t must be positive");
  if (!(c.h > 0 && std::isfinite(c.h))) throw ConfigError("h must be positive");
  double k = c.t / c.h;
  if (std::abs(k - std::llround(k)) > 1e-9 * std::max(1.0, k))
    throw ConfigError("t = " + std::to_string(c.t) + " is not an integer multiple of h = " +
                      std::to_string(c.h));
  if (c.paths < 2) throw ConfigError("paths must be at least 2");
  if (c.samples < 1) throw ConfigError("samples must be at least 1");
  if (!(c.fd_eps > 0)) throw ConfigError("fd_eps must be positive");
  for (const auto& s : {c.rho, c.rho_alt, c.lambda}) {
    try {
      ScalarSchedule::named(s, c.t);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (ScalarSchedule::named(c.lambda, c.t).value(0.0) != 0.0)
    throw ConfigError("lambda schedule '" + c.lambda + "' must vanish at time 0");
  for (const auto& k2 : Tolerances::keys())
    if (!(c.tol.at(k2) > 0)) throw ConfigError("tolerance " + k2 + " must be positive");
  if (c.tol.ratio_min >= c.tol.ratio_max) throw ConfigError("ratio_min must be below ratio_max");
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    require_one_of("config key", it.key(), config_keys());
  if (!j.contains("suite")) throw ConfigError("config needs a 'suite' (valid: " + join(suite_names()) + ")");
  ExperimentConfig c;
  using detail::get_as;
  c.suite = get_as<std::string>(j["suite"], "suite", "a string");
  if (j.contains("manifold")) c.manifold = get_as<std::string>(j["manifold"], "manifold", "a string");
  if (j.contains("t")) c.t = get_as<double>(j["t"], "t", "a number");
  if (j.contains("h")) c.h = get_as<double>(j["h"], "h", "a number");
  if (j.contains("paths")) {
    if (!j["paths"].is_number_integer() || j["paths"].get<long long>() < 0)
      throw ConfigError("config key 'paths' must be a non-negative integer");
    c.paths = j["paths"].get<std::size_t>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("config key 'seed' must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  for (auto [key, field] : {std::pair{"rho", &c.rho}, std::pair{"rho_alt", &c.rho_alt},
                            std::pair{"lambda", &c.lambda}, std::pair{"function", &c.function},
                            std::pair{"form", &c.form}, std::pair{"form2", &c.form2}})
    if (j.contains(key)) *field = get_as<std::string>(j[key], key, "a string");
  if (j.contains("x0")) c.x0 = get_as<std::vector<double>>(j["x0"], "x0", "an array of numbers");
  if (j.contains("richardson")) c.richardson = get_as<bool>(j["richardson"], "richardson", "a boolean");
  if (j.contains("samples")) c.samples = get_as<int>(j["samples"], "samples", "an integer");
  if (j.contains("fd_eps")) c.fd_eps = get_as<double>(j["fd_eps"], "fd_eps", "a number");
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    if (!t.is_object()) throw ConfigError("config key 'tolerances' must be an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      require_one_of("tolerance", it.key(), Tolerances::keys());
      c.tol.at(it.key()) = get_as<double>(it.value(), "tolerances." + it.key(), "a number");
      c.overridden.insert(it.key());
    }
  }
  check_basic(c);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

/// Resolved settings as JSON (keys sorted by nlohmann's std::map).
inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["suite"] = c.suite;
  j["manifold"] = c.manifold;
  j["t"] = c.t;
  j["h"] = c.h;
  j["paths"] = c.paths;
  j["seed"] = c.seed;
  j["rho"] = c.rho;
  j["rho_alt"] = c.rho_alt;
  j["lambda"] = c.lambda;
  j["function"] = c.function;
  j["form"] = c.form;
  j["form2"] = c.form2;
  if (c.x0) j["x0"] = *c.x0;
  j["richardson"] = c.richardson;
  j["samples"] = c.samples;
  j["fd_eps"] = c.fd_eps;
  nlohmann::json t;
  for (const auto& k : Tolerances::keys()) t[k] = c.tol.at(k);
  j["tolerances"] = t;
  return j;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t digest(const ExperimentConfig& c) { return fnv1a64(to_json(c).dump()); }

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace pathforms
