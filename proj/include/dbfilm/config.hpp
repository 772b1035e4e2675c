#ifndef DBFILM_CONFIG_HPP
#define DBFILM_CONFIG_HPP

// Flat key = value run configuration, experiment presets, and construction of
// the initial network.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dbfilm/anisotropy.hpp"
#include "dbfilm/errors.hpp"
#include "dbfilm/evolution.hpp"
#include "dbfilm/geometry.hpp"
#include "dbfilm/scheme.hpp"

namespace dbfilm {

struct CurveAnisotropyConfig {
  std::string kind = "isotropic";  // isotropic | kfold
  int k = 2;
  double beta = 0.0;
};

struct RunConfig {
  std::string preset;
  std::string shape = "half-ellipse";  // half-ellipse | flower
  double a = 2.0;
  double b = 1.0;
  double center = 4.0;
  std::string snapshot;  // initial state from a snapshot CSV instead of a shape
  std::array<int, 3> N{128, 128, 128};
  StepperConfig stepper;
  std::array<std::optional<double>, 3> K{};
  std::array<CurveAnisotropyConfig, 3> anisotropy{};
  MaterialParams params;
  double t_max = 1.0;
  long snapshot_every = 0;
  double delta_pinch = 0.0;
  int eq_window = 0;
  double eq_eps = 1e-9;
  bool stop_on_pinch = false;

  AnisotropySpec anisotropy_spec() const {
    AnisotropySpec s;
    for (int j = 0; j < 3; ++j) {
      const auto& c = anisotropy[j];
      CurveAnisotropy a = c.kind == "kfold" ? CurveAnisotropy::kfold(c.k, c.beta) : CurveAnisotropy::isotropic();
      if (K[j]) a = a.with_stabilizer(*K[j]);
      s.curves[j] = a;
    }
    return s;
  }

  RunOptions run_options() const {
    RunOptions o;
    o.t_max = t_max;
    o.snapshot_every = snapshot_every;
    o.delta_pinch = delta_pinch;
    o.eq_window = eq_window;
    o.eq_eps = eq_eps;
    o.stop_on_first_pinch = stop_on_pinch;
    return o;
  }

  void set_all_anisotropy(const std::string& kind, int k, double beta) {
    for (auto& c : anisotropy) c = {kind, k, beta};
  }
  void set_sigma(double s) { params.sigma1 = params.sigma2 = s; }
  void set_N(int n) { N = {n, n, n}; }
};

// ---------------------------------------------------------------------------
// Initial curves

/// Node k of each curve at rho = k/N. Contacts are snapped to y = 0 and the
/// three end nodes are set to the F1F2 end point exactly.
inline NetworkState build_initial(const RunConfig& c) {
  if (!c.snapshot.empty()) {
    std::ifstream in(c.snapshot);
    if (!in) throw ContractViolation("cannot open snapshot '" + c.snapshot + "'");
    return read_snapshot(in);
  }
  using std::numbers::pi;
  std::array<std::vector<Vec2>, 3> curves;
  for (int j = 0; j < 3; ++j) {
    const int n = c.N[j];
    for (int k = 0; k <= n; ++k) {
      const double r = static_cast<double>(k) / n;
      Vec2 p;
      if (c.shape == "half-ellipse") {
        if (j == 0) p = {c.center + c.a * std::cos(pi - pi * r / 2), c.b * std::sin(pi - pi * r / 2)};
        if (j == 1) p = {c.center + c.a * std::cos(pi * r / 2), c.b * std::sin(pi * r / 2)};
        if (j == 2) p = {c.center, c.b * r};
      } else if (c.shape == "flower") {
        if (j == 0) {
          const double rad = 2.0 + std::cos(6 * pi - 3 * pi * r);
          p = {rad * std::cos(pi - pi * r / 2), rad * std::sin(pi - pi * r / 2)};
        }
        if (j == 1) {
          const double rad = 2.0 + std::cos(3 * pi * r);
          p = {rad * std::cos(pi * r / 2), rad * std::sin(pi * r / 2)};
        }
        if (j == 2) p = {0.0, r};
      } else {
        throw ContractViolation("unknown initial shape '" + c.shape + "'");
      }
      curves[j].push_back(p);
    }
    curves[j].front().y() = 0.0;
  }
  const Vec2 P = curves[2].back();
  for (auto& cv : curves) cv.back() = P;
  return NetworkState(std::move(curves));
}

// ---------------------------------------------------------------------------
// Presets

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"example1",        "example2-meshq",  "example3-conservation",
                                              "example4-eq-a",   "example4-eq-b",   "example4-eq-c",
                                              "example5-pinch"};
  return names;
}

inline RunConfig preset(const std::string& name) {
  RunConfig c;
  c.preset = name;
  c.params.eta = {100.0, 100.0, 100.0};
  if (name == "example1" || name == "example2-meshq" || name == "example3-conservation") {
    c.shape = "half-ellipse";
    c.a = 2.0;
    c.b = 1.0;
    c.center = 4.0;
    c.set_all_anisotropy("kfold", 2, 1.0 / 6.0);
    if (name == "example1") {
      c.set_N(32);
      c.stepper.dt = 1.0 / 40.0;
      c.set_sigma(-0.7);
      c.t_max = 1.0;
    } else if (name == "example2-meshq") {
      c.set_N(128);
      c.stepper.dt = 1.0 / 40.0;
      c.set_sigma(-0.7);
      c.t_max = 10.0;
    } else {
      c.set_N(256);
      c.stepper.dt = 1.0 / 40.0;
      c.set_sigma(-0.6);
      c.t_max = 4.0;
    }
    return c;
  }
  if (name == "example4-eq-a" || name == "example4-eq-b" || name == "example4-eq-c") {
    if (name == "example4-eq-a") {
      c.shape = "half-ellipse";
      c.a = 2.0;
      c.b = 2.0;
      c.center = 0.0;
    } else if (name == "example4-eq-b") {
      c.shape = "half-ellipse";
      c.a = 3.0;
      c.b = 1.5;
      c.center = 0.0;
    } else {
      c.shape = "flower";
      c.center = 0.0;
    }
    c.set_N(128);
    c.stepper.dt = 1.0 / 50.0;
    c.set_sigma(-0.8);
    c.set_all_anisotropy("kfold", 2, 0.25);
    c.t_max = 60.0;
    c.eq_window = 10;
    c.eq_eps = 1e-9;
    return c;
  }
  if (name == "example5-pinch") {
    c.shape = "half-ellipse";
    c.a = 80.0;
    c.b = 0.1;
    c.center = 0.0;
    c.set_N(200);
    c.stepper.dt = 1.0 / 200.0;
    c.set_sigma(0.8);
    c.set_all_anisotropy("kfold", 4, 1.0 / 15.0);
    c.t_max = 20.0;
    return c;
  }
  throw UnknownPresetError(name);
}

// ---------------------------------------------------------------------------
// Text form

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> to_double(const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) return std::nullopt;
    return d;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

/// Also accepts fractions such as 1/6.
inline std::optional<double> to_fraction_or_double(const std::string& v) {
  const auto slash = v.find('/');
  if (slash != std::string::npos) {
    try {
      std::size_t p1 = 0, p2 = 0;
      const std::string a = v.substr(0, slash), b = v.substr(slash + 1);
      const double x = std::stod(a, &p1), y = std::stod(b, &p2);
      if (p1 != a.size() || p2 != b.size() || y == 0.0) return std::nullopt;
      return x / y;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return to_double(v);
}

inline std::optional<long> to_long(const std::string& v) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) return std::nullopt;
    return d;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::optional<bool> to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  return std::nullopt;
}

}  // namespace detail

/// Reads `key = value` lines; `[section]` headers prefix the following keys
/// with `section.`. `#` starts a comment. A `preset` key loads that preset
/// first, then the remaining keys override it. Every bad line or field is
/// reported in one ConfigError.
inline RunConfig parse_config(std::istream& is) {
  std::vector<std::string> problems;
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back("line " + std::to_string(lineno) + ": malformed section header");
        continue;
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    kv.emplace_back(key, val);
  }

  RunConfig c;
  for (const auto& [k, v] : kv) {
    if (k != "preset") continue;
    try {
      c = preset(v);
    } catch (const UnknownPresetError& e) {
      problems.push_back("preset: " + std::string(e.what()));
    }
  }

  auto num = [&](const std::string& k, const std::string& v, auto& field) {
    const auto d = detail::to_fraction_or_double(v);
    if (!d)
      problems.push_back(k + ": not a number '" + v + "'");
    else
      field = *d;
  };
  auto integer = [&](const std::string& k, const std::string& v, auto& field) {
    const auto d = detail::to_long(v);
    if (!d)
      problems.push_back(k + ": not an integer '" + v + "'");
    else
      field = static_cast<std::remove_reference_t<decltype(field)>>(*d);
  };

  for (const auto& [k, v] : kv) {
    if (k == "preset") continue;
    if (k == "initial.shape") {
      c.shape = v;
    } else if (k == "initial.a") {
      num(k, v, c.a);
    } else if (k == "initial.b") {
      num(k, v, c.b);
    } else if (k == "initial.center") {
      num(k, v, c.center);
    } else if (k == "initial.snapshot") {
      c.snapshot = v;
    } else if (k == "numerics.dt") {
      num(k, v, c.stepper.dt);
    } else if (k == "numerics.N1" || k == "numerics.N2" || k == "numerics.N3") {
      integer(k, v, c.N[k.back() - '1']);
    } else if (k == "numerics.N") {
      int n = 0;
      integer(k, v, n);
      c.set_N(n);
    } else if (k == "numerics.scheme") {
      if (v == "sp")
        c.stepper.scheme = Scheme::SP;
      else if (v == "es")
        c.stepper.scheme = Scheme::ES;
      else
        problems.push_back(k + ": expected sp or es, got '" + v + "'");
    } else if (k == "numerics.picard_tol") {
      num(k, v, c.stepper.picard_tol);
    } else if (k == "numerics.picard_max_iters") {
      integer(k, v, c.stepper.picard_max_iters);
    } else if (k == "numerics.K1" || k == "numerics.K2" || k == "numerics.K3") {
      double d = 0.0;
      const auto before = problems.size();
      num(k, v, d);
      if (problems.size() == before) c.K[k.back() - '1'] = d;
    } else if (k.rfind("anisotropy.curve", 0) == 0 && k.size() > 18 && k[17] == '.' && k[16] >= '1' &&
               k[16] <= '3') {
      auto& a = c.anisotropy[k[16] - '1'];
      const std::string f = k.substr(18);
      if (f == "kind")
        a.kind = v;
      else if (f == "k")
        integer(k, v, a.k);
      else if (f == "beta")
        num(k, v, a.beta);
      else
        problems.push_back(k + ": unknown key");
    } else if (k == "params.sigma1") {
      num(k, v, c.params.sigma1);
    } else if (k == "params.sigma2") {
      num(k, v, c.params.sigma2);
    } else if (k == "params.eta1" || k == "params.eta2" || k == "params.eta3") {
      num(k, v, c.params.eta[k.back() - '1']);
    } else if (k == "run.t_max") {
      num(k, v, c.t_max);
    } else if (k == "run.snapshot_every") {
      integer(k, v, c.snapshot_every);
    } else if (k == "run.delta_pinch") {
      num(k, v, c.delta_pinch);
    } else if (k == "run.eq_window") {
      integer(k, v, c.eq_window);
    } else if (k == "run.eq_eps") {
      num(k, v, c.eq_eps);
    } else if (k == "run.stop_on_pinch") {
      const auto b = detail::to_bool(v);
      if (!b)
        problems.push_back(k + ": expected true or false, got '" + v + "'");
      else
        c.stop_on_pinch = *b;
    } else {
      problems.push_back(k + ": unknown key");
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  return parse_config(in);
}

/// Every field in flat form, sorted by key; parses back to the same config.
inline std::string serialize_config(const RunConfig& c) {
  std::map<std::string, std::string> kv;
  auto d = [](double v) { return format_double(v); };
  if (!c.preset.empty()) kv["preset"] = c.preset;
  kv["initial.shape"] = c.shape;
  kv["initial.a"] = d(c.a);
  kv["initial.b"] = d(c.b);
  kv["initial.center"] = d(c.center);
  if (!c.snapshot.empty()) kv["initial.snapshot"] = c.snapshot;
  for (int j = 0; j < 3; ++j) {
    const std::string s = std::to_string(j + 1);
    kv["numerics.N" + s] = std::to_string(c.N[j]);
    if (c.K[j]) kv["numerics.K" + s] = d(*c.K[j]);
    kv["anisotropy.curve" + s + ".kind"] = c.anisotropy[j].kind;
    kv["anisotropy.curve" + s + ".k"] = std::to_string(c.anisotropy[j].k);
    kv["anisotropy.curve" + s + ".beta"] = d(c.anisotropy[j].beta);
    kv["params.eta" + s] = d(c.params.eta[j]);
  }
  kv["numerics.dt"] = d(c.stepper.dt);
  kv["numerics.scheme"] = scheme_name(c.stepper.scheme);
  kv["numerics.picard_tol"] = d(c.stepper.picard_tol);
  kv["numerics.picard_max_iters"] = std::to_string(c.stepper.picard_max_iters);
  kv["params.sigma1"] = d(c.params.sigma1);
  kv["params.sigma2"] = d(c.params.sigma2);
  kv["run.t_max"] = d(c.t_max);
  kv["run.snapshot_every"] = std::to_string(c.snapshot_every);
  kv["run.delta_pinch"] = d(c.delta_pinch);
  kv["run.eq_window"] = std::to_string(c.eq_window);
  kv["run.eq_eps"] = d(c.eq_eps);
  kv["run.stop_on_pinch"] = c.stop_on_pinch ? "true" : "false";
  std::ostringstream os;
  // the preset line must come first so later keys override it
  if (kv.count("preset")) os << "preset = " << kv["preset"] << '\n';
  for (const auto& [k, v] : kv)
    if (k != "preset") os << k << " = " << v << '\n';
  return os.str();
}

/// Range checks on every field; all problems are collected.
inline void validate_config(const RunConfig& c) {
  std::vector<std::string> p;
  if (c.snapshot.empty()) {
    if (c.shape != "half-ellipse" && c.shape != "flower")
      p.push_back("initial.shape: expected half-ellipse or flower, got '" + c.shape + "'");
    if (!(c.a > 0.0)) p.push_back("initial.a: must be positive");
    if (!(c.b > 0.0)) p.push_back("initial.b: must be positive");
    for (int j = 0; j < 3; ++j)
      if (c.N[j] < 2) p.push_back("numerics.N" + std::to_string(j + 1) + ": must be at least 2");
  }
  if (!(c.stepper.dt > 0.0)) p.push_back("numerics.dt: must be positive");
  if (!(c.stepper.picard_tol > 0.0)) p.push_back("numerics.picard_tol: must be positive");
  if (c.stepper.picard_max_iters < 1) p.push_back("numerics.picard_max_iters: must be at least 1");
  for (int j = 0; j < 3; ++j) {
    const std::string s = std::to_string(j + 1);
    if (c.K[j] && !(*c.K[j] >= 0.0)) p.push_back("numerics.K" + s + ": must be non-negative");
    const auto& a = c.anisotropy[j];
    if (a.kind != "isotropic" && a.kind != "kfold")
      p.push_back("anisotropy.curve" + s + ".kind: expected isotropic or kfold, got '" + a.kind + "'");
    if (a.kind == "kfold") {
      if (a.k < 2 || a.k % 2 != 0) p.push_back("anisotropy.curve" + s + ".k: must be an even integer >= 2");
      if (!(a.beta >= 0.0 && a.beta < 1.0)) p.push_back("anisotropy.curve" + s + ".beta: must lie in [0, 1)");
    }
    if (!(c.params.eta[j] > 0.0) || !std::isfinite(c.params.eta[j]))
      p.push_back("params.eta" + s + ": must be positive");
  }
  if (!std::isfinite(c.params.sigma1)) p.push_back("params.sigma1: must be finite");
  if (!std::isfinite(c.params.sigma2)) p.push_back("params.sigma2: must be finite");
  if (!(c.t_max >= 0.0)) p.push_back("run.t_max: must be non-negative");
  if (c.snapshot_every < 0) p.push_back("run.snapshot_every: must be non-negative");
  if (!(c.delta_pinch >= 0.0)) p.push_back("run.delta_pinch: must be non-negative (0 selects the default)");
  if (c.eq_window != 0 && c.eq_window < 2) p.push_back("run.eq_window: must be 0 or at least 2");
  if (!(c.eq_eps > 0.0)) p.push_back("run.eq_eps: must be positive");
  if (!p.empty()) throw ConfigError(p);
}

}  // namespace dbfilm

#endif
