#ifndef DBFILM_STUDY_HPP
#define DBFILM_STUDY_HPP

// Convergence-order tables and SP/ES comparison runs.

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dbfilm/analysis.hpp"
#include "dbfilm/config.hpp"
#include "dbfilm/evolution.hpp"

namespace dbfilm {

struct ErrorRow {
  double h;
  double dt;
  double error;
  double order;  // NaN on the first row
};

struct ErrorTable {
  double t_eval = 0.0;
  std::vector<ErrorRow> rows;
  /// Set when a level failed; rows holds what was computed before it.
  std::optional<std::string> failure;

  void write_csv(std::ostream& os) const {
    os << "h,dt,error,order\n";
    for (const auto& r : rows)
      os << format_double(r.h) << ',' << format_double(r.dt) << ',' << format_double(r.error) << ','
         << format_double(r.order) << '\n';
  }
};

/// Linear-in-time interpolation between two states with the same node counts.
inline NetworkState interpolate(const NetworkState& a, const NetworkState& b, double w) {
  std::array<std::vector<Vec2>, 3> curves;
  for (CurveRole r : kAllRoles) {
    const auto na = a.nodes(r), nb = b.nodes(r);
    if (na.size() != nb.size()) throw ContractViolation("interpolate: node counts differ");
    auto& c = curves[role_index(r)];
    c.reserve(na.size());
    for (std::size_t k = 0; k < na.size(); ++k) c.push_back((1.0 - w) * na[k] + w * nb[k]);
  }
  return NetworkState(std::move(curves), (1.0 - w) * a.time() + w * b.time());
}

/// Runs the network in `c` to max(t_evals) and returns the interpolated state
/// at every t_eval.
inline std::vector<NetworkState> states_at(const RunConfig& c, const std::vector<double>& t_evals) {
  double t_end = 0.0;
  for (double t : t_evals) t_end = std::max(t_end, t);
  const double dt = c.stepper.dt;
  std::vector<std::optional<NetworkState>> out(t_evals.size());
  std::optional<NetworkState> prev;
  long prev_step = -1;
  RunOptions o = c.run_options();
  o.t_max = t_end;
  o.eq_window = 0;
  o.surgery = false;
  o.snapshot_every = 0;
  o.observer = [&](long step, double, const std::vector<Island>& islands) {
    const auto& net = std::get<NetworkState>(islands.front());
    for (std::size_t i = 0; i < t_evals.size(); ++i) {
      if (out[i]) continue;
      const double s = t_evals[i] / dt;  // fractional step index
      if (std::abs(s - static_cast<double>(step)) < 1e-9) {
        out[i] = net;
      } else if (prev && static_cast<double>(prev_step) < s && s < static_cast<double>(step)) {
        out[i] = interpolate(*prev, net, s - static_cast<double>(prev_step));
      }
    }
    prev = net;
    prev_step = step;
  };
  run(Island(build_initial(c)), c.anisotropy_spec(), c.params, c.stepper, o);
  std::vector<NetworkState> res;
  for (auto& s : out) {
    if (!s) throw ContractViolation("states_at: t_eval not reached");
    res.push_back(std::move(*s));
  }
  return res;
}

/// Runs `base` at levels + 1 resolutions (N, dt), (2N, dt/4), ... and fills
/// one table per t_eval with e_i = Md(level i, level i+1) and
/// order_i = log2(e_{i-1} / e_i).
inline std::vector<ErrorTable> convergence_study(const RunConfig& base, int levels, const std::vector<double>& t_evals) {
  if (levels < 1) throw ContractViolation("convergence_study: levels must be at least 1");
  if (t_evals.empty()) throw ContractViolation("convergence_study: no evaluation times");
  if (!base.snapshot.empty()) throw ContractViolation("convergence_study: needs a parametric initial shape");
  std::vector<ErrorTable> tables(t_evals.size());
  for (std::size_t i = 0; i < t_evals.size(); ++i) tables[i].t_eval = t_evals[i];

  std::vector<NetworkState> prev;
  RunConfig prev_cfg;
  for (int l = 0; l <= levels; ++l) {
    RunConfig c = base;
    for (auto& n : c.N) n <<= l;
    c.stepper.dt = base.stepper.dt / std::pow(4.0, l);
    std::vector<NetworkState> cur;
    try {
      cur = states_at(c, t_evals);
    } catch (const Error& e) {
      for (auto& t : tables) t.failure = "level " + std::to_string(l) + ": " + e.what();
      return tables;
    }
    if (l > 0) {
      for (std::size_t i = 0; i < t_evals.size(); ++i) {
        auto& rows = tables[i].rows;
        const double e = manifold_distance(prev[i], cur[i]);
        const double order = rows.empty() ? std::numeric_limits<double>::quiet_NaN() : std::log2(rows.back().error / e);
        rows.push_back({1.0 / prev_cfg.N[0], prev_cfg.stepper.dt, e, order});
      }
    }
    prev = std::move(cur);
    prev_cfg = c;
  }
  return tables;
}

struct SchemeComparison {
  RunHistory sp;
  RunHistory es;
  double sp_drift = 0.0;
  double es_drift = 0.0;
  double sp_energy_ratio = 1.0;
  double es_energy_ratio = 1.0;

  void write_summary(std::ostream& os) const {
    os << "scheme = sp\nmax_relative_area_drift = " << format_double(sp_drift)
       << "\nfinal_energy_ratio = " << format_double(sp_energy_ratio) << "\n\nscheme = es\nmax_relative_area_drift = "
       << format_double(es_drift) << "\nfinal_energy_ratio = " << format_double(es_energy_ratio) << '\n';
  }
};

/// The same configuration under both schemes.
inline SchemeComparison compare_schemes(const RunConfig& base, double t_max) {
  SchemeComparison out;
  for (Scheme s : {Scheme::SP, Scheme::ES}) {
    RunConfig c = base;
    c.stepper.scheme = s;
    RunOptions o = c.run_options();
    o.t_max = t_max;
    auto r = run(Island(build_initial(c)), c.anisotropy_spec(), c.params, c.stepper, o);
    const double drift = r.history.max_relative_area_drift();
    const double ratio = r.history.records.back().energy_ratio;
    if (s == Scheme::SP) {
      out.sp = std::move(r.history);
      out.sp_drift = drift;
      out.sp_energy_ratio = ratio;
    } else {
      out.es = std::move(r.history);
      out.es_drift = drift;
      out.es_energy_ratio = ratio;
    }
  }
  return out;
}

}  // namespace dbfilm

#endif
