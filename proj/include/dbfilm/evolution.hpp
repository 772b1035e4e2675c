#ifndef DBFILM_EVOLUTION_HPP
#define DBFILM_EVOLUTION_HPP

// Time marching over all live islands, history recording, pinch-off
// detection with topology surgery, and equilibrium detection.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "dbfilm/analysis.hpp"
#include "dbfilm/anisotropy.hpp"
#include "dbfilm/errors.hpp"
#include "dbfilm/geometry.hpp"
#include "dbfilm/island.hpp"
#include "dbfilm/scheme.hpp"

namespace dbfilm {

struct HistoryRecord {
  double t = 0.0;
  double area_signed = 0.0;
  double area_abs = 0.0;
  double energy = 0.0;
  double energy_ratio = 1.0;
  double mesh_ratio = 1.0;
  double xA = std::numeric_limits<double>::quiet_NaN();
  double xB = std::numeric_limits<double>::quiet_NaN();
  double xC = std::numeric_limits<double>::quiet_NaN();
  int picard_iters = 0;
  // not written to CSV
  double max_disp = std::numeric_limits<double>::quiet_NaN();
  double mean_segment = 0.0;
  bool surgery = false;
};

struct RunEvent {
  double t;
  std::string kind;  // pinch, surgery, dropped, equilibrium, energy_increase
  double x;
  double y;
  int island_id;
};

struct RunHistory {
  std::vector<HistoryRecord> records;
  std::vector<RunEvent> events;

  void write_csv(std::ostream& os) const {
    os << "t,area_signed,area_abs,energy,energy_ratio,mesh_ratio,xA,xB,xC,picard_iters\n";
    for (const auto& r : records)
      os << format_double(r.t) << ',' << format_double(r.area_signed) << ',' << format_double(r.area_abs) << ','
         << format_double(r.energy) << ',' << format_double(r.energy_ratio) << ',' << format_double(r.mesh_ratio)
         << ',' << format_double(r.xA) << ',' << format_double(r.xB) << ',' << format_double(r.xC) << ','
         << r.picard_iters << '\n';
  }

  void write_events_csv(std::ostream& os) const {
    os << "t,kind,x,y,island_id\n";
    for (const auto& e : events)
      os << format_double(e.t) << ',' << e.kind << ',' << format_double(e.x) << ',' << format_double(e.y) << ','
         << e.island_id << '\n';
  }

  /// Largest |A(t) - A(0)| / |A(0)| over the records.
  double max_relative_area_drift() const {
    if (records.empty()) return 0.0;
    const double a0 = records.front().area_signed;
    double m = 0.0;
    for (const auto& r : records) m = std::max(m, std::abs(r.area_signed - a0) / std::abs(a0));
    return m;
  }
};

// ---------------------------------------------------------------------------
// Pinch detection

struct PinchEvent {
  int curve = 0;  // role index for a network, 0 for a single curve, -1 at the junction
  int first = 0;  // pinched node range, inclusive
  int last = 0;
  int cut = 0;    // node that is snapped onto the substrate
  Vec2 location = Vec2::Zero();
  /// Junction events only: per-curve index of the farthest pinched node of
  /// the group attached to the junction (the segment count when none).
  std::array<int, 3> junction_cuts{};
};

namespace detail {

struct NodeGroup {
  int first, last;
};

/// Contiguous runs of interior nodes with y <= delta.
inline std::vector<NodeGroup> low_groups(const std::vector<Vec2>& nodes, double delta) {
  std::vector<NodeGroup> g;
  const int n = static_cast<int>(nodes.size()) - 1;
  for (int k = 1; k <= n - 1; ++k) {
    if (nodes[k].y() > delta) continue;
    if (!g.empty() && g.back().last == k - 1)
      g.back().last = k;
    else
      g.push_back({k, k});
  }
  return g;
}

inline int lowest_node(const std::vector<Vec2>& nodes, const NodeGroup& g) {
  int best = g.first;
  for (int k = g.first + 1; k <= g.last; ++k)
    if (nodes[k].y() < nodes[best].y()) best = k;
  return best;
}

}  // namespace detail

/// Interior nodes at or below delta, grouped into pinch sites. Runs attached
/// to a substrate contact are the film edge, not a pinch, and are skipped.
inline std::vector<PinchEvent> detect_pinch(const Island& island, double delta) {
  if (!(delta > 0.0)) throw ContractViolation("detect_pinch: delta must be positive");
  std::vector<PinchEvent> out;
  if (const auto* net = std::get_if<NetworkState>(&island)) {
    const bool junction = net->junction().y() <= delta;
    PinchEvent je;
    if (junction) {
      je.curve = -1;
      je.location = net->junction();
    }
    for (CurveRole r : kAllRoles) {
      const int j = role_index(r);
      const auto nodes = net->nodes(r);
      const int n = static_cast<int>(nodes.size()) - 1;
      je.junction_cuts[j] = n;
      for (const auto& g : detail::low_groups(nodes, delta)) {
        const bool at_contact = g.first == 1;
        const bool at_junction = g.last == n - 1;
        if (junction && at_junction) {
          je.junction_cuts[j] = g.first;
          continue;
        }
        if (at_contact) continue;
        const int cut = detail::lowest_node(nodes, g);
        out.push_back({j, g.first, g.last, cut, nodes[cut], {}});
      }
    }
    if (junction) out.insert(out.begin(), je);
    return out;
  }
  const auto& c = std::get<SingleCurve>(island);
  const auto& nodes = c.nodes();
  const int n = c.segments();
  for (const auto& g : detail::low_groups(nodes, delta)) {
    if (g.first == 1 || g.last == n - 1) continue;
    const int cut = detail::lowest_node(nodes, g);
    out.push_back({0, g.first, g.last, cut, nodes[cut], {}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Surgery

struct SurgeryOptions {
  double delta = 1e-3;
  double reference_segment = 0.0;  // target spacing; <= 0 uses the island's mean
  int min_nodes = 16;
};

struct SurgeryResult {
  std::vector<Island> islands;
  std::vector<Vec2> dropped;  // location of each discarded sliver or retired arc
};

namespace detail {

inline int resample_segments(const std::vector<Vec2>& nodes, double h, int min_nodes) {
  const double len = polyline_length(nodes);
  return std::max(min_nodes - 1, static_cast<int>(std::lround(len / h)));
}

inline std::vector<Vec2> slice(const std::vector<Vec2>& nodes, int a, int b) {
  return std::vector<Vec2>(nodes.begin() + a, nodes.begin() + b + 1);
}

/// Turns a cut piece into a single-curve island (left to right), or records
/// it as dropped when it has no height or span left.
inline void emit_piece(std::vector<Vec2> piece, CurveRole origin, int material, bool flipped_in, const SurgeryOptions& o,
                       double h, SurgeryResult& out) {
  piece.front().y() = 0.0;
  piece.back().y() = 0.0;
  double ymax = 0.0;
  for (const auto& p : piece) ymax = std::max(ymax, p.y());
  const Vec2 mid = 0.5 * (piece.front() + piece.back());
  if (ymax <= o.delta || piece.front().x() == piece.back().x()) {
    out.dropped.push_back(mid);
    return;
  }
  if (piece.size() < 3) throw SurgeryError("cut produced a curve with fewer than 3 nodes; delta_pinch too coarse");
  bool flipped = flipped_in;
  if (piece.front().x() > piece.back().x()) {
    std::reverse(piece.begin(), piece.end());
    flipped = !flipped;
  }
  auto nodes = resample_polyline(piece, resample_segments(piece, h, o.min_nodes));
  out.islands.emplace_back(SingleCurve(std::move(nodes), origin, material, flipped));
}

}  // namespace detail

/// Cuts an island at its pinch sites. Pieces that lose the junction become
/// single-curve islands of the material beneath them; the junction-attached
/// remainder stays a network. At a junction pinch the internal interface is
/// retired and each film/vapor curve becomes its own island. Every output
/// curve is resampled uniformly.
inline SurgeryResult split_at_pinch(const Island& island, const std::vector<PinchEvent>& events,
                                    const SurgeryOptions& o = {}) {
  if (events.empty()) throw ContractViolation("split_at_pinch: no pinch events");
  const double h = o.reference_segment > 0.0 ? o.reference_segment : mean_segment_length(island);
  SurgeryResult out;

  if (const auto* net = std::get_if<NetworkState>(&island)) {
    const bool junction = events.front().curve == -1;
    std::array<std::vector<int>, 3> cuts;
    for (const auto& e : events)
      if (e.curve >= 0) cuts[e.curve].push_back(e.cut);
    std::array<std::vector<Vec2>, 3> rest;
    for (CurveRole r : kAllRoles) {
      const int j = role_index(r);
      const auto nodes = net->nodes(r);
      auto c = cuts[j];
      std::sort(c.begin(), c.end());
      const int n = static_cast<int>(nodes.size()) - 1;
      const int end = junction ? events.front().junction_cuts[j] : n;
      int start = 0;
      const int material = r == CurveRole::F2V ? 2 : 1;
      for (int cut : c) {
        if (cut >= end) continue;
        if (r == CurveRole::F1F2) {
          out.dropped.push_back(nodes[cut]);
        } else {
          detail::emit_piece(detail::slice(nodes, start, cut), r, material, false, o, h, out);
        }
        start = cut;
      }
      if (junction) {
        if (r == CurveRole::F1F2)
          out.dropped.push_back(nodes[start]);
        else
          detail::emit_piece(detail::slice(nodes, start, std::max(end, start + 1)), r, material, false, o, h, out);
      } else {
        rest[j] = detail::slice(nodes, start, n);
        rest[j].front().y() = 0.0;
        if (rest[j].size() < 3)
          throw SurgeryError(std::string("cut left curve ") + role_name(r) + " with fewer than 3 nodes");
      }
    }
    if (!junction) {
      std::array<std::vector<Vec2>, 3> curves;
      for (int j = 0; j < 3; ++j) curves[j] = resample_polyline(rest[j], detail::resample_segments(rest[j], h, o.min_nodes));
      // each curve keeps its own copy of the junction; they are bit-identical
      out.islands.insert(out.islands.begin(), Island(NetworkState(std::move(curves), net->time())));
    }
    return out;
  }

  const auto& sc = std::get<SingleCurve>(island);
  const auto& nodes = sc.nodes();
  std::vector<int> c;
  for (const auto& e : events) c.push_back(e.cut);
  std::sort(c.begin(), c.end());
  int start = 0;
  for (int cut : c) {
    detail::emit_piece(detail::slice(nodes, start, cut), sc.origin(), sc.material(), sc.flipped(), o, h, out);
    start = cut;
  }
  detail::emit_piece(detail::slice(nodes, start, sc.segments()), sc.origin(), sc.material(), sc.flipped(), o, h, out);
  return out;
}

// ---------------------------------------------------------------------------
// Equilibrium

/// True iff over the last `window` records the relative energy change and the
/// per-step node displacement (relative to the mean segment) stay below eps.
inline bool detect_equilibrium(const RunHistory& history, int window, double eps) {
  if (window < 2) throw ContractViolation("detect_equilibrium: window must be at least 2");
  const auto& r = history.records;
  if (static_cast<int>(r.size()) < window + 1) return false;
  for (std::size_t i = r.size() - window; i < r.size(); ++i) {
    if (r[i].surgery) return false;
    const double de = std::abs(r[i].energy - r[i - 1].energy) / std::abs(r[i - 1].energy);
    if (!(de < eps)) return false;
    if (!(r[i].max_disp < eps * r[i].mean_segment)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Driver

struct Snapshot {
  long step;
  double t;
  std::vector<Island> islands;
  std::vector<int> ids;
};

struct RunOptions {
  double t_max = 1.0;
  long snapshot_every = 0;    // 0: initial and final state only, plus events
  double delta_pinch = 0.0;   // <= 0: 1e-3 times the initial maximum height
  int eq_window = 0;          // 0 disables equilibrium stopping
  double eq_eps = 1e-9;
  bool surgery = true;
  bool stop_on_first_pinch = false;
  /// Called after every accepted step (and once for the initial state).
  std::function<void(long step, double t, const std::vector<Island>&)> observer;
};

struct RunResult {
  RunHistory history;
  std::vector<Snapshot> snapshots;
  std::vector<Island> islands;
  std::vector<int> island_ids;
  bool equilibrium = false;
  long steps = 0;
};

inline double max_height(const Island& island) {
  double m = 0.0;
  if (const auto* net = std::get_if<NetworkState>(&island)) {
    for (CurveRole r : kAllRoles)
      for (const auto& p : net->nodes(r)) m = std::max(m, p.y());
  } else {
    for (const auto& p : std::get<SingleCurve>(island).nodes()) m = std::max(m, p.y());
  }
  return m;
}

namespace detail {

struct IslandStep {
  Island island;
  int picard_iters;
  double max_disp;
};

inline double max_displacement(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, (a[k] - b[k]).norm());
  return m;
}

inline IslandStep step_island(const Island& island, const AnisotropySpec& spec, const MaterialParams& params,
                              const StepperConfig& cfg, long step) {
  if (const auto* net = std::get_if<NetworkState>(&island)) {
    auto s = solve_step(*net, spec, params, cfg, step);
    double d = 0.0;
    for (CurveRole r : kAllRoles) d = std::max(d, max_displacement(net->nodes(r), s.network.nodes(r)));
    return {Island(std::move(s.network)), s.picard_iters, d};
  }
  const auto& c = std::get<SingleCurve>(island);
  const double sigma = island_sigma(c, params);
  const double eta = params.eta[role_index(c.origin())];
  auto s = solve_curve_step(c.nodes(), spec[c.origin()], c.flipped(), {eta, sigma}, {eta, -sigma}, cfg, step);
  const double d = max_displacement(c.nodes(), s.nodes);
  return {Island(SingleCurve(std::move(s.nodes), c.origin(), c.material(), c.flipped())), s.picard_iters, d};
}

inline HistoryRecord summarize(const std::vector<Island>& islands, const AnisotropySpec& spec,
                               const MaterialParams& params, double t, double e0) {
  HistoryRecord r;
  r.t = t;
  double segs = 0.0, len = 0.0;
  for (const auto& is : islands) {
    r.area_signed += discrete_area(is);
    r.energy += discrete_energy(is, spec, params);
    r.mesh_ratio = std::max(r.mesh_ratio, mesh_ratio(is));
    if (const auto* net = std::get_if<NetworkState>(&is)) {
      r.xA = net->xA();
      r.xB = net->xB();
      r.xC = net->xC();
      for (CurveRole c : kAllRoles) {
        len += polyline_length(net->nodes(c));
        segs += net->segments(c);
      }
    } else {
      const auto& c = std::get<SingleCurve>(is);
      len += polyline_length(c.nodes());
      segs += c.segments();
    }
  }
  r.area_abs = std::abs(r.area_signed);
  r.energy_ratio = e0 > 0.0 ? r.energy / e0 : 1.0;
  r.mean_segment = segs > 0 ? len / segs : 0.0;
  return r;
}

}  // namespace detail

/// Marches every live island from t = 0 to t_max with step cfg.dt.
inline RunResult run(const Island& initial, const AnisotropySpec& spec, const MaterialParams& params,
                     const StepperConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  params.validate();
  if (!(opt.t_max >= 0.0)) throw ContractViolation("run: t_max must be non-negative");
  RunResult res;
  res.islands = {initial};
  res.island_ids = {0};
  int next_id = 1;
  const double delta = opt.delta_pinch > 0.0 ? opt.delta_pinch : 1e-3 * max_height(initial);
  const double h_ref = mean_segment_length(initial);

  auto e0 = 0.0;
  for (const auto& is : res.islands) e0 += discrete_energy(is, spec, params);
  HistoryRecord first = detail::summarize(res.islands, spec, params, 0.0, e0);
  res.history.records.push_back(first);
  res.snapshots.push_back({0, 0.0, res.islands, res.island_ids});
  if (opt.observer) opt.observer(0, 0.0, res.islands);

  const long nsteps = static_cast<long>(std::ceil(opt.t_max / cfg.dt - 1e-9));
  for (long m = 1; m <= nsteps; ++m) {
    const double t = static_cast<double>(m) * cfg.dt;
    std::vector<Island> next;
    int iters = 0;
    double disp = 0.0;
    for (std::size_t i = 0; i < res.islands.size(); ++i) {
      try {
        auto s = detail::step_island(res.islands[i], spec, params, cfg, m);
        iters = std::max(iters, s.picard_iters);
        disp = std::max(disp, s.max_disp);
        next.push_back(std::move(s.island));
      } catch (const Error& e) {
        throw RunError(e, t, res.island_ids[i]);
      }
    }
    res.islands = std::move(next);

    bool surgery = false;
    bool stop = false;
    if (opt.surgery) {
      std::vector<Island> after;
      std::vector<int> ids;
      for (std::size_t i = 0; i < res.islands.size(); ++i) {
        const auto events = detect_pinch(res.islands[i], delta);
        if (events.empty()) {
          after.push_back(std::move(res.islands[i]));
          ids.push_back(res.island_ids[i]);
          continue;
        }
        for (const auto& e : events)
          res.history.events.push_back({t, "pinch", e.location.x(), e.location.y(), res.island_ids[i]});
        if (opt.stop_on_first_pinch) {
          stop = true;
          after.push_back(std::move(res.islands[i]));
          ids.push_back(res.island_ids[i]);
          continue;
        }
        SurgeryResult cut;
        try {
          cut = split_at_pinch(res.islands[i], events, {delta, h_ref, 16});
        } catch (const Error& e) {
          throw RunError(e, t, res.island_ids[i]);
        }
        surgery = true;
        for (const auto& p : cut.dropped) res.history.events.push_back({t, "dropped", p.x(), p.y(), res.island_ids[i]});
        for (auto& is : cut.islands) {
          const int id = next_id++;
          double x = 0.0;
          if (const auto* net = std::get_if<NetworkState>(&is))
            x = net->junction().x();
          else
            x = 0.5 * (std::get<SingleCurve>(is).x_left() + std::get<SingleCurve>(is).x_right());
          res.history.events.push_back({t, "surgery", x, 0.0, id});
          after.push_back(std::move(is));
          ids.push_back(id);
        }
      }
      res.islands = std::move(after);
      res.island_ids = std::move(ids);
    }

    HistoryRecord rec = detail::summarize(res.islands, spec, params, t, e0);
    rec.picard_iters = iters;
    rec.max_disp = disp;
    rec.surgery = surgery;
    const auto& prev = res.history.records.back();
    if (!surgery && rec.energy > prev.energy + 1e-12 * std::abs(prev.energy))
      res.history.events.push_back({t, "energy_increase", rec.energy - prev.energy, 0.0, -1});
    res.history.records.push_back(rec);
    res.steps = m;

    if (surgery || stop || (opt.snapshot_every > 0 && m % opt.snapshot_every == 0))
      res.snapshots.push_back({m, t, res.islands, res.island_ids});
    if (opt.observer) opt.observer(m, t, res.islands);
    if (stop) break;
    if (opt.eq_window > 0 && detect_equilibrium(res.history, opt.eq_window, opt.eq_eps)) {
      res.equilibrium = true;
      res.history.events.push_back({t, "equilibrium", 0.0, 0.0, -1});
      break;
    }
  }
  if (res.snapshots.back().step != res.steps)
    res.snapshots.push_back({res.steps, res.history.records.back().t, res.islands, res.island_ids});
  return res;
}

}  // namespace dbfilm

#endif
