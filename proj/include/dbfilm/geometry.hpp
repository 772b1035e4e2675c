#ifndef DBFILM_GEOMETRY_HPP
#define DBFILM_GEOMETRY_HPP

// Polyline curve networks for the double-bubble film: three open curves that
// start on the substrate (y = 0) and meet at a shared triple junction.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "dbfilm/errors.hpp"

namespace dbfilm {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Counter-clockwise quarter turn: (a, b)^perp = (-b, a).
inline Vec2 perp(const Vec2& v) { return Vec2(-v.y(), v.x()); }

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

enum class CurveRole { F1V = 0, F2V = 1, F1F2 = 2 };

inline constexpr std::array<CurveRole, 3> kAllRoles{CurveRole::F1V, CurveRole::F2V, CurveRole::F1F2};

inline const char* role_name(CurveRole r) {
  switch (r) {
    case CurveRole::F1V: return "F1V";
    case CurveRole::F2V: return "F2V";
    case CurveRole::F1F2: return "F1F2";
  }
  return "?";
}

inline CurveRole role_from_name(std::string_view s) {
  if (s == "F1V") return CurveRole::F1V;
  if (s == "F2V") return CurveRole::F2V;
  if (s == "F1F2") return CurveRole::F1F2;
  throw ContractViolation("unknown curve role '" + std::string(s) + "'");
}

inline int role_index(CurveRole r) { return static_cast<int>(r); }

namespace detail {

inline void check_segments(std::span<const Vec2> nodes, const std::string& label) {
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    if (nodes[k] == nodes[k - 1]) throw DegenerateGeometryError(label, static_cast<int>(k));
  }
}

inline double polyline_length(std::span<const Vec2> nodes) {
  double len = 0.0;
  for (std::size_t k = 1; k < nodes.size(); ++k) len += (nodes[k] - nodes[k - 1]).norm();
  return len;
}

}  // namespace detail

/// One open interface. Node 0 sits on the substrate, node N is the junction.
class CurveState {
 public:
  CurveState(CurveRole role, std::vector<Vec2> nodes) : role_(role), nodes_(std::move(nodes)) {
    if (nodes_.size() < 3)
      throw ContractViolation(std::string("curve ") + role_name(role_) + " needs at least 3 nodes");
    if (nodes_.front().y() != 0.0)
      throw ContractViolation(std::string("contact node of curve ") + role_name(role_) + " is off the substrate");
    detail::check_segments(nodes_, role_name(role_));
  }

  CurveRole role() const noexcept { return role_; }
  const std::vector<Vec2>& nodes() const noexcept { return nodes_; }
  int segments() const noexcept { return static_cast<int>(nodes_.size()) - 1; }
  const Vec2& contact() const { return nodes_.front(); }
  const Vec2& end() const { return nodes_.back(); }
  double length() const { return detail::polyline_length(nodes_); }

  friend bool operator==(const CurveState& a, const CurveState& b) {
    return a.role_ == b.role_ && a.nodes_ == b.nodes_;
  }

 private:
  CurveRole role_;
  std::vector<Vec2> nodes_;
};

/// The double-bubble network. The junction point is stored once and shared by
/// all three curves, so the coincidence condition holds by construction.
class NetworkState {
 public:
  /// Each input curve lists its nodes contact -> junction; the three last
  /// nodes must coincide exactly.
  NetworkState(std::array<std::vector<Vec2>, 3> curves, double time = 0.0) : time_(time) {
    const Vec2 p = curves[0].back();
    for (int j = 0; j < 3; ++j) {
      if (curves[j].size() < 3)
        throw ContractViolation(std::string("curve ") + role_name(kAllRoles[j]) + " needs at least 3 nodes");
      if (curves[j].back() != p) throw ContractViolation("junction nodes of the three curves do not coincide");
    }
    junction_ = p;
    for (int j = 0; j < 3; ++j) {
      curves[j].pop_back();
      bodies_[j] = std::move(curves[j]);
    }
    validate();
  }

  NetworkState(const CurveState& f1v, const CurveState& f2v, const CurveState& f1f2, double time = 0.0)
      : NetworkState(std::array<std::vector<Vec2>, 3>{f1v.nodes(), f2v.nodes(), f1f2.nodes()}, time) {
    if (f1v.role() != CurveRole::F1V || f2v.role() != CurveRole::F2V || f1f2.role() != CurveRole::F1F2)
      throw ContractViolation("network curves given in the wrong role order");
  }

  double time() const noexcept { return time_; }
  const Vec2& junction() const noexcept { return junction_; }
  const Vec2& contact(CurveRole r) const { return bodies_[role_index(r)].front(); }
  int segments(CurveRole r) const { return static_cast<int>(bodies_[role_index(r)].size()); }

  /// Nodes of one curve including the shared junction as the last entry.
  std::vector<Vec2> nodes(CurveRole r) const {
    std::vector<Vec2> out = bodies_[role_index(r)];
    out.push_back(junction_);
    return out;
  }
  CurveState curve(CurveRole r) const { return CurveState(r, nodes(r)); }

  double xA() const { return contact(CurveRole::F1V).x(); }
  double xB() const { return contact(CurveRole::F2V).x(); }
  double xC() const { return contact(CurveRole::F1F2).x(); }

  /// A strictly left of C strictly left of B; required of initial data only.
  bool contacts_ordered() const { return xA() < xC() && xC() < xB(); }

  friend bool operator==(const NetworkState& a, const NetworkState& b) {
    return a.time_ == b.time_ && a.junction_ == b.junction_ && a.bodies_ == b.bodies_;
  }

 private:
  void validate() const {
    for (int j = 0; j < 3; ++j) {
      if (bodies_[j].front().y() != 0.0)
        throw ContractViolation(std::string("contact node of curve ") + role_name(kAllRoles[j]) +
                                " is off the substrate");
      std::vector<Vec2> full = bodies_[j];
      full.push_back(junction_);
      detail::check_segments(full, role_name(kAllRoles[j]));
    }
  }

  std::array<std::vector<Vec2>, 3> bodies_;
  Vec2 junction_;
  double time_ = 0.0;
};

struct SegmentFrame {
  double length;
  Vec2 tangent;
  Vec2 normal;
};

/// Frames of the segments of a polyline; normal = -tangent^perp.
inline std::vector<SegmentFrame> segment_frames(std::span<const Vec2> nodes, const std::string& label = "curve") {
  std::vector<SegmentFrame> frames;
  frames.reserve(nodes.size() ? nodes.size() - 1 : 0);
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const Vec2 h = nodes[k] - nodes[k - 1];
    const double len = h.norm();
    if (!(len > 0.0)) throw DegenerateGeometryError(label, static_cast<int>(k));
    const Vec2 t = h / len;
    frames.push_back({len, t, -perp(t)});
  }
  return frames;
}

inline std::vector<SegmentFrame> segment_frames(const CurveState& curve) {
  return segment_frames(curve.nodes(), role_name(curve.role()));
}

namespace detail {

template <typename T>
double nodal_product(const T& a, const T& b) {
  if constexpr (std::is_arithmetic_v<T>) {
    return a * b;
  } else {
    return a.dot(b);
  }
}

}  // namespace detail

/// Mass-lumped (trapezoidal) inner product of two nodal fields over a curve.
template <typename T>
double lumped_inner(const CurveState& curve, std::span<const T> f, std::span<const T> g) {
  const auto& x = curve.nodes();
  if (f.size() != x.size() || g.size() != x.size())
    throw ContractViolation("lumped_inner: field length does not match node count");
  double sum = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    const double h = (x[k] - x[k - 1]).norm();
    sum += 0.5 * h * (detail::nodal_product(f[k], g[k]) + detail::nodal_product(f[k - 1], g[k - 1]));
  }
  return sum;
}

inline double lumped_inner(const CurveState& curve, const std::vector<double>& f, const std::vector<double>& g) {
  return lumped_inner<double>(curve, std::span<const double>(f), std::span<const double>(g));
}

inline double lumped_inner(const CurveState& curve, const std::vector<Vec2>& f, const std::vector<Vec2>& g) {
  return lumped_inner<Vec2>(curve, std::span<const Vec2>(f), std::span<const Vec2>(g));
}

/// Trapezoidal integral of y dx along a polyline.
inline double trapezoid_y_dx(std::span<const Vec2> nodes) {
  double s = 0.0;
  for (std::size_t k = 1; k < nodes.size(); ++k)
    s += 0.5 * (nodes[k].x() - nodes[k - 1].x()) * (nodes[k].y() + nodes[k - 1].y());
  return s;
}

/// Enclosed area of the network, evaluated verbatim as (F2V sum) - (F1V sum).
/// With curves oriented contact -> junction this is minus the geometric area.
inline double discrete_area(const NetworkState& net) {
  const auto g2 = net.nodes(CurveRole::F2V);
  const auto g1 = net.nodes(CurveRole::F1V);
  return trapezoid_y_dx(g2) - trapezoid_y_dx(g1);
}

inline double geometric_area(const NetworkState& net) { return std::abs(discrete_area(net)); }

/// max/min segment length of one polyline.
inline double mesh_ratio(std::span<const Vec2> nodes, const std::string& label = "curve") {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const double h = (nodes[k] - nodes[k - 1]).norm();
    if (!(h > 0.0)) throw DegenerateGeometryError(label, static_cast<int>(k));
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  }
  return hi / lo;
}

inline double mesh_ratio(const NetworkState& net) {
  double r = 0.0;
  for (CurveRole role : kAllRoles) r = std::max(r, mesh_ratio(net.nodes(role), role_name(role)));
  return r;
}

/// Redistributes nodes at equal arc-length fractions along a polyline. The two
/// end nodes are copied exactly.
inline std::vector<Vec2> resample_polyline(std::span<const Vec2> nodes, int n_segments) {
  if (n_segments < 2) throw ContractViolation("resample: need at least 2 segments");
  if (nodes.size() < 2) throw ContractViolation("resample: need at least 2 input nodes");
  std::vector<double> cum(nodes.size(), 0.0);
  for (std::size_t k = 1; k < nodes.size(); ++k) cum[k] = cum[k - 1] + (nodes[k] - nodes[k - 1]).norm();
  const double total = cum.back();
  if (!(total > 0.0)) throw DegenerateGeometryError("resample", 1);

  std::vector<Vec2> out;
  out.reserve(n_segments + 1);
  out.push_back(nodes.front());
  std::size_t seg = 1;
  for (int i = 1; i < n_segments; ++i) {
    const double s = total * static_cast<double>(i) / n_segments;
    while (seg + 1 < nodes.size() && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double a = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
    out.push_back((1.0 - a) * nodes[seg - 1] + a * nodes[seg]);
  }
  out.push_back(nodes.back());
  return out;
}

inline CurveState resample(const CurveState& curve, int n_segments) {
  return CurveState(curve.role(), resample_polyline(curve.nodes(), n_segments));
}

// ---------------------------------------------------------------------------
// Snapshot CSV: header `curve,node,x,y`, junction repeated per curve.

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_snapshot_rows(std::ostream& os, const char* label, std::span<const Vec2> nodes) {
  for (std::size_t k = 0; k < nodes.size(); ++k)
    os << label << ',' << k << ',' << format_double(nodes[k].x()) << ',' << format_double(nodes[k].y()) << '\n';
}

inline void write_snapshot(std::ostream& os, const NetworkState& net) {
  os << "curve,node,x,y\n";
  for (CurveRole r : kAllRoles) write_snapshot_rows(os, role_name(r), net.nodes(r));
}

/// Parses a snapshot written by write_snapshot back into a network.
inline NetworkState read_snapshot(std::istream& is, double time = 0.0) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("curve,node,x,y", 0) != 0)
    throw ContractViolation("snapshot: missing header 'curve,node,x,y'");
  std::map<CurveRole, std::map<int, Vec2>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    std::string role, node, xs, ys;
    if (!std::getline(ls, role, ',') || !std::getline(ls, node, ',') || !std::getline(ls, xs, ',') ||
        !std::getline(ls, ys))
      throw ContractViolation("snapshot: malformed line " + std::to_string(lineno));
    try {
      rows[role_from_name(role)][std::stoi(node)] = Vec2(std::stod(xs), std::stod(ys));
    } catch (const std::invalid_argument&) {
      throw ContractViolation("snapshot: malformed number on line " + std::to_string(lineno));
    }
  }
  std::array<std::vector<Vec2>, 3> curves;
  for (CurveRole r : kAllRoles) {
    const auto& m = rows[r];
    int expect = 0;
    for (const auto& [k, p] : m) {
      if (k != expect++) throw ContractViolation(std::string("snapshot: node indices of ") + role_name(r) +
                                                 " are not contiguous");
      curves[role_index(r)].push_back(p);
    }
  }
  return NetworkState(std::move(curves), time);
}

}  // namespace dbfilm

#endif
