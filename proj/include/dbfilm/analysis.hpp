#ifndef DBFILM_ANALYSIS_HPP
#define DBFILM_ANALYSIS_HPP

// Discrete free energy, film region polygons and the manifold distance
// (area of the symmetric difference of two regions).

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "dbfilm/anisotropy.hpp"
#include "dbfilm/errors.hpp"
#include "dbfilm/geometry.hpp"
#include "dbfilm/island.hpp"
#include "dbfilm/scheme.hpp"

namespace dbfilm {

/// sum |h| gamma(n) over a polyline; `flipped` evaluates gamma at theta + pi.
inline double interface_energy(std::span<const Vec2> nodes, const CurveAnisotropy& a, bool flipped = false,
                               const std::string& label = "curve") {
  double e = 0.0;
  for (const auto& f : segment_frames(nodes, label)) {
    double th = theta_of_tangent(f.tangent);
    if (flipped) th += std::numbers::pi;
    e += f.length * a.gamma(th);
  }
  return e;
}

inline double discrete_energy(const NetworkState& net, const AnisotropySpec& spec, const MaterialParams& params) {
  double e = 0.0;
  for (CurveRole r : kAllRoles) e += interface_energy(net.nodes(r), spec[r], false, role_name(r));
  return e - params.sigma1 * (net.xC() - net.xA()) - params.sigma2 * (net.xB() - net.xC());
}

inline double island_sigma(const SingleCurve& c, const MaterialParams& params) {
  return c.material() == 1 ? params.sigma1 : params.sigma2;
}

inline double discrete_energy(const SingleCurve& c, const AnisotropySpec& spec, const MaterialParams& params) {
  return interface_energy(c.nodes(), spec[c.origin()], c.flipped(), "island") -
         island_sigma(c, params) * (c.x_right() - c.x_left());
}

inline double discrete_energy(const Island& island, const AnisotropySpec& spec, const MaterialParams& params) {
  return std::visit([&](const auto& s) { return discrete_energy(s, spec, params); }, island);
}

// ---------------------------------------------------------------------------
// Exact orientation

namespace detail {

/// Sign of cross(b - a, c - a): double filter, exact rational fallback.
inline int orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double l = (b.x() - a.x()) * (c.y() - a.y());
  const double r = (b.y() - a.y()) * (c.x() - a.x());
  const double det = l - r;
  const double bound = (3.0 + 16.0 * std::numeric_limits<double>::epsilon()) *
                       std::numeric_limits<double>::epsilon() * (std::abs(l) + std::abs(r));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  using Q = boost::multiprecision::cpp_rational;
  const Q ax(a.x()), ay(a.y()), bx(b.x()), by(b.y()), cx(c.x()), cy(c.y());
  const Q d = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
  return d > 0 ? 1 : (d < 0 ? -1 : 0);
}

inline bool on_segment_collinear(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) && std::min(a.y(), b.y()) <= p.y() &&
         p.y() <= std::max(a.y(), b.y());
}

/// Closed segments [a,b] and [c,d] share at least one point.
inline bool segments_touch(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && on_segment_collinear(a, b, c)) return true;
  if (o2 == 0 && on_segment_collinear(a, b, d)) return true;
  if (o3 == 0 && on_segment_collinear(c, d, a)) return true;
  if (o4 == 0 && on_segment_collinear(c, d, b)) return true;
  return false;
}

}  // namespace detail

/// Closed simple polygon, counter-clockwise, without a repeated closing vertex.
class RegionPolygon {
 public:
  explicit RegionPolygon(std::vector<Vec2> vertices) : v_(std::move(vertices)) {
    if (v_.size() < 3) throw InvalidRegionError("region polygon needs at least 3 vertices");
    for (std::size_t i = 0; i < v_.size(); ++i)
      if (v_[i] == v_[(i + 1) % v_.size()]) throw InvalidRegionError("region polygon has a repeated vertex");
    area_ = shoelace(v_);
    if (!(area_ > 0.0)) throw InvalidRegionError("region polygon is not positively oriented or has zero area");
    const std::size_t n = v_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 &a = v_[i], &b = v_[(i + 1) % n];
      const Vec2 lo = a.cwiseMin(b), hi = a.cwiseMax(b);
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
        const Vec2 &c = v_[j], &d = v_[(j + 1) % n];
        if (std::max(c.x(), d.x()) < lo.x() || std::min(c.x(), d.x()) > hi.x() || std::max(c.y(), d.y()) < lo.y() ||
            std::min(c.y(), d.y()) > hi.y())
          continue;
        if (adjacent) {
          // neighbours share one vertex; they must not fold back onto each other
          const Vec2& shared = j == i + 1 ? b : a;
          const Vec2& p = j == i + 1 ? a : b;
          const Vec2& q = j == i + 1 ? d : c;
          if (detail::orient(p, shared, q) == 0 && (p - shared).dot(q - shared) > 0.0)
            throw InvalidRegionError("region polygon boundary folds back on itself");
          continue;
        }
        if (detail::segments_touch(a, b, c, d)) throw InvalidRegionError("region polygon boundary self-intersects");
      }
    }
  }

  const std::vector<Vec2>& vertices() const noexcept { return v_; }
  std::size_t size() const noexcept { return v_.size(); }
  double area() const noexcept { return area_; }

  static double shoelace(std::span<const Vec2> v) {
    const Vec2 o = v[0];
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += cross(v[i] - o, v[(i + 1) % v.size()] - o);
    return 0.5 * s;
  }

 private:
  std::vector<Vec2> v_;
  double area_ = 0.0;
};

namespace detail {

/// start, every node of `up`, then `down` reversed without its two ends. Both
/// chains share their last node.
inline std::vector<Vec2> region_vertices(const Vec2& start, std::span<const Vec2> up, std::span<const Vec2> down) {
  std::vector<Vec2> v;
  v.reserve(up.size() + down.size());
  v.push_back(start);
  for (const auto& p : up) v.push_back(p);
  for (std::size_t k = down.size() - 1; k-- > 1;) v.push_back(down[k]);
  return v;
}

}  // namespace detail

/// Union of both bubbles: A, B, F2V up to P, F1V back down to A.
inline RegionPolygon region_polygon(const NetworkState& net) {
  const auto g1 = net.nodes(CurveRole::F1V);
  const auto g2 = net.nodes(CurveRole::F2V);
  return RegionPolygon(detail::region_vertices(g1.front(), g2, g1));
}

/// Bubble 1 (between A and C) or bubble 2 (between C and B).
inline RegionPolygon bubble_polygon(const NetworkState& net, int bubble) {
  const auto g1 = net.nodes(CurveRole::F1V);
  const auto g2 = net.nodes(CurveRole::F2V);
  const auto g3 = net.nodes(CurveRole::F1F2);
  if (bubble == 1) return RegionPolygon(detail::region_vertices(g1.front(), g3, g1));
  if (bubble == 2) return RegionPolygon(detail::region_vertices(g3.front(), g2, g3));
  throw ContractViolation("bubble index must be 1 or 2");
}

inline RegionPolygon region_polygon(const SingleCurve& c) {
  const auto& n = c.nodes();
  std::vector<Vec2> v;
  v.reserve(n.size());
  v.push_back(n.front());
  for (std::size_t k = n.size(); k-- > 1;) v.push_back(n[k]);
  return RegionPolygon(std::move(v));
}

namespace detail {

struct EdgeCut {
  double t;
  Vec2 p;
};

/// Cuts on edge (a,b) from edge (c,d); the shared intersection point is pushed
/// to both lists so the two boundary passes close up exactly.
inline void intersect_edges(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d, std::vector<EdgeCut>& on_ab,
                            std::vector<EdgeCut>& on_cd, bool& collinear) {
  collinear = false;
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  if (o1 == 0 && o2 == 0) {
    collinear = true;
    const Vec2 ab = b - a, cd = d - c;
    const double lab = ab.squaredNorm(), lcd = cd.squaredNorm();
    for (const Vec2* p : {&c, &d}) {
      const double t = (*p - a).dot(ab) / lab;
      if (t > 0.0 && t < 1.0) on_ab.push_back({t, *p});
    }
    for (const Vec2* p : {&a, &b}) {
      const double t = (*p - c).dot(cd) / lcd;
      if (t > 0.0 && t < 1.0) on_cd.push_back({t, *p});
    }
    return;
  }
  if (o1 * o2 > 0) return;
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o3 * o4 > 0) return;
  Vec2 p;
  double tab, tcd;
  if (o1 == 0) {
    p = c;
    tcd = 0.0;
    tab = (c - a).dot(b - a) / (b - a).squaredNorm();
  } else if (o2 == 0) {
    p = d;
    tcd = 1.0;
    tab = (d - a).dot(b - a) / (b - a).squaredNorm();
  } else if (o3 == 0) {
    p = a;
    tab = 0.0;
    tcd = (a - c).dot(d - c) / (d - c).squaredNorm();
  } else if (o4 == 0) {
    p = b;
    tab = 1.0;
    tcd = (b - c).dot(d - c) / (d - c).squaredNorm();
  } else {
    const Vec2 r = b - a, s = d - c;
    tab = cross(c - a, s) / cross(r, s);
    tab = std::clamp(tab, 0.0, 1.0);
    p = a + tab * r;
    tcd = std::clamp((p - c).dot(s) / s.squaredNorm(), 0.0, 1.0);
  }
  if (tab > 0.0 && tab < 1.0) on_ab.push_back({tab, p});
  if (tcd > 0.0 && tcd < 1.0) on_cd.push_back({tcd, p});
}

/// Crossing-number test with exact orientation; the point is assumed to be
/// off the boundary.
inline bool inside(const std::vector<Vec2>& poly, const Vec2& p) {
  bool in = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 &a = poly[j], &b = poly[i];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const int o = orient(a, b, p);
      if ((b.y() > a.y()) ? o > 0 : o < 0) in = !in;
    }
  }
  return in;
}

struct Edge {
  Vec2 a, b;
  std::vector<EdgeCut> cuts;
  std::vector<std::size_t> collinear_with;
};

inline std::vector<Edge> edges_of(const std::vector<Vec2>& v) {
  std::vector<Edge> e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    e[i].a = v[i];
    e[i].b = v[(i + 1) % v.size()];
  }
  return e;
}

/// Contribution of the pieces of `mine` inside the other polygon to the
/// boundary integral of the intersection. Collinear overlaps are kept only
/// when `keep_shared` and the two edges run the same way.
inline double clipped_boundary_integral(const std::vector<Edge>& mine, const std::vector<Edge>& other,
                                        const std::vector<Vec2>& other_poly, bool keep_shared, const Vec2& origin) {
  double s = 0.0;
  for (const auto& e : mine) {
    std::vector<EdgeCut> cuts = e.cuts;
    cuts.push_back({0.0, e.a});
    cuts.push_back({1.0, e.b});
    std::sort(cuts.begin(), cuts.end(), [](const EdgeCut& x, const EdgeCut& y) { return x.t < y.t; });
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const Vec2 p = cuts[k].p, q = cuts[k + 1].p;
      if (p == q) continue;
      const Vec2 mid = 0.5 * (p + q);
      int shared = 0;  // +1 same direction, -1 opposite
      for (std::size_t oi : e.collinear_with) {
        const Edge& o = other[oi];
        const Vec2 od = o.b - o.a;
        const double t = (mid - o.a).dot(od) / od.squaredNorm();
        if (t > 0.0 && t < 1.0) {
          shared = od.dot(e.b - e.a) > 0.0 ? 1 : -1;
          break;
        }
      }
      bool take;
      if (shared != 0)
        take = keep_shared && shared > 0;
      else
        take = inside(other_poly, mid);
      if (take) s += 0.5 * cross(p - origin, q - origin);
    }
  }
  return s;
}

}  // namespace detail

/// Area of the intersection of two valid region polygons.
inline double intersection_area(const RegionPolygon& P, const RegionPolygon& Q) {
  auto ep = detail::edges_of(P.vertices());
  auto eq = detail::edges_of(Q.vertices());
  for (std::size_t i = 0; i < ep.size(); ++i) {
    const Vec2 plo = ep[i].a.cwiseMin(ep[i].b), phi = ep[i].a.cwiseMax(ep[i].b);
    for (std::size_t j = 0; j < eq.size(); ++j) {
      const Vec2 qlo = eq[j].a.cwiseMin(eq[j].b), qhi = eq[j].a.cwiseMax(eq[j].b);
      if (qhi.x() < plo.x() || qlo.x() > phi.x() || qhi.y() < plo.y() || qlo.y() > phi.y()) continue;
      bool col = false;
      detail::intersect_edges(ep[i].a, ep[i].b, eq[j].a, eq[j].b, ep[i].cuts, eq[j].cuts, col);
      if (col) {
        ep[i].collinear_with.push_back(j);
        eq[j].collinear_with.push_back(i);
      }
    }
  }
  const Vec2 origin = P.vertices().front();
  const double s = detail::clipped_boundary_integral(ep, eq, Q.vertices(), true, origin) +
                   detail::clipped_boundary_integral(eq, ep, P.vertices(), false, origin);
  return std::max(0.0, s);
}

/// |P| + |Q| - 2 |P ∩ Q|.
inline double manifold_distance(const RegionPolygon& P, const RegionPolygon& Q) {
  return std::max(0.0, P.area() + Q.area() - 2.0 * intersection_area(P, Q));
}

/// Sum of the per-bubble distances, which also sees the internal interface.
inline double manifold_distance(const NetworkState& a, const NetworkState& b) {
  return manifold_distance(bubble_polygon(a, 1), bubble_polygon(b, 1)) +
         manifold_distance(bubble_polygon(a, 2), bubble_polygon(b, 2));
}

}  // namespace dbfilm

#endif
