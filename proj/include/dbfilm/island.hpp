#ifndef DBFILM_ISLAND_HPP
#define DBFILM_ISLAND_HPP

// Connected film pieces: the double-bubble network, or a lone film/vapor
// curve left behind by topology surgery.

#include <string>
#include <variant>
#include <vector>

#include "dbfilm/errors.hpp"
#include "dbfilm/geometry.hpp"

namespace dbfilm {

/// A lone interface with both ends on the substrate, stored left to right.
/// `origin` names the network curve it was cut from (its density and
/// mobility); `material` is 1 or 2 and selects sigma.
class SingleCurve {
 public:
  SingleCurve(std::vector<Vec2> nodes, CurveRole origin, int material, bool flipped)
      : nodes_(std::move(nodes)), origin_(origin), material_(material), flipped_(flipped) {
    if (nodes_.size() < 3) throw ContractViolation("single curve needs at least 3 nodes");
    if (nodes_.front().y() != 0.0 || nodes_.back().y() != 0.0)
      throw ContractViolation("single curve endpoints must lie on the substrate");
    if (material_ != 1 && material_ != 2) throw ContractViolation("single curve material must be 1 or 2");
    detail::check_segments(nodes_, "island");
  }

  const std::vector<Vec2>& nodes() const noexcept { return nodes_; }
  CurveRole origin() const noexcept { return origin_; }
  int material() const noexcept { return material_; }
  /// True when the node order runs against the origin curve's orientation.
  bool flipped() const noexcept { return flipped_; }
  int segments() const noexcept { return static_cast<int>(nodes_.size()) - 1; }
  double x_left() const { return nodes_.front().x(); }
  double x_right() const { return nodes_.back().x(); }

  friend bool operator==(const SingleCurve&, const SingleCurve&) = default;

 private:
  std::vector<Vec2> nodes_;
  CurveRole origin_;
  int material_;
  bool flipped_;
};

using Island = std::variant<NetworkState, SingleCurve>;

/// Signed area with the network's sign convention (minus the geometric area
/// for a film above the substrate).
inline double discrete_area(const SingleCurve& c) { return -trapezoid_y_dx(c.nodes()); }

inline double discrete_area(const Island& island) {
  return std::visit([](const auto& s) { return discrete_area(s); }, island);
}

inline double mesh_ratio(const SingleCurve& c) { return mesh_ratio(c.nodes(), "island"); }

inline double mesh_ratio(const Island& island) {
  return std::visit([](const auto& s) { return mesh_ratio(s); }, island);
}

inline double mean_segment_length(const Island& island) {
  double len = 0.0;
  int segs = 0;
  if (const auto* net = std::get_if<NetworkState>(&island)) {
    for (CurveRole r : kAllRoles) {
      len += detail::polyline_length(net->nodes(r));
      segs += net->segments(r);
    }
  } else {
    const auto& c = std::get<SingleCurve>(island);
    len = detail::polyline_length(c.nodes());
    segs = c.segments();
  }
  return len / segs;
}

inline void write_snapshot(std::ostream& os, const SingleCurve& c) {
  os << "curve,node,x,y\n";
  write_snapshot_rows(os, role_name(c.origin()), c.nodes());
}

inline void write_snapshot(std::ostream& os, const Island& island) {
  std::visit([&](const auto& s) { write_snapshot(os, s); }, island);
}

}  // namespace dbfilm

#endif
