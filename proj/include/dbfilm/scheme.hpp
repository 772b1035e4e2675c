#ifndef DBFILM_SCHEME_HPP
#define DBFILM_SCHEME_HPP

// One time step of the structure-preserving parametric FEM and its linear
// energy-stable variant. The constrained spaces are realised by eliminating
// dofs through a sparse prolongation P, so the reduced matrix P^T A P stays
// symmetric.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "dbfilm/anisotropy.hpp"
#include "dbfilm/errors.hpp"
#include "dbfilm/geometry.hpp"

namespace dbfilm {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

struct MaterialParams {
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  std::array<double, 3> eta{100.0, 100.0, 100.0};

  void validate() const {
    for (double e : eta)
      if (!(e > 0.0) || !std::isfinite(e)) throw ContractViolation("contact mobilities eta must be positive and finite");
    if (!std::isfinite(sigma1) || !std::isfinite(sigma2)) throw ContractViolation("sigma must be finite");
  }

  /// Substrate force on the contact point of each curve; the substrate energy
  /// is sum(force * x_contact).
  std::array<double, 3> contact_forces() const { return {sigma1, -sigma2, sigma2 - sigma1}; }
};

enum class Scheme { SP, ES };

inline const char* scheme_name(Scheme s) { return s == Scheme::SP ? "sp" : "es"; }

struct StepperConfig {
  double dt = 1.0 / 40.0;
  double picard_tol = 1e-8;
  int picard_max_iters = 100;
  Scheme scheme = Scheme::SP;

  void validate() const {
    if (!(dt > 0.0)) throw ContractViolation("dt must be positive");
    if (!(picard_tol > 0.0)) throw ContractViolation("picard_tol must be positive");
    if (picard_max_iters < 1) throw ContractViolation("picard_max_iters must be at least 1");
  }
};

struct StepSolution {
  NetworkState network;
  std::array<std::vector<double>, 3> mu;
  int picard_iters = 0;
  double residual = 0.0;
};

/// Per-segment time-weighted normal -(h^m + h^{m+1})^perp / (2|h^m|). Not unit.
inline std::vector<Vec2> half_step_normal(std::span<const Vec2> old_nodes, std::span<const Vec2> new_nodes,
                                          const std::string& label = "curve") {
  if (old_nodes.size() != new_nodes.size()) throw ContractViolation("half_step_normal: node counts differ");
  std::vector<Vec2> w;
  w.reserve(old_nodes.size() ? old_nodes.size() - 1 : 0);
  for (std::size_t k = 1; k < old_nodes.size(); ++k) {
    const Vec2 hm = old_nodes[k] - old_nodes[k - 1];
    const double len = hm.norm();
    if (!(len > 0.0)) throw DegenerateGeometryError(label, static_cast<int>(k));
    const Vec2 hn = new_nodes[k] - new_nodes[k - 1];
    w.push_back(-perp(hm + hn) / (2.0 * len));
  }
  return w;
}

inline std::vector<Vec2> half_step_normal(const CurveState& old_curve, const CurveState& new_curve) {
  return half_step_normal(old_curve.nodes(), new_curve.nodes(), role_name(old_curve.role()));
}

// ---------------------------------------------------------------------------
// Dof layout

enum class DofField { X, Y, Mu };

struct DofKey {
  DofField field;
  int curve;  // kJunctionCurve for the shared junction pair
  int node;

  friend auto operator<=>(const DofKey&, const DofKey&) = default;
};

inline constexpr int kJunctionCurve = -1;

/// Layout of the constrained unknowns over a set of curves. Every curve starts
/// at a substrate contact (y eliminated). A curve ends either at a second
/// contact or at the junction shared by all junction-ending curves; there the
/// position is one shared pair and mu of the last such curve is minus the sum
/// of the others.
class DofMap {
 public:
  DofMap() = default;

  DofMap(std::vector<int> node_counts, std::vector<bool> ends_at_junction)
      : counts_(std::move(node_counts)), junction_end_(std::move(ends_at_junction)) {
    if (counts_.size() != junction_end_.size()) throw ContractViolation("DofMap: inconsistent curve descriptions");
    full_offset_.resize(counts_.size());
    int off = 0;
    for (std::size_t j = 0; j < counts_.size(); ++j) {
      if (counts_[j] < 3) throw ContractViolation("DofMap: every curve needs at least 3 nodes");
      full_offset_[j] = off;
      off += 3 * counts_[j];
      if (junction_end_[j]) last_junction_curve_ = static_cast<int>(j);
    }
    full_size_ = off;

    for (std::size_t jj = 0; jj < counts_.size(); ++jj) {
      const int j = static_cast<int>(jj);
      const int n = counts_[j] - 1;
      for (int k = 0; k <= n - 1; ++k) push({DofField::X, j, k});
      if (!junction_end_[j]) push({DofField::X, j, n});
      for (int k = 1; k <= n - 1; ++k) push({DofField::Y, j, k});
      for (int k = 0; k <= n; ++k) {
        if (k == n && j == last_junction_curve_) continue;
        push({DofField::Mu, j, k});
      }
    }
    if (last_junction_curve_ >= 0) {
      push({DofField::X, kJunctionCurve, 0});
      push({DofField::Y, kJunctionCurve, 0});
    }
    build_prolongation();
  }

  int size() const noexcept { return static_cast<int>(keys_.size()); }
  int full_size() const noexcept { return full_size_; }
  int curve_count() const noexcept { return static_cast<int>(counts_.size()); }
  int node_count(int curve) const { return counts_.at(curve); }
  bool ends_at_junction(int curve) const { return junction_end_.at(curve); }
  bool has_junction() const noexcept { return last_junction_curve_ >= 0; }
  int dependent_mu_curve() const noexcept { return last_junction_curve_; }

  const DofKey& dof(int i) const { return keys_.at(i); }

  /// Index of a free dof. Junction positions may also be addressed through the
  /// last node of any junction-ending curve.
  int index(DofKey key) const {
    if (key.field != DofField::Mu && key.curve >= 0 && key.curve < curve_count() && junction_end_[key.curve] &&
        key.node == counts_[key.curve] - 1)
      key = {key.field, kJunctionCurve, 0};
    const auto it = index_.find(key);
    if (it == index_.end()) throw ContractViolation("DofMap: dof is eliminated or out of range");
    return it->second;
  }

  int full_x(int j, int k) const { return full_offset_[j] + 2 * k; }
  int full_y(int j, int k) const { return full_offset_[j] + 2 * k + 1; }
  int full_mu(int j, int k) const { return full_offset_[j] + 2 * counts_[j] + k; }

  /// Maps reduced unknowns to the unconstrained per-curve vector.
  const SparseMatrix& prolongation() const noexcept { return P_; }

 private:
  void push(const DofKey& key) {
    index_.emplace(key, static_cast<int>(keys_.size()));
    keys_.push_back(key);
  }

  void build_prolongation() {
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < size(); ++i) {
      const DofKey& k = keys_[i];
      if (k.curve == kJunctionCurve) {
        for (int j = 0; j < curve_count(); ++j) {
          if (!junction_end_[j]) continue;
          const int n = counts_[j] - 1;
          t.emplace_back(k.field == DofField::X ? full_x(j, n) : full_y(j, n), i, 1.0);
        }
        continue;
      }
      switch (k.field) {
        case DofField::X: t.emplace_back(full_x(k.curve, k.node), i, 1.0); break;
        case DofField::Y: t.emplace_back(full_y(k.curve, k.node), i, 1.0); break;
        case DofField::Mu:
          t.emplace_back(full_mu(k.curve, k.node), i, 1.0);
          if (junction_end_[k.curve] && k.node == counts_[k.curve] - 1 && last_junction_curve_ >= 0) {
            const int d = last_junction_curve_;
            t.emplace_back(full_mu(d, counts_[d] - 1), i, -1.0);
          }
          break;
      }
    }
    P_.resize(full_size_, size());
    P_.setFromTriplets(t.begin(), t.end());
  }

  std::vector<int> counts_;
  std::vector<bool> junction_end_;
  std::vector<int> full_offset_;
  int full_size_ = 0;
  int last_junction_curve_ = -1;
  std::vector<DofKey> keys_;
  std::map<DofKey, int> index_;
  SparseMatrix P_;
};

inline DofMap dof_layout(const NetworkState& net) {
  return DofMap({net.segments(CurveRole::F1V) + 1, net.segments(CurveRole::F2V) + 1, net.segments(CurveRole::F1F2) + 1},
                {true, true, true});
}

struct AssembledSystem {
  SparseMatrix matrix;
  Vector rhs;
  DofMap dofs;
};

namespace detail {

struct ContactLaw {
  double eta;
  double force;
};

/// One curve of a generic system: old nodes, density, contact laws.
struct SystemCurve {
  std::vector<Vec2> nodes;
  const CurveAnisotropy* anisotropy = nullptr;
  bool flipped = false;  // node order reversed w.r.t. the density's angle convention
  ContactLaw start{1.0, 0.0};
  std::optional<ContactLaw> end;  // empty: ends at the shared junction
  std::string label = "curve";
};

inline DofMap layout_of(const std::vector<SystemCurve>& curves) {
  std::vector<int> counts;
  std::vector<bool> junction;
  for (const auto& c : curves) {
    counts.push_back(static_cast<int>(c.nodes.size()));
    junction.push_back(!c.end.has_value());
  }
  return DofMap(std::move(counts), std::move(junction));
}

/// Assembles [[-S - D/(eta dt), N], [N^T, dt L]] in the unconstrained layout
/// and reduces it with P. The mu rows are the first equation times dt.
inline AssembledSystem assemble_system(const std::vector<SystemCurve>& curves,
                                       const std::vector<std::vector<Vec2>>& normals, double dt) {
  AssembledSystem sys;
  sys.dofs = layout_of(curves);
  const DofMap& dm = sys.dofs;
  std::vector<Eigen::Triplet<double>> t;
  Vector b = Vector::Zero(dm.full_size());

  for (std::size_t jj = 0; jj < curves.size(); ++jj) {
    const int j = static_cast<int>(jj);
    const auto& c = curves[jj];
    const auto& w = normals.at(jj);
    const int nseg = static_cast<int>(c.nodes.size()) - 1;
    if (static_cast<int>(w.size()) != nseg) throw ContractViolation("assemble: one normal per segment required");
    for (int k = 1; k <= nseg; ++k) {
      const Vec2 h = c.nodes[k] - c.nodes[k - 1];
      const double L = h.norm();
      if (!(L > 0.0)) throw DegenerateGeometryError(c.label, k);
      double th = theta_of_tangent(h / L);
      if (c.flipped) th += std::numbers::pi;
      const Mat2 Z = zk_of_theta(*c.anisotropy, th);
      const int nodes[2] = {k - 1, k};
      const double sgn[2] = {-1.0, 1.0};
      for (int a = 0; a < 2; ++a) {
        for (int bb = 0; bb < 2; ++bb) {
          const double s = sgn[a] * sgn[bb];
          for (int d = 0; d < 2; ++d) {
            const int row = d == 0 ? dm.full_x(j, nodes[a]) : dm.full_y(j, nodes[a]);
            for (int e = 0; e < 2; ++e) {
              const int col = e == 0 ? dm.full_x(j, nodes[bb]) : dm.full_y(j, nodes[bb]);
              t.emplace_back(row, col, -s * Z(d, e) / L);
            }
          }
          t.emplace_back(dm.full_mu(j, nodes[a]), dm.full_mu(j, nodes[bb]), s * dt / L);
        }
        const int i = nodes[a];
        const int mu = dm.full_mu(j, i);
        t.emplace_back(dm.full_x(j, i), mu, 0.5 * L * w[k - 1].x());
        t.emplace_back(dm.full_y(j, i), mu, 0.5 * L * w[k - 1].y());
        t.emplace_back(mu, dm.full_x(j, i), 0.5 * L * w[k - 1].x());
        t.emplace_back(mu, dm.full_y(j, i), 0.5 * L * w[k - 1].y());
        b[mu] += 0.5 * L * c.nodes[i].dot(w[k - 1]);
      }
    }
    auto contact = [&](int node, const ContactLaw& law) {
      const int row = dm.full_x(j, node);
      t.emplace_back(row, row, -1.0 / (law.eta * dt));
      b[row] += -c.nodes[node].x() / (law.eta * dt) + law.force;
    };
    contact(0, c.start);
    if (c.end) contact(nseg, *c.end);
  }

  SparseMatrix A(dm.full_size(), dm.full_size());
  A.setFromTriplets(t.begin(), t.end());
  const SparseMatrix& P = dm.prolongation();
  const SparseMatrix Pt = P.transpose();
  sys.matrix = Pt * A * P;
  sys.rhs = Pt * b;
  return sys;
}

struct SystemSolution {
  std::vector<std::vector<Vec2>> nodes;
  std::vector<std::vector<double>> mu;
  int picard_iters = 0;
  double residual = 0.0;
};

inline void unpack(const DofMap& dm, const Vector& full, SystemSolution& out) {
  const int nc = dm.curve_count();
  out.nodes.assign(nc, {});
  out.mu.assign(nc, {});
  for (int j = 0; j < nc; ++j) {
    const int n = dm.node_count(j);
    out.nodes[j].resize(n);
    out.mu[j].resize(n);
    for (int k = 0; k < n; ++k) {
      out.nodes[j][k] = Vec2(full[dm.full_x(j, k)], full[dm.full_y(j, k)]);
      out.mu[j][k] = full[dm.full_mu(j, k)];
    }
  }
}

inline Vector solve_linear(const AssembledSystem& sys, long step) {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(sys.matrix);
  if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed: " + lu.lastErrorMessage(), step);
  Vector x = lu.solve(sys.rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SolverError("sparse LU solve failed", step);
  return x;
}

/// Picard iteration on the time-weighted normal (SP) or a single linear solve
/// with the old normal (ES).
inline SystemSolution solve_system(const std::vector<SystemCurve>& curves, const StepperConfig& cfg, long step) {
  cfg.validate();
  const std::size_t nc = curves.size();
  std::vector<std::vector<Vec2>> iterate(nc);
  for (std::size_t j = 0; j < nc; ++j) iterate[j] = curves[j].nodes;

  SystemSolution out;
  double diff = 0.0;
  for (int it = 1; it <= cfg.picard_max_iters; ++it) {
    std::vector<std::vector<Vec2>> normals(nc);
    for (std::size_t j = 0; j < nc; ++j) normals[j] = half_step_normal(curves[j].nodes, iterate[j], curves[j].label);
    const AssembledSystem sys = assemble_system(curves, normals, cfg.dt);
    const Vector full = sys.dofs.prolongation() * solve_linear(sys, step);
    unpack(sys.dofs, full, out);
    diff = 0.0;
    for (std::size_t j = 0; j < nc; ++j)
      for (std::size_t k = 0; k < iterate[j].size(); ++k) diff = std::max(diff, (out.nodes[j][k] - iterate[j][k]).norm());
    out.picard_iters = it;
    if (cfg.scheme == Scheme::ES) {
      out.residual = 0.0;
      return out;
    }
    iterate = out.nodes;
    if (diff < cfg.picard_tol) {
      out.residual = diff;
      return out;
    }
  }
  throw NonConvergenceError(cfg.picard_max_iters, diff, step);
}

inline std::vector<SystemCurve> network_system(const NetworkState& net, const AnisotropySpec& spec,
                                               const MaterialParams& params) {
  params.validate();
  const auto forces = params.contact_forces();
  std::vector<SystemCurve> curves;
  for (CurveRole r : kAllRoles) {
    const int j = role_index(r);
    SystemCurve c;
    c.nodes = net.nodes(r);
    c.anisotropy = &spec[j];
    c.start = {params.eta[j], forces[j]};
    c.label = role_name(r);
    curves.push_back(std::move(c));
  }
  return curves;
}

}  // namespace detail

/// Assembles the reduced system for given per-curve half-step normals.
inline AssembledSystem assemble(const NetworkState& net, const std::array<std::vector<Vec2>, 3>& normals,
                                const AnisotropySpec& spec, const MaterialParams& params, const StepperConfig& cfg) {
  cfg.validate();
  const auto curves = detail::network_system(net, spec, params);
  return detail::assemble_system(curves, {normals.begin(), normals.end()}, cfg.dt);
}

inline StepSolution solve_step(const NetworkState& net, const AnisotropySpec& spec, const MaterialParams& params,
                               const StepperConfig& cfg, long step = 0) {
  const auto curves = detail::network_system(net, spec, params);
  auto sol = detail::solve_system(curves, cfg, step);
  std::array<std::vector<Vec2>, 3> nodes;
  std::array<std::vector<double>, 3> mu;
  for (int j = 0; j < 3; ++j) {
    nodes[j] = std::move(sol.nodes[j]);
    mu[j] = std::move(sol.mu[j]);
  }
  return StepSolution{NetworkState(std::move(nodes), net.time() + cfg.dt), std::move(mu), sol.picard_iters,
                      sol.residual};
}

struct CurveStepSolution {
  std::vector<Vec2> nodes;
  std::vector<double> mu;
  int picard_iters = 0;
  double residual = 0.0;
};

/// One step for a lone curve with substrate contacts at both ends.
inline CurveStepSolution solve_curve_step(std::span<const Vec2> nodes, const CurveAnisotropy& anisotropy, bool flipped,
                                          detail::ContactLaw left, detail::ContactLaw right, const StepperConfig& cfg,
                                          long step = 0) {
  if (nodes.size() < 3) throw ContractViolation("single curve needs at least 3 nodes");
  if (nodes.front().y() != 0.0 || nodes.back().y() != 0.0)
    throw ContractViolation("single curve endpoints must lie on the substrate");
  if (!(left.eta > 0.0) || !(right.eta > 0.0)) throw ContractViolation("contact mobilities eta must be positive");
  detail::SystemCurve c;
  c.nodes.assign(nodes.begin(), nodes.end());
  c.anisotropy = &anisotropy;
  c.flipped = flipped;
  c.start = left;
  c.end = right;
  c.label = "island";
  auto sol = detail::solve_system({c}, cfg, step);
  CurveStepSolution out{std::move(sol.nodes[0]), std::move(sol.mu[0]), sol.picard_iters, sol.residual};
  return out;
}

}  // namespace dbfilm

#endif
