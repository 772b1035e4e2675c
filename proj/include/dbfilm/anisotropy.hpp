#ifndef DBFILM_ANISOTROPY_HPP
#define DBFILM_ANISOTROPY_HPP

// Orientation-dependent surface energy densities. Everything is expressed in
// the tangent angle theta, tau = (cos theta, sin theta), n = -tau^perp =
// (sin theta, -cos theta).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include "dbfilm/errors.hpp"
#include "dbfilm/geometry.hpp"

namespace dbfilm {

inline constexpr int kStabilitySamples = 10000;

inline double theta_of_tangent(const Vec2& t) { return std::atan2(t.y(), t.x()); }
inline double theta_of_normal(const Vec2& n) { return std::atan2(n.x(), -n.y()); }
inline Vec2 tangent_of_theta(double th) { return Vec2(std::cos(th), std::sin(th)); }
inline Vec2 normal_of_theta(double th) { return Vec2(std::sin(th), -std::cos(th)); }

/// Surface energy density of one interface plus its stabilizer K.
class CurveAnisotropy {
 public:
  enum class Kind { Isotropic, KFold, Custom };
  using Fn = std::function<double(double)>;

  static CurveAnisotropy isotropic() { return CurveAnisotropy(); }

  /// gamma(theta) = 1 + beta cos(k theta), k even.
  static CurveAnisotropy kfold(int k, double beta) {
    if (k < 2 || k % 2 != 0) throw ContractViolation("kfold anisotropy needs an even k >= 2");
    if (!(beta >= 0.0) || !(beta < 1.0))
      throw ContractViolation("kfold anisotropy needs 0 <= beta < 1 for a positive density");
    CurveAnisotropy a;
    a.kind_ = Kind::KFold;
    a.k_ = k;
    a.beta_ = beta;
    return a;
  }

  /// User-supplied density with analytic first and second derivatives.
  static CurveAnisotropy custom(Fn g, Fn dg, Fn ddg) {
    if (!g || !dg || !ddg) throw ContractViolation("custom anisotropy needs gamma, gamma' and gamma''");
    CurveAnisotropy a;
    a.kind_ = Kind::Custom;
    a.g_ = std::move(g);
    a.dg_ = std::move(dg);
    a.ddg_ = std::move(ddg);
    for (int i = 0; i < kStabilitySamples; ++i) {
      const double th = 2.0 * std::numbers::pi * i / kStabilitySamples;
      if (!(a.g_(th) > 0.0)) throw ContractViolation("custom anisotropy must be positive for every orientation");
    }
    return a;
  }

  CurveAnisotropy with_stabilizer(double K) const {
    if (!(K >= 0.0)) throw ContractViolation("stabilizer K must be non-negative");
    CurveAnisotropy a = *this;
    a.stabilizer_ = K;
    return a;
  }

  Kind kind() const noexcept { return kind_; }
  int k() const noexcept { return k_; }
  double beta() const noexcept { return beta_; }
  bool has_explicit_stabilizer() const noexcept { return stabilizer_.has_value(); }

  double gamma(double th) const {
    switch (kind_) {
      case Kind::Isotropic: return 1.0;
      case Kind::KFold: return 1.0 + beta_ * std::cos(k_ * th);
      case Kind::Custom: return g_(th);
    }
    return 1.0;
  }
  double dgamma(double th) const {
    switch (kind_) {
      case Kind::Isotropic: return 0.0;
      case Kind::KFold: return -beta_ * k_ * std::sin(k_ * th);
      case Kind::Custom: return dg_(th);
    }
    return 0.0;
  }
  double ddgamma(double th) const {
    switch (kind_) {
      case Kind::Isotropic: return 0.0;
      case Kind::KFold: return -beta_ * k_ * k_ * std::cos(k_ * th);
      case Kind::Custom: return ddg_(th);
    }
    return 0.0;
  }

  /// 2 max gamma + 2 max |gamma'|.
  double default_stabilizer() const {
    switch (kind_) {
      case Kind::Isotropic: return 2.0;
      case Kind::KFold: return 2.0 * (1.0 + beta_) + 2.0 * k_ * beta_;
      case Kind::Custom: {
        double gmax = 0.0, dmax = 0.0;
        for (int i = 0; i < kStabilitySamples; ++i) {
          const double th = 2.0 * std::numbers::pi * i / kStabilitySamples;
          gmax = std::max(gmax, g_(th));
          dmax = std::max(dmax, std::abs(dg_(th)));
        }
        return 2.0 * gmax + 2.0 * dmax;
      }
    }
    return 2.0;
  }

  double stabilizer() const { return stabilizer_ ? *stabilizer_ : default_stabilizer(); }

 private:
  Kind kind_ = Kind::Isotropic;
  int k_ = 0;
  double beta_ = 0.0;
  Fn g_, dg_, ddg_;
  std::optional<double> stabilizer_;
};

/// Per-curve densities, indexed F1V, F2V, F1F2.
struct AnisotropySpec {
  std::array<CurveAnisotropy, 3> curves{};

  static AnisotropySpec uniform(const CurveAnisotropy& a) { return AnisotropySpec{{a, a, a}}; }
  const CurveAnisotropy& operator[](int j) const { return curves.at(j); }
  const CurveAnisotropy& operator[](CurveRole r) const { return curves.at(role_index(r)); }
};

namespace detail {

inline void require_unit(const Vec2& v, const char* what) {
  if (!(std::abs(v.norm() - 1.0) <= 1e-10)) throw ContractViolation(std::string(what) + " must be a unit vector");
}

}  // namespace detail

/// Gradient of the homogeneous extension at n(theta). With n = -tau^perp the
/// angle grows along tau as n turns, so xi = gamma n + gamma' tau here.
inline Vec2 xi_of_theta(const CurveAnisotropy& a, double th) {
  return a.gamma(th) * normal_of_theta(th) + a.dgamma(th) * tangent_of_theta(th);
}

/// Z_K(n) = gamma I - n xi^T - xi n^T + K n n^T at tangent angle theta.
inline Mat2 zk_of_theta(const CurveAnisotropy& a, double th) {
  const Vec2 n = normal_of_theta(th);
  const Vec2 xi = xi_of_theta(a, th);
  Mat2 z = a.gamma(th) * Mat2::Identity() - n * xi.transpose() - xi * n.transpose() +
           a.stabilizer() * n * n.transpose();
  z(1, 0) = z(0, 1);
  return z;
}

inline double gamma(const AnisotropySpec& spec, int curve, const Vec2& normal) {
  detail::require_unit(normal, "normal");
  return spec[curve].gamma(theta_of_normal(normal));
}

inline Vec2 xi_vector(const AnisotropySpec& spec, int curve, const Vec2& tangent) {
  detail::require_unit(tangent, "tangent");
  const double th = theta_of_tangent(tangent);
  const auto& a = spec[curve];
  return a.gamma(th) * (-perp(tangent)) + a.dgamma(th) * tangent;
}

inline double stiffness(const AnisotropySpec& spec, int curve, double th) {
  const auto& a = spec[curve];
  return a.gamma(th) + a.ddgamma(th);
}

inline Mat2 zk_matrix(const AnisotropySpec& spec, int curve, const Vec2& normal) {
  detail::require_unit(normal, "normal");
  return zk_of_theta(spec[curve], theta_of_normal(normal));
}

struct CurveStability {
  bool isotropic = false;
  bool weak = true;                  // surface stiffness positive everywhere
  double min_stiffness = 1.0;        // over the sampled angles
  bool reflection_condition = true;  // gamma(-n) < 3 gamma(n) at every sample
  double stabilizer = 0.0;
  double stabilizer_floor = 0.0;

  bool stabilizer_below_floor() const { return stabilizer < stabilizer_floor; }
  const char* classification() const {
    return isotropic ? "isotropic" : (weak ? "weakly anisotropic" : "strongly anisotropic");
  }
};

struct StabilityReport {
  std::array<CurveStability, 3> curves;

  std::string to_text() const {
    std::ostringstream os;
    for (int j = 0; j < 3; ++j) {
      const auto& c = curves[j];
      os << role_name(kAllRoles[j]) << ": " << c.classification() << ", min stiffness " << c.min_stiffness
         << ", gamma(-n) < 3 gamma(n) " << (c.reflection_condition ? "holds" : "VIOLATED") << ", K " << c.stabilizer;
      if (c.stabilizer_below_floor()) os << " (WARNING: below heuristic floor " << c.stabilizer_floor << ")";
      os << '\n';
    }
    return os.str();
  }
};

/// Diagnostic only; never throws for a valid spec.
inline StabilityReport stability_check(const AnisotropySpec& spec) {
  StabilityReport rep;
  for (int j = 0; j < 3; ++j) {
    const auto& a = spec[j];
    auto& c = rep.curves[j];
    double smin = std::numeric_limits<double>::infinity();
    bool refl = true;
    for (int i = 0; i < kStabilitySamples; ++i) {
      const double th = 2.0 * std::numbers::pi * i / kStabilitySamples;
      smin = std::min(smin, a.gamma(th) + a.ddgamma(th));
      // n -> -n is theta -> theta + pi
      if (!(a.gamma(th + std::numbers::pi) < 3.0 * a.gamma(th))) refl = false;
    }
    c.min_stiffness = smin;
    c.reflection_condition = refl;
    c.isotropic = a.kind() == CurveAnisotropy::Kind::Isotropic ||
                  (a.kind() == CurveAnisotropy::Kind::KFold && a.beta() == 0.0);
    if (a.kind() == CurveAnisotropy::Kind::KFold)
      c.weak = a.beta() * (a.k() * a.k() - 1) < 1.0;
    else
      c.weak = smin > 0.0;
    c.stabilizer = a.stabilizer();
    c.stabilizer_floor = a.default_stabilizer();
  }
  return rep;
}

}  // namespace dbfilm

#endif
