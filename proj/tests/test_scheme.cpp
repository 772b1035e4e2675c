#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dbfilm/analysis.hpp"
#include "dbfilm/config.hpp"
#include "dbfilm/scheme.hpp"
#include "dense_oracle.hpp"

using namespace dbfilm;

namespace {

NetworkState example1(int n) {
  RunConfig c = preset("example1");
  c.set_N(n);
  return build_initial(c);
}

std::array<std::vector<Vec2>, 3> curves_of(const NetworkState& net) {
  std::array<std::vector<Vec2>, 3> out;
  for (CurveRole r : kAllRoles) out[role_index(r)] = net.nodes(r);
  return out;
}

// Bumpy perturbation of a half-ellipse network with random contact points.
NetworkState random_network(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = 1.5 + 0.5 * u(rng), b = 0.8 + 0.4 * u(rng);
  const double xc = 0.3 * a * u(rng);
  const Vec2 P(xc + 0.2 * u(rng), b * (1.0 + 0.2 * u(rng)));
  std::array<std::vector<Vec2>, 3> c;
  for (int k = 0; k <= n; ++k) {
    const double s = static_cast<double>(k) / n;
    const double bump = k > 0 && k < n ? 0.05 * u(rng) : 0.0;
    const double th = std::numbers::pi * s / 2;
    // quarter arcs from the contacts to P
    c[0].emplace_back(-a + (P.x() + a) * (1 - std::cos(th)) + bump, P.y() * std::sin(th) * (1 + bump));
    c[1].emplace_back(a + (P.x() - a) * (1 - std::cos(th)) + bump, P.y() * std::sin(th) * (1 + bump));
    c[2].emplace_back(xc + (P.x() - xc) * s + 0.3 * bump, P.y() * s);
  }
  for (int j = 0; j < 3; ++j) {
    c[j].front().y() = 0.0;
    c[j].back() = P;
  }
  return NetworkState(c);
}

}  // namespace

TEST(DofLayout, CountIsNineNPlusOne) {
  for (int n : {2, 3, 8, 33}) {
    RunConfig c = preset("example1");
    c.set_N(n);
    const auto dm = dof_layout(build_initial(c));
    // unconstrained 3 (2(N+1) + N+1) minus 3 contact y, 4 junction copies, 1 junction mu
    EXPECT_EQ(dm.size(), 9 * (n + 1) - 8);
    EXPECT_EQ(dm.size(), 9 * n + 1);
  }
}

TEST(DofLayout, HandEnumerationForThreeSegments) {
  const auto dm = dof_layout(example1(3));
  // per curve: x0..x2 (3), y1..y2 (2), mu0..mu3 (4) less one mu on F1F2; junction x, y
  EXPECT_EQ(dm.size(), 3 * (3 + 2 + 4) - 1 + 2);
  EXPECT_EQ(dm.size(), 28);
  EXPECT_THROW(dm.index({DofField::Y, 0, 0}), ContractViolation);
  EXPECT_THROW(dm.index({DofField::Mu, 2, 3}), ContractViolation);
  EXPECT_NO_THROW(dm.index({DofField::Mu, 1, 3}));
  const int jx = dm.index({DofField::X, kJunctionCurve, 0});
  for (int j = 0; j < 3; ++j) EXPECT_EQ(dm.index({DofField::X, j, 3}), jx);
  EXPECT_EQ(dm.dependent_mu_curve(), 2);
}

TEST(DofLayout, RoundTrip) {
  const auto dm = dof_layout(example1(7));
  for (int i = 0; i < dm.size(); ++i) EXPECT_EQ(dm.index(dm.dof(i)), i);
}

TEST(HalfStepNormal, Examples) {
  const std::vector<Vec2> a{{0, 0}, {1, 0}}, b{{0, 0}, {1, 1}};
  const auto same = half_step_normal(a, a, "c");
  EXPECT_NEAR((same[0] - Vec2(0, -1)).norm(), 0.0, 1e-15);
  const auto w = half_step_normal(a, b, "c");
  EXPECT_NEAR((w[0] - Vec2(0.5, -1)).norm(), 0.0, 1e-15);
  const std::vector<Vec2> b2{{0, 0}, {1, 2}};
  const auto w2 = half_step_normal(a, b2, "c");
  EXPECT_NEAR(((w2[0] - same[0]) - 2.0 * (w[0] - same[0])).norm(), 0.0, 1e-15);
  EXPECT_THROW(half_step_normal(std::vector<Vec2>{{0, 0}, {0, 0}}, a, "c"), DegenerateGeometryError);
  EXPECT_THROW(half_step_normal(a, std::vector<Vec2>{{0, 0}, {1, 0}, {2, 0}}, "c"), ContractViolation);
}

TEST(Assemble, MatrixIsExactlySymmetric) {
  const auto net = example1(4);
  const auto spec = AnisotropySpec::uniform(CurveAnisotropy::kfold(2, 1.0 / 6.0));
  MaterialParams p{-0.7, 0.4, {100, 50, 10}};
  std::array<std::vector<Vec2>, 3> normals;
  for (CurveRole r : kAllRoles) normals[role_index(r)] = half_step_normal(net.nodes(r), net.nodes(r), "c");
  normals[0][1] *= 1.3;
  const auto sys = assemble(net, normals, spec, p, StepperConfig{});
  const Eigen::MatrixXd A(sys.matrix);
  EXPECT_EQ((A - A.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Assemble, IsotropicStraightCurveGivesLaplacianStencil) {
  const auto net = example1(4);
  const auto spec = AnisotropySpec::uniform(CurveAnisotropy::isotropic().with_stabilizer(2.0));
  std::array<std::vector<Vec2>, 3> normals;
  for (CurveRole r : kAllRoles) normals[role_index(r)] = half_step_normal(net.nodes(r), net.nodes(r), "c");
  const auto sys = assemble(net, normals, spec, MaterialParams{}, StepperConfig{});
  const Eigen::MatrixXd A(sys.matrix);
  const auto& dm = sys.dofs;
  // F1F2 is the straight uniform segment (4, rho)
  const double h = 0.25;
  const int r = dm.index({DofField::Y, 2, 2});
  const double c1 = A(r, dm.index({DofField::Y, 2, 1}));
  const double c2 = A(r, dm.index({DofField::Y, 2, 2}));
  const double c3 = A(r, dm.index({DofField::Y, 2, 3}));
  EXPECT_NEAR(std::abs(c2), 2.0 / h, 1e-12);
  EXPECT_NEAR(c1, -0.5 * c2, 1e-12);
  EXPECT_NEAR(c3, -0.5 * c2, 1e-12);
  EXPECT_EQ(A(r, dm.index({DofField::X, 2, 2})), 0.0);
}

TEST(Assemble, FirstEquationVanishesForStationaryState) {
  const auto net = example1(6);
  const auto spec = AnisotropySpec::uniform(CurveAnisotropy::kfold(4, 1.0 / 19.0));
  std::array<std::vector<Vec2>, 3> normals;
  for (CurveRole r : kAllRoles) normals[role_index(r)] = half_step_normal(net.nodes(r), net.nodes(r), "c");
  const auto sys = assemble(net, normals, spec, MaterialParams{}, StepperConfig{});
  const auto& dm = sys.dofs;
  Vector z = Vector::Zero(dm.size());
  for (int i = 0; i < dm.size(); ++i) {
    const auto& k = dm.dof(i);
    if (k.field == DofField::Mu) continue;
    const Vec2 p = k.curve == kJunctionCurve ? net.junction() : net.nodes(kAllRoles[k.curve])[k.node];
    z[i] = k.field == DofField::X ? p.x() : p.y();
  }
  const Vector res = sys.matrix * z - sys.rhs;
  for (int i = 0; i < dm.size(); ++i)
    if (dm.dof(i).field == DofField::Mu) {
      EXPECT_NEAR(res[i], 0.0, 1e-13);
    }
}

TEST(SolveStep, MatchesDenseOracleOnSmallInstance) {
  const std::vector<std::pair<const char*, CurveAnisotropy>> specs{
      {"isotropic", CurveAnisotropy::isotropic()},
      {"weak", CurveAnisotropy::kfold(2, 1.0 / 6.0)},
      {"strong", CurveAnisotropy::kfold(2, 0.4)}};
  for (const auto& [name, a] : specs)
    for (Scheme s : {Scheme::SP, Scheme::ES}) {
      SCOPED_TRACE(std::string(name) + " " + scheme_name(s));
      const auto net = example1(8);
      const auto spec = AnisotropySpec::uniform(a);
      MaterialParams p{-0.7, 0.3, {100, 50, 20}};
      StepperConfig cfg;
      cfg.scheme = s;
      cfg.picard_tol = 1e-14;
      const auto got = solve_step(net, spec, p, cfg);
      const auto ref = oracle::step(curves_of(net), spec, p, cfg.dt, s == Scheme::SP);
      for (int j = 0; j < 3; ++j) {
        const auto nodes = got.network.nodes(kAllRoles[j]);
        for (std::size_t k = 0; k < nodes.size(); ++k) {
          EXPECT_NEAR(nodes[k].x(), ref.x[j][k].x(), 1e-10);
          EXPECT_NEAR(nodes[k].y(), ref.x[j][k].y(), 1e-10);
          EXPECT_NEAR(got.mu[j][k], ref.mu[j][k], 1e-10);
        }
      }
    }
}

TEST(SolveStep, OutputInvariants) {
  const auto net = example1(16);
  const auto spec = AnisotropySpec::uniform(CurveAnisotropy::kfold(2, 1.0 / 6.0));
  const auto s = solve_step(net, spec, MaterialParams{-0.7, -0.7, {100, 100, 100}}, StepperConfig{});
  for (CurveRole r : kAllRoles) EXPECT_EQ(s.network.contact(r).y(), 0.0);
  EXPECT_EQ(s.mu[0].back() + s.mu[1].back() + s.mu[2].back(), 0.0);
  EXPECT_DOUBLE_EQ(s.network.time(), net.time() + StepperConfig{}.dt);
  EXPECT_GE(s.picard_iters, 1);
  EXPECT_LT(s.residual, StepperConfig{}.picard_tol);
}

TEST(SolveStep, SpConservesAreaAndBothSchemesDissipate) {
  const auto net = example1(32);
  const MaterialParams p{-0.7, -0.7, {100, 100, 100}};
  for (const auto& a : {CurveAnisotropy::kfold(2, 1.0 / 6.0), CurveAnisotropy::kfold(4, 1.0 / 19.0)}) {
    const auto spec = AnisotropySpec::uniform(a);
    StepperConfig sp;
    sp.picard_tol = 1e-13;
    const auto s = solve_step(net, spec, p, sp);
    EXPECT_NEAR(discrete_area(s.network), discrete_area(net), 1e-10 * std::abs(discrete_area(net)));
    const double e0 = discrete_energy(net, spec, p);
    EXPECT_LE(discrete_energy(s.network, spec, p), e0 + 1e-12 * std::abs(e0));
    StepperConfig es;
    es.scheme = Scheme::ES;
    const auto e = solve_step(net, spec, p, es);
    EXPECT_LE(discrete_energy(e.network, spec, p), e0 + 1e-12 * std::abs(e0));
  }
}

TEST(SolveStep, EsEqualsFirstPicardIterate) {
  const auto net = example1(12);
  const auto spec = AnisotropySpec::uniform(CurveAnisotropy::kfold(2, 1.0 / 6.0));
  const MaterialParams p{0.5, -0.2, {100, 100, 100}};
  StepperConfig es;
  es.scheme = Scheme::ES;
  StepperConfig first;
  first.picard_tol = 1e300;
  const auto a = solve_step(net, spec, p, es);
  const auto b = solve_step(net, spec, p, first);
  EXPECT_EQ(b.picard_iters, 1);
  EXPECT_TRUE(a.network == b.network);
  EXPECT_EQ(a.mu, b.mu);
}

TEST(SolveStep, NonConvergenceCarriesResidual) {
  const auto net = example1(12);
  const auto spec = AnisotropySpec::uniform(CurveAnisotropy::kfold(2, 1.0 / 6.0));
  StepperConfig cfg;
  cfg.picard_max_iters = 2;
  cfg.picard_tol = 1e-15;
  try {
    solve_step(net, spec, MaterialParams{}, cfg, 42);
    FAIL();
  } catch (const NonConvergenceError& e) {
    EXPECT_GT(e.residual(), 0.0);
    EXPECT_EQ(e.step(), 42);
  }
}

// phi = dt mu^{m+1} in the first equation and omega = X^{m+1} - X^m in the
// second: the normal terms cancel and what remains must sum to zero.
TEST(SolveStep, DiscreteEnergyIdentity) {
  std::mt19937 rng(23);
  for (int t = 0; t < 10; ++t) {
    const auto net = random_network(rng, 10);
    const auto spec = AnisotropySpec::uniform(CurveAnisotropy::kfold(2, 0.1));
    const MaterialParams p{0.3, -0.5, {10, 20, 30}};
    StepperConfig cfg;
    cfg.dt = 1e-3;
    const auto s = solve_step(net, spec, p, cfg);
    const auto f = p.contact_forces();
    double diffusion = 0.0, elastic = 0.0, contact = 0.0, scale = 0.0;
    for (int j = 0; j < 3; ++j) {
      const auto xo = net.nodes(kAllRoles[j]);
      const auto xn = s.network.nodes(kAllRoles[j]);
      const auto& mu = s.mu[j];
      for (std::size_t k = 1; k < xo.size(); ++k) {
        const Vec2 ho = xo[k] - xo[k - 1], hn = xn[k] - xn[k - 1];
        const double L = ho.norm();
        const Mat2 Z = zk_matrix(spec, j, -perp(ho) / L);
        diffusion += cfg.dt * (mu[k] - mu[k - 1]) * (mu[k] - mu[k - 1]) / L;
        const double e = (Z * hn).dot(hn - ho) / L;
        elastic += e;
        scale += std::abs(e);
      }
      const double dx = xn[0].x() - xo[0].x();
      contact += dx * dx / (p.eta[j] * cfg.dt) + f[j] * dx;
    }
    EXPECT_NEAR(diffusion + elastic + contact, 0.0, 1e-12 * std::max(1.0, scale));
  }
}

TEST(SolveStep, RandomNetworksEnergyMonotone) {
  std::mt19937 rng(101);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    const auto net = random_network(rng, 10);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    const MaterialParams p{u(rng), u(rng), {100, 100, 100}};
    const auto spec = t % 2 ? AnisotropySpec::uniform(CurveAnisotropy::kfold(2, 0.2))
                            : AnisotropySpec::uniform(CurveAnisotropy::kfold(4, 1.0 / 19.0));
    for (Scheme s : {Scheme::SP, Scheme::ES}) {
      StepperConfig cfg;
      cfg.scheme = s;
      cfg.dt = 1e-3;
      cfg.picard_tol = 1e-13;
      const auto out = solve_step(net, spec, p, cfg);
      const double e0 = discrete_energy(net, spec, p);
      EXPECT_LE(discrete_energy(out.network, spec, p), e0 + 1e-12 * std::abs(e0));
      if (s == Scheme::SP) {
        EXPECT_NEAR(discrete_area(out.network), discrete_area(net), 1e-10 * std::abs(discrete_area(net)));
      }
      ++checked;
    }
  }
  EXPECT_EQ(checked, 200);
}

TEST(SolveCurveStep, LoneCurveConservesAreaAndDissipates) {
  std::vector<Vec2> nodes;
  const int n = 24;
  for (int k = 0; k <= n; ++k) {
    const double th = std::numbers::pi * (1.0 - static_cast<double>(k) / n);
    nodes.emplace_back(1.5 * std::cos(th), 0.7 * std::sin(th));
  }
  nodes.front().y() = nodes.back().y() = 0.0;
  const auto a = CurveAnisotropy::kfold(4, 1.0 / 15.0);
  const SingleCurve c(nodes, CurveRole::F1V, 1, false);
  const MaterialParams p{0.8, 0.8, {100, 100, 100}};
  const auto spec = AnisotropySpec::uniform(a);
  const auto s = solve_curve_step(nodes, a, false, {100, 0.8}, {100, -0.8}, StepperConfig{});
  const SingleCurve out(s.nodes, CurveRole::F1V, 1, false);
  EXPECT_NEAR(discrete_area(out), discrete_area(c), 1e-10 * std::abs(discrete_area(c)));
  EXPECT_LE(discrete_energy(out, spec, p), discrete_energy(c, spec, p));
  EXPECT_EQ(s.nodes.front().y(), 0.0);
  EXPECT_EQ(s.nodes.back().y(), 0.0);
}

TEST(Config, ValidateRejectsBadStepper) {
  StepperConfig c;
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), ContractViolation);
  MaterialParams p;
  p.eta[1] = 0.0;
  EXPECT_THROW(p.validate(), ContractViolation);
}
