#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "rmtlab/droplet.hpp"

using namespace rmtlab;
namespace mp = boost::multiprecision;

namespace {

const PrecisionContext kCtx{};

double d(const Real& x) { return to_double(x); }
double d(const Complex& z) { return to_double(abs(z)); }

ModelParams params(double a, double c, const Real& t, double N = 1000) {
  PrecisionGuard g(kCtx);
  return ModelParams::from_t(Real(a), Real(c), t, Real(N));
}

ModelParams params_s(double a, double c, double s, double N) {
  PrecisionGuard g(kCtx);
  return ModelParams::from_t(Real(a), Real(c), t_from_s(Real(a), Real(c), Real(s), Real(N)), Real(N));
}

}  // namespace

TEST(Critical, UnitCharge) {
  PrecisionGuard g(kCtx);
  CriticalData cd = critical_data(Real(1), Real(1), Real(3), Real(100));
  EXPECT_EQ(cd.t_c, 3);
  EXPECT_EQ(cd.b_c, 2);
  EXPECT_LT(d(mp::abs(cd.gamma_c - 2 * mp::cbrt(Real(2)))), 1e-70);
  EXPECT_NEAR(d(cd.gamma_c), 2.5198, 1e-4);
  EXPECT_EQ(cd.s, 0);
  EXPECT_THROW(critical_data(Real(0), Real(1), Real(3), Real(10)), Error);
  EXPECT_THROW(critical_data(Real(1), Real(-1), Real(3), Real(10)), Error);
}

TEST(Critical, SRoundTrip) {
  PrecisionGuard g(kCtx);
  Real t = t_from_s(Real(1), Real(2), Real("-1.5"), Real(5000));
  EXPECT_LT(d(mp::abs(critical_data(Real(1), Real(2), t, Real(5000)).s + Real("1.5"))), 1e-70);
}

TEST(Params, ResidualRecorded) {
  PrecisionGuard g(kCtx);
  ModelParams p = ModelParams::from_t(Real(1), Real(1), Real("3.0004"), Real(1000));
  EXPECT_EQ(p.n, 3000);
  EXPECT_LT(d(mp::abs(p.t_residual - Real("0.0004"))), 1e-70);
  ModelParams q = ModelParams::from_n(Real(1), Real(1), 60, Real(20));
  EXPECT_EQ(q.t, 3);
  EXPECT_EQ(q.t_residual, 0);
  EXPECT_EQ(q.Nc(), 20);
  ModelParams r = ModelParams::from_n(Real(1), Real("0.33"), 60, Real(20));
  EXPECT_THROW(r.Nc(), Error);
}

TEST(BranchPoints, Degenerate) {
  auto p = params(1, 1, Real(3));
  PrecisionGuard g(kCtx);
  auto [b, beta] = branch_points(p);
  EXPECT_LT(d(b - Complex(2)), 1e-70);
  EXPECT_LT(d(beta - Complex(2)), 1e-70);
}

TEST(BranchPoints, RealPairAreCriticalPoints) {
  auto p = params(1, 1, Real(4));
  PrecisionGuard g(kCtx);
  auto [b, beta] = branch_points(p);
  EXPECT_LT(d(b + beta - Complex(5)), 1e-70);
  // oracle: both are zeros of phi'
  EXPECT_LT(d(phi_d1(b, p)), 1e-70);
  EXPECT_LT(d(phi_d1(beta, p)), 1e-70);
  EXPECT_EQ(b.im, 0);
  EXPECT_EQ(beta.im, 0);
  EXPECT_LT(beta.re, 2);
  EXPECT_GT(b.re, 2);
}

TEST(BranchPoints, ConjugatePair) {
  auto p = params(1, 1, Real("2.9"));
  PrecisionGuard g(kCtx);
  auto [b, beta] = branch_points(p);
  EXPECT_GT(beta.im, 0);
  EXPECT_LT(b.im, 0);
  EXPECT_LT(d(b - conj(beta)), 1e-70);
  EXPECT_LT(d(phi_d1(b, p)), 1e-70);
}

class GeometrySweep : public ::testing::TestWithParam<std::tuple<double, double, double>> {};

TEST_P(GeometrySweep, Invariants) {
  auto [a, c, tf] = GetParam();
  PrecisionGuard g(kCtx);
  CriticalData cd = critical_data(Real(a), Real(c), Real(1), Real(1));
  auto p = params(a, c, cd.t_c * Real(tf), 2000);
  DropletGeometry geo = make_geometry(p, kCtx, 0);
  EXPECT_LT(d(phi(geo.beta, geo, p)), 1e-20);
  EXPECT_LT(d(geo.s_hat + Real(4) * geo.xi_beta * geo.xi_beta), 1e-60 * (1 + d(geo.s_hat)));
  EXPECT_LT(d(phi(geo.b, geo, p) - Real(2) * phi(geo.b_c_star, geo, p)), 1e-60);
  EXPECT_LT(d(geo.b + geo.beta - Complex((p.a * p.a + p.t) / p.a)), 1e-70);
  if (tf < 1) {
    EXPECT_GT(d(geo.xi_beta.re), 0);
    EXPECT_LT(d(mp::abs(geo.xi_beta.im)), 1e-60 * d(abs(geo.xi_beta)));
  } else {
    EXPECT_GT(d(geo.xi_beta.im), 0);
    EXPECT_LT(d(mp::abs(geo.xi_beta.re)), 1e-60 * d(abs(geo.xi_beta)));
  }
  // b_c* is real on both sides of t_c
  EXPECT_LT(d(mp::abs(geo.b_c_star.im)), 1e-60);
}

INSTANTIATE_TEST_SUITE_P(Params, GeometrySweep,
                         ::testing::Values(std::make_tuple(1.0, 1.0, 0.99), std::make_tuple(1.0, 1.0, 1.01),
                                           std::make_tuple(1.0, 2.0, 0.995), std::make_tuple(2.0, 1.0, 1.003),
                                           std::make_tuple(0.5, 3.0, 0.98)));

TEST(Boundary, CriticalUnitCharge) {
  auto p = params(1, 1, Real(3));
  PrecisionGuard g(kCtx);
  DropletGeometry geo = make_geometry(p, kCtx, 0);
  TraceReport rep = trace_boundary_report(p, geo, 256, kCtx);
  ASSERT_EQ(rep.points.size(), 256u);
  EXPECT_LT(d(rep.max_residual), 1e-15);
  Real best = 10;
  for (const auto& z : rep.points) best = mp::min(best, abs(z - Complex(2)));
  EXPECT_LT(d(best), 1e-10);
  EXPECT_LT(d(rep.closure_gap), 1e-20);
  EXPECT_EQ(winding_number(rep.points, Complex(0)), 1);
  EXPECT_EQ(winding_number(rep.points, Complex(1)), 1);
}

class BoundarySweep : public ::testing::TestWithParam<std::tuple<double, double, double>> {};

TEST_P(BoundarySweep, ClosedCurveAroundSingularities) {
  auto [a, c, tf] = GetParam();
  PrecisionGuard g(kCtx);
  CriticalData cd = critical_data(Real(a), Real(c), Real(1), Real(1));
  auto p = params(a, c, cd.t_c * Real(tf));
  DropletGeometry geo = make_geometry(p, kCtx, 0);
  TraceReport rep = trace_boundary_report(p, geo, 128, kCtx);
  EXPECT_LT(d(rep.max_residual), 1e-15);
  EXPECT_LT(d(rep.closure_gap), 1e-20);
  EXPECT_LT(d(rep.points[0] - geo.beta), 1e-10);
  EXPECT_EQ(winding_number(rep.points, Complex(0)), 1);
  EXPECT_EQ(winding_number(rep.points, Complex(p.a)), 1);
  // points are ordered by angle around a/2
  for (std::size_t k = 0; k < rep.points.size(); ++k) {
    Complex u = rep.points[k] - Complex(p.a / 2), v = rep.points[(k + 1) % rep.points.size()] - Complex(p.a / 2);
    EXPECT_GT(d(arg(v / u)), 0);
  }
}

INSTANTIATE_TEST_SUITE_P(Params, BoundarySweep,
                         ::testing::Values(std::make_tuple(1.0, 1.0, 0.5), std::make_tuple(1.0, 1.0, 0.9),
                                           std::make_tuple(1.0, 1.0, 1.2), std::make_tuple(1.0, 1.0, 1.5),
                                           std::make_tuple(1.0, 2.0, 0.8), std::make_tuple(2.0, 0.5, 1.1)));

TEST(Boundary, RejectsOutOfRange) {
  auto p = params(1, 1, Real(1));
  PrecisionGuard g(kCtx);
  DropletGeometry geo = make_geometry(p, kCtx, 0);
  EXPECT_THROW(trace_boundary(p, geo, 64, kCtx), Error);
  auto q = params(1, 1, Real(3));
  DropletGeometry gq = make_geometry(q, kCtx, 0);
  EXPECT_THROW(trace_boundary(q, gq, 8, kCtx), Error);
}

TEST(GFunction, ExteriorAsymptotics) {
  auto p = params(1, 1, Real("3.3"));
  PrecisionGuard g(kCtx);
  DropletGeometry geo = make_geometry(p, kCtx, 128);
  for (int k = 0; k < 8; ++k) {
    Complex z = polar(Real(1000), real_pi() * (2 * k + 1) / 8);
    Complex lhs = g_function(z, geo, p) - log(z);
    Complex rhs = (p.c / p.t) * log(z / (z - Complex(p.a)));
    EXPECT_LT(d(lhs - rhs), 1e-60);
    EXPECT_LT(d(lhs), 1e-3);
  }
  EXPECT_FALSE(inside_boundary(Complex(50), geo));
  EXPECT_TRUE(inside_boundary(Complex(Real("0.5")), geo));
}

TEST(GFunction, JumpVanishesOnBoundary) {
  auto p = params(1, 1, Real("2.7"));
  PrecisionGuard g(kCtx);
  DropletGeometry geo = make_geometry(p, kCtx, 128);
  for (std::size_t k = 0; k < geo.boundary.size(); k += 7) {
    const Complex& z = geo.boundary[k];
    Real jump = (g_branch(z, GRegion::exterior, geo, p) - g_branch(z, GRegion::interior, geo, p)).re;
    EXPECT_LT(d(mp::abs(jump)), 1e-15);
  }
  EXPECT_THROW(g_function(geo.boundary[3], geo, p), Error);
}

TEST(GFunction, InteriorAtCriticalPoint) {
  auto p = params(1, 1, Real(3));
  PrecisionGuard g(kCtx);
  DropletGeometry geo = make_geometry(p, kCtx, 0);
  Complex v = g_branch(Complex(2), GRegion::interior, geo, p);
  Real expect = Real(2) / 3 + (4 * mp::log(Real(2)) - 2) / 3;
  EXPECT_LT(d(v - Complex(expect)), 1e-70);
}

TEST(ConformalMap, ZeroAtBStarAndBranchPointValues) {
  for (double s : {-1.5, 1.5}) {
    auto p = params_s(1, 1, s, 1e4);
    PrecisionGuard g(kCtx);
    DropletGeometry geo = make_geometry(p, kCtx, 0);
    EXPECT_LT(d(conformal_xi(geo.b_c_star, geo, p)), 1e-70);
    Complex xb = conformal_xi(geo.beta, geo, p);
    Complex xbb = conformal_xi(geo.b, geo, p);
    EXPECT_LT(d(xb + xbb), 1e-25 * d(geo.xi_beta));
    EXPECT_LT(d(xb - geo.xi_beta), 1e-25 * d(geo.xi_beta));
  }
}

TEST(ConformalMap, CubicResidualOnRing) {
  for (double s : {-2.0, 0.0, 2.0}) {
    auto p = params_s(1, 1, s, 1e5);
    PrecisionGuard g(kCtx);
    DropletGeometry geo = make_geometry(p, kCtx, 0);
    Complex xb3 = geo.xi_beta * geo.xi_beta * geo.xi_beta;
    for (int k = 0; k < 12; ++k) {
      Complex z = Complex(geo.b_c) + polar(geo.disk_radius * Real("0.8"), real_pi() * k / 6);
      Complex x = conformal_xi(z, geo, p);
      Complex np = p.N * phi(z, geo, p);
      Complex lhs = Complex(Real(0), Real(-2)) * (Real(4) / 3 * x * x * x + geo.s_hat * x + Real(8) / 3 * xb3);
      EXPECT_LT(d(lhs - np), 1e-18 * d(np));
    }
  }
}

TEST(ConformalMap, UnivalentOnDisk) {
  // distinct points map to distinct values, and the map preserves orientation
  auto p = params_s(1, 1, -1, 1e4);
  PrecisionGuard g(kCtx);
  DropletGeometry geo = make_geometry(p, kCtx, 0);
  std::vector<Complex> img;
  const int M = 48;
  for (int k = 0; k < M; ++k)
    img.push_back(conformal_xi(Complex(geo.b_c) + polar(geo.disk_radius * Real("0.95"), 2 * real_pi() * k / M), geo, p));
  EXPECT_EQ(winding_number(img, Complex(0)), 1);
}

TEST(ConformalMap, OutsideDiskIsDomainError) {
  auto p = params_s(1, 1, 1, 1e4);
  PrecisionGuard g(kCtx);
  DropletGeometry geo = make_geometry(p, kCtx, 0);
  try {
    conformal_xi(Complex(Real(3)), geo, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(XiDerivatives, CriticalLeadingTerms) {
  auto p = params(1, 1, Real(3), 1e6);
  PrecisionGuard g(kCtx);
  DropletGeometry geo = make_geometry(p, kCtx, 0);
  CriticalData cd = critical_data(p);
  double tol = 10 * std::pow(1e6, -2.0 / 3);
  EXPECT_LT(d(geo.r1 - Complex(Real(-1) / cd.gamma_c)), tol);
  EXPECT_LT(d(geo.r2 - Complex(cd.t_c / (2 * p.a * cd.b_c * mp::sqrt(p.c) * cd.gamma_c))), tol);
}

TEST(XiDerivatives, ClosedFormMatchesFiniteDifferences) {
  for (double s : {-1.0, 1.0}) {
    auto p = params_s(1, 1, s, 1e4);
    PrecisionGuard g(kCtx);
    DropletGeometry geo = make_geometry(p, kCtx, 0);
    Real h("1e-6");
    Complex f0 = conformal_xi(geo.b_c_star, geo, p);
    Complex fp = conformal_xi(geo.b_c_star + Complex(h), geo, p);
    Complex fm = conformal_xi(geo.b_c_star - Complex(h), geo, p);
    Complex iN13(Real(0), mp::cbrt(p.N));
    Complex second = (fp - Real(2) * f0 + fm) / (h * h);
    Complex first = (fp - fm) / (2 * h);
    EXPECT_LT(d(second - iN13 * geo.r2), 1e-8 * d(iN13 * geo.r2));
    EXPECT_LT(d(first - iN13 * geo.r1), 1e-8 * d(iN13 * geo.r1));
    // third derivative from a wider stencil
    Real H("1e-4");
    Complex t2 = conformal_xi(geo.b_c_star + Complex(2 * H), geo, p);
    Complex t1 = conformal_xi(geo.b_c_star + Complex(H), geo, p);
    Complex u1 = conformal_xi(geo.b_c_star - Complex(H), geo, p);
    Complex u2 = conformal_xi(geo.b_c_star - Complex(2 * H), geo, p);
    Complex third = (t2 - Real(2) * t1 + Real(2) * u1 - u2) / (2 * H * H * H);
    EXPECT_LT(d(third - iN13 * geo.r3), 1e-6 * d(iN13 * geo.r3));
  }
}

TEST(XiDerivatives, ContinuousAcrossCriticalPoint) {
  // the closed forms at small s approach the s = 0 limit values
  auto p0 = params(1, 1, Real(3), 1e4);
  PrecisionGuard g(kCtx);
  DropletGeometry g0 = make_geometry(p0, kCtx, 0);
  for (double s : {-1e-6, 1e-6}) {
    auto p = params_s(1, 1, s, 1e4);
    DropletGeometry gs = make_geometry(p, kCtx, 0);
    EXPECT_LT(d(gs.r1 - g0.r1), 1e-5);
    EXPECT_LT(d(gs.r2 - g0.r2), 1e-5);
    EXPECT_LT(d(gs.r3 - g0.r3), 1e-5);
  }
}

TEST(Scaling, SHatOverS) {
  std::vector<double> C;
  for (double N : {1e3, 1e4, 1e5}) {
    auto p = params_s(1, 1, 1.0, N);
    PrecisionGuard g(kCtx);
    DropletGeometry geo = make_geometry(p, kCtx, 0);
    CriticalData cd = critical_data(p);
    Complex ratio = geo.s_hat / Complex(cd.s);
    C.push_back(d(ratio - Complex(1)) * std::pow(N, 2.0 / 3));
  }
  double lo = *std::min_element(C.begin(), C.end()), hi = *std::max_element(C.begin(), C.end());
  EXPECT_GT(lo, 0);
  EXPECT_LT(hi / lo, 1.5);
}

TEST(Scaling, BStarExpansion) {
  std::vector<double> C;
  for (double N : {1e3, 1e4, 1e5}) {
    auto p = params_s(1, 1, 1.0, N);
    PrecisionGuard g(kCtx);
    DropletGeometry geo = make_geometry(p, kCtx, 0);
    CriticalData cd = critical_data(p);
    Complex approx(cd.b_c + cd.s / (2 * cd.gamma_c * mp::pow(p.N, Real(2) / 3)));
    C.push_back(d(geo.b_c_star - approx) * std::pow(N, 4.0 / 3));
  }
  double hi = *std::max_element(C.begin(), C.end());
  EXPECT_LT(hi, 10);
  EXPECT_LT(C[2], 1.5 * C[1]);
}
