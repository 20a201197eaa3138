#include <gtest/gtest.h>

#include <boost/multiprecision/gmp.hpp>

#include <cmath>
#include <random>

#include "rmtlab/mpnum.hpp"

using namespace rmtlab;
namespace mp = boost::multiprecision;

namespace {

const PrecisionContext kCtx{};

double rel(const Real& a, const Real& b) {
  Real d = mp::abs(a - b);
  Real s = mp::abs(b);
  return to_double(s == 0 ? d : d / s);
}

double rel(const Complex& a, const Complex& b) {
  Real s = abs(b);
  Real d = abs(a - b);
  return to_double(s == 0 ? d : d / s);
}

// erf Maclaurin series, run at a fixed high precision; oracle only
Complex erfc_oracle(const Complex& z, unsigned bits, int min_terms) {
  PrecisionGuard g(bits);
  Complex w = promote(z);
  Complex mz2 = -(w * w);
  Complex term = w, sum = w;
  for (int k = 1; k < 4000; ++k) {
    term = term * mz2 / Real(k);
    Complex add = term / Real(2 * k + 1);
    sum += add;
    if (k >= min_terms && abs(add) < mp::ldexp(Real(1), -static_cast<int>(bits))) break;
  }
  return Complex(1) - sum * (2 / mp::sqrt(real_pi()));
}

// Airy Maclaurin from the power series sum_k a_k x^k with a_{k+3} = a_k/((k+2)(k+3))
std::pair<Real, Real> airy_oracle(const Real& x, unsigned bits) {
  PrecisionGuard g(bits);
  Real X = promote(x);
  std::vector<Real> a(3000);
  a[0] = 1 / (mp::pow(Real(3), Real(2) / 3) * mp::tgamma(Real(2) / 3));
  a[1] = -1 / (mp::pow(Real(3), Real(1) / 3) * mp::tgamma(Real(1) / 3));
  a[2] = 0;
  for (std::size_t k = 0; k + 3 < a.size(); ++k) a[k + 3] = a[k] / ((k + 2) * (k + 3));
  Real v = 0, d = 0, p = 1;
  for (std::size_t k = 0; k < a.size(); ++k) {
    v += a[k] * p;
    if (k + 1 < a.size()) d += (k + 1) * a[k + 1] * p;
    p *= X;
  }
  return {v, d};
}

}  // namespace

TEST(LogGamma, SmallIntegers) {
  PrecisionGuard g(kCtx);
  EXPECT_EQ(to_double(log_gamma(Real(1))), 0.0);
  EXPECT_LT(rel(log_gamma(Real(5)), mp::log(Real(24))), 1e-70);
}

TEST(LogGamma, FactorialOracle) {
  PrecisionGuard g(kCtx);
  mp::mpz_int fact = 1;
  for (int k = 2; k <= 100; ++k) fact *= k;
  Real exact = mp::log(Real(fact.str()));
  EXPECT_LT(rel(log_gamma(Real(101)), exact), 10 * kCtx.target_rel_tol);
}

TEST(LogGamma, RecurrenceOnGrid) {
  PrecisionGuard g(kCtx);
  for (int i = 0; i <= 398; ++i) {
    Real x = Real(1) / 2 + Real(i) / 2;
    Real lhs = log_gamma(x + 1);
    Real rhs = log_gamma(x) + mp::log(x);
    Real scale = mp::max(mp::abs(lhs), Real(1));
    EXPECT_LT(to_double(mp::abs(lhs - rhs) / scale), 1e-25) << "x=" << to_double(x);
  }
}

TEST(LogGamma, RejectsNonPositive) {
  EXPECT_THROW(log_gamma(Real(0)), Error);
  EXPECT_THROW(log_gamma(Real(-2.5)), Error);
}

TEST(ErfcReal, TrivialValues) {
  PrecisionGuard g(kCtx);
  EXPECT_EQ(to_double(erfc_real(Real(0))), 1.0);
  for (double x : {0.1, 0.7, 1.5, 3.0, 6.0}) {
    Real s = erfc_real(Real(x)) + erfc_real(Real(-x));
    EXPECT_LT(to_double(mp::abs(s - 2)), 1e-70);
  }
}

TEST(ErfcReal, SeriesOracleAtOne) {
  Complex ref = erfc_oracle(Complex(1), 2 * kCtx.mantissa_bits, 60);
  PrecisionGuard g(kCtx);
  EXPECT_LT(rel(erfc_real(Real(1)), ref.re), 1e-20);
}

TEST(ErfcComplex, ZeroAndRealAxis) {
  PrecisionGuard g(kCtx);
  EXPECT_LT(rel(erfc_complex(Complex(0)), Complex(1)), 1e-70);
  for (double x : {-3.0, -0.5, 0.25, 1.0, 4.0, 7.5, 9.0, 15.0}) {
    Complex c = erfc_complex(Complex(x));
    EXPECT_LT(rel(c.re, erfc_real(Real(x))), 1e-25) << x;
    EXPECT_EQ(to_double(c.im), 0.0) << x;
  }
}

TEST(ErfcComplex, SeriesOracleAtOnePlusI) {
  Complex ref = erfc_oracle(Complex(1.0, 1.0), 2 * kCtx.mantissa_bits, 60);
  PrecisionGuard g(kCtx);
  EXPECT_LT(rel(erfc_complex(Complex(1.0, 1.0)), ref), 1e-25);
}

TEST(ErfcComplex, ConjugateSymmetryOnImaginaryAxis) {
  PrecisionGuard g(kCtx);
  for (int i = 0; i <= 20; ++i) {
    Complex z(Real(0), Real(i) / 10);
    Complex a = erfc_complex(conj(z));
    Complex b = conj(erfc_complex(z));
    EXPECT_LT(to_double(abs(a - b)), 1e-25);
  }
}

TEST(ErfcComplex, ReflectionAndBranchOverlap) {
  PrecisionGuard g(kCtx);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int i = 0; i < 40; ++i) {
    Complex z(u(rng), u(rng));
    Complex s = erfc_complex(z) + erfc_complex(-z);
    EXPECT_LT(to_double(abs(s - Complex(2))), 1e-25 * std::max(1.0, to_double(abs(erfc_complex(z)))));
  }
  // continued-fraction region against the series oracle
  for (auto z : {Complex(8.5, 0.5), Complex(9.0, -2.0), Complex(6.5, 6.5)}) {
    Complex ref = erfc_oracle(z, 1024, 60);
    EXPECT_LT(rel(erfc_complex(z), ref), 1e-25);
  }
}

TEST(Airy, ClosedFormsAtZero) {
  PrecisionGuard g(kCtx);
  auto [ai, aip] = airy_ai(Real(0));
  Real ai0 = mp::pow(Real(3), Real(-2) / 3) / mp::tgamma(Real(2) / 3);
  Real aip0 = -mp::pow(Real(3), Real(-1) / 3) / mp::tgamma(Real(1) / 3);
  EXPECT_LT(rel(ai, ai0), 1e-70);
  EXPECT_LT(rel(aip, aip0), 1e-70);
}

TEST(Airy, MatchesHighPrecisionSeries) {
  for (double x : {-2.0, -0.75, 1.0, 4.0, 6.5, 9.0, 11.5, 12.5, 14.0}) {
    auto ref = airy_oracle(Real(x), 1400);
    PrecisionGuard g(kCtx);
    auto [ai, aip] = airy_ai(Real(x));
    EXPECT_LT(rel(ai, ref.first), 1e-20) << x;
    EXPECT_LT(rel(aip, ref.second), 1e-20) << x;
  }
}

TEST(Airy, DefiningOdeResidual) {
  PrecisionGuard g(kCtx);
  Real h = Real(1) / 1000000;
  for (int i = 0; i <= 28; ++i) {
    Real x = Real(-2) + Real(i) / 2;
    // five-point stencil on Ai' gives Ai''
    Real d = (-airy_ai(x + 2 * h).second + 8 * airy_ai(x + h).second - 8 * airy_ai(x - h).second +
              airy_ai(x - 2 * h).second) /
             (12 * h);
    Real ai = airy_ai(x).first;
    Real res = mp::abs(d - x * ai);
    EXPECT_LT(to_double(res), 1e-18) << to_double(x);
    if (x != 0) EXPECT_LT(to_double(res / mp::abs(x * ai)), 1e-18) << to_double(x);
  }
}

TEST(LogMagPhase, AgreesWithComplexArithmetic) {
  PrecisionGuard g(kCtx);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    Complex a(u(rng), u(rng)), b(u(rng), u(rng));
    a *= exp(Complex(Real(40) * u(rng)));
    b *= exp(Complex(Real(40) * u(rng)));
    auto la = LogMagPhase::from_complex(a), lb = LogMagPhase::from_complex(b);
    EXPECT_LT(rel((la * lb).to_complex(), a * b), 1e-25);
    EXPECT_LT(rel((la + lb).to_complex(), a + b), 1e-25);
    EXPECT_LT(rel(lmp_sum({la, lb, la}).to_complex(), a + b + a), 1e-25);
  }
}

TEST(LogMagPhase, HugeMagnitudesStayFinite) {
  PrecisionGuard g(kCtx);
  LogMagPhase big(Real(1e6), Real(1));
  LogMagPhase p = big * big;
  EXPECT_EQ(to_double(p.log_mag), 2e6);
  EXPECT_LT(to_double(mp::abs(p.phase - 2)), 1e-70);
  EXPECT_TRUE((LogMagPhase::zero() + big).log_mag == big.log_mag);
}

TEST(Ode, Exponential) {
  PrecisionGuard g(kCtx);
  Field f = [](const Complex&, const State& y, State& dy) { dy[0] = y[0]; };
  State y = ode_integrate(f, {Complex(1)}, Complex(0), Complex(1), kCtx);
  EXPECT_LT(rel(y[0].re, mp::exp(Real(1))), 1e-25);
}

TEST(Ode, RotationReturnsHome) {
  PrecisionGuard g(kCtx);
  Field f = [](const Complex&, const State& y, State& dy) { dy[0] = I_unit() * y[0]; };
  Complex y0(Real(0.3), Real(-0.7));
  State y = ode_integrate(f, {y0}, Complex(0), Complex(2 * real_pi()), kCtx);
  EXPECT_LT(to_double(abs(y[0] - y0)), 1e-22);
}

TEST(Ode, ComplexSegment) {
  PrecisionGuard g(kCtx);
  // y' = 2 t y along 0 -> 1+i, y = exp(t^2)
  Field f = [](const Complex& t, const State& y, State& dy) { dy[0] = Complex(2) * t * y[0]; };
  Complex t1(1.0, 1.0);
  State y = ode_integrate(f, {Complex(1)}, Complex(0), t1, kCtx);
  EXPECT_LT(rel(y[0], exp(t1 * t1)), 1e-25);
}

TEST(Ode, SelfConvergence) {
  // nonlinear test field; reference from a doubled-precision run
  Field f = [](const Complex& t, const State& y, State& dy) {
    dy[0] = y[1];
    dy[1] = t * y[0] + Complex(2) * y[0] * y[0] * y[0];
  };
  State y0 = {Complex(0.3), Complex(-0.2)};
  PrecisionContext hi(512, 1e-60);
  State ref;
  {
    PrecisionGuard g(hi);
    ref = ode_integrate(f, y0, Complex(0), Complex(-3), hi);
  }
  PrecisionGuard g(kCtx);
  auto err = [&](double tol) {
    PrecisionContext c(256, tol);
    State y = ode_integrate(f, y0, Complex(0), Complex(-3), c);
    return to_double(abs(y[0] - ref[0]) + abs(y[1] - ref[1]));
  };
  double e1 = err(1e-16), e2 = err(5e-17);
  EXPECT_LT(e1, 1e-14);
  EXPECT_LE(e2, std::max(e1 / 2, 1e-40));
}

TEST(Ode, UnderflowReportsLastState) {
  PrecisionGuard g(kCtx);
  // y' = y^2, y(0)=1 blows up at t=1
  Field f = [](const Complex&, const State& y, State& dy) { dy[0] = y[0] * y[0]; };
  try {
    ode_integrate(f, {Complex(1)}, Complex(0), Complex(2), PrecisionContext(128, 1e-20));
    FAIL() << "expected stiffness error";
  } catch (const StiffnessError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::stiffness);
    EXPECT_LE(to_double(e.t_reached.re), 1.0);
    EXPECT_GT(to_double(e.t_reached.re), 0.9);
    EXPECT_EQ(e.last_state.size(), 1u);
  }
}
