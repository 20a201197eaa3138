#include "rmtlab/mpnum.hpp"

#include <boost/math/constants/constants.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace rmtlab {

namespace mp = boost::multiprecision;

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::config: return "config";
    case ErrorKind::numerics: return "numerics";
    case ErrorKind::accuracy: return "accuracy";
    case ErrorKind::precision: return "precision";
    case ErrorKind::range: return "range";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::stiffness: return "stiffness";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::boundary: return "boundary";
    case ErrorKind::ambiguity: return "ambiguity";
    case ErrorKind::verify: return "verify";
  }
  return "unknown";
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::verify: return 1;
    case ErrorKind::geometry:
    case ErrorKind::boundary: return 2;
    case ErrorKind::config:
    case ErrorKind::unsupported: return 3;
    default: return 4;
  }
}

// ---------------------------------------------------------------- precision

unsigned bits_to_digits10(unsigned bits) {
  return static_cast<unsigned>(std::ceil(bits * 0.30102999566398120));
}

PrecisionContext::PrecisionContext(unsigned bits, double tol) : mantissa_bits(bits), target_rel_tol(tol) {
  if (bits < 64) throw Error(ErrorKind::config, "mantissa_bits must be >= 64");
  if (!(tol > 0)) throw Error(ErrorKind::config, "target_rel_tol must be positive");
}

unsigned PrecisionContext::digits10() const { return bits_to_digits10(mantissa_bits); }

PrecisionContext PrecisionContext::with_bits(unsigned bits) const {
  return PrecisionContext(bits, target_rel_tol);
}

PrecisionContext PrecisionContext::doubled() const {
  return PrecisionContext(2 * mantissa_bits, target_rel_tol * target_rel_tol);
}

PrecisionGuard::PrecisionGuard(unsigned bits) : saved_(Real::default_precision()) {
  Real::default_precision(bits_to_digits10(bits));
}

PrecisionGuard::~PrecisionGuard() { Real::default_precision(saved_); }

unsigned current_bits() {
  Real probe = 0;
  return static_cast<unsigned>(mpfr_get_prec(probe.backend().data()));
}

Real promote(const Real& x) { return Real(x, Real::default_precision()); }

Real real_pi() {
  Real p = 0;
  mpfr_const_pi(p.backend().data(), MPFR_RNDN);
  return p;
}

double to_double(const Real& x) { return x.convert_to<double>(); }

std::string to_string(const Real& x, int sig_digits) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(sig_digits) << std::scientific << x;
  return os.str();
}

// ---------------------------------------------------------------- complex

Complex& Complex::operator+=(const Complex& o) {
  re += o.re;
  im += o.im;
  return *this;
}
Complex& Complex::operator-=(const Complex& o) {
  re -= o.re;
  im -= o.im;
  return *this;
}
Complex& Complex::operator*=(const Complex& o) {
  Real r = re * o.re - im * o.im;
  im = re * o.im + im * o.re;
  re = std::move(r);
  return *this;
}
Complex& Complex::operator/=(const Complex& o) {
  *this = *this / o;
  return *this;
}
Complex& Complex::operator*=(const Real& o) {
  re *= o;
  im *= o;
  return *this;
}
Complex& Complex::operator/=(const Real& o) {
  re /= o;
  im /= o;
  return *this;
}

Complex operator+(const Complex& a, const Complex& b) { return Complex(a.re + b.re, a.im + b.im); }
Complex operator-(const Complex& a, const Complex& b) { return Complex(a.re - b.re, a.im - b.im); }
Complex operator*(const Complex& a, const Complex& b) {
  return Complex(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re);
}
Complex operator/(const Complex& a, const Complex& b) {
  // Smith's scaling keeps |b|^2 from overflowing at extreme exponents
  if (mp::abs(b.re) >= mp::abs(b.im)) {
    Real r = b.im / b.re;
    Real d = b.re + b.im * r;
    return Complex((a.re + a.im * r) / d, (a.im - a.re * r) / d);
  }
  Real r = b.re / b.im;
  Real d = b.re * r + b.im;
  return Complex((a.re * r + a.im) / d, (a.im * r - a.re) / d);
}
Complex operator*(const Complex& a, const Real& b) { return Complex(a.re * b, a.im * b); }
Complex operator*(const Real& a, const Complex& b) { return Complex(a * b.re, a * b.im); }
Complex operator/(const Complex& a, const Real& b) { return Complex(a.re / b, a.im / b); }
Complex operator-(const Complex& a) { return Complex(-a.re, -a.im); }

Complex conj(const Complex& z) { return Complex(z.re, -z.im); }
Real abs(const Complex& z) { return mp::hypot(z.re, z.im); }
Real norm2(const Complex& z) { return z.re * z.re + z.im * z.im; }
Real arg(const Complex& z) { return mp::atan2(z.im, z.re); }

Complex exp(const Complex& z) {
  Real m = mp::exp(z.re);
  return Complex(m * mp::cos(z.im), m * mp::sin(z.im));
}

Complex log(const Complex& z) {
  if (z.re == 0 && z.im == 0) throw Error(ErrorKind::domain, "log of zero");
  return Complex(mp::log(abs(z)), arg(z));
}

Complex sqrt(const Complex& z) {
  if (z.re == 0 && z.im == 0) return Complex(Real(0) * z.re, Real(0) * z.re);
  Real m = abs(z);
  Real t = mp::sqrt((m + mp::abs(z.re)) / 2);
  if (z.re >= 0) return Complex(t, z.im / (2 * t));
  Real im = z.im >= 0 ? t : Real(-t);
  return Complex(mp::abs(z.im) / (2 * t), im);
}

Complex pow(const Complex& z, long k) {
  if (k < 0) return Complex(1) / pow(z, -k);
  Complex result(Real(1) + 0 * z.re);
  Complex base = z;
  while (k > 0) {
    if (k & 1) result *= base;
    k >>= 1;
    if (k) base *= base;
  }
  return result;
}

Complex cbrt_principal(const Complex& z) {
  if (z.re == 0 && z.im == 0) return z;
  Real m = mp::cbrt(abs(z));
  Real th = arg(z) / 3;
  return polar(m, th);
}

Complex polar(const Real& r, const Real& theta) { return Complex(r * mp::cos(theta), r * mp::sin(theta)); }

Complex promote(const Complex& z) { return Complex(promote(z.re), promote(z.im)); }

bool is_finite(const Complex& z) { return mp::isfinite(z.re) && mp::isfinite(z.im); }

// ---------------------------------------------------------------- log-magnitude form

Real wrap_phase(const Real& ph) {
  Real two_pi = 2 * real_pi();
  Real p = ph - two_pi * mp::floor(ph / two_pi);  // [0, 2pi)
  if (p > real_pi()) p -= two_pi;
  return p;
}

LogMagPhase::LogMagPhase() : log_mag(0), phase(0) {
  log_mag = -std::numeric_limits<double>::infinity();
}

LogMagPhase::LogMagPhase(const Real& lm, const Real& ph) : log_mag(lm), phase(wrap_phase(ph)) {}

LogMagPhase LogMagPhase::zero() { return LogMagPhase(); }

LogMagPhase LogMagPhase::from_complex(const Complex& z) {
  if (z.re == 0 && z.im == 0) return zero();
  return LogMagPhase(mp::log(abs(z)), arg(z));
}

LogMagPhase LogMagPhase::from_log(const Complex& log_value) { return LogMagPhase(log_value.re, log_value.im); }

bool LogMagPhase::is_zero() const { return mp::isinf(log_mag) && log_mag < 0; }

Complex LogMagPhase::to_complex() const {
  if (is_zero()) return Complex(0);
  return polar(mp::exp(log_mag), phase);
}

LogMagPhase LogMagPhase::conj() const {
  if (is_zero()) return *this;
  return LogMagPhase(log_mag, -phase);
}

LogMagPhase operator*(const LogMagPhase& a, const LogMagPhase& b) {
  if (a.is_zero() || b.is_zero()) return LogMagPhase::zero();
  return LogMagPhase(a.log_mag + b.log_mag, a.phase + b.phase);
}

LogMagPhase operator/(const LogMagPhase& a, const LogMagPhase& b) {
  if (b.is_zero()) throw Error(ErrorKind::domain, "division by zero in LogMagPhase");
  if (a.is_zero()) return a;
  return LogMagPhase(a.log_mag - b.log_mag, a.phase - b.phase);
}

LogMagPhase operator+(const LogMagPhase& a, const LogMagPhase& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const LogMagPhase& big = a.log_mag >= b.log_mag ? a : b;
  const LogMagPhase& small = a.log_mag >= b.log_mag ? b : a;
  Complex ratio = polar(mp::exp(small.log_mag - big.log_mag), small.phase - big.phase);
  Complex s = Complex(1) + ratio;
  if (s.re == 0 && s.im == 0) return LogMagPhase::zero();
  return LogMagPhase(big.log_mag + mp::log(abs(s)), big.phase + arg(s));
}

LogMagPhase lmp_sum(const std::vector<LogMagPhase>& terms) {
  const LogMagPhase* top = nullptr;
  for (const auto& t : terms)
    if (!t.is_zero() && (!top || t.log_mag > top->log_mag)) top = &t;
  if (!top) return LogMagPhase::zero();
  Real ref_mag = top->log_mag;
  Real ref_ph = top->phase;
  // compensated (Kahan) accumulation of the rescaled terms
  Complex sum(0), comp(0);
  for (const auto& t : terms) {
    if (t.is_zero()) continue;
    Complex v = polar(mp::exp(t.log_mag - ref_mag), t.phase - ref_ph) - comp;
    Complex nxt = sum + v;
    comp = (nxt - sum) - v;
    sum = nxt;
  }
  if (sum.re == 0 && sum.im == 0) return LogMagPhase::zero();
  return LogMagPhase(ref_mag + mp::log(abs(sum)), ref_ph + arg(sum));
}

// ---------------------------------------------------------------- special functions

Real log_gamma(const Real& x, const PrecisionContext& ctx) {
  if (!(x > 0)) throw Error(ErrorKind::domain, "log_gamma requires x > 0");
  PrecisionGuard g(ctx);
  Real y = promote(x);
  return mp::lgamma(y);
}

Real erfc_real(const Real& x, const PrecisionContext& ctx) {
  PrecisionGuard g(ctx);
  return mp::erfc(promote(x));
}

namespace {

// Maclaurin series of erf, run with enough guard bits to absorb the
// e^{|z|^2} term growth and the cancellation in 1 - erf.
Complex erfc_series(const Complex& z, unsigned bits) {
  Real az2 = to_double(norm2(z));
  Real rez2 = z.re * z.re - z.im * z.im;
  double lossy = to_double(az2) + std::max(0.0, to_double(rez2));
  unsigned guard = static_cast<unsigned>(std::ceil(lossy / std::log(2.0))) + 40;
  Complex out;
  {
    PrecisionGuard g(bits + guard);
    Complex w = promote(z);
    Complex mz2 = -(w * w);
    Complex term = w;
    Complex sum = w;
    Real eps = mp::ldexp(Real(1), -static_cast<int>(bits + guard));
    for (long k = 1; k < 1000000; ++k) {
      term *= mz2;
      term /= Real(k);
      Complex add = term / Real(2 * k + 1);
      sum += add;
      if (k > to_double(az2) && abs(add) <= eps * abs(sum)) break;
    }
    Real two_over_sqrtpi = 2 / mp::sqrt(real_pi());
    out = Complex(1) - sum * two_over_sqrtpi;
  }
  return Complex(Real(out.re, bits_to_digits10(bits)), Real(out.im, bits_to_digits10(bits)));
}

// Laplace continued fraction, Re z > 0:
// erfc z = e^{-z^2}/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
bool erfc_cf(const Complex& z, unsigned bits, Complex& out) {
  PrecisionGuard g(bits + 32);
  Complex w = promote(z);
  Real eps = mp::ldexp(Real(1), -static_cast<int>(bits + 8));
  Real tiny = mp::ldexp(Real(1), -static_cast<int>(4 * bits));
  // modified Lentz
  Complex f = w;
  if (abs(f) == 0) f = Complex(tiny);
  Complex C = f, D(0);
  for (long k = 1; k < 200000; ++k) {
    Real ak = Real(k) / 2;
    D = w + ak * D;
    if (abs(D) == 0) D = Complex(tiny);
    C = w + Complex(ak) / C;
    if (abs(C) == 0) C = Complex(tiny);
    D = Complex(1) / D;
    Complex delta = C * D;
    f *= delta;
    if (abs(delta - Complex(1)) < eps) {
      out = exp(-(w * w)) / (f * mp::sqrt(real_pi()));
      return true;
    }
  }
  return false;
}

}  // namespace

Complex erfc_complex(const Complex& z, const PrecisionContext& ctx) {
  if (!is_finite(z)) throw Error(ErrorKind::domain, "erfc_complex: non-finite argument");
  unsigned bits = ctx.mantissa_bits;
  PrecisionGuard g(ctx);
  if (z.re < 0) return Complex(2) - erfc_complex(-z, ctx);
  Real m = abs(z);
  if (m <= 8) return erfc_series(z, bits);
  Complex out;
  if (erfc_cf(z, bits, out)) return promote(out);
  return erfc_series(z, bits);
}

std::pair<Real, Real> airy_ai(const Real& x, const PrecisionContext& ctx) {
  PrecisionGuard outer(ctx);
  unsigned bits = ctx.mantissa_bits;
  double xd = to_double(x);
  Real ai, aip;
  if (xd <= 12.0) {
    // Maclaurin; at positive x the series terms reach e^{(2/3)x^{3/2}} while
    // Ai decays like e^{-(2/3)x^{3/2}}, so the guard covers twice that.
    double zeta = xd > 0 ? (2.0 / 3.0) * std::pow(xd, 1.5) : 0.0;
    unsigned guard = static_cast<unsigned>(std::ceil(2 * zeta / std::log(2.0))) + 40;
    PrecisionGuard g(bits + guard);
    Real X = promote(x);
    Real x3 = X * X * X;
    Real c1 = 1 / (mp::pow(Real(3), Real(2) / 3) * mp::tgamma(Real(2) / 3));
    Real c2 = 1 / (mp::pow(Real(3), Real(1) / 3) * mp::tgamma(Real(1) / 3));
    Real t = 1, u = X, d = X * X / 2, e = 1;
    Real f = t, gs = u, fp = d, gp = e;
    Real eps = mp::ldexp(Real(1), -static_cast<int>(bits + guard));
    for (long k = 0; k < 100000; ++k) {
      Real k3 = 3 * k;
      t *= x3 / ((k3 + 2) * (k3 + 3));
      u *= x3 / ((k3 + 3) * (k3 + 4));
      d *= x3 / ((k3 + 3) * (k3 + 5));
      e *= x3 / ((k3 + 1) * (k3 + 3));
      f += t;
      gs += u;
      fp += d;
      gp += e;
      Real big = mp::abs(t) + mp::abs(u) + mp::abs(d) + mp::abs(e);
      Real ref = mp::abs(f) + mp::abs(gs) + mp::abs(fp) + mp::abs(gp);
      if (k > 4 && big <= eps * ref) break;
    }
    ai = c1 * f - c2 * gs;
    aip = c1 * fp - c2 * gp;
  } else {
    // asymptotic expansion, truncated at the smallest term
    PrecisionGuard g(bits + 32);
    Real X = promote(x);
    Real zeta = 2 * mp::pow(X, Real(3) / 2) / 3;
    Real pref = mp::exp(-zeta) / (2 * mp::sqrt(real_pi()));
    Real x14 = mp::pow(X, Real(1) / 4);
    Real uk = 1, sum_u = 1, sum_v = 1;
    Real last = 1;
    for (long k = 1; k < 10000; ++k) {
      // u_k = u_{k-1} (6k-5)(6k-3)(6k-1) / (216 k (2k-1))
      Real r = Real(6 * k - 5) * (6 * k - 3) * (6 * k - 1) / (Real(216) * k * (2 * k - 1));
      uk *= r;
      Real term = uk / mp::pow(zeta, k);
      if (term > last) break;
      last = term;
      Real vk = -uk * (6 * k + 1) / (6 * k - 1);
      Real sgn = (k % 2) ? -1 : 1;
      sum_u += sgn * term;
      sum_v += sgn * vk / mp::pow(zeta, k);
      if (term < mp::ldexp(Real(1), -static_cast<int>(bits + 16))) break;
    }
    ai = pref / x14 * sum_u;
    aip = -pref * x14 * sum_v;
  }
  return {promote(ai), promote(aip)};
}

// ---------------------------------------------------------------- ODE integration

namespace {

Real state_norm(const State& y) {
  Real m = 0;
  for (const auto& v : y) {
    Real a = mp::abs(v.re) + mp::abs(v.im);
    if (a > m) m = a;
  }
  return m;
}

// classic extrapolation controller: the error of column k scales like H^{2k+1}
Real step_factor(const Real& tol, const Real& err, int k) {
  if (err == 0) return Real(4);
  Real fac = Real(0.9) * mp::pow(tol / err, Real(1) / (2 * k + 1));
  if (fac > 4) fac = 4;
  if (fac < Real(0.1)) fac = Real(0.1);
  return fac;
}

bool state_finite(const State& y) {
  for (const auto& v : y)
    if (!is_finite(v)) return false;
  return true;
}

}  // namespace

State ode_integrate(const Field& field, const State& y0, const Complex& t0, const Complex& t1,
                    const PrecisionContext& ctx, OdeStats* stats) {
  PrecisionGuard g(ctx);
  const std::size_t dim = y0.size();
  const Complex span = promote(t1) - promote(t0);
  if (span.re == 0 && span.im == 0) return y0;
  const Complex origin = promote(t0);

  double digits = -std::log10(ctx.target_rel_tol);
  const int kmax = std::clamp(static_cast<int>(8 + digits / 20.0) + 2, 8, 24);
  const int ktarget = kmax - 2;
  const Real tol = Real(ctx.target_rel_tol);
  const Real hmin = mp::ldexp(Real(1), -static_cast<int>(ctx.mantissa_bits / 2));

  OdeStats local;
  OdeStats& st = stats ? *stats : local;

  // dy/dtau with t = t0 + tau*span
  auto f = [&](const Real& tau, const State& y, State& out) {
    field(origin + span * tau, y, out);
    for (auto& v : out) v *= span;
    ++st.evaluations;
  };

  State y(dim);
  for (std::size_t i = 0; i < dim; ++i) y[i] = promote(y0[i]);
  Real tau = 0;
  Real H = Real(1) / 8;

  std::vector<std::vector<State>> T(kmax, std::vector<State>(kmax));
  State f0(dim), fz(dim), zprev(dim), zcur(dim), znext(dim);

  while (tau < 1) {
    if (tau + H > 1) H = 1 - tau;
    f(tau, y, f0);
    bool accepted = false;
    int kacc = 0;
    Real err_last = 1;
    for (int k = 0; k < kmax; ++k) {
      const int nsub = 2 * (k + 1);
      Real h = H / nsub;
      // modified midpoint
      for (std::size_t i = 0; i < dim; ++i) {
        zprev[i] = y[i];
        zcur[i] = y[i] + h * f0[i];
      }
      for (int m = 1; m < nsub; ++m) {
        f(tau + h * m, zcur, fz);
        for (std::size_t i = 0; i < dim; ++i) {
          znext[i] = zprev[i] + (2 * h) * fz[i];
          zprev[i] = std::move(zcur[i]);
          zcur[i] = std::move(znext[i]);
        }
        znext.assign(dim, Complex());
      }
      f(tau + H, zcur, fz);
      State& base = T[k][0];
      base.resize(dim);
      for (std::size_t i = 0; i < dim; ++i) base[i] = (zcur[i] + zprev[i] + h * fz[i]) / Real(2);
      // polynomial extrapolation in h^2
      for (int j = 1; j <= k; ++j) {
        Real ratio = Real(nsub) / (2 * (k - j + 1));
        Real denom = ratio * ratio - 1;
        T[k][j].resize(dim);
        for (std::size_t i = 0; i < dim; ++i)
          T[k][j][i] = T[k][j - 1][i] + (T[k][j - 1][i] - T[k - 1][j - 1][i]) / denom;
      }
      if (!state_finite(T[k][k])) break;
      if (k >= 2) {
        State diff(dim);
        for (std::size_t i = 0; i < dim; ++i) diff[i] = T[k][k][i] - T[k][k - 1][i];
        Real scale = state_norm(T[k][k]);
        if (scale == 0) scale = 1;
        Real err = state_norm(diff) / scale;
        err_last = err;
        if (err <= tol) {
          accepted = true;
          kacc = k;
          break;
        }
      }
    }
    if (accepted) {
      y = T[kacc][kacc];
      tau += H;
      ++st.steps;
      Real fac = step_factor(tol, err_last, kacc);
      if (kacc > ktarget && fac > Real(0.9)) fac = Real(0.9);
      H *= fac;
    } else {
      ++st.rejected;
      Real fac = step_factor(tol, err_last, kmax - 1);
      H *= fac < Real(0.5) ? fac : Real(0.5);
      if (H < hmin) {
        State last(dim);
        for (std::size_t i = 0; i < dim; ++i) last[i] = y[i];
        throw StiffnessError("ode_integrate: step size underflow at tau=" + to_string(tau, 12) +
                                 " (last error " + to_string(err_last, 4) + ")",
                             last, origin + span * tau);
      }
    }
  }
  return y;
}

std::vector<State> ode_integrate_polyline(const Field& field, const State& y0, const std::vector<Complex>& path,
                                          const PrecisionContext& ctx, OdeStats* stats) {
  std::vector<State> out;
  if (path.empty()) return out;
  out.push_back(y0);
  for (std::size_t k = 1; k < path.size(); ++k)
    out.push_back(ode_integrate(field, out.back(), path[k - 1], path[k], ctx, stats));
  return out;
}

}  // namespace rmtlab
