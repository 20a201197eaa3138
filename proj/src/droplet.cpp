#include "rmtlab/droplet.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace rmtlab {

namespace mp = boost::multiprecision;

// ---------------------------------------------------------------- parameters

ModelParams ModelParams::from_n(const Real& a, const Real& c, long n, const Real& N) {
  ModelParams p;
  p.a = a;
  p.c = c;
  p.N = N;
  p.n = n;
  p.t = Real(n) / N;
  p.t_residual = 0;
  p.validate();
  return p;
}

ModelParams ModelParams::from_t(const Real& a, const Real& c, const Real& t, const Real& N) {
  ModelParams p;
  p.a = a;
  p.c = c;
  p.N = N;
  p.t = t;
  p.n = mp::lround(t * N);
  p.t_residual = t - Real(p.n) / N;
  p.validate();
  return p;
}

void ModelParams::validate() const {
  if (!(a > 0)) throw Error(ErrorKind::domain, "parameter a must be positive");
  if (!(c > 0)) throw Error(ErrorKind::domain, "parameter c must be positive");
  if (!(N > 0)) throw Error(ErrorKind::domain, "parameter N must be positive");
  if (!(t > 0)) throw Error(ErrorKind::domain, "filling fraction t must be positive");
  if (n < 0) throw Error(ErrorKind::domain, "n must be nonnegative");
}

long ModelParams::Nc() const {
  Real m = N * c;
  Real r = mp::round(m);
  if (mp::abs(m - r) > mp::ldexp(Real(1), -40) * mp::max(Real(1), m))
    throw Error(ErrorKind::unsupported,
                "N*c = " + to_string(m, 12) + " is not an integer; exact moments need integer Nc (use quadrature mode)");
  return r.convert_to<long>();
}

CriticalData critical_data(const Real& a, const Real& c, const Real& t, const Real& N) {
  if (!(a > 0) || !(c > 0) || !(N > 0)) throw Error(ErrorKind::domain, "critical_data needs a, c, N > 0");
  CriticalData d;
  Real sc = mp::sqrt(c);
  d.t_c = a * (a + 2 * sc);
  d.b_c = a + sc;
  d.gamma_c = 2 * mp::cbrt(d.b_c) * mp::pow(c, Real(1) / 6) / mp::cbrt(a);
  d.s = d.gamma_c * mp::pow(N, Real(2) / 3) / (2 * d.b_c) * (t - d.t_c);
  return d;
}

CriticalData critical_data(const ModelParams& p) { return critical_data(p.a, p.c, p.t, p.N); }

Real t_from_s(const Real& a, const Real& c, const Real& s, const Real& N) {
  CriticalData d = critical_data(a, c, a * (a + 2 * mp::sqrt(c)), N);
  return d.t_c + 2 * d.b_c * s / (d.gamma_c * mp::pow(N, Real(2) / 3));
}

// ---------------------------------------------------------------- phi and friends

std::pair<Complex, Complex> branch_points(const ModelParams& p) {
  Real disc = (p.t - p.a * p.a) * (p.t - p.a * p.a) - 4 * p.a * p.a * p.c;
  Complex sd = sqrt(Complex(disc));
  Complex sum(p.a * p.a + p.t);
  Complex b = (sum + sd) / (2 * p.a);
  Complex beta = (sum - sd) / (2 * p.a);
  if (beta.im < 0) std::swap(b, beta);
  return {b, beta};
}

namespace {

Complex ell_of(const Complex& beta, const ModelParams& p) {
  return ((p.t + p.c) * log(beta) - p.c * log(beta - Complex(p.a)) - p.a * beta) / p.t;
}

Complex phi_raw(const Complex& z, const Complex& ell, const ModelParams& p) {
  if ((z.re == 0 && z.im == 0) || (z.re == p.a && z.im == 0))
    throw Error(ErrorKind::domain, "phi evaluated at a singularity");
  return p.a * z - (p.t + p.c) * log(z) + p.c * log(z - Complex(p.a)) + p.t * ell;
}

}  // namespace

Complex phi(const Complex& z, const DropletGeometry& geo, const ModelParams& p) { return phi_raw(z, geo.ell, p); }

Complex phi_d1(const Complex& z, const ModelParams& p) {
  return Complex(p.a) - Complex(p.t + p.c) / z + Complex(p.c) / (z - Complex(p.a));
}
Complex phi_d2(const Complex& z, const ModelParams& p) {
  Complex w = z - Complex(p.a);
  return Complex(p.t + p.c) / (z * z) - Complex(p.c) / (w * w);
}
Complex phi_d3(const Complex& z, const ModelParams& p) {
  Complex w = z - Complex(p.a);
  return Complex(-2 * (p.t + p.c)) / (z * z * z) + Complex(2 * p.c) / (w * w * w);
}
Complex phi_d4(const Complex& z, const ModelParams& p) {
  Complex w = z - Complex(p.a);
  return Complex(6 * (p.t + p.c)) / pow(z, 4) - Complex(6 * p.c) / pow(w, 4);
}
Complex phi_d5(const Complex& z, const ModelParams& p) {
  Complex w = z - Complex(p.a);
  return Complex(-24 * (p.t + p.c)) / pow(z, 5) + Complex(24 * p.c) / pow(w, 5);
}

// ---------------------------------------------------------------- geometry

namespace {

Complex pick_cube_root(const Complex& v, const Real& preferred_angle) {
  Complex r0 = cbrt_principal(v);
  Complex best = r0;
  Real best_d = -1;
  for (int k = 0; k < 3; ++k) {
    Complex cand = r0 * polar(Real(1), 2 * real_pi() * k / 3);
    if (abs(cand) == 0) return cand;
    Real d = mp::abs(wrap_phase(arg(cand) - preferred_angle));
    if (best_d < 0 || d < best_d) {
      best_d = d;
      best = cand;
    }
  }
  return best;
}

Complex newton_bstar(const Complex& start, const Complex& target, const Complex& ell, const ModelParams& p) {
  Complex z = start;
  Real tol = mp::ldexp(Real(1), -static_cast<int>(current_bits()) + 12);
  Real prev = -1;
  int stalled = 0;
  for (int it = 0; it < 400; ++it) {
    Complex f = phi_raw(z, ell, p) - target;
    Complex d = phi_d1(z, p);
    if (abs(d) == 0) break;
    Complex step = f / d;
    z -= step;
    Real as = abs(step);
    if (as <= tol * (1 + abs(z))) return z;
    // close to t_c the root is nearly triple and rounding caps the attainable accuracy
    if (prev >= 0 && as >= prev / 2 && ++stalled >= 4) {
      Real scale = p.a * abs(z) + (p.t + p.c) * abs(log(z)) + p.c * abs(log(z - Complex(p.a))) + abs(target);
      if (abs(phi_raw(z, ell, p) - target) <= tol * 16 * scale) return z;
    }
    prev = as;
  }
  throw Error(ErrorKind::numerics, "b_c* Newton iteration did not converge");
}

}  // namespace

XiDerivatives xi_derivatives(const DropletGeometry& geo, const ModelParams& p) {
  const Complex zs = geo.b_c_star;
  const Real N13 = mp::cbrt(p.N);
  const Complex iN13 = Complex(Real(0), N13);
  XiDerivatives r;
  Real cut = mp::ldexp(Real(1), -static_cast<int>(current_bits() / 3));
  if (abs(geo.s_hat) > cut) {
    Complex den = Complex(Real(0), Real(-2)) * geo.s_hat;
    Complex x1 = p.N * phi_d1(zs, p) / den;
    Complex x2 = p.N * phi_d2(zs, p) / den;
    Complex x3 = p.N * phi_d3(zs, p) / den - Complex(8) * x1 * x1 * x1 / geo.s_hat;
    r.r1 = x1 / iN13;
    r.r2 = x2 / iN13;
    r.r3 = x3 / iN13;
    return r;
  }
  // s_hat = 0: xi^3 = (3i/8) N phi with a triple zero of phi at b_c*
  CriticalData cd = critical_data(p);
  Complex f3 = phi_d3(zs, p), f4 = phi_d4(zs, p), f5 = phi_d5(zs, p);
  Complex k3 = Complex(Real(0), p.N) * f3 / Real(16);
  // branch: r1 closest to -1/gamma_c
  Complex kappa = pick_cube_root(k3, arg(iN13 * Complex(Real(-1) / cd.gamma_c)));
  Complex x1 = kappa;
  Complex x2 = kappa * f4 / (Real(6) * f3);
  Complex x3 = kappa * (f5 / (Real(10) * f3) - f4 * f4 / (Real(24) * f3 * f3));
  r.r1 = x1 / iN13;
  r.r2 = x2 / iN13;
  r.r3 = x3 / iN13;
  return r;
}

DropletGeometry make_geometry(const ModelParams& p, const PrecisionContext& ctx, int trace_count) {
  PrecisionGuard g(ctx);
  p.validate();
  CriticalData cd = critical_data(p);
  DropletGeometry geo;
  geo.b_c = cd.b_c;
  auto [b, beta] = branch_points(p);
  geo.b = b;
  geo.beta = beta;
  geo.ell = ell_of(beta, p);
  geo.disk_radius = mp::min(mp::sqrt(p.c), p.a) / 4;

  bool critical = (p.t == cd.t_c);
  Complex phib = critical ? Complex(0) : phi_raw(b, geo.ell, p);
  // xi_beta^3 = 3 i N phi(b) / 32
  Complex xb3 = Complex(Real(0), Real(3) * p.N / 32) * phib;
  Real preferred = p.t < cd.t_c ? Real(0) : real_pi() / 2;
  geo.xi_beta = critical ? Complex(0) : pick_cube_root(xb3, preferred);
  geo.s_hat = Complex(-4) * geo.xi_beta * geo.xi_beta;

  if (critical) {
    geo.b_c_star = Complex(cd.b_c);
  } else {
    Complex start(cd.b_c + cd.s / (2 * cd.gamma_c * mp::pow(p.N, Real(2) / 3)));
    geo.b_c_star = newton_bstar(start, phib / Real(2), geo.ell, p);
  }
  XiDerivatives r = xi_derivatives(geo, p);
  geo.r1 = r.r1;
  geo.r2 = r.r2;
  geo.r3 = r.r3;

  if (trace_count > 0 && p.t >= cd.t_c / 2 && p.t <= 3 * cd.t_c / 2)
    geo.boundary = trace_boundary(p, geo, trace_count, ctx);
  return geo;
}

// ---------------------------------------------------------------- g-function

int winding_number(const std::vector<Complex>& curve, const Complex& w) {
  if (curve.size() < 3) throw Error(ErrorKind::geometry, "winding number needs a closed curve");
  double total = 0;
  std::complex<double> ww(to_double(w.re), to_double(w.im));
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const Complex& u = curve[k];
    const Complex& v = curve[(k + 1) % curve.size()];
    std::complex<double> du = std::complex<double>(to_double(u.re), to_double(u.im)) - ww;
    std::complex<double> dv = std::complex<double>(to_double(v.re), to_double(v.im)) - ww;
    total += std::arg(dv / du);
  }
  return static_cast<int>(std::lround(total / (2 * M_PI)));
}

bool inside_boundary(const Complex& z, const DropletGeometry& geo) {
  if (geo.boundary.empty()) throw Error(ErrorKind::geometry, "boundary B has not been traced");
  return winding_number(geo.boundary, z) != 0;
}

Complex g_branch(const Complex& z, GRegion region, const DropletGeometry& geo, const ModelParams& p) {
  if (region == GRegion::interior) return p.a * z / p.t + geo.ell;
  return log(z) + (p.c / p.t) * log(z / (z - Complex(p.a)));
}

Complex g_function(const Complex& z, const DropletGeometry& geo, const ModelParams& p) {
  Complex f = phi(z, geo, p);
  if (mp::abs(f.re) <= mp::ldexp(Real(1), -static_cast<int>(current_bits()) + 16) * (1 + abs(f)))
    throw Error(ErrorKind::boundary, "g_function evaluated on B; use g_branch for a one-sided value");
  return g_branch(z, inside_boundary(z, geo) ? GRegion::interior : GRegion::exterior, geo, p);
}

// ---------------------------------------------------------------- conformal map

bool in_critical_disk(const Complex& z, const DropletGeometry& geo) {
  return abs(z - Complex(geo.b_c)) <= geo.disk_radius;
}

namespace {

// cubic (4/3)x^3 + s x + (8/3)xb^3 - i N phi / 2 = 0
struct XiCubic {
  Complex s;
  Complex c0;
  Complex value(const Complex& x) const { return (Real(4) / 3) * x * x * x + s * x + c0; }
  Complex deriv(const Complex& x) const { return Real(4) * x * x + s; }
};

Complex polish(const XiCubic& cub, Complex x) {
  Real tol = mp::ldexp(Real(1), -static_cast<int>(current_bits()) + 10);
  // linear convergence at a double root needs up to ~bits iterations
  for (int it = 0; it < 2 * static_cast<int>(current_bits()); ++it) {
    Complex d = cub.deriv(x);
    if (abs(d) == 0) break;
    Complex step = cub.value(x) / d;
    x -= step;
    if (abs(step) <= tol * (1 + abs(x))) break;
  }
  return x;
}

// the other two roots after deflating the root x0
std::pair<Complex, Complex> other_roots(const XiCubic& cub, const Complex& x0) {
  // (4/3)(x^2 + x0 x + x0^2) + s
  Complex bq = x0;
  Complex cq = x0 * x0 + Real(3) / 4 * cub.s;
  Complex disc = sqrt(bq * bq - Real(4) * cq);
  return {(-bq + disc) / Real(2), (-bq - disc) / Real(2)};
}

}  // namespace

std::pair<Complex, Complex> conformal_xi_d(const Complex& z, const DropletGeometry& geo, const ModelParams& p) {
  if (!in_critical_disk(z, geo))
    throw Error(ErrorKind::domain, "conformal_xi: z outside the critical disk D_c");
  const Complex zs = geo.b_c_star;
  const Complex xb3 = geo.xi_beta * geo.xi_beta * geo.xi_beta;
  const Complex iN13 = Complex(Real(0), mp::cbrt(p.N));
  const Complex i_half_N = Complex(Real(0), p.N / 2);
  auto dxi = [&](const Complex& w, const Complex& x) {
    Complex den = Complex(Real(0), Real(-2)) * (Real(4) * x * x + geo.s_hat);
    if (abs(den) <= mp::ldexp(Real(1), -static_cast<int>(current_bits() / 2))) return iN13 * geo.r1;
    return p.N * phi_d1(w, p) / den;
  };

  Complex dz = z - zs;
  Real len = abs(dz);
  if (len == 0) return {Complex(0), iN13 * geo.r1};
  Real hmax = geo.disk_radius / 64;
  long steps = std::max<long>(1, static_cast<long>(mp::ceil(len / hmax).convert_to<long>()));
  Complex x(0);
  Complex w = zs;
  Complex step = dz / Real(steps);
  long done = 0;
  int refine = 0;
  while (done < steps) {
    long sub = 1L << refine;
    Complex h = step / Real(sub);
    Complex xw = x, ww = w;
    bool ok = true;
    for (long k = 0; k < sub; ++k) {
      Complex pred = xw + dxi(ww, xw) * h;
      ww += h;
      XiCubic cub{geo.s_hat, Real(8) / 3 * xb3 - i_half_N * phi(ww, geo, p)};
      Complex root = polish(cub, pred);
      auto [o1, o2] = other_roots(cub, root);
      Real dr = abs(root - pred);
      Real dmin = mp::min(abs(o1 - pred), abs(o2 - pred));
      // a coalesced pair (z at beta or b) gives the same value either way
      Real merge = mp::ldexp(Real(1), -static_cast<int>(current_bits() / 3)) * (1 + abs(root));
      bool coalesced = mp::min(abs(o1 - root), abs(o2 - root)) <= merge;
      if (!(dr * 2 < dmin) && !coalesced) {
        ok = false;
        break;
      }
      xw = root;
    }
    if (!ok) {
      if (++refine > 12) throw Error(ErrorKind::ambiguity, "conformal_xi: cubic branch tracking is ambiguous");
      continue;
    }
    x = xw;
    w = ww;
    ++done;
    refine = 0;
  }
  return {x, dxi(z, x)};
}

Complex conformal_xi(const Complex& z, const DropletGeometry& geo, const ModelParams& p) {
  return conformal_xi_d(z, geo, p).first;
}

// ---------------------------------------------------------------- boundary tracing

namespace {

struct RayScanner {
  const ModelParams& p;
  double a, tc, t, re_tell;
  double x0;
  double rmax;

  double re_phi(double r, double th) const {
    double x = x0 + r * std::cos(th), y = r * std::sin(th);
    double lz = 0.5 * std::log(x * x + y * y);
    double lza = 0.5 * std::log((x - a) * (x - a) + y * y);
    return a * x - (t + tc) * lz + tc * lza + re_tell;
  }

  // brackets of sign changes along the ray
  std::vector<std::pair<double, double>> brackets(double th) const {
    std::vector<std::pair<double, double>> out;
    const int samples = 1200;
    double rlo = rmax * 1e-4;
    double prev_r = rlo, prev_v = re_phi(rlo, th);
    for (int i = 1; i <= samples; ++i) {
      double r = rlo + (rmax - rlo) * i / samples;
      double v = re_phi(r, th);
      if (std::isfinite(v) && std::isfinite(prev_v) && ((v > 0) != (prev_v > 0))) out.emplace_back(prev_r, r);
      prev_r = r;
      prev_v = v;
    }
    return out;
  }
};

}  // namespace

TraceReport trace_boundary_report(const ModelParams& p, const DropletGeometry& geo, int count,
                                  const PrecisionContext& ctx) {
  PrecisionGuard g(ctx);
  CriticalData cd = critical_data(p);
  if (count < 16) throw Error(ErrorKind::config, "trace_boundary needs count >= 16");
  if (p.t < cd.t_c / 2 || p.t > 3 * cd.t_c / 2)
    throw Error(ErrorKind::geometry, "trace_boundary supports t in [t_c/2, 3t_c/2]");

  const Complex z0(p.a / 2);
  Real re_tell = (p.t * geo.ell).re;
  RayScanner scan{p, to_double(p.a), to_double(p.c), to_double(p.t), to_double(re_tell), to_double(p.a) / 2, 0};
  scan.rmax = 2 * (to_double(abs(geo.b)) + to_double(p.a) + std::sqrt(to_double(p.t))) + 2;

  const Real th_beta_r = arg(geo.beta - z0);
  const double th_beta = to_double(th_beta_r);
  const double r_beta = to_double(abs(geo.beta - z0));
  const int sub = 4;

  auto refine = [&](double lo, double hi, const Real& th) -> Real {
    Complex dir = polar(Real(1), th);
    auto f = [&](const Real& r) -> Real { return (p.a * (z0 + r * dir)).re - (p.t + p.c) * mp::log(abs(z0 + r * dir)) +
                                         p.c * mp::log(abs(z0 + r * dir - Complex(p.a))) + re_tell; };
    boost::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<Real>(current_bits() - 8);
    auto res = boost::math::tools::toms748_solve(f, Real(lo), Real(hi), tol, iters);
    return (res.first + res.second) / 2;
  };

  auto candidates = [&](double th) {
    auto br = scan.brackets(th);
    if (br.empty())
      throw Error(ErrorKind::geometry, "trace_boundary: ray at angle " + std::to_string(th) + " has no sign change");
    return br;
  };

  auto pick = [&](const std::vector<std::pair<double, double>>& br, double target) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < br.size(); ++i) {
      double mid = 0.5 * (br[i].first + br[i].second);
      if (std::abs(mid - target) < bd) {
        bd = std::abs(mid - target);
        best = i;
      }
    }
    return br[best];
  };

  const int k_start = count / 2;
  const double dth = 2 * M_PI / count;
  auto ray_angle = [&](int k) -> Real { return th_beta_r + 2 * real_pi() * (((k % count) + count) % count) / count; };
  auto angle_of = [&](int k, int j) { return th_beta + dth * k + dth * j / sub; };

  std::vector<Complex> pts(count);
  std::vector<bool> have(count, false);
  pts[0] = geo.beta;
  have[0] = true;

  // start ray: the outermost sign change
  auto br0 = candidates(angle_of(k_start, 0));
  auto first = br0.back();
  Real r_start = refine(first.first, first.second, ray_angle(k_start));
  pts[k_start] = z0 + r_start * polar(Real(1), ray_angle(k_start));
  have[k_start] = true;

  double r_prev2 = to_double(r_start), r_prev = to_double(r_start);
  bool two = false;
  Real closure = -1;
  for (int k = k_start; k < k_start + count; ++k) {
    for (int j = 1; j <= sub; ++j) {
      int kk = (j == sub) ? k + 1 : k;
      int jj = (j == sub) ? 0 : j;
      int idx = ((kk % count) + count) % count;
      double th = angle_of(kk, jj);
      double target = two ? 2 * r_prev - r_prev2 : r_prev;
      double r;
      if (jj == 0 && idx == 0) {
        r = r_beta;
      } else {
        auto br = pick(candidates(th), target);
        if (jj == 0) {
          Real rr = refine(br.first, br.second, ray_angle(kk));
          r = to_double(rr);
          Complex pt = z0 + rr * polar(Real(1), ray_angle(kk));
          if (idx == k_start && kk != k_start) {
            closure = abs(pt - pts[k_start]);
          } else if (!have[idx]) {
            pts[idx] = pt;
            have[idx] = true;
          }
        } else {
          r = 0.5 * (br.first + br.second);
        }
      }
      r_prev2 = r_prev;
      r_prev = r;
      two = true;
    }
  }
  if (closure < 0) {
    // the sweep ends on the beta ray only when k_start == 0, which count >= 16 excludes
    closure = 0;
  }
  TraceReport rep;
  rep.points = pts;
  rep.closure_gap = closure;
  rep.max_residual = 0;
  for (const auto& z : pts) {
    Real v = mp::abs(phi(z, geo, p).re);
    if (v > rep.max_residual) rep.max_residual = v;
  }
  return rep;
}

std::vector<Complex> trace_boundary(const ModelParams& p, const DropletGeometry& geo, int count,
                                    const PrecisionContext& ctx) {
  return trace_boundary_report(p, geo, count, ctx).points;
}

}  // namespace rmtlab
