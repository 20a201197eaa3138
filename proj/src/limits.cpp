#include "rmtlab/limits.hpp"

#include <cmath>
#include <functional>

namespace rmtlab {

namespace mp = boost::multiprecision;

namespace {

Real sqrt_c(const CriticalData& crit) { return mp::sqrt(crit.b_c * crit.b_c - crit.t_c); }
Real a_of(const CriticalData& crit) { return crit.b_c - sqrt_c(crit); }
Real kappa(const CriticalData& crit) {
  Real sc = sqrt_c(crit);
  return mp::sqrt(mp::sqrt(2 * sc * sc * crit.b_c * crit.b_c));
}
Complex cx(const Real& re, const Real& im) { return Complex(re, im); }
Complex unit(const Complex& z) { return z / Complex(abs(z)); }

}  // namespace

// ---------------------------------------------------------------- closed forms

Complex ginibre_G(const Complex& nu, const Complex& eta) {
  return exp(nu * conj(eta) - Complex((norm2(nu) + norm2(eta)) / 2));
}

Complex faddeeva_edge(const Complex& nu, const Complex& eta) {
  return ginibre_G(nu, eta) * erfc_complex((nu + conj(eta)) / Complex(mp::sqrt(Real(2)))) / Complex(Real(2));
}

Complex erfc_window_kernel(const Real& X, const Real& Y, const Complex& nu, const Complex& eta,
                           const CriticalData& crit) {
  const Complex shift = (nu + conj(eta)) / Complex(mp::sqrt(Real(2)));
  const Real Y2 = Y * Y;
  Complex diff = erfc_complex(Complex(X + sqrt_c(crit) * Y2) + shift) - erfc_complex(Complex(X + crit.b_c * Y2) + shift);
  return ginibre_G(nu, eta) * diff / Complex(2 * real_pi() * crit.t_c);
}

Complex tau_regime_limit(const Real& X, const Real& Y, const Complex& nu, const Complex& eta,
                         const CriticalData& crit) {
  const Real inner = X + sqrt_c(crit) * Y * Y, outer = X + crit.b_c * Y * Y;
  const Complex G = ginibre_G(nu, eta);
  if (outer < 0 || inner > 0) return Complex(Real(0));
  if (inner < 0 && outer > 0) return G / Complex(real_pi() * crit.t_c);
  return G * erfc_complex((nu + conj(eta)) / Complex(mp::sqrt(Real(2)))) / Complex(2 * real_pi() * crit.t_c);
}

Real sine_regime_kernel(const Real& Y, const Real& x, const Real& y, const Real& xp, const Real& yp,
                        const CriticalData& crit) {
  if (Y == 0) throw Error(ErrorKind::domain, "sine regime excludes Y = 0");
  const Real pi = real_pi();
  const Real amp = a_of(crit) * Y * Y * mp::exp(-x * x - xp * xp) / (mp::pow(pi, Real("1.5")) * crit.t_c);
  const Real dy = y - yp;
  if (mp::abs(dy) < Real("1e-12")) {
    Real u = pi * dy;
    return amp * (1 - u * u / 6);
  }
  return amp * mp::sin(pi * dy) / (pi * dy);
}

Real density_profile(const Real& X, const Real& Y, const CriticalData& crit) {
  const Real Y2 = Y * Y;
  return (erfc_real(X + sqrt_c(crit) * Y2) - erfc_real(X + crit.b_c * Y2)) / (2 * real_pi() * crit.t_c);
}

// ---------------------------------------------------------------- regimes

const char* regime_name(RegimeTag t) {
  switch (t) {
    case RegimeTag::bulk_ginibre: return "bulk-ginibre";
    case RegimeTag::edge_faddeeva: return "edge-faddeeva";
    case RegimeTag::merging_pii: return "merging-pii";
    case RegimeTag::tau_quarter: return "tau-quarter";
    case RegimeTag::sine: return "sine";
    case RegimeTag::density_profile: return "density-profile";
  }
  return "?";
}

RegimeTag parse_regime(const std::string& name) {
  for (RegimeTag t : {RegimeTag::bulk_ginibre, RegimeTag::edge_faddeeva, RegimeTag::merging_pii,
                      RegimeTag::tau_quarter, RegimeTag::sine, RegimeTag::density_profile})
    if (name == regime_name(t)) return t;
  if (name == "merging") return RegimeTag::merging_pii;
  if (name == "mesoscopic-erfc") return RegimeTag::tau_quarter;
  if (name == "mesoscopic-sine") return RegimeTag::sine;
  throw Error(ErrorKind::config, "unknown regime '" + name + "'");
}

RegimeSpec RegimeSpec::bulk(const Complex& z_star) {
  RegimeSpec r;
  r.tag = RegimeTag::bulk_ginibre;
  r.tau = 0;
  r.base = z_star;
  r.theta = 0;
  return r;
}

RegimeSpec RegimeSpec::edge(const Complex& z_star, const Real& theta) {
  RegimeSpec r = bulk(z_star);
  r.tag = RegimeTag::edge_faddeeva;
  r.theta = theta;
  return r;
}

RegimeSpec RegimeSpec::merging() {
  RegimeSpec r;
  r.tag = RegimeTag::merging_pii;
  r.tau = Real(1) / 3;
  r.theta = 0;
  return r;
}

RegimeSpec RegimeSpec::tau_regime(const Real& tau) {
  RegimeSpec r;
  r.tag = RegimeTag::tau_quarter;
  r.tau = tau;
  r.theta = 0;
  r.validate();
  return r;
}

RegimeSpec RegimeSpec::sine(const Real& tau) {
  RegimeSpec r;
  r.tag = RegimeTag::sine;
  r.tau = tau;
  r.theta = 0;
  r.validate();
  return r;
}

RegimeSpec RegimeSpec::density() {
  RegimeSpec r;
  r.tag = RegimeTag::density_profile;
  r.tau = Real(1) / 4;
  r.theta = 0;
  return r;
}

std::size_t RegimeSpec::arity() const {
  switch (tag) {
    case RegimeTag::bulk_ginibre:
    case RegimeTag::edge_faddeeva:
    case RegimeTag::merging_pii: return 4;
    case RegimeTag::tau_quarter: return 6;
    case RegimeTag::sine: return 5;
    case RegimeTag::density_profile: return 2;
  }
  return 0;
}

void RegimeSpec::validate() const {
  if (tag == RegimeTag::tau_quarter && !(tau > Real(1) / 6 && tau <= Real(1) / 4))
    throw Error(ErrorKind::config, "tau-quarter regime needs 1/6 < tau <= 1/4, got " + to_string(tau, 6));
  if (tag == RegimeTag::sine && !(tau > Real(1) / 4 && tau < Real(3) / 10))
    throw Error(ErrorKind::config, "sine regime needs 1/4 < tau < 3/10, got " + to_string(tau, 6));
}

void RegimeSpec::check_coords(const std::vector<Real>& coords) const {
  if (coords.size() != arity())
    throw Error(ErrorKind::config, std::string(regime_name(tag)) + " takes " + std::to_string(arity()) +
                                       " coordinates, got " + std::to_string(coords.size()));
}

std::pair<Complex, Complex> scaling_map(const RegimeSpec& regime, const std::vector<Real>& c, const ModelParams& p,
                                        const CriticalData& crit) {
  regime.validate();
  regime.check_coords(c);
  const Real N = promote(p.N), rN = mp::sqrt(N);
  const Complex bc(promote(crit.b_c));
  switch (regime.tag) {
    case RegimeTag::bulk_ginibre:
    case RegimeTag::edge_faddeeva: {
      Complex rot = polar(Real(1), regime.theta) / Complex(rN);
      return {regime.base + rot * cx(c[0], c[1]), regime.base + rot * cx(c[2], c[3])};
    }
    case RegimeTag::merging_pii: {
      const Real gy = crit.gamma_c / mp::cbrt(N);
      return {bc + cx(c[0] / rN, gy * c[1]), bc + cx(c[2] / rN, gy * c[3])};
    }
    case RegimeTag::tau_quarter:
    case RegimeTag::density_profile: {
      const Real tau = regime.tau;
      const Real Nt = mp::pow(N, tau), N2t = Nt * Nt;
      Complex common = bc + cx(c[0] / (mp::sqrt(Real(2)) * N2t), kappa(crit) * c[1] / Nt);
      if (regime.tag == RegimeTag::density_profile) return {common, common};
      return {common + cx(c[2], c[3]) / Complex(rN), common + cx(c[4], c[5]) / Complex(rN)};
    }
    case RegimeTag::sine: {
      const Real tau = regime.tau, Y = c[0];
      if (Y == 0) throw Error(ErrorKind::domain, "sine regime excludes Y = 0");
      const Real Nt = mp::pow(N, tau), N2t = Nt * Nt;
      const Real a = promote(p.a), r2 = mp::sqrt(Real(2));
      Real re = -crit.t_c * Y * Y / (2 * r2 * a * N2t) + crit.s / (r2 * crit.gamma_c * mp::pow(N, Real(2) / 3));
      Real im = kappa(crit) * Y / Nt;
      Real ystep = r2 * real_pi() * N2t / (N * a * Y * Y);
      return {bc + cx(re + c[1] / rN, im + ystep * c[2]), bc + cx(re + c[3] / rN, im + ystep * c[4])};
    }
  }
  throw Error(ErrorKind::config, "unhandled regime");
}

Complex prefactor_CNtau(const Real& X, const Real& Y, const Complex& nu, const Complex& eta, const Real& tau,
                        const ModelParams& p, const CriticalData& crit) {
  const Real N = promote(p.N), rN = mp::sqrt(N), r2 = mp::sqrt(Real(2));
  const Real Nt = mp::pow(N, tau);
  const Real k = kappa(crit), sc = sqrt_c(crit);
  const Complex i = I_unit();
  Complex e1 = (conj(nu) - nu + eta - conj(eta)) * Complex(X + r2 * rN * crit.b_c) / Complex(2 * r2);
  Complex e2 = (nu + conj(nu) - eta - conj(eta)) / Complex(Real(2)) * i * Complex(k * Y * rN / Nt);
  Complex iy = i * Complex(k * Y / Nt);
  Complex u = iy + (Complex(X) + Complex(r2) * nu) / Complex(r2 * rN);
  Complex v = iy + (Complex(X) + Complex(r2) * eta) / Complex(r2 * rN);
  // (sqrt c + u)^{Nc/2} / conj(...)^{Nc/2} with principal logs
  const Real half = promote(p.N * p.c) / 2;
  Complex lu = log(Complex(sc) + u) - log(Complex(sc) + conj(u));
  Complex lv = log(Complex(sc) + conj(v)) - log(Complex(sc) + v);
  return exp(e1 + e2 + Complex(half) * (lu + lv));
}

Complex prefactor_CNhat(const Real& Y, const Real& x, const Real& y, const Real& xp, const Real& yp, const Real& tau,
                        const ModelParams& p, const CriticalData& crit) {
  if (Y == 0) throw Error(ErrorKind::domain, "sine regime excludes Y = 0");
  const Real N = promote(p.N), rN = mp::sqrt(N);
  const Real N2t = mp::pow(N, 2 * tau);
  const Real a = a_of(crit), sc = sqrt_c(crit);
  // s-term chosen so that sqrt(c) + u lands exactly on z - a for the mapped point
  Real X = -(crit.b_c + sc) / 2 * Y * Y * rN / N2t + crit.s / (crit.gamma_c * mp::pow(N, Real(1) / 6));
  Real ystep = mp::sqrt(Real(2)) * real_pi() * N2t / (a * Y * Y * rN);
  return prefactor_CNtau(X, Y, cx(x, ystep * y), cx(xp, ystep * yp), tau, p, crit);
}

Complex limit_value(const RegimeSpec& regime, const std::vector<Real>& c, const CriticalData& crit,
                    const PsiSolver* psi) {
  regime.validate();
  regime.check_coords(c);
  switch (regime.tag) {
    case RegimeTag::bulk_ginibre: return ginibre_G(cx(c[0], c[1]), cx(c[2], c[3]));
    case RegimeTag::edge_faddeeva: return faddeeva_edge(cx(c[0], c[1]), cx(c[2], c[3]));
    case RegimeTag::merging_pii:
      if (!psi) throw Error(ErrorKind::config, "merging limit needs a Psi solver");
      return limit_kernel_Ks(c[0], c[1], c[2], c[3], *psi);
    case RegimeTag::tau_quarter:
      if (regime.tau == Real(1) / 4) return erfc_window_kernel(c[0], c[1], cx(c[2], c[3]), cx(c[4], c[5]), crit);
      return tau_regime_limit(c[0], c[1], cx(c[2], c[3]), cx(c[4], c[5]), crit);
    case RegimeTag::sine: return Complex(sine_regime_kernel(c[0], c[1], c[2], c[3], c[4], crit));
    case RegimeTag::density_profile: return Complex(density_profile(c[0], c[1], crit));
  }
  throw Error(ErrorKind::config, "unhandled regime");
}

namespace {

using KernelFn = std::function<Complex(const Complex&, const Complex&)>;

// prefactor times the kernel; bulk and edge fix the gauge through the row at z*
Complex rescale(const RegimeSpec& regime, const std::vector<Real>& c, const ModelParams& p, const CriticalData& crit,
                const KernelFn& K) {
  auto [z, zeta] = scaling_map(regime, c, p, crit);
  const Real N = promote(p.N);
  const Real n(p.n);
  switch (regime.tag) {
    case RegimeTag::bulk_ginibre:
    case RegimeTag::edge_faddeeva: {
      auto row = [&](const Complex& w, const Complex& coord) {
        Complex lim = regime.tag == RegimeTag::bulk_ginibre ? ginibre_G(Complex(Real(0)), coord)
                                                            : faddeeva_edge(Complex(Real(0)), coord);
        return unit(K(regime.base, w) / lim);
      };
      Complex gz = row(z, cx(c[0], c[1])), gzeta = row(zeta, cx(c[2], c[3]));
      return Complex(real_pi() / N) * K(z, zeta) * gz * conj(gzeta);
    }
    case RegimeTag::merging_pii: {
      Complex pre = prefactor_CN(c[1], c[3], p) * Complex(crit.gamma_c / mp::pow(N, Real(5) / 6));
      return pre * K(z, zeta);
    }
    case RegimeTag::tau_quarter: {
      Real X = c[0] * mp::sqrt(N) / mp::pow(N, 2 * regime.tau);
      return prefactor_CNtau(X, c[1], cx(c[2], c[3]), cx(c[4], c[5]), regime.tau, p, crit) * K(z, zeta) /
             Complex(n);
    }
    case RegimeTag::sine: {
      Complex pre = prefactor_CNhat(c[0], c[1], c[2], c[3], c[4], regime.tau, p, crit);
      return pre * K(z, zeta) * Complex(mp::pow(N, 2 * regime.tau) / (n * mp::sqrt(N)));
    }
    case RegimeTag::density_profile: return K(z, zeta) / Complex(n);
  }
  throw Error(ErrorKind::config, "unhandled regime");
}

}  // namespace

Complex rescaled_kernel(const RegimeSpec& regime, const std::vector<Real>& coords, const OrthoSystem& sys,
                        const PrecisionContext& ctx) {
  PrecisionGuard g(std::max(ctx.mantissa_bits, sys.bits));
  const ModelParams& p = sys.params;
  CriticalData crit = critical_data(p.a, p.c, Real(p.n) / p.N, p.N);
  KernelFn K = [&](const Complex& z, const Complex& w) { return kernel_eval(z, w, sys).to_complex(); };
  return rescale(regime, coords, p, crit, K);
}

// ---------------------------------------------------------------- convergence

bool ConvergenceReport::strictly_decreasing() const {
  for (std::size_t i = 1; i < errors.size(); ++i)
    if (!(errors[i] < errors[i - 1])) return false;
  return !errors.empty();
}

ConvergenceReport convergence_study(const RegimeSpec& regime, const std::vector<std::vector<Real>>& probes,
                                    const std::vector<long>& N_values, const Real& a, const Real& c, const Real& s,
                                    const PrecisionContext& ctx, const PiiTable* table) {
  regime.validate();
  if (probes.empty() || N_values.empty()) throw Error(ErrorKind::config, "convergence study needs probes and N values");
  for (const auto& pr : probes) regime.check_coords(pr);
  if (regime.tag == RegimeTag::merging_pii && !table)
    throw Error(ErrorKind::config, "merging convergence study needs a Hastings-McLeod table");
  PrecisionGuard g(ctx);
  ConvergenceReport rep;
  rep.regime = regime_name(regime.tag);
  rep.probes = probes;
  for (long Nv : N_values) {
    const Real N(Nv);
    ModelParams p = ModelParams::from_t(a, c, t_from_s(a, c, s, N), N);
    OrthoSystem sys = ortho_system(p, ctx, 0);
    PrecisionGuard g2(sys.bits);
    CriticalData crit = critical_data(p.a, p.c, Real(p.n) / p.N, p.N);

    // p-values cached per mapped point
    std::vector<Complex> pts;
    std::vector<std::vector<Complex>> vals;
    auto values_at = [&](const Complex& z) -> const std::vector<Complex>& {
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (pts[i].re == z.re && pts[i].im == z.im) return vals[i];
      pts.push_back(z);
      vals.push_back(p_values(sys, z, p.n));
      return vals.back();
    };
    KernelFn K = [&](const Complex& z, const Complex& w) {
      std::vector<Complex> pz = values_at(z);
      return kernel_from_values(z, pz, w, values_at(w), sys, p.n).to_complex();
    };

    std::vector<Complex> limits(probes.size());
    if (regime.tag == RegimeTag::merging_pii) {
      PsiSolver psi(crit.s, *table, ctx);
      std::vector<Real> ys;
      auto index_of = [&](const Real& y) {
        for (std::size_t i = 0; i < ys.size(); ++i)
          if (ys[i] == y) return i;
        ys.push_back(y);
        return ys.size() - 1;
      };
      std::vector<std::pair<std::size_t, std::size_t>> idx;
      for (const auto& pr : probes) {
        std::size_t i = index_of(pr[1]);
        std::size_t j = index_of(pr[3]);
        idx.emplace_back(i, j);
      }
      LimitKernelEvaluator ev(psi, ys);
      for (std::size_t k = 0; k < probes.size(); ++k)
        limits[k] = ev(probes[k][0], idx[k].first, probes[k][2], idx[k].second);
    } else {
      for (std::size_t k = 0; k < probes.size(); ++k) limits[k] = limit_value(regime, probes[k], crit);
    }

    Real worst(0), scale(0);
    for (std::size_t k = 0; k < probes.size(); ++k) {
      Complex fin = rescale(regime, probes[k], p, crit, K);
      worst = mp::max(worst, abs(fin - limits[k]));
      scale = mp::max(scale, abs(limits[k]));
    }
    rep.N_values.push_back(Nv);
    rep.errors.push_back(worst);
    rep.scales.push_back(scale);
  }
  // slope of log error against log N
  const std::size_t m = rep.errors.size();
  if (m >= 2) {
    Real sx(0), sy(0), sxx(0), sxy(0);
    for (std::size_t i = 0; i < m; ++i) {
      Real lx = mp::log(Real(rep.N_values[i])), ly = mp::log(rep.errors[i]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    rep.fitted_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  } else {
    rep.fitted_slope = 0;
  }
  return rep;
}

}  // namespace rmtlab
