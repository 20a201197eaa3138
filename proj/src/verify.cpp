#include "rmtlab/verify.hpp"

namespace rmtlab {

namespace mp = boost::multiprecision;

Uniform01::Uniform01(std::uint64_t seed) : gen_(seed) {}

double Uniform01::next() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

namespace {

struct Worst {
  Real value{0};
  std::string where;
  void see(const Real& v, const std::string& at) {
    if (!(v <= value)) {  // NaN counts as worst
      value = v;
      where = at;
    }
  }
};

VerifyRow row(const std::string& name, const Worst& w, const Real& tol) {
  VerifyRow r;
  r.name = name;
  r.value = w.value;
  r.tolerance = tol;
  r.detail = w.where;
  r.pass = w.value < tol;
  return r;
}

}  // namespace

std::vector<VerifyRow> verify_battery(const VerifyConfig& cfg, const PrecisionContext& ctx, const PiiTable* table) {
  PrecisionGuard g(ctx);
  const Real N(cfg.N);
  CriticalData cr0 = critical_data(cfg.a, cfg.c, Real(1), N);
  Real t = cfg.t == 0 ? cr0.t_c : cfg.t;
  ModelParams p = ModelParams::from_t(cfg.a, cfg.c, t, N);
  const long n = p.n, Nc = p.Nc();
  if (cfg.n_laws + 1 > n + 1) throw Error(ErrorKind::config, "law range exceeds the system size");

  MomentMatrix M = moments(p.a, Nc, p.N, n + Nc + 2, ctx);
  OrthoSystem sys = build_ortho_system(M, p, ctx, cfg.n_laws + 1);
  if (cfg.corrupt_h >= 0) {
    if (cfg.corrupt_h > sys.max_degree()) throw Error(ErrorKind::config, "corrupted index out of range");
    PrecisionGuard gb(sys.bits);
    sys.h[cfg.corrupt_h] *= 1 + promote(cfg.corrupt_rel);
  }
  PrecisionGuard gs(sys.bits);
  CriticalData cr = critical_data(p.a, p.c, Real(n) / p.N, p.N);

  std::vector<VerifyRow> out;
  {
    Worst w;
    w.see(gram_residual(sys, M, n), "n<=" + std::to_string(n));
    out.push_back(row("gram residual", w, Real("1e-20")));
  }
  {
    Worst w;
    for (long k = 0; k <= cfg.n_laws; ++k) {
      Real law = mp::exp(log_gamma(Real(Nc + k + 1), PrecisionContext(sys.bits)) - (Nc + k + 1) * mp::log(p.N)) *
                 real_pi() * sys.rec[k].beta;
      w.see(mp::abs(sys.h[k] / law - 1), "n=" + std::to_string(k));
    }
    out.push_back(row("h_n-beta_n law", w, Real("1e-15")));
  }
  {
    Worst w;
    for (long k = 0; k <= cfg.n_laws; ++k) {
      Complex want(Real(0), -2 * real_pi() * sys.rec[k].b);
      w.see(abs(sys.h_tilde[k] - want) / abs(want), "n=" + std::to_string(k));
    }
    out.push_back(row("h~_n-b_n law", w, Real("1e-15")));
  }
  {
    Worst w;
    for (long k = 2; k < cfg.n_laws; ++k) {
      ResidualReport rep = recurrence_check(sys, k);
      for (const auto& [name, v] : rep.lines) w.see(v, std::string(name) + " n=" + std::to_string(k));
    }
    out.push_back(row("recurrence", w, Real("1e-12")));
  }

  // pseudo-random points in the square of side 1 about b_c
  Uniform01 rng(cfg.seed);
  auto near_bc = [&]() {
    double x = rng.next() - 0.5, y = rng.next() - 0.5;
    return Complex(cr.b_c + Real(x), Real(y));
  };
  std::vector<std::pair<Complex, Complex>> pairs;
  for (int i = 0; i < cfg.cd_points; ++i) {
    Complex z = near_bc();
    Complex w = near_bc();
    pairs.emplace_back(z, w);
  }
  {
    Worst w;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      for (long k : {cfg.n_laws / 2, cfg.n_laws}) {
        ResidualReport rep = prop25_identities(sys, k, pairs[i].first);
        for (const auto& [name, v] : rep.lines)
          w.see(v, std::string(name) + " n=" + std::to_string(k) + " point " + std::to_string(i));
      }
    out.push_back(row("three-term identities", w, Real("1e-12")));
  }
  {
    Worst w;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      w.see(cd_identity_residual(pairs[i].first, pairs[i].second, sys, n).max_residual,
            "point " + std::to_string(i));
    out.push_back(row("Christoffel-Darboux", w, Real("1e-12")));
  }

  if (cfg.psi_checks) {
    PiiTable own;
    if (!table) {
      own = hastings_mcleod(Real(-3), Real(3), Real("0.1"), ctx, false);
      table = &own;
    }
    Worst wdet, wsym;
    const Mat2 s1 = Mat2::of(Complex(0), Complex(1), Complex(1), Complex(0));
    const Mat2 j = Mat2::of(Complex(0), Complex(-1), Complex(1), Complex(1));
    for (int sv : {-2, 0, 2}) {
      PsiSolver psi(Real(sv), *table, ctx);
      std::vector<Complex> ys;
      for (int k = -8; k <= 8; ++k) ys.emplace_back(Real(k) / 2);
      auto vals = psi.solve(ys);
      for (std::size_t k = 0; k < vals.size(); ++k) {
        std::string at = "s=" + std::to_string(sv) + " y=" + to_string(vals[k].xi.re, 3);
        wdet.see(abs(det(vals[k].entries) - Complex(1)), at);
        const Mat2& mirror = vals[vals.size() - 1 - k].entries;
        wsym.see(max_abs(mirror - s1 * vals[k].entries * s1 * j), at);
      }
    }
    out.push_back(row("Psi determinant", wdet, Real("1e-12")));
    out.push_back(row("Psi sigma1 symmetry", wsym, Real("1e-10")));
  }
  return out;
}

}  // namespace rmtlab
