#include "rmtlab/orthopoly.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>

namespace rmtlab {

namespace mp = boost::multiprecision;

// ---------------------------------------------------------------- moments

Real MomentMatrix::operator()(long j, long k) const {
  if (j < 0 || k < 0 || j >= size || k >= size || std::labs(j - k) > width) return Real(0);
  return band[j][k - j + width];
}

MomentMatrix moments(const Real& a_in, long m, const Real& N_in, long size, const PrecisionContext& ctx) {
  if (m < 0) throw Error(ErrorKind::config, "moment matrix needs Nc >= 0");
  if (size < 1 || size > 512) throw Error(ErrorKind::config, "moment matrix size must lie in [1, 512]");
  PrecisionGuard g(ctx);
  const Real a = promote(a_in), N = promote(N_in);
  MomentMatrix M;
  M.size = size;
  M.m = m;
  M.width = m;
  M.a = a;
  M.N = N;
  M.Nc = Real(m);
  M.bits = ctx.mantissa_bits;

  // binomial weights C(m,p)(-a)^{m-p}
  std::vector<Real> w(m + 1);
  {
    Real binom(1);
    for (long p = 0; p <= m; ++p) {
      w[p] = binom * mp::pow(-a, m - p);
      binom = binom * (m - p) / (p + 1);
    }
  }
  // Gaussian moments pi k!/N^{k+1}
  std::vector<Real> gm(size + m + 1);
  gm[0] = real_pi() / N;
  for (std::size_t k = 1; k < gm.size(); ++k) gm[k] = gm[k - 1] * k / N;

  M.band.assign(size, std::vector<Real>(2 * m + 1, Real(0)));
  for (long j = 0; j < size; ++j) {
    for (long k = std::max(0L, j - m); k <= std::min(size - 1, j + m); ++k) {
      Real sum(0);
      // j + p = k + q
      for (long p = 0; p <= m; ++p) {
        long q = j + p - k;
        if (q < 0 || q > m) continue;
        sum += w[p] * w[q] * gm[j + p];
      }
      M.band[j][k - j + m] = sum;
    }
  }
  return M;
}

MomentMatrix moments_quadrature(const Real& a_in, const Real& Nc_in, const Real& N_in, long size,
                                const PrecisionContext& ctx) {
  if (size < 1 || size > 512) throw Error(ErrorKind::config, "moment matrix size must lie in [1, 512]");
  if (!(Nc_in >= 0)) throw Error(ErrorKind::config, "moment matrix needs Nc >= 0");
  PrecisionGuard g(ctx);
  const Real a = promote(a_in), N = promote(N_in), Nc = promote(Nc_in);
  MomentMatrix M;
  M.size = size;
  M.m = static_cast<long>(mp::floor(Nc).convert_to<long>());
  M.width = size - 1;
  M.a = a;
  M.N = N;
  M.Nc = Nc;
  M.exact = false;
  M.bits = ctx.mantissa_bits;

  // z = a + rho e^{i th}; radial cutoff well past the Gaussian tail of the largest monomial
  const Real R = a + mp::sqrt((Real(size) + Nc + 1) / N) + Real(12) / mp::sqrt(N);
  const int panels = 24;
  // the angular integrand carries e^{-2 N a rho cos th}; the trapezoid rule needs more nodes than that exponent
  const int n_th = static_cast<int>(4 * size + 64) + static_cast<int>(std::ceil(2 * to_double(N * a * R)));
  using GL = boost::math::quadrature::gauss<double, 30>;
  std::vector<std::vector<Complex>> acc(size, std::vector<Complex>(size));
  const Real two_pi = 2 * real_pi();
  // powers z^j at each node, accumulated into Gram entries
  std::vector<Complex> zp(size);
  for (int pan = 0; pan < panels; ++pan) {
    Real r0 = R * pan / panels, r1 = R * (pan + 1) / panels;
    Real half = (r1 - r0) / 2, mid = (r0 + r1) / 2;
    auto nodes = GL::abscissa();
    auto wts = GL::weights();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (int sgn : {-1, 1}) {
        if (sgn < 0 && nodes[i] == 0) continue;
        Real x = nodes[i] * sgn;
        Real rho = mid + half * x;
        Real wr = half * wts[i] * rho * mp::pow(rho, 2 * Nc);
        for (int it = 0; it < n_th; ++it) {
          Real th = two_pi * it / n_th;
          Complex z = Complex(a + rho * mp::cos(th), rho * mp::sin(th));
          Real wt = wr * mp::exp(-N * norm2(z)) * two_pi / n_th;
          zp[0] = Complex(1);
          for (long j = 1; j < size; ++j) zp[j] = zp[j - 1] * z;
          for (long j = 0; j < size; ++j)
            for (long k = j; k < size; ++k) acc[j][k] += zp[j] * conj(zp[k]) * wt;
        }
      }
    }
  }
  M.band.assign(size, std::vector<Real>(2 * M.width + 1, Real(0)));
  for (long j = 0; j < size; ++j)
    for (long k = j; k < size; ++k) {
      M.band[j][k - j + M.width] = acc[j][k].re;
      M.band[k][j - k + M.width] = acc[j][k].re;
    }
  return M;
}

// ---------------------------------------------------------------- orthogonal system

namespace {

Complex horner(const std::vector<Real>& c, const Complex& z) {
  Complex v(0);
  for (std::size_t i = c.size(); i-- > 0;) v = v * z + Complex(c[i]);
  return v;
}

Complex horner_deriv(const std::vector<Real>& c, const Complex& z) {
  Complex v(0);
  for (std::size_t i = c.size(); i-- > 1;) v = v * z + Complex(c[i] * Real(static_cast<long>(i)));
  return v;
}

// solves A x = rhs in place, partial pivoting
std::vector<Real> solve_dense(std::vector<std::vector<Real>> A, std::vector<Real> rhs, long index) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (mp::abs(A[r][col]) > mp::abs(A[piv][col])) piv = r;
    if (A[piv][col] == 0)
      throw Error(ErrorKind::degeneracy, "residue system for q_" + std::to_string(index) + " is singular");
    std::swap(A[piv], A[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      if (A[r][col] == 0) continue;
      Real f = A[r][col] / A[col][col];
      for (std::size_t k = col; k < n; ++k) A[r][k] -= f * A[col][k];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<Real> x(n);
  for (std::size_t i = n; i-- > 0;) {
    Real s = rhs[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

struct CholeskyOut {
  std::vector<std::vector<Real>> p;
  std::vector<Real> h;
  Real loss;
};

// M = L D L^T with unit banded L; rows of L^{-1} are the monic coefficients
CholeskyOut banded_ldl(const MomentMatrix& M) {
  const long n = M.size, w = M.width;
  std::vector<std::vector<Real>> L(n, std::vector<Real>(w + 1, Real(0)));  // L[i][i-j] for j in [i-w, i]
  std::vector<Real> D(n);
  CholeskyOut out;
  for (long k = 0; k < n; ++k) {
    // row k of L left of the diagonal
    for (long j = std::max(0L, k - w); j < k; ++j) {
      Real s = M(k, j);
      for (long i = std::max(0L, k - w); i < j; ++i) s -= L[k][k - i] * L[j][j - i] * D[i];
      L[k][k - j] = s / D[j];
    }
    Real d = M(k, k);
    for (long i = std::max(0L, k - w); i < k; ++i) d -= L[k][k - i] * L[k][k - i] * D[i];
    if (!(d > 0))
      throw Error(ErrorKind::precision, "Cholesky pivot " + std::to_string(k) + " lost positivity");
    D[k] = d;
    L[k][0] = 1;
  }
  out.p.resize(n);
  for (long k = 0; k < n; ++k) {
    std::vector<Real> row(k + 1, Real(0));
    row[k] = 1;
    for (long j = std::max(0L, k - w); j < k; ++j) {
      const Real& l = L[k][k - j];
      for (long i = 0; i <= j; ++i) row[i] -= l * out.p[j][i];
    }
    out.p[k] = std::move(row);
  }
  out.h = std::move(D);
  return out;
}

// max |<p_j, p_k>| / sqrt(h_j h_k) for the two highest k against every lower j
Real top_gram_defect(const CholeskyOut& ch, const MomentMatrix& M) {
  const long K = static_cast<long>(ch.p.size()) - 1;
  Real worst(0);
  for (long k = std::max(1L, K - 1); k <= K; ++k) {
    std::vector<Real> v(M.size, Real(0));
    for (long i = 0; i < M.size; ++i)
      for (long l = std::max(0L, i - M.width); l <= std::min(k, i + M.width); ++l) v[i] += M(i, l) * ch.p[k][l];
    for (long j = 0; j < k; ++j) {
      Real s(0);
      for (long i = 0; i <= j; ++i) s += ch.p[j][i] * v[i];
      worst = mp::max(worst, mp::abs(s) / mp::sqrt(ch.h[j] * ch.h[k]));
    }
  }
  return worst;
}

}  // namespace

Complex OrthoSystem::p_at(long k, const Complex& z) const { return horner(p.at(k), z); }
Complex OrthoSystem::p_deriv(long k, const Complex& z) const { return horner_deriv(p.at(k), z); }

Complex OrthoSystem::q_at(long k, const Complex& z) const {
  if (k < 1 || k > max_q()) throw Error(ErrorKind::range, "q_" + std::to_string(k) + " not computed");
  return horner(q_poly[k], z);
}

Complex OrthoSystem::psi_at(long k, const Complex& z) const {
  return pow(z - Complex(params.a), m) * p_at(k, z);
}

Complex OrthoSystem::psi_deriv(long k, const Complex& z) const {
  Complex za = z - Complex(params.a);
  Complex d = pow(za, m) * p_deriv(k, z);
  if (m > 0) d = d + Complex(Real(m)) * pow(za, m - 1) * p_at(k, z);
  return d;
}

Real OrthoSystem::residue(long k, const std::vector<Real>& poly, long shift) const {
  if (!exact) throw Error(ErrorKind::unsupported, "contour residues need integral Nc");
  Real s(0);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    long idx = m + k - 1 - static_cast<long>(i) - shift;
    if (idx < 0) break;
    if (idx >= static_cast<long>(f.size())) continue;
    s += poly[i] * f[idx];
  }
  return s;
}

OrthoSystem build_ortho_system(const MomentMatrix& M_in, const ModelParams& p, const PrecisionContext& ctx,
                               long q_max) {
  const long n = p.n;
  if (M_in.size < n + M_in.m + 2)
    throw Error(ErrorKind::config, "moment matrix must have at least n + Nc + 2 rows");
  OrthoSystem sys;
  sys.params = p;
  sys.m = M_in.m;
  sys.exact = M_in.exact;
  sys.bits = M_in.bits;
  PrecisionGuard g(M_in.bits);

  // Gram defects measure what the monomial basis cost; rebuild with that many extra bits when short
  const long want = static_cast<long>(ctx.mantissa_bits);
  CholeskyOut ch;
  MomentMatrix M2;
  const MomentMatrix* Mp = &M_in;
  long guard = 0;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 0) {
      unsigned more = static_cast<unsigned>(want + guard);
      if (more > 16384) throw Error(ErrorKind::precision, "moment matrix needs more than 16384 bits");
      M2 = M_in.exact ? moments(M_in.a, M_in.m, M_in.N, M_in.size, PrecisionContext(more))
                      : moments_quadrature(M_in.a, M_in.Nc, M_in.N, M_in.size, PrecisionContext(more));
      Mp = &M2;
    }
    PrecisionGuard g2(Mp->bits);
    const long have = static_cast<long>(Mp->bits);
    try {
      ch = banded_ldl(*Mp);
    } catch (const Error&) {
      if (attempt >= 4) throw;
      guard = std::max(2 * guard, 2 * (have - want) + 64);
      continue;
    }
    Real defect = top_gram_defect(ch, *Mp);
    long lost = defect > 0 ? static_cast<long>(std::ceil(have + mp::log2(defect).convert_to<double>())) : 0;
    if (have - lost >= want || !M_in.exact) {
      ch.loss = Real(lost);
      sys.bits = Mp->bits;
      break;
    }
    if (attempt >= 4)
      throw Error(ErrorKind::precision, "orthogonal polynomials lose " + std::to_string(lost) + " of " +
                                            std::to_string(have) + " bits");
    guard = std::max(lost + 32, guard + 64);
  }
  PrecisionGuard g3(sys.bits);
  sys.p = std::move(ch.p);
  sys.h = std::move(ch.h);
  sys.cholesky_loss_bits = ch.loss;
  const long K = sys.max_degree();
  const long m = sys.m;
  if (!sys.exact) return sys;

  // Taylor coefficients of (w-a)^m e^{-Naw}; every term of f_i shares the sign (-1)^{m+i}
  const Real a = promote(p.a), N = promote(p.N);
  const long nf = m + K + 2;
  sys.f.assign(nf, Real(0));
  {
    std::vector<Real> e(nf);  // (-Na)^i / i!
    e[0] = 1;
    for (long i = 1; i < nf; ++i) e[i] = e[i - 1] * (-N * a) / i;
    std::vector<Real> w(m + 1);
    Real binom(1);
    for (long q = 0; q <= m; ++q) {
      w[q] = binom * mp::pow(-a, m - q);
      binom = binom * (m - q) / (q + 1);
    }
    for (long i = 0; i < nf; ++i) {
      Real s(0);
      for (long q = 0; q <= std::min(m, i); ++q) s += w[q] * e[i - q];
      sys.f[i] = s;
    }
  }

  const Complex two_pi_i(Real(0), 2 * real_pi());
  sys.rec.resize(K + 1);
  sys.h_tilde.resize(K + 1);
  for (long k = 0; k <= K; ++k) {
    RecurrenceRecord& r = sys.rec[k];
    const std::vector<Real>& pk = sys.p[k];
    r.a = k >= 1 ? pk[k - 1] : Real(0);
    r.b = -sys.residue(k, pk, k);
    r.alpha = pk[0];
    r.beta = sys.residue(k, pk, -1);
    // p_k^2 for the contour norm
    std::vector<Real> sq(2 * k + 1, Real(0));
    for (long i = 0; i <= k; ++i)
      for (long j = 0; j <= k; ++j) sq[i + j] += pk[i] * pk[j];
    sys.h_tilde[k] = two_pi_i * Complex(sys.residue(k, sq, 0));
  }

  long qm = q_max < 0 ? n + 1 : q_max;
  qm = std::min(qm, K);
  sys.q_poly.assign(qm + 1, {});
  for (long k = 1; k <= qm; ++k) {
    // Res_0[q_k w^j omega_k] = 0 for j < k-1 and -1 for j = k-1
    std::vector<std::vector<Real>> A(k, std::vector<Real>(k));
    std::vector<Real> rhs(k, Real(0));
    for (long j = 0; j < k; ++j)
      for (long i = 0; i < k; ++i) {
        long idx = m + k - 1 - i - j;
        A[j][i] = idx >= 0 ? sys.f[idx] : Real(0);
      }
    rhs[k - 1] = -1;
    sys.q_poly[k] = solve_dense(std::move(A), std::move(rhs), k);
    RecurrenceRecord& r = sys.rec[k];
    const std::vector<Real>& qk = sys.q_poly[k];
    r.c = qk[k - 1];
    r.d = -sys.residue(k, qk, k);
    r.gamma = qk[0];
    r.eta = sys.residue(k, qk, -1);
    r.has_q = true;
  }
  return sys;
}

OrthoSystem ortho_system(const ModelParams& p, const PrecisionContext& ctx, long q_max) {
  PrecisionGuard g(ctx);
  const long m = p.Nc();
  return build_ortho_system(moments(p.a, m, p.N, p.n + m + 2, ctx), p, ctx, q_max);
}

Real gram_residual(const OrthoSystem& sys, const MomentMatrix& M_in, long upto) {
  PrecisionGuard g(sys.bits);
  // the system may have been rebuilt at more bits than the caller's matrix carries
  MomentMatrix finer;
  if (M_in.bits < sys.bits)
    finer = M_in.exact ? moments(M_in.a, M_in.m, M_in.N, M_in.size, PrecisionContext(sys.bits))
                       : moments_quadrature(M_in.a, M_in.Nc, M_in.N, M_in.size, PrecisionContext(sys.bits));
  const MomentMatrix& M = M_in.bits < sys.bits ? finer : M_in;
  upto = std::min(upto, sys.max_degree());
  Real worst(0);
  for (long k = 0; k <= upto; ++k) {
    // v = M p_k
    std::vector<Real> v(upto + 1, Real(0));
    for (long r = 0; r <= upto; ++r)
      for (long s = std::max(0L, r - M.width); s <= std::min(k, r + M.width); ++s) v[r] += M(r, s) * sys.p[k][s];
    for (long j = 0; j < k; ++j) {
      Real ip(0);
      for (long r = 0; r <= j; ++r) ip += sys.p[j][r] * v[r];
      worst = mp::max(worst, mp::abs(ip) / mp::sqrt(sys.h[j] * sys.h[k]));
    }
  }
  return worst;
}

// ---------------------------------------------------------------- identities

namespace {

Real rel_diff(const Complex& lhs, const Complex& rhs, const Real& scale_in) {
  Real scale = mp::max(mp::max(abs(lhs), abs(rhs)), scale_in);
  if (scale == 0) return Real(0);
  return abs(lhs - rhs) / scale;
}

Real rel_diff(const Real& lhs, const Real& rhs, const Real& scale) { return rel_diff(Complex(lhs), Complex(rhs), scale); }

void add_line(ResidualReport& rep, const char* name, const Real& v) {
  rep.lines.emplace_back(name, v);
  rep.max_residual = mp::max(rep.max_residual, v);
}

const RecurrenceRecord& q_record(const OrthoSystem& sys, long k) {
  if (k < 1 || k > sys.max_q() || !sys.rec[k].has_q)
    throw Error(ErrorKind::range, "recurrence data for index " + std::to_string(k) + " not computed");
  return sys.rec[k];
}

}  // namespace

ResidualReport recurrence_check(const OrthoSystem& sys, long n) {
  PrecisionGuard g(sys.bits);
  if (n < 1) throw Error(ErrorKind::range, "recurrence check needs n >= 1");
  const RecurrenceRecord& r = q_record(sys, n);
  const RecurrenceRecord& r1 = q_record(sys, n + 1);
  const RecurrenceRecord& rm = sys.rec.at(n - 1);
  const Real a = promote(sys.params.a), N = promote(sys.params.N);
  const Real Nc(sys.m), nn(n);
  const Real ab = r.alpha * r.beta;
  if (ab == 0 || r.gamma == 0)
    throw Error(ErrorKind::degeneracy, "alpha_n beta_n vanishes at n = " + std::to_string(n));
  const Real bg1 = 1 + r.beta * r.gamma;

  ResidualReport rep;
  rep.max_residual = 0;
  add_line(rep, "a_{n+1}", rel_diff(r1.a, r.a + r.b * bg1 / ab, Real(0)));
  add_line(rep, "alpha_{n+1}", rel_diff(r1.alpha, r.b / r.beta, Real(0)));
  add_line(rep, "gamma_{n+1}", rel_diff(r1.gamma, -1 / r.beta, Real(0)));
  {
    Real t1 = (1 + nn + a * a * N) * r.b / (a * N);
    Real t2 = (Nc + nn) * ab / N;
    Real t3 = r.b * r.b * bg1 / ab;
    add_line(rep, "b_{n+1}", rel_diff(r1.b, t1 - t2 + t3, mp::max(mp::abs(t1), mp::max(mp::abs(t2), mp::abs(t3)))));
  }
  add_line(rep, "b_{n-1}=alpha_n beta_{n-1}", rel_diff(rm.b, r.alpha * rm.beta, Real(0)));
  add_line(rep, "b_{n-1}=-alpha_n/gamma_n", rel_diff(rm.b, -r.alpha / r.gamma, Real(0)));
  add_line(rep, "eta_n", rel_diff(r.eta, bg1 / r.alpha, Real(0)));
  {
    // (1,1) entry of the Lax compatibility at z^0, solved for beta_{n+1}; c_n enters directly
    Real ct1 = a * a * N * r.alpha * r.b * r.beta * bg1;
    Real ct2 = a * N * ab * ab * r.b * r.c;
    Real ct3 = a * N * r.b * r.b * bg1 * bg1;
    Real ct4 = -a * ab * ab * (Nc + nn + 1);
    Real ct5 = nn * ab * r.b * bg1;
    Real den = -a * r.alpha * ab * (Nc + nn + 1);
    Real scale = mp::max(mp::max(mp::abs(ct1), mp::abs(ct2)), mp::max(mp::max(mp::abs(ct3), mp::abs(ct4)), mp::abs(ct5))) /
                 mp::abs(den);
    add_line(rep, "beta_{n+1}", rel_diff(r1.beta, (ct1 + ct2 + ct3 + ct4 + ct5) / den, scale));
  }
  add_line(rep, "a_{n+1}-a_n+b_n c_{n+1}", rel_diff(r1.a - r.a, -r.b * r1.c, Real(0)));
  return rep;
}

ResidualReport prop25_identities(const OrthoSystem& sys, long n, const Complex& z_in) {
  PrecisionGuard g(sys.bits);
  if (n < 1) throw Error(ErrorKind::range, "identities need n >= 1");
  const RecurrenceRecord& r = q_record(sys, n);
  const Complex z = promote(z_in);
  const Real a = promote(sys.params.a), N = promote(sys.params.N);
  const Real c = Real(sys.m) / N, t = Real(n) / N;
  Complex pn = sys.p_at(n, z), qn = sys.q_at(n, z), pm = sys.p_at(n - 1, z), pp = sys.p_at(n + 1, z);
  ResidualReport rep;
  rep.max_residual = 0;
  {
    Complex rhs1 = Complex(r.alpha / r.gamma) * qn;
    add_line(rep, "z p_{n-1} = p_n - (alpha_n/gamma_n) q_n",
             rel_diff(z * pm, pn - rhs1, mp::max(abs(pn), abs(rhs1))));
  }
  {
    Complex t1 = (z + Complex(r.b * (1 + r.beta * r.gamma) / (r.alpha * r.beta))) * pn;
    Complex t2 = Complex(r.b) * qn;
    add_line(rep, "p_{n+1} three-term", rel_diff(pp, t1 - t2, mp::max(abs(t1), abs(t2))));
  }
  {
    Complex za = z - Complex(a);
    Real cbg = (c + t) * r.beta * r.gamma, cba = (c + t) * r.beta * r.alpha;
    Complex t1 = (Complex(t + cbg) / za - Complex(cbg) / z) * pn;
    Complex t2 = (Complex(cba) / z + Complex(a * r.b - cba) / za) * qn;
    Complex lhs = sys.p_deriv(n, z) / Complex(N);
    add_line(rep, "p_n'/N derivative identity", rel_diff(lhs, t1 + t2, mp::max(abs(t1), abs(t2))));
  }
  {
    Real law = mp::exp(log_gamma(Real(sys.m + n + 1), PrecisionContext(sys.bits)) -
                       Real(sys.m + n + 1) * mp::log(N)) *
               real_pi() * r.beta;
    add_line(rep, "h_n-beta_n law", rel_diff(Complex(sys.h[n]), Complex(law), Real(0)));
  }
  return rep;
}

ResidualReport cd_identity_residual(const Complex& z_in, const Complex& zeta_in, const OrthoSystem& sys, long n) {
  PrecisionGuard g(sys.bits);
  if (n < 2 || n + 1 > sys.max_degree()) throw Error(ErrorKind::range, "C-D identity needs 2 <= n < max degree");
  if (sys.params.a == 0) throw Error(ErrorKind::degeneracy, "C-D identity form needs a != 0");
  const Complex z = promote(z_in), zeta = promote(zeta_in);
  const Real a = promote(sys.params.a), N = promote(sys.params.N);
  const Real Nc(sys.m);
  Complex pa_n = sys.p_at(n, Complex(a)), pa_n1 = sys.p_at(n + 1, Complex(a));
  if (pa_n.re == 0 && pa_n.im == 0) throw Error(ErrorKind::degeneracy, "p_n(a) vanishes");
  const std::vector<Real>& h = sys.h;
  Real den1 = (Real(n) + Nc) / N * h[n - 1] - h[n];
  Real den2 = (Real(n) + Nc + 1) / N * h[n] - h[n + 1];
  if (den1 == 0 || den2 == 0) throw Error(ErrorKind::degeneracy, "C-D denominators vanish");

  // common factor e^{-N z conj(zeta)} dropped from both sides
  Complex lhs(0);
  Real lscale(0);
  for (long k = 0; k < n; ++k) {
    Complex term = sys.psi_at(k, z) / Complex(h[k]) *
                   (conj(sys.psi_deriv(k, zeta)) - Complex(N) * z * conj(sys.psi_at(k, zeta)));
    lhs = lhs + term;
    lscale = mp::max(lscale, abs(term));
  }
  Complex r1 = conj(sys.psi_deriv(n, zeta)) * (sys.psi_at(n, z) - z * sys.psi_at(n - 1, z)) / Complex(den1);
  Complex r2 = (pa_n1 / pa_n) * Complex(N * h[n] / h[n - 1] / den2) * conj(sys.psi_at(n - 1, zeta)) *
               (sys.psi_at(n + 1, z) - z * sys.psi_at(n, z));
  Complex rhs = r1 - r2;
  ResidualReport rep;
  rep.max_residual = 0;
  add_line(rep, "C-D identity", rel_diff(lhs, rhs, mp::max(abs(r1), abs(r2))));
  return rep;
}

// ---------------------------------------------------------------- kernels

std::vector<Complex> p_values(const OrthoSystem& sys, const Complex& z, long count) {
  PrecisionGuard g(sys.bits);
  Complex zz = promote(z);
  std::vector<Complex> v(count);
  for (long k = 0; k < count; ++k) v[k] = sys.p_at(k, zz);
  return v;
}

namespace {

long terms_for(const OrthoSystem& sys, long n) {
  long nn = n > 0 ? n : sys.params.n;
  if (nn < 1 || nn > sys.max_degree() + 1) throw Error(ErrorKind::range, "kernel needs 1 <= n <= max degree + 1");
  return nn;
}

void check_weight(const Complex& z, const OrthoSystem& sys) {
  if (z.re == sys.params.a && z.im == 0) throw Error(ErrorKind::domain, "kernel weight is singular at z = a");
}

}  // namespace

LogMagPhase kernel_from_values(const Complex& z, const std::vector<Complex>& pz, const Complex& zeta,
                               const std::vector<Complex>& pzeta, const OrthoSystem& sys, long n) {
  PrecisionGuard g(sys.bits);
  check_weight(z, sys);
  check_weight(zeta, sys);
  const long nn = terms_for(sys, n);
  std::vector<LogMagPhase> terms;
  terms.reserve(nn);
  for (long k = 0; k < nn; ++k)
    terms.push_back(LogMagPhase::from_complex(pz[k]) * LogMagPhase::from_complex(conj(pzeta[k])) /
                    LogMagPhase(mp::log(sys.h[k]), Real(0)));
  LogMagPhase s = lmp_sum(terms);
  const Real N = promote(sys.params.N), a = promote(sys.params.a);
  const Real Nc = sys.exact ? Real(sys.m) : promote(sys.params.N * sys.params.c);
  Real w = -N * (norm2(z) + norm2(zeta)) / 2 + Nc * (mp::log(abs(z - Complex(a))) + mp::log(abs(zeta - Complex(a))));
  return s * LogMagPhase(w, Real(0));
}

LogMagPhase kernel_eval(const Complex& z, const Complex& zeta, const OrthoSystem& sys, long n) {
  const long nn = terms_for(sys, n);
  return kernel_from_values(z, p_values(sys, z, nn), zeta, p_values(sys, zeta, nn), sys, nn);
}

LogMagPhase prekernel_eval(const Complex& z_in, const Complex& zeta_in, const OrthoSystem& sys, long n) {
  PrecisionGuard g(sys.bits);
  const long nn = terms_for(sys, n);
  const Complex z = promote(z_in), zeta = promote(zeta_in);
  std::vector<LogMagPhase> terms;
  for (long k = 0; k < nn; ++k)
    terms.push_back(LogMagPhase::from_complex(sys.psi_at(k, z)) *
                    LogMagPhase::from_complex(conj(sys.psi_at(k, zeta))) /
                    LogMagPhase(mp::log(sys.h[k]), Real(0)));
  return lmp_sum(terms) * LogMagPhase::from_log(-promote(sys.params.N) * z * conj(zeta));
}

LogMagPhase prekernel_dbar(const Complex& z_in, const Complex& zeta_in, const OrthoSystem& sys, long n) {
  PrecisionGuard g(sys.bits);
  const long nn = terms_for(sys, n);
  const Complex z = promote(z_in), zeta = promote(zeta_in);
  const Complex Nz = promote(sys.params.N) * z;
  std::vector<LogMagPhase> terms;
  for (long k = 0; k < nn; ++k) {
    Complex inner = conj(sys.psi_deriv(k, zeta)) - Nz * conj(sys.psi_at(k, zeta));
    terms.push_back(LogMagPhase::from_complex(sys.psi_at(k, z)) * LogMagPhase::from_complex(inner) /
                    LogMagPhase(mp::log(sys.h[k]), Real(0)));
  }
  return lmp_sum(terms) * LogMagPhase::from_log(-promote(sys.params.N) * z * conj(zeta));
}

KernelGrid kernel_grid(const std::vector<std::pair<Complex, Complex>>& points, const OrthoSystem& sys,
                       const std::string& meta, long n) {
  KernelGrid kg;
  kg.points = points;
  kg.meta = meta;
  for (const auto& pr : points) kg.values.push_back(kernel_eval(pr.first, pr.second, sys, n));
  return kg;
}

}  // namespace rmtlab
