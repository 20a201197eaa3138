#include "rmtlab/painleve.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace rmtlab {

namespace mp = boost::multiprecision;

// ---------------------------------------------------------------- Mat2

Mat2 Mat2::identity() { return diag(Complex(1), Complex(1)); }

Mat2 Mat2::diag(const Complex& a, const Complex& d) { return of(a, Complex(0), Complex(0), d); }

Mat2 Mat2::of(const Complex& a, const Complex& b, const Complex& c, const Complex& d) {
  Mat2 r;
  r.m[0][0] = a;
  r.m[0][1] = b;
  r.m[1][0] = c;
  r.m[1][1] = d;
  return r;
}

Mat2 operator+(const Mat2& a, const Mat2& b) {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.m[i][j] = a.m[i][j] + b.m[i][j];
  return r;
}

Mat2 operator-(const Mat2& a, const Mat2& b) {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.m[i][j] = a.m[i][j] - b.m[i][j];
  return r;
}

Mat2 operator*(const Mat2& a, const Mat2& b) {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.m[i][j] = a.m[i][0] * b.m[0][j] + a.m[i][1] * b.m[1][j];
  return r;
}

Mat2 operator*(const Complex& s, const Mat2& a) {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.m[i][j] = s * a.m[i][j];
  return r;
}

Mat2 operator/(const Mat2& a, const Complex& s) {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.m[i][j] = a.m[i][j] / s;
  return r;
}

Complex det(const Mat2& a) { return a.m[0][0] * a.m[1][1] - a.m[0][1] * a.m[1][0]; }

Real max_abs(const Mat2& a) {
  Real r = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r = mp::max(r, abs(a.m[i][j]));
  return r;
}

// ---------------------------------------------------------------- Hastings-McLeod

PiiPoint pii_point(const Real& s, const Real& q, const Real& qp) {
  PiiPoint p;
  p.s = s;
  p.q = q;
  p.qp = qp;
  Real q2 = q * q;
  p.r = qp * qp - s * q2 - q2 * q2;
  p.p12 = (q * p.r + qp) / 4;
  p.p11 = (q2 - p.r * p.r) / 8;
  Real q3 = q2 * q, q5 = q3 * q2, q7 = q5 * q2, q9 = q7 * q2;
  Real qp2 = qp * qp, qp3 = qp2 * qp, qp4 = qp2 * qp2;
  p.q12 = (2 * s * q + q3 + s * s * q5 + 2 * s * q7 + q9 - 2 * q2 * (s + q2) * qp - 2 * q3 * (s + q2) * qp2 +
           2 * qp3 + q * qp4) /
          16;
  return p;
}

namespace {

// y = (q, q') as complex state
void pii_field(const Complex& s, const State& y, State& dy) {
  dy[0] = y[1];
  dy[1] = s * y[0] + Real(2) * y[0] * y[0] * y[0];
}

struct HmRun {
  std::vector<Real> s, q, qp;  // descending s
};

HmRun hm_integrate(const std::vector<Real>& nodes, const PrecisionContext& ctx) {
  PrecisionGuard g(ctx);
  auto [ai, aip] = airy_ai(nodes.front(), ctx);
  State y{Complex(ai), Complex(aip)};
  HmRun run;
  run.s.push_back(nodes.front());
  run.q.push_back(ai);
  run.qp.push_back(aip);
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    try {
      y = ode_integrate(pii_field, y, Complex(nodes[k - 1]), Complex(nodes[k]), ctx);
    } catch (const StiffnessError& e) {
      throw Error(ErrorKind::numerics, "Painleve II integration failed near s = " + to_string(e.t_reached.re, 8));
    }
    if (mp::abs(y[0].re) > 1e6 || !is_finite(y[0]))
      throw Error(ErrorKind::numerics,
                  "Painleve II blow-up (|q| > 1e6) at s = " + to_string(nodes[k], 8) + "; wrong branch or too little precision");
    run.s.push_back(nodes[k]);
    run.q.push_back(y[0].re);
    run.qp.push_back(y[1].re);
  }
  return run;
}

}  // namespace

bool PiiTable::covers(const Real& s) const {
  return !grid.empty() && s >= grid.front() - Real("1e-30") && s <= grid.back() + Real("1e-30");
}

PiiPoint PiiTable::row(std::size_t i) const {
  PiiPoint p;
  p.s = grid[i];
  p.q = q[i];
  p.qp = q_prime[i];
  p.r = r[i];
  p.p11 = p11[i];
  p.p12 = p12[i];
  p.q12 = q12[i];
  return p;
}

PiiPoint PiiTable::at(const Real& s) const {
  if (!covers(s)) throw Error(ErrorKind::range, "s = " + to_string(s, 10) + " outside the Painleve table");
  PrecisionContext ctx(std::max(bits, current_bits()));
  PrecisionGuard g(ctx);
  std::size_t best = 0;
  for (std::size_t i = 1; i < node_s.size(); ++i)
    if (mp::abs(node_s[i] - s) < mp::abs(node_s[best] - s)) best = i;
  if (node_s[best] == s) return pii_point(s, node_q[best], node_qp[best]);
  State y{Complex(node_q[best]), Complex(node_qp[best])};
  y = ode_integrate(pii_field, y, Complex(node_s[best]), Complex(s), ctx);
  return pii_point(s, y[0].re, y[1].re);
}

PiiTable hastings_mcleod(const Real& s_min, const Real& s_max, const Real& step, const PrecisionContext& ctx_in,
                         bool shadow) {
  if (!(s_min >= -6) || !(s_max <= 10) || !(s_min < s_max))
    throw Error(ErrorKind::config, "Painleve table needs -6 <= s_min < s_max <= 10");
  if (!(step > 0) || step > Real("0.1") + Real("1e-30"))
    throw Error(ErrorKind::config, "Painleve table step must lie in (0, 0.1]");
  PrecisionContext ctx = ctx_in.with_bits(std::max(256u, ctx_in.mantissa_bits));
  PrecisionGuard g(ctx);
  Real s0 = mp::max(promote(s_max), Real(9));
  const Real h("0.01");

  PiiTable t;
  t.bits = ctx.mantissa_bits;
  Real span = (promote(s_max) - promote(s_min)) / promote(step);
  long count = mp::floor(span + Real("1e-9")).convert_to<long>();
  for (long i = 0; i <= count; ++i) t.grid.push_back(promote(s_min) + promote(step) * i);
  if (mp::abs(t.grid.back() - promote(s_max)) > Real("1e-20")) t.grid.push_back(promote(s_max));

  // internal nodes: fine spacing from s0 down, merged with the requested grid
  std::vector<Real> nodes;
  long fine = static_cast<long>(mp::ceil((s0 - promote(s_min)) / h).convert_to<long>());
  for (long k = 0; k <= fine; ++k) nodes.push_back(mp::max(s0 - h * k, promote(s_min)));
  for (const auto& gs : t.grid) nodes.push_back(gs);
  std::sort(nodes.begin(), nodes.end(), [](const Real& a, const Real& b) { return a > b; });
  std::vector<Real> uniq;
  for (const auto& v : nodes)
    if (uniq.empty() || mp::abs(uniq.back() - v) > Real("1e-40")) uniq.push_back(v);

  HmRun run = hm_integrate(uniq, ctx);
  t.node_s = run.s;
  t.node_q = run.q;
  t.node_qp = run.qp;

  auto lookup = [&](const HmRun& r, const Real& s) {
    auto it = std::min_element(r.s.begin(), r.s.end(),
                               [&](const Real& a, const Real& b) { return mp::abs(a - s) < mp::abs(b - s); });
    return static_cast<std::size_t>(it - r.s.begin());
  };
  for (const auto& gs : t.grid) {
    std::size_t i = lookup(run, gs);
    PiiPoint p = pii_point(gs, run.q[i], run.qp[i]);
    t.q.push_back(p.q);
    t.q_prime.push_back(p.qp);
    t.r.push_back(p.r);
    t.p11.push_back(p.p11);
    t.p12.push_back(p.p12);
    t.q12.push_back(p.q12);
  }

  t.error_estimate = -1;
  if (shadow) {
    PrecisionContext c2 = ctx.doubled();
    HmRun sh;
    {
      PrecisionGuard g2(c2);
      std::vector<Real> nodes2;
      for (const auto& v : uniq) nodes2.push_back(promote(v));
      sh = hm_integrate(nodes2, c2);
    }
    Real err = 0;
    for (std::size_t k = 0; k < t.grid.size(); ++k) {
      std::size_t i = lookup(sh, t.grid[k]);
      err = mp::max(err, mp::abs(sh.q[i] - t.q[k]));
      err = mp::max(err, mp::abs(sh.qp[i] - t.q_prime[k]));
    }
    t.error_estimate = Real(err, ctx.digits10());
  }
  return t;
}

void write_pii_csv(std::ostream& os, const PiiTable& t) {
  os << "s,q,qp,r,p11,p12,q12\n";
  for (std::size_t i = 0; i < t.grid.size(); ++i)
    os << to_string(t.grid[i], 24) << ',' << to_string(t.q[i], 24) << ',' << to_string(t.q_prime[i], 24) << ','
       << to_string(t.r[i], 24) << ',' << to_string(t.p11[i], 24) << ',' << to_string(t.p12[i], 24) << ','
       << to_string(t.q12[i], 24) << '\n';
}

// ---------------------------------------------------------------- Psi

Mat2 lax_matrix(const Complex& xi, const Real& s, const Real& q, const Real& qp) {
  Complex d = Complex(Real(0), Real(1)) * (Real(4) * xi * xi + Complex(s + 2 * q * q));
  Complex off = Real(4) * q * xi;
  Complex iq = Complex(Real(0), 2 * qp);
  return Mat2::of(-d, off + iq, off - iq, d);
}

PsiSolver::PsiSolver(const Real& s, const PiiTable& table, const PrecisionContext& ctx)
    : s_(s), pt_(table.at(s)), ctx_(ctx), start_gap_(-1) {
  PrecisionGuard g(ctx_);
  s_ = promote(s);
  // formal solution Pi = sum M_k xi^{-k} of Pi' = -i theta' [s3, Pi] + B Pi
  const Real q = promote(pt_.q), qp = promote(pt_.qp);
  const Complex I = I_unit();
  const Complex sq = Complex(s_ + q * q);
  std::vector<Complex> a{Complex(1)}, b{Complex(0)}, c{Complex(0)}, d{Complex(1)};
  auto at = [](const std::vector<Complex>& v, long k) { return k < 0 ? Complex(0) : v[k]; };
  const Real x0 = Real(kStart);
  const Real floor_tol = mp::ldexp(Real(1), -static_cast<int>(ctx_.mantissa_bits) - 8);
  std::vector<Real> terms{Real(1)};
  int growing = 0;
  coeff_.push_back(Mat2::identity());
  for (long m = 1; m < 2000; ++m) {
    Real mm(m);
    Complex cm = (I / Real(8)) * (Real(2) * I * sq * at(c, m - 2) + Real(4) * q * at(a, m - 1) -
                                  Real(2) * I * qp * at(a, m - 2) + Real(m - 3) * at(c, m - 3));
    Complex bm = (-I / Real(8)) * (Real(-2) * I * sq * at(b, m - 2) + Real(4) * q * at(d, m - 1) +
                                   Real(2) * I * qp * at(d, m - 2) + Real(m - 3) * at(b, m - 3));
    c.push_back(cm);
    b.push_back(bm);
    Complex am = (q * sq * cm - (I * q / Real(2)) * Real(m - 1) * at(c, m - 1) +
                  (qp / Real(4)) * (Real(2) * I * sq * at(c, m - 1) - Real(2) * I * qp * at(a, m - 1) +
                                    Real(m - 2) * at(c, m - 2))) /
                 mm;
    Complex dm = (q * sq * bm + (I * q / Real(2)) * Real(m - 1) * at(b, m - 1) +
                  (qp / Real(4)) * (Real(-2) * I * sq * at(b, m - 1) + Real(2) * I * qp * at(d, m - 1) +
                                    Real(m - 2) * at(b, m - 2))) /
                 mm;
    a.push_back(am);
    d.push_back(dm);
    Mat2 M = Mat2::of(am, bm, cm, dm);
    coeff_.push_back(M);
    // magnitudes cycle with period 3, so growth is judged against m-3
    Real term = max_abs(M) / mp::pow(x0, m);
    terms.push_back(term);
    if (term < floor_tol && m > 6) break;
    if (m > 12 && term > terms[m - 3]) {
      if (++growing >= 6) break;
    } else {
      growing = 0;
    }
  }
}

Mat2 PsiSolver::pi_series(const Complex& xi) const {
  PrecisionGuard g(ctx_);
  Mat2 sum = Mat2::identity();
  Complex inv = Complex(1) / xi;
  Complex pw = inv;
  std::vector<Real> mags{Real(1)};
  const Real tol = mp::ldexp(Real(1), -static_cast<int>(ctx_.mantissa_bits) - 8);
  for (std::size_t k = 1; k < coeff_.size(); ++k) {
    Mat2 term = pw * coeff_[k];
    Real mag = max_abs(term);
    // optimal truncation: stop once the period-3 envelope grows
    if (k > 12 && mag > mags[k - 3]) break;
    sum = sum + term;
    mags.push_back(mag);
    if (mag < tol && k > 6) break;
    pw = pw * inv;
  }
  return sum;
}

Mat2 PsiSolver::start_value(const Real& x0) const {
  PrecisionGuard g(ctx_);
  Complex xi(x0);
  Complex theta = Real(4) / 3 * xi * xi * xi + s_ * xi;
  Complex e = exp(I_unit() * theta);
  Complex em = Complex(1) / e;
  // right sector: Psi = Pi e^{-i theta s3} [[1,0],[1,1]]
  return pi_series(xi) * Mat2::of(em, Complex(0), e, e);
}

std::vector<Mat2> PsiSolver::integrate(const std::vector<Complex>& path, const Mat2& y0) const {
  Real s = s_;
  Real q = pt_.q, qp = pt_.qp;
  Field f = [s, q, qp](const Complex& xi, const State& y, State& dy) {
    Mat2 A = lax_matrix(xi, s, q, qp);
    dy[0] = A.m[0][0] * y[0] + A.m[0][1] * y[2];
    dy[1] = A.m[0][0] * y[1] + A.m[0][1] * y[3];
    dy[2] = A.m[1][0] * y[0] + A.m[1][1] * y[2];
    dy[3] = A.m[1][0] * y[1] + A.m[1][1] * y[3];
  };
  State st{y0.m[0][0], y0.m[0][1], y0.m[1][0], y0.m[1][1]};
  std::vector<State> out = ode_integrate_polyline(f, st, path, ctx_);
  std::vector<Mat2> res;
  for (const auto& v : out) res.push_back(Mat2::of(v[0], v[1], v[2], v[3]));
  return res;
}

std::vector<PsiMatrix> PsiSolver::solve(const std::vector<Complex>& targets) const {
  PrecisionGuard g(ctx_);
  // start one unit right of every target, never closer in than kStart
  Real x0(kStart);
  for (const auto& z : targets) x0 = mp::max(x0, mp::ceil(z.re) + 1);
  // start discrepancy: integrate the series value from one unit further out
  {
    Real xc = x0 + (kCheckStart - kStart);
    Mat2 far = start_value(xc);
    Mat2 near = start_value(x0);
    std::vector<Mat2> v = integrate({Complex(xc), Complex(x0)}, far);
    start_gap_ = max_abs(v.back() - near) / mp::max(Real(1), max_abs(near));
    if (start_gap_ > Real("1e-8"))
      throw Error(ErrorKind::accuracy, "Psi initialisation disagrees between starts (" + to_string(start_gap_, 3) + ")");
  }
  // real parts descending, then a vertical leg for each complex target
  std::vector<std::size_t> order(targets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return targets[i].re > targets[j].re; });

  std::vector<PsiMatrix> result(targets.size());
  Mat2 cur = start_value(x0);
  Complex pos(x0);
  for (std::size_t idx : order) {
    const Complex& z = targets[idx];
    Complex foot(z.re);
    if (foot.re != pos.re) {
      cur = integrate({pos, foot}, cur).back();
      pos = foot;
    }
    Mat2 val = cur;
    if (z.im != 0) val = integrate({foot, z}, cur).back();
    result[idx] = PsiMatrix{val, z, s_};
  }
  return result;
}

PsiMatrix PsiSolver::solve(const Complex& xi) const { return solve(std::vector<Complex>{xi}).front(); }

PsiMatrix PsiSolver::solve_via(const std::vector<Complex>& waypoints, const Complex& xi) const {
  PrecisionGuard g(ctx_);
  std::vector<Complex> path{Complex(Real(kStart))};
  for (const auto& w : waypoints) path.push_back(w);
  path.push_back(xi);
  return PsiMatrix{integrate(path, start_value(Real(kStart))).back(), xi, s_};
}

Mat2 PsiSolver::derivative(const PsiMatrix& psi) const {
  PrecisionGuard g(ctx_);
  return lax_matrix(psi.xi, s_, pt_.q, pt_.qp) * psi.entries;
}

std::array<Mat2, 3> PsiSolver::derivatives(const PsiMatrix& psi) const {
  PrecisionGuard g(ctx_);
  const Complex I = I_unit();
  Mat2 A = lax_matrix(psi.xi, s_, pt_.q, pt_.qp);
  Complex eight_i_xi = Real(8) * I * psi.xi;
  Complex fq(Real(4) * pt_.q);
  Mat2 A1 = Mat2::of(Complex(0) - eight_i_xi, fq, fq, eight_i_xi);
  Mat2 A2 = Mat2::diag(Real(-8) * I, Real(8) * I);
  // Psi'' = (A' + A^2) Psi, Psi''' = (A'' + A'A + AA' + (A' + A^2)A) Psi
  Mat2 B = A1 + A * A;
  Mat2 C = A2 + A1 * A + A * A1 + B * A;
  return {A * psi.entries, B * psi.entries, C * psi.entries};
}

PsiMatrix psi_solve(const Real& y, const Real& s, const PiiTable& table, const PrecisionContext& ctx) {
  if (mp::abs(y) > 8) throw Error(ErrorKind::range, "psi_solve needs |y| <= 8");
  PsiSolver solver(s, table, ctx);
  return solver.solve(Complex(y));
}

// ---------------------------------------------------------------- limiting kernel

namespace {

Complex ks_value(const Real& x, const Real& y, const Mat2& py, const std::array<Mat2, 3>& dy, const Real& xp,
                 const Real& yp, const Mat2& pyp) {
  Real pref = mp::exp(-(x * x + xp * xp)) / mp::sqrt(real_pi() / 2);
  Complex two_pi_i(Real(0), 2 * real_pi());
  if (mp::abs(y - yp) > Real("1e-6")) {
    Complex br = py.m[1][0] * pyp.m[0][0] - py.m[0][0] * pyp.m[1][0];
    return pref * br / (two_pi_i * Complex(y - yp));
  }
  // Taylor expansion of Psi(y') about y, kept to third order so nearby y' stay consistent with the quotient
  Complex dl(yp - y);
  Complex br(0);
  Complex w(1);
  const Real fact[3] = {Real(1), Real(2), Real(6)};
  for (int k = 0; k < 3; ++k) {
    br = br + (w / fact[k]) * (dy[k].m[1][0] * py.m[0][0] - dy[k].m[0][0] * py.m[1][0]);
    w = w * dl;
  }
  return pref * br / two_pi_i;
}

}  // namespace

LimitKernelEvaluator::LimitKernelEvaluator(const PsiSolver& psi, const std::vector<Real>& ys_in) : ys(ys_in) {
  std::vector<Complex> t;
  for (const auto& y : ys) t.emplace_back(y);
  values = psi.solve(t);
  for (const auto& v : values) derivs.push_back(psi.derivatives(v));
}

Complex LimitKernelEvaluator::operator()(const Real& x, std::size_t iy, const Real& xp, std::size_t iyp) const {
  return ks_value(x, ys[iy], values[iy].entries, derivs[iy], xp, ys[iyp], values[iyp].entries);
}

Complex limit_kernel_Ks(const Real& x, const Real& y, const Real& xp, const Real& yp, const PsiSolver& psi) {
  LimitKernelEvaluator ev(psi, {y, yp});
  return ev(x, 0, xp, 1);
}

Complex limit_kernel_Ks(const Real& x, const Real& y, const Real& xp, const Real& yp, const Real& s,
                        const PiiTable& table, const PrecisionContext& ctx) {
  if (!table.covers(s)) throw Error(ErrorKind::range, "s outside the Painleve table");
  PsiSolver psi(s, table, ctx);
  return limit_kernel_Ks(x, y, xp, yp, psi);
}

Complex prefactor_CN(const Real& y, const Real& yp, const ModelParams& p) {
  CriticalData cd = critical_data(p);
  Real k = p.a * cd.gamma_c * mp::pow(p.N, Real(2) / 3);
  auto phiN = [&](const Real& w) -> Real { return k * w + cd.s * w + 4 * w * w * w / 3; };
  return polar(Real(1), -(phiN(y) - phiN(yp)));
}

// ---------------------------------------------------------------- parametrix

ParametrixData schlesinger_data(const Real& s_hat, const DropletGeometry& geo, const ModelParams& p,
                                const PiiTable& table, const PrecisionContext& ctx) {
  PrecisionGuard g(ctx);
  PiiPoint pt = table.at(s_hat);
  ParametrixData d;
  d.q = pt.q;
  d.r = pt.r;
  d.p11 = d.p22 = pt.p11;
  d.p12 = d.p21 = pt.p12;
  d.r1 = geo.r1;
  d.r2 = geo.r2;
  d.r3 = geo.r3;
  d.b_star = geo.b_c_star;
  d.N = p.N;
  d.Pi1 = Mat2::of(Complex(pt.r), Complex(pt.q), Complex(-pt.q), Complex(-pt.r));
  d.Pi2 = Mat2::of(Complex(d.p11), Complex(d.p12), Complex(d.p21), Complex(d.p22));
  Real N13 = mp::cbrt(p.N), N23 = N13 * N13;
  d.S11 = (Complex(Real(-1)) / (Real(2) * d.r1 * N13)) * d.Pi1;
  d.S21 = (d.r2 / (d.r1 * d.r1 * d.r1 * N23)) * Mat2::of(Complex(0), Complex(d.p12), Complex(d.p21), Complex(0));
  d.S22 = (Complex(Real(-1)) / (d.r1 * d.r1 * N23)) * d.Pi2;
  return d;
}

Mat2 ParametrixData::h(const Complex& z_in, const DropletGeometry& geo, const ModelParams& p) const {
  Complex z = z_in;
  // removable singularity at b_c*: step off by a precision-scaled amount
  Real tiny = mp::ldexp(Real(1), -static_cast<int>(current_bits() / 4));
  if (abs(z - b_star) < tiny) z = b_star + Complex(tiny);
  Complex xi = conformal_xi(z, geo, p);
  Complex u = z - b_star;
  Complex two_i_xi = Complex(Real(0), Real(2)) * xi;
  Mat2 I2 = Mat2::identity();
  Mat2 H1 = I2 - Pi1 / two_i_xi + S11 / u;
  Mat2 H2 = I2 + S21 / u + S22 / (u * u) - (Pi2 / (xi * xi) + (H1 - I2) * Pi1 / two_i_xi);
  return H2 * H1 - I2;
}

Mat2 ParametrixData::h_expansion(const Complex& z) const {
  Complex u = z - b_star;
  Real N13 = mp::cbrt(N), N23 = N13 * N13;
  Complex A = Complex(Real(-1)) * r2 / (Real(4) * r1 * r1 * N13);
  Complex B = (Real(3) * r2 * r2 - Real(2) * r1 * r3) * u / (Real(24) * r1 * r1 * r1 * N13);
  Complex c9 = Real(9) * r2 * r2 - Real(4) * r1 * r3;
  Complex c3 = Real(3) * r2 * r2 - r1 * r3;
  Complex r14 = r1 * r1 * r1 * r1 * N23;
  Complex h11 = A * r + B * r + (Real(2) * c9 * p11 - c3 * (q * q - r * r)) / (Real(24) * r14);
  Complex h12 = A * q + B * q + c9 * p12 / (Real(12) * r14);
  Complex h21 = -(A * q) - B * q + c9 * p21 / (Real(12) * r14);
  Complex h22 = -(A * r) - B * r + (Real(2) * c9 * p22 - c3 * (q * q - r * r)) / (Real(24) * r14);
  return Mat2::of(h11, h12, h21, h22);
}

const char* pn_region_name(PnRegion r) {
  switch (r) {
    case PnRegion::critical_disk: return "critical-disk";
    case PnRegion::interior: return "interior";
    case PnRegion::exterior: return "exterior";
    case PnRegion::annulus: return "annulus";
  }
  return "?";
}

LogMagPhase pn_asymptotic(const Complex& z, PnRegion region, const DropletGeometry& geo, const ModelParams& p,
                          const ParametrixData& d, const PsiSolver& psi, PnOrder order) {
  const bool in_disk = in_critical_disk(z, geo);
  switch (region) {
    case PnRegion::critical_disk:
    case PnRegion::annulus:
      if (!in_disk) throw Error(ErrorKind::domain, std::string(pn_region_name(region)) + " probe outside D_c");
      break;
    case PnRegion::interior:
      if (in_disk || !inside_boundary(z, geo)) throw Error(ErrorKind::domain, "interior probe not in Int(B) minus D_c");
      break;
    case PnRegion::exterior:
      if (in_disk || inside_boundary(z, geo)) throw Error(ErrorKind::domain, "exterior probe not in Ext(B) minus D_c");
      break;
  }
  const bool full = order == PnOrder::full;
  const Complex I = I_unit();
  const Real N13 = mp::cbrt(p.N), N23 = N13 * N13;
  const long n = p.n;
  const long Nc = p.Nc();
  const Complex u = z - d.b_star;
  const Complex xb3 = geo.xi_beta * geo.xi_beta * geo.xi_beta;

  auto exterior_term = [&]() {
    Complex lg = Real(n) * log(z) + Real(Nc) * (log(z) - log(z - Complex(p.a)));
    Complex corr(1);
    if (full)
      corr = corr + Complex(d.r) / (Real(2) * d.r1 * N13 * u) - Complex(d.p22) / (d.r1 * d.r1 * N23 * u * u);
    return LogMagPhase::from_log(lg) * LogMagPhase::from_complex(corr);
  };
  auto interior_term = [&]() {
    Complex lg = p.N * p.a * z + p.N * p.t * geo.ell + Real(16) / 3 * I * xb3;
    Complex body = Complex(d.q) / (Real(2) * d.r1 * N13 * u);
    if (full)
      body = body + d.r2 * Complex(d.p21) / (d.r1 * d.r1 * d.r1 * N23 * u) -
             Complex(d.p21) / (d.r1 * d.r1 * N23 * u * u);
    return LogMagPhase::from_log(lg) * LogMagPhase::from_complex(body);
  };

  switch (region) {
    case PnRegion::exterior: return exterior_term();
    case PnRegion::interior: return interior_term();
    case PnRegion::annulus: return interior_term() + exterior_term();
    case PnRegion::critical_disk: break;
  }
  // e^{i 8/3 xi_beta^3} e^{N t g + N phi / 2}, written with the exterior g so it is analytic in D_c
  Complex V = p.a * z + (p.t + p.c) * log(z) - p.c * log(z - Complex(p.a));
  Complex lg = Real(8) / 3 * I * xb3 + p.N * (V + p.t * geo.ell) / Real(2);
  Complex xi = conformal_xi(z, geo, p);
  PsiMatrix ps = psi.solve(xi);
  Complex val = ps.entries.m[1][0];
  if (full) {
    Mat2 h = d.h(z, geo, p);
    val = (Complex(1) + h.m[1][1]) * ps.entries.m[1][0] + h.m[1][0] * ps.entries.m[0][0];
  }
  return LogMagPhase::from_log(lg) * LogMagPhase::from_complex(val);
}

}  // namespace rmtlab
