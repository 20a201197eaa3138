#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "rmtlab/droplet.hpp"
#include "rmtlab/mpnum.hpp"

namespace rmtlab {

// ---------------------------------------------------------------- 2x2 complex matrices

struct Mat2 {
  Complex m[2][2];

  static Mat2 identity();
  static Mat2 diag(const Complex& a, const Complex& d);
  static Mat2 of(const Complex& a, const Complex& b, const Complex& c, const Complex& d);
  Complex& operator()(int i, int j) { return m[i][j]; }
  const Complex& operator()(int i, int j) const { return m[i][j]; }
};

Mat2 operator+(const Mat2& a, const Mat2& b);
Mat2 operator-(const Mat2& a, const Mat2& b);
Mat2 operator*(const Mat2& a, const Mat2& b);
Mat2 operator*(const Complex& s, const Mat2& a);
Mat2 operator/(const Mat2& a, const Complex& s);
Complex det(const Mat2& a);
Real max_abs(const Mat2& a);

// ---------------------------------------------------------------- Hastings-McLeod table

struct PiiPoint {
  Real s, q, qp, r, p11, p12, q12;
};

// closed-form derived quantities from (s, q, q')
PiiPoint pii_point(const Real& s, const Real& q, const Real& qp);

class PiiTable {
public:
  std::vector<Real> grid;
  std::vector<Real> q, q_prime, r, p11, p12, q12;
  Real error_estimate;  // max |q - q_shadow|, |q' - q'_shadow| over the grid, -1 when no shadow run
  unsigned bits = 0;

  Real s_min() const { return grid.front(); }
  Real s_max() const { return grid.back(); }
  bool covers(const Real& s) const;
  // values at any s in range, integrated from the nearest stored node
  PiiPoint at(const Real& s) const;
  PiiPoint row(std::size_t i) const;

  // internal nodes, descending in s
  std::vector<Real> node_s, node_q, node_qp;
};

PiiTable hastings_mcleod(const Real& s_min, const Real& s_max, const Real& step, const PrecisionContext& ctx = {},
                         bool shadow = true);

// columns s,q,qp,r,p11,p12,q12 at 25 significant digits
void write_pii_csv(std::ostream& os, const PiiTable& t);

// ---------------------------------------------------------------- Psi

// dPsi/dxi = A Psi
Mat2 lax_matrix(const Complex& xi, const Real& s, const Real& q, const Real& qp);

struct PsiMatrix {
  Mat2 entries;
  Complex xi;
  Real s;
};

// Psi(xi; s) for the entire continuation equal to the RH solution in the upper sector.
class PsiSolver {
public:
  PsiSolver(const Real& s, const PiiTable& table, const PrecisionContext& ctx = {});

  // asymptotic series I + M1/xi + M2/xi^2 + ... of Pi, optimally truncated
  Mat2 pi_series(const Complex& xi) const;
  const std::vector<Mat2>& series_coefficients() const { return coeff_; }
  const PiiPoint& pii() const { return pt_; }

  // values at each target; targets may be complex
  std::vector<PsiMatrix> solve(const std::vector<Complex>& targets) const;
  PsiMatrix solve(const Complex& xi) const;
  // same, through an explicit polyline of waypoints ending at xi (path-independence probe)
  PsiMatrix solve_via(const std::vector<Complex>& waypoints, const Complex& xi) const;

  // Psi' = A Psi
  Mat2 derivative(const PsiMatrix& psi) const;
  // Psi', Psi'', Psi''' from the Lax system
  std::array<Mat2, 3> derivatives(const PsiMatrix& psi) const;

  // largest entrywise difference between the two starting points seen by the last solve
  Real last_start_discrepancy() const { return start_gap_; }

  static constexpr int kStart = 5;
  static constexpr int kCheckStart = 6;

private:
  Mat2 start_value(const Real& x0) const;
  std::vector<Mat2> integrate(const std::vector<Complex>& path, const Mat2& y0) const;

  Real s_;
  PiiPoint pt_;
  PrecisionContext ctx_;
  std::vector<Mat2> coeff_;
  mutable Real start_gap_;
};

PsiMatrix psi_solve(const Real& y, const Real& s, const PiiTable& table, const PrecisionContext& ctx = {});

// ---------------------------------------------------------------- limiting kernel

// K_s(x, y, x', y'); the derivative branch (Taylor in y' - y) is used when |y - y'| <= 1e-6
Complex limit_kernel_Ks(const Real& x, const Real& y, const Real& xp, const Real& yp, const PsiSolver& psi);
Complex limit_kernel_Ks(const Real& x, const Real& y, const Real& xp, const Real& yp, const Real& s,
                        const PiiTable& table, const PrecisionContext& ctx = {});

// evaluates K_s on a product grid sharing one Psi integration
struct LimitKernelEvaluator {
  LimitKernelEvaluator(const PsiSolver& psi, const std::vector<Real>& ys);
  Complex operator()(const Real& x, std::size_t iy, const Real& xp, std::size_t iyp) const;

  std::vector<Real> ys;
  std::vector<PsiMatrix> values;
  std::vector<std::array<Mat2, 3>> derivs;
};

Complex prefactor_CN(const Real& y, const Real& yp, const ModelParams& p);

// ---------------------------------------------------------------- parametrix

struct ParametrixData {
  Mat2 Pi1, Pi2;
  Mat2 S11, S21, S22;
  Complex r1, r2, r3;
  Complex b_star;
  Real N;
  Real q, r, p11, p12, p22, p21;

  // exact H(z) - I from H = H2 H1, with xi(z) from the conformal map
  Mat2 h(const Complex& z, const DropletGeometry& geo, const ModelParams& p) const;
  // truncated expansion of the h entries around b_c*
  Mat2 h_expansion(const Complex& z) const;
};

ParametrixData schlesinger_data(const Real& s_hat, const DropletGeometry& geo, const ModelParams& p,
                                const PiiTable& table, const PrecisionContext& ctx = {});

enum class PnRegion { critical_disk, interior, exterior, annulus };
enum class PnOrder { leading, full };

const char* pn_region_name(PnRegion r);

// predicted p_n(z) from the strong asymptotics; psi is built at s_hat
LogMagPhase pn_asymptotic(const Complex& z, PnRegion region, const DropletGeometry& geo, const ModelParams& p,
                          const ParametrixData& data, const PsiSolver& psi, PnOrder order = PnOrder::full);

}  // namespace rmtlab
