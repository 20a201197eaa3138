#pragma once

#include <string>
#include <vector>

#include "rmtlab/droplet.hpp"
#include "rmtlab/mpnum.hpp"

namespace rmtlab {

// ---------------------------------------------------------------- moments

// Gram matrix of the monomials under |z-a|^{2Nc} e^{-N|z|^2} dA.
struct MomentMatrix {
  long size = 0;
  long m = 0;      // Nc when integral; the matrix is then banded with |j-k| <= m
  long width = 0;  // stored half bandwidth (m, or size-1 for the quadrature fallback)
  Real a, N, Nc;
  bool exact = true;
  unsigned bits = 0;
  std::vector<std::vector<Real>> band;  // band[j][k - j + width]

  Real operator()(long j, long k) const;
};

MomentMatrix moments(const Real& a, long m, const Real& N, long size, const PrecisionContext& ctx = {});
// non-integer Nc: polar Gauss-Legendre/trapezoid quadrature about a, roughly 1e-8 relative
MomentMatrix moments_quadrature(const Real& a, const Real& Nc, const Real& N, long size,
                                const PrecisionContext& ctx = {});

// ---------------------------------------------------------------- orthogonal system

struct RecurrenceRecord {
  Real a, b, c, d;                // 1/z coefficients of Y~_n at infinity
  Real alpha, beta, gamma, eta;   // Y~_n at 0
  bool has_q = false;             // c, d, gamma, eta filled
};

struct OrthoSystem {
  ModelParams params;
  long m = 0;
  bool exact = true;  // residue data needs integral Nc
  unsigned bits = 0;
  Real cholesky_loss_bits;  // bits lost to the monomial basis, from the top Gram defects

  std::vector<std::vector<Real>> p;       // p[k][j] = coefficient of z^j, monic of degree k
  std::vector<Real> h;                    // planar norms
  std::vector<Complex> h_tilde;           // contour norms, int_Gamma p_k^2 omega_k
  std::vector<std::vector<Real>> q_poly;  // q_poly[k] of degree k-1; q_poly[0] empty
  std::vector<RecurrenceRecord> rec;
  std::vector<Real> f;                    // Taylor coefficients of (w-a)^m e^{-Naw}

  long max_degree() const { return static_cast<long>(p.size()) - 1; }
  long max_q() const { return static_cast<long>(q_poly.size()) - 1; }

  Complex p_at(long k, const Complex& z) const;
  Complex p_deriv(long k, const Complex& z) const;
  Complex q_at(long k, const Complex& z) const;
  // psi_k = (z-a)^m p_k and its derivative
  Complex psi_at(long k, const Complex& z) const;
  Complex psi_deriv(long k, const Complex& z) const;

  // Res_0[poly(w) w^shift omega_k(w)], omega_k = (w-a)^m e^{-Naw} / w^{m+k}
  Real residue(long k, const std::vector<Real>& poly, long shift = 0) const;
};

// q_max < 0 computes q_k and the q-dependent records up to n+1
OrthoSystem build_ortho_system(const MomentMatrix& M, const ModelParams& p, const PrecisionContext& ctx = {},
                               long q_max = -1);
// moments of size n + Nc + 2 and the system built from them
OrthoSystem ortho_system(const ModelParams& p, const PrecisionContext& ctx = {}, long q_max = -1);

// max over j != k of |<p_j, p_k>| / sqrt(h_j h_k) for j, k <= upto
Real gram_residual(const OrthoSystem& sys, const MomentMatrix& M, long upto);

// ---------------------------------------------------------------- identities

struct ResidualReport {
  Real max_residual;
  std::vector<std::pair<const char*, Real>> lines;
};

// recurrence relations linking step n to n+1 (needs q data up to n+1)
ResidualReport recurrence_check(const OrthoSystem& sys, long n);
// three-term identities between p_{n-1}, p_n, p_{n+1}, q_n, and the derivative identity, at z
ResidualReport prop25_identities(const OrthoSystem& sys, long n, const Complex& z);
// relative residual of the generalised Christoffel-Darboux identity for K_n
ResidualReport cd_identity_residual(const Complex& z, const Complex& zeta, const OrthoSystem& sys, long n);

// ---------------------------------------------------------------- kernels

// correlation kernel with n terms (n <= 0 uses sys.params.n)
LogMagPhase kernel_eval(const Complex& z, const Complex& zeta, const OrthoSystem& sys, long n = 0);
// e^{-N z conj(zeta)} sum psi_k(z) conj(psi_k(zeta)) / h_k
LogMagPhase prekernel_eval(const Complex& z, const Complex& zeta, const OrthoSystem& sys, long n = 0);
// d/d conj(zeta) of the pre-kernel, from the closed-form product rule
LogMagPhase prekernel_dbar(const Complex& z, const Complex& zeta, const OrthoSystem& sys, long n = 0);

// values of p_0..p_{K}(z) at one point, reused across kernel entries
std::vector<Complex> p_values(const OrthoSystem& sys, const Complex& z, long count);
LogMagPhase kernel_from_values(const Complex& z, const std::vector<Complex>& pz, const Complex& zeta,
                               const std::vector<Complex>& pzeta, const OrthoSystem& sys, long n);

struct KernelGrid {
  std::vector<std::pair<Complex, Complex>> points;
  std::vector<LogMagPhase> values;
  std::string meta;
};

KernelGrid kernel_grid(const std::vector<std::pair<Complex, Complex>>& points, const OrthoSystem& sys,
                       const std::string& meta, long n = 0);

struct RegimeSpec;
// finite-n kernel at the regime's mapped points times the regime prefactor
Complex rescaled_kernel(const RegimeSpec& regime, const std::vector<Real>& coords, const OrthoSystem& sys,
                        const PrecisionContext& ctx = {});

}  // namespace rmtlab
