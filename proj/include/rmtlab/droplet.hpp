#pragma once

#include <vector>

#include "rmtlab/mpnum.hpp"

namespace rmtlab {

struct ModelParams {
  Real a;
  Real c;
  Real t;
  Real N;
  long n = 0;
  Real t_residual;  // t - n/N

  static ModelParams from_n(const Real& a, const Real& c, long n, const Real& N);
  static ModelParams from_t(const Real& a, const Real& c, const Real& t, const Real& N);

  // N*c as an integer; throws unsupported when N*c is not integral
  long Nc() const;
  void validate() const;
};

struct CriticalData {
  Real t_c;
  Real b_c;
  Real gamma_c;
  Real s;
};

CriticalData critical_data(const Real& a, const Real& c, const Real& t, const Real& N);
CriticalData critical_data(const ModelParams& p);

// t = t_c + 2 b_c s / (gamma_c N^{2/3})
Real t_from_s(const Real& a, const Real& c, const Real& s, const Real& N);

struct DropletGeometry {
  Complex b;
  Complex beta;
  Complex ell;
  Complex s_hat;
  Complex b_c_star;
  Complex xi_beta;
  Complex r1, r2, r3;
  Real disk_radius;  // radius of D_c around b_c
  Real b_c;
  std::vector<Complex> boundary;  // traced B, empty when not traced
};

std::pair<Complex, Complex> branch_points(const ModelParams& p);

// az - (t+c) log z + c log(z-a) + t ell, principal logs
Complex phi(const Complex& z, const DropletGeometry& geo, const ModelParams& p);
// derivatives of phi, orders 1 to 5
Complex phi_d1(const Complex& z, const ModelParams& p);
Complex phi_d2(const Complex& z, const ModelParams& p);
Complex phi_d3(const Complex& z, const ModelParams& p);
Complex phi_d4(const Complex& z, const ModelParams& p);
Complex phi_d5(const Complex& z, const ModelParams& p);

// Builds the geometry; traces B with `trace_count` rays when t lies in
// [t_c/2, 3t_c/2] and trace_count > 0.
DropletGeometry make_geometry(const ModelParams& p, const PrecisionContext& ctx = {}, int trace_count = 256);

enum class GRegion { exterior, interior };

bool inside_boundary(const Complex& z, const DropletGeometry& geo);
Complex g_function(const Complex& z, const DropletGeometry& geo, const ModelParams& p);
Complex g_branch(const Complex& z, GRegion region, const DropletGeometry& geo, const ModelParams& p);

bool in_critical_disk(const Complex& z, const DropletGeometry& geo);
Complex conformal_xi(const Complex& z, const DropletGeometry& geo, const ModelParams& p);
// xi and xi'(z) at once
std::pair<Complex, Complex> conformal_xi_d(const Complex& z, const DropletGeometry& geo, const ModelParams& p);

struct XiDerivatives {
  Complex r1, r2, r3;
};
XiDerivatives xi_derivatives(const DropletGeometry& geo, const ModelParams& p);

struct TraceReport {
  std::vector<Complex> points;
  Real closure_gap;  // distance between the start point and its re-trace after a full turn
  Real max_residual;  // max |Re phi| over the returned points
};

TraceReport trace_boundary_report(const ModelParams& p, const DropletGeometry& geo, int count,
                                  const PrecisionContext& ctx = {});
std::vector<Complex> trace_boundary(const ModelParams& p, const DropletGeometry& geo, int count,
                                    const PrecisionContext& ctx = {});

// winding number of the closed polygon around w
int winding_number(const std::vector<Complex>& curve, const Complex& w);

}  // namespace rmtlab
