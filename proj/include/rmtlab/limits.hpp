#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rmtlab/orthopoly.hpp"
#include "rmtlab/painleve.hpp"

namespace rmtlab {

// ---------------------------------------------------------------- closed-form limits

// e^{nu conj(eta) - |nu|^2/2 - |eta|^2/2}
Complex ginibre_G(const Complex& nu, const Complex& eta);
// G(nu, eta) erfc((nu + conj(eta))/sqrt 2) / 2
Complex faddeeva_edge(const Complex& nu, const Complex& eta);
// tau = 1/4 window between the parabolas X = -sqrt(c) Y^2 and X = -b_c Y^2
Complex erfc_window_kernel(const Real& X, const Real& Y, const Complex& nu, const Complex& eta,
                           const CriticalData& crit);
// 1/6 < tau < 1/4: zero outside the parabolas, G/(pi t_c) between them, half-erfc on them
Complex tau_regime_limit(const Real& X, const Real& Y, const Complex& nu, const Complex& eta,
                         const CriticalData& crit);
// a Y^2 e^{-x^2-x'^2}/(pi^{3/2} t_c) sinc(y - y'); Y = 0 is a domain error
Real sine_regime_kernel(const Real& Y, const Real& x, const Real& y, const Real& xp, const Real& yp,
                        const CriticalData& crit);
// (erfc(X + sqrt(c) Y^2) - erfc(X + b_c Y^2)) / (2 pi t_c)
Real density_profile(const Real& X, const Real& Y, const CriticalData& crit);

// ---------------------------------------------------------------- regimes

enum class RegimeTag { bulk_ginibre, edge_faddeeva, merging_pii, tau_quarter, sine, density_profile };

const char* regime_name(RegimeTag t);
RegimeTag parse_regime(const std::string& name);

// coordinates per tag:
//   bulk_ginibre, edge_faddeeva  (nu_re, nu_im, eta_re, eta_im) about `base`
//   merging_pii                  (x, y, x', y')
//   tau_quarter                  (X, Y, nu_re, nu_im, eta_re, eta_im), tau in (1/6, 1/4]
//   sine                         (Y, x, y, x', y'), tau in (1/4, 3/10)
//   density_profile              (X, Y) at tau = 1/4, nu = eta = 0
struct RegimeSpec {
  RegimeTag tag = RegimeTag::merging_pii;
  Real tau;
  Complex base;  // z* for the bulk and edge tags
  Real theta;    // outer normal angle at z* for the edge tag

  static RegimeSpec bulk(const Complex& z_star);
  static RegimeSpec edge(const Complex& z_star, const Real& theta);
  static RegimeSpec merging();
  static RegimeSpec tau_regime(const Real& tau);
  static RegimeSpec sine(const Real& tau);
  static RegimeSpec density();

  std::size_t arity() const;
  void validate() const;
  void check_coords(const std::vector<Real>& coords) const;
};

// (z, zeta) fed to the finite-n kernel
std::pair<Complex, Complex> scaling_map(const RegimeSpec& regime, const std::vector<Real>& coords,
                                        const ModelParams& p, const CriticalData& crit);

// C_{N,tau}(X, Y, nu, eta); the Y-phase uses sqrt(N)/N^tau so that it cancels the Gaussian cross term
Complex prefactor_CNtau(const Real& X, const Real& Y, const Complex& nu, const Complex& eta, const Real& tau,
                        const ModelParams& p, const CriticalData& crit);
// C_{N,tau} at the sine-regime arguments, with the s-shift matched to the mapped point
Complex prefactor_CNhat(const Real& Y, const Real& x, const Real& y, const Real& xp, const Real& yp,
                        const Real& tau, const ModelParams& p, const CriticalData& crit);

// limiting value at the coordinates; merging needs a Psi solver at the system's s
Complex limit_value(const RegimeSpec& regime, const std::vector<Real>& coords, const CriticalData& crit,
                    const PsiSolver* psi = nullptr);

// ---------------------------------------------------------------- convergence

struct ConvergenceReport {
  std::string regime;
  std::vector<long> N_values;
  std::vector<Real> errors;  // sup over the probe set
  std::vector<Real> scales;  // sup |limit| over the probe set
  Real fitted_slope;         // least squares of log error against log N
  std::vector<std::vector<Real>> probes;

  bool strictly_decreasing() const;
};

// builds each system at t = t_c + 2 b_c s/(gamma_c N^{2/3}) rounded to n/N; merging needs `table`
ConvergenceReport convergence_study(const RegimeSpec& regime, const std::vector<std::vector<Real>>& probes,
                                    const std::vector<long>& N_values, const Real& a, const Real& c, const Real& s,
                                    const PrecisionContext& ctx = {}, const PiiTable* table = nullptr);

}  // namespace rmtlab
