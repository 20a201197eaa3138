#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rmtlab {

using Real = boost::multiprecision::mpfr_float;

// ---------------------------------------------------------------- errors

enum class ErrorKind {
  domain,
  geometry,
  config,
  numerics,
  accuracy,
  precision,
  range,
  degeneracy,
  stiffness,
  unsupported,
  boundary,
  ambiguity,
  verify
};

const char* error_kind_name(ErrorKind k);

// process exit code used by the CLI
int exit_code(ErrorKind k);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

// ---------------------------------------------------------------- precision

struct PrecisionContext {
  unsigned mantissa_bits = 256;
  double target_rel_tol = 1e-30;

  PrecisionContext() = default;
  PrecisionContext(unsigned bits, double tol = 1e-30);

  unsigned digits10() const;
  PrecisionContext with_bits(unsigned bits) const;
  PrecisionContext doubled() const;
};

unsigned bits_to_digits10(unsigned bits);

// Sets the Boost default precision for the lifetime of the guard.  The
// default is process-global in Boost 1.74, so guards are not thread safe.
class PrecisionGuard {
public:
  explicit PrecisionGuard(unsigned bits);
  explicit PrecisionGuard(const PrecisionContext& ctx) : PrecisionGuard(ctx.mantissa_bits) {}
  ~PrecisionGuard();
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

private:
  unsigned saved_;
};

unsigned current_bits();

// copy of x carrying the current default precision
Real promote(const Real& x);
Real real_pi();
double to_double(const Real& x);
std::string to_string(const Real& x, int sig_digits);

// ---------------------------------------------------------------- complex

struct Complex {
  Real re;
  Real im;

  Complex() : re(0), im(0) {}
  Complex(const Real& r) : re(r), im(0) {}  // NOLINT
  Complex(const Real& r, const Real& i) : re(r), im(i) {}
  Complex(double r) : re(r), im(0) {}  // NOLINT
  Complex(int r) : re(r), im(0) {}     // NOLINT
  Complex(double r, double i) : re(r), im(i) {}

  Complex& operator+=(const Complex& o);
  Complex& operator-=(const Complex& o);
  Complex& operator*=(const Complex& o);
  Complex& operator/=(const Complex& o);
  Complex& operator*=(const Real& o);
  Complex& operator/=(const Real& o);
};

Complex operator+(const Complex& a, const Complex& b);
Complex operator-(const Complex& a, const Complex& b);
Complex operator*(const Complex& a, const Complex& b);
Complex operator/(const Complex& a, const Complex& b);
Complex operator*(const Complex& a, const Real& b);
Complex operator*(const Real& a, const Complex& b);
Complex operator/(const Complex& a, const Real& b);
Complex operator-(const Complex& a);

inline const Complex I_unit() { return Complex(Real(0), Real(1)); }

Complex conj(const Complex& z);
Real abs(const Complex& z);
Real norm2(const Complex& z);
Real arg(const Complex& z);
Complex exp(const Complex& z);
Complex log(const Complex& z);  // principal branch
Complex sqrt(const Complex& z);  // principal branch
Complex pow(const Complex& z, long k);
Complex cbrt_principal(const Complex& z);
Complex polar(const Real& r, const Real& theta);
Complex promote(const Complex& z);
bool is_finite(const Complex& z);

// ---------------------------------------------------------------- log-magnitude form

// exp(log_mag + i phase), phase in (-pi, pi]
struct LogMagPhase {
  Real log_mag;
  Real phase;

  LogMagPhase();
  LogMagPhase(const Real& lm, const Real& ph);

  static LogMagPhase from_complex(const Complex& z);
  static LogMagPhase from_log(const Complex& log_value);  // exp(log_value)
  static LogMagPhase zero();

  bool is_zero() const;
  Complex to_complex() const;
  LogMagPhase conj() const;
};

LogMagPhase operator*(const LogMagPhase& a, const LogMagPhase& b);
LogMagPhase operator/(const LogMagPhase& a, const LogMagPhase& b);
LogMagPhase operator+(const LogMagPhase& a, const LogMagPhase& b);
Real wrap_phase(const Real& ph);

// Sum of terms, rescaled to the largest magnitude before accumulating.
LogMagPhase lmp_sum(const std::vector<LogMagPhase>& terms);

// ---------------------------------------------------------------- special functions

Real log_gamma(const Real& x, const PrecisionContext& ctx = {});
Real erfc_real(const Real& x, const PrecisionContext& ctx = {});
Complex erfc_complex(const Complex& z, const PrecisionContext& ctx = {});
std::pair<Real, Real> airy_ai(const Real& x, const PrecisionContext& ctx = {});

// ---------------------------------------------------------------- ODE integration

using State = std::vector<Complex>;
// dy/dt at complex time t
using Field = std::function<void(const Complex& t, const State& y, State& dydt)>;

class StiffnessError : public Error {
public:
  StiffnessError(const std::string& what, State last, Complex t_last)
      : Error(ErrorKind::stiffness, what), last_state(std::move(last)), t_reached(std::move(t_last)) {}
  State last_state;
  Complex t_reached;
};

struct OdeStats {
  long steps = 0;
  long rejected = 0;
  long evaluations = 0;
};

// Gragg-Bulirsch-Stoer extrapolation along the straight segment t0 -> t1.
State ode_integrate(const Field& field, const State& y0, const Complex& t0, const Complex& t1,
                    const PrecisionContext& ctx, OdeStats* stats = nullptr);

// Integrates through the listed points in order, returning the state at each.
std::vector<State> ode_integrate_polyline(const Field& field, const State& y0,
                                          const std::vector<Complex>& path,
                                          const PrecisionContext& ctx, OdeStats* stats = nullptr);

}  // namespace rmtlab
