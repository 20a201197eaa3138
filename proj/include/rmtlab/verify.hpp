#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rmtlab/orthopoly.hpp"
#include "rmtlab/painleve.hpp"

namespace rmtlab {

struct VerifyRow {
  std::string name;
  Real value;      // worst residual seen
  Real tolerance;
  std::string detail;
  bool pass = false;
};

struct VerifyConfig {
  Real a{1}, c{1};
  Real t;                 // t_c when unset (t = 0)
  long N = 24;
  long n_laws = 30;       // h_n laws and recurrence checked for n up to this
  int cd_points = 8;
  std::uint64_t seed = 0;
  long corrupt_h = -1;    // fault injection: scale h_k by 1 + corrupt_rel
  Real corrupt_rel{"1e-6"};
  bool psi_checks = true;
};

// Gram, norm laws, recurrence, three-term identities, C-D identity and Psi symmetries
std::vector<VerifyRow> verify_battery(const VerifyConfig& cfg, const PrecisionContext& ctx = {},
                                      const PiiTable* table = nullptr);

// uniform doubles from a fixed 64-bit generator, identical on every platform
class Uniform01 {
public:
  explicit Uniform01(std::uint64_t seed);
  double next();

private:
  std::mt19937_64 gen_;
};

}  // namespace rmtlab
