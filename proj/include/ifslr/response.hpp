#pragma once

#include <array>
#include <string>
#include <vector>

#include "ifslr/engine.hpp"
#include "ifslr/test_function.hpp"

namespace ifslr {

// One multiplicity vector (k_1..k_l) with sum j*k_j = l, its integer
// coefficient l! / prod_j (k_j! (j!)^{k_j}), and k = sum k_j.
struct FaaDiBrunoTerm {
  std::array<int, 8> multiplicities{};
  int order = 0;
  long long coefficient = 0;
  int total_blocks = 0;
};

// Complete enumeration in lexicographic order of the multiplicity vector.
// Coefficients sum to the Bell number B_l. 1 <= l <= 8.
std::vector<FaaDiBrunoTerm> faa_di_bruno_terms(int l);

struct ResponseRun {
  MCEstimate estimate;
  bool regime_ok = true;
  std::string regime_note;  // set when the covering theorem's hypotheses fail
};

// Monte Carlo mean of the chain-rule expansion
//   sum L(k_1..k_l) phi^(k)(x_n) prod_j (x_n^(j))^{k_j}
// evaluated per path with term-by-term derivatives. A regime violation is
// reported, not fatal.
ResponseRun response_formula(const ProbabilisticIFS& ifs, const TestFunction& phi, int order,
                             ParamDirection direction, const McOptions& opts);

enum class FdScheme { Central2, Central4 };

// l-th central finite difference of eps -> E[phi(x_n(eps))] at step `step`,
// with the same symbol stream reused across all stencil points (common random
// numbers); the standard error comes from per-path differenced values.
MCEstimate response_finite_difference(const ProbabilisticIFS& ifs, const TestFunction& phi,
                                      int order, ParamDirection direction, double step,
                                      FdScheme scheme, const McOptions& opts);

// |step| * (largest stencil offset) must stay admissible.
void check_fd_admissible(const ProbabilisticIFS& ifs, int order, ParamDirection direction,
                         double step, FdScheme scheme);

struct AgreementReport {
  bool pass = false;
  double delta = 0.0;          // |formula - fd|
  double combined_se = 0.0;
  double bias_allowance = 0.0;
  double z = 4.0;
};

// Gate: |formula.mean - fd.mean| <= z * sqrt(se_f^2 + se_fd^2) + bias.
AgreementReport compare_response(const MCEstimate& formula, const MCEstimate& fd,
                                 double bias_allowance, double z = 4.0);

// Richardson fit of the finite-difference bias: runs the stencil at step,
// step/2, step/4 (same seed), extrapolates the limit, and returns the modeled
// |C| * step^p for the scheme's accuracy order p.
double fd_bias_allowance(const ProbabilisticIFS& ifs, const TestFunction& phi, int order,
                         ParamDirection direction, double step, FdScheme scheme,
                         const McOptions& opts);

// Convenience: formula vs finite difference on a shared seed, gated.
struct ResponseComparison {
  ResponseRun formula;
  MCEstimate fd;
  double fd_step = 0.0;
  AgreementReport agreement;
};

ResponseComparison run_response_comparison(const ProbabilisticIFS& ifs, const TestFunction& phi,
                                           int order, ParamDirection direction, double step,
                                           FdScheme scheme, const McOptions& opts, double z = 4.0);

}  // namespace ifslr
