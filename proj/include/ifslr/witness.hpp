#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ifslr/engine.hpp"
#include "ifslr/test_function.hpp"

namespace ifslr {

// Exact enumeration is capped at 2^24 words; beyond that callers get the
// Monte Carlo variants with conservative confidence bounds.
inline constexpr int kEnumerationCap = 24;

// Parameter regions where a bounded smooth observable with divergent response
// can be built. Region A: l1*l2 < 1/4, with a scale rho strictly between
// sqrt(l1*l2) and 1/2 and the large-deviation rate delta of {L_N > rho^N}.
// Region B: log2(l2) > 1 + log_{1/l1}(l2), with kappa in the feasible interval
// and rho_b = l2 * l1^kappa < 1, l2 > 2^{1+kappa}.
struct RegimeParams {
  bool regime_a = false;
  bool regime_b = false;
  double rho_a = 0.0;
  double delta_a = 0.0;
  double kappa = 0.0;
  double rho_b = 0.0;
};

// Requires the unit-translation two-map equal-probability system.
RegimeParams detect_regime(const ProbabilisticIFS& ifs);

// All 2^depth words of the given length: the (depth+1)-term partial sum
//   value(w) = sum_{m=0}^{depth} L_m(w),
// the scale L_depth(w), the count of map-0 symbols, and the first-order
// series derivative restricted to those terms. The full series then splits as
// X = value(w) + L_depth(w) * Y with Y distributed like X - 1.
struct PrefixEnsemble {
  int depth = 0;
  std::vector<double> values;
  std::vector<double> scales;
  std::vector<int32_t> ones;
  std::vector<double> derivs;
};

PrefixEnsemble enumerate_prefixes(const ProbabilisticIFS& ifs, int depth);

struct AtomList {
  std::vector<double> values;  // ascending, deduplicated at 1e-12 absolute
  std::vector<double> probs;   // dyadic, collisions summed
  double total_prob = 0.0;
};

// Distinct attainable values >= threshold with their exact probabilities.
AtomList enumerate_prefix_atoms(const ProbabilisticIFS& ifs, int depth, double threshold);

struct WitnessA {
  int depth = 0;            // N
  long long threshold = 0;  // M(N)
  AtomList atoms;
  double ball_radius = 0.0;     // r rho^N
  double support_radius = 0.0;  // 2 r rho^N
  double median_r = 0.0;
  double p_n = 0.0;  // P(X_N >= M)
  double q_n = 0.0;  // P(L_N > rho^N)
  double rho = 0.0;
  double delta = 0.0;
  bool exact = true;  // exact enumeration vs conservative MC bounds
};

struct WitnessB {
  int depth = 0;    // N
  int kappa_n = 0;  // ceil(kappa N)
  double center = 0.0;
  double ball_radius = 0.0;
  double support_radius = 0.0;
  double median_r = 0.0;
  double kappa = 0.0;
  double rho = 0.0;
};

// Largest integer M with M * P(X_N >= M) >= N^{-1/2} and
// P(X_N >= M) >= 2 * P(L_N > rho^N). The second condition is the exact
// finite-N inequality behind P(X_N >= M, L_N <= rho^N) >= p_N / 2; delta is
// carried as the asymptotic rate of q_N for reporting. Throws NoFeasibleM
// when the scan exhausts M = 1.
WitnessA find_M(const ProbabilisticIFS& ifs, int depth, double rho, double delta, double median_r);

// Monte Carlo variant for depths beyond the enumeration cap: p_N is replaced
// by its Clopper-Pearson lower bound and q_N by its upper bound, so both
// defining inequalities are certified conservatively.
WitnessA find_M_mc(const ProbabilisticIFS& ifs, int depth, double rho, double delta,
                   double median_r, long long replicas, uint64_t master_seed,
                   double confidence = 0.999);

// phi', not phi: a C^inf function with values in [0, 1], identically 1 on
// each plateau, supported on the block intervals; phi itself is its integral.
class SmoothPlateauBump {
 public:
  struct Block {
    double outer_lo, inner_lo, inner_hi, outer_hi;
    double cum_before;  // integral of the bump over everything to the left
  };

  SmoothPlateauBump() = default;
  // One block per chain of centers whose support intervals overlap.
  SmoothPlateauBump(std::span<const double> centers_sorted, double inner_radius,
                    double outer_radius);

  double derivative(double x, int k) const;  // k = 0 is the bump itself
  double integral(double x) const;           // int_{-inf}^x bump
  double l1_norm() const;
  double support_lo() const;
  double support_hi() const;
  double support_measure() const;
  const std::vector<Block>& blocks() const { return blocks_; }

  // Closed plateau intervals; membership is the "lands in a ball" event.
  std::vector<std::pair<double, double>> plateau_intervals() const;

 private:
  std::vector<Block> blocks_;
};

std::pair<WitnessA, SmoothPlateauBump> build_witness_a(const ProbabilisticIFS& ifs,
                                                       const RegimeParams& regime, int depth,
                                                       double median_r);
std::pair<WitnessB, SmoothPlateauBump> build_witness_b(const ProbabilisticIFS& ifs,
                                                       const RegimeParams& regime, int depth,
                                                       double median_r);

// The observable whose derivative is the plateau bump: phi(x) = int phi'.
std::unique_ptr<TestFunction> make_witness_function(SmoothPlateauBump bump);

struct HNOptions {
  long long tail_samples = 8192;
  int tail_truncation = 400;
  uint64_t master_seed = 1;
  int threads = 0;
};

// E[phi'(X) X^(1)] in the first-ratio direction, by exact summation over the
// enumerated prefixes with a shared Monte Carlo tail pool:
//   X = v_w + L_w Y,  X^(1) = D_w + L_w (o_w Y / l1 + D~),
// where (Y, D~) are the tail's own series and derivative. The prefix layer
// contributes no sampling error.
MCEstimate estimate_hN_prime(const ProbabilisticIFS& ifs, const SmoothPlateauBump& bump,
                             int prefix_depth, const HNOptions& opts);

// Plain (unstratified) estimator of the same quantity, for cross-checks.
MCEstimate estimate_hN_prime_plain(const ProbabilisticIFS& ifs, const SmoothPlateauBump& bump,
                                   const McOptions& opts);

struct DivergenceRow {
  int depth = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double lower_bound = 0.0;
  bool bound_pass = false;
  double l1 = 0.0;
  double l1_bound = 0.0;
  bool l1_pass = false;
  // vs previous row; ratio_pass means "exceeds 1 within 4 se"
  double ratio = 0.0;
  double ratio_se = 0.0;
  bool ratio_pass = true;
  // region A extras
  long long threshold_m = 0;
  double p_n = 0.0;
  double q_n = 0.0;
  double ball_prob = 0.0;
  double ball_se = 0.0;
  double ball_bound = 0.0;  // p_n / 4
  bool ball_pass = true;
};

struct DivergenceReport {
  char regime = '?';
  double median_r = 0.0;
  double rho = 0.0;
  double kappa = 0.0;
  double delta = 0.0;
  double c_lower = 0.0;  // the a.s. constant in X^(1) >= c X
  std::vector<DivergenceRow> rows;
  double partial_sum = 0.0;
  double l1_total = 0.0;
  double l1_bound_total = 0.0;
  bool all_bounds_pass = true;
  bool all_ratios_pass = true;
};

struct DivergenceOptions {
  long long tail_samples = 8192;
  long long ball_replicas = 200'000;
  int truncation = 0;  // 0 = suggested_truncation
  long long quantile_replicas = 1'000'000;
  uint64_t master_seed = 1;
  int threads = 0;
};

// The per-N table of estimates against their lower bounds, consecutive
// ratios, and the L1 boundedness audit.
DivergenceReport divergence_report(const ProbabilisticIFS& ifs, char regime_choice, int n_lo,
                                   int n_hi, const DivergenceOptions& opts);

// (l2 (1 - l1) / (l2 - 1) + 1)^{-1}: the almost-sure constant c in
// X^(1) >= c X for the unit-translation pair.
double first_derivative_lower_constant(const ProbabilisticIFS& ifs);

// JSON document for reuse across runs; schema described in the README.
std::string witness_family_to_json(const ProbabilisticIFS& ifs, const RegimeParams& regime,
                                   double median_r, std::span<const WitnessA> a_entries,
                                   std::span<const WitnessB> b_entries);

struct WitnessFamilyDoc {
  std::vector<double> ratios;
  RegimeParams regime;
  double median_r = 0.0;
  std::vector<WitnessA> a_entries;
  std::vector<WitnessB> b_entries;
};

WitnessFamilyDoc parse_witness_family(const std::string& json_text);

}  // namespace ifslr
