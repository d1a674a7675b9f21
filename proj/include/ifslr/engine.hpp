#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ifslr/ifs.hpp"
#include "ifslr/path.hpp"

namespace ifslr {

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long long replicas = 0;
  int truncation_n = 0;
  uint64_t master_seed = 0;
  // Fraction of replicas whose trailing scale L_n fell below 1e-30; a
  // truncation-quality diagnostic, not part of the estimate.
  double lambda_small_fraction = 0.0;
};

struct McOptions {
  long long replicas = 1'000'000;
  int truncation = 200;
  uint64_t master_seed = 1;
  int threads = 0;        // 0 = library default
  int deriv_order = 0;    // > 0: fill PathView::derivatives
  ParamDirection deriv_direction;
};

// Everything a per-replica functional may look at. Spans point into scratch
// buffers owned by the engine and are only valid during the call.
struct PathView {
  std::span<const uint8_t> symbols;
  double x_n = 0.0;
  double lambda_n = 0.0;
  std::span<const double> derivatives;  // x^(1)..x^(L) when requested
  uint64_t replica = 0;
};

using PathFunctional = std::function<double(const PathView&)>;

// Mean and standard error of the functional over independent replicas.
// Replicas are keyed by (master_seed, index) through a counter-based
// generator and combined along a fixed block/pairwise-tree shape, so the
// result is bit-identical for any worker count. Throws NonFiniteSample with
// the offending replica id if the functional returns NaN or infinity.
MCEstimate estimate_expectation(const ProbabilisticIFS& ifs, const PathFunctional& functional,
                                const McOptions& opts);

// Single-threaded reference evaluator with the same reduction shape; the
// OpenMP path must reproduce it bit-for-bit (see tests and the benchmark).
MCEstimate estimate_expectation_serial(const ProbabilisticIFS& ifs,
                                       const PathFunctional& functional, const McOptions& opts);

struct TailPoint {
  double threshold = 0.0;
  double p_hat = 0.0;
  double std_error = 0.0;  // binomial
  long long hits = 0;
};

// Empirical exceedance frequencies P(x_n >= R) for each threshold.
std::vector<TailPoint> empirical_tail(const ProbabilisticIFS& ifs, std::span<const double> thresholds,
                                      const McOptions& opts);

// Empirical q-quantile of x_n + shift. Throws DegenerateDistribution when the
// sample range is below resolution.
double empirical_quantile(const ProbabilisticIFS& ifs, double q, double shift,
                          const McOptions& opts);
std::vector<double> empirical_quantiles(const ProbabilisticIFS& ifs, std::span<const double> qs,
                                        double shift, const McOptions& opts);

// Smallest depth at which the q-th percentile of L_n drops below atol, from
// the Gaussian approximation of the log-scale random walk. Clamped to
// [200, 65536].
int suggested_truncation(const ProbabilisticIFS& ifs, double atol = 1e-30, double q = 0.99);

// Fixed-shape pairwise tree sum; the shape depends only on the length.
double pairwise_tree_sum(std::span<const double> values);

}  // namespace ifslr
