#include "ifslr/engine.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace ifslr {

namespace {

constexpr long long kBlock = 4096;
constexpr double kSmallScale = 1e-30;

struct BlockAccum {
  double sum = 0.0;
  double sumsq = 0.0;
  long long small_scale = 0;
  long long bad_replica = -1;
};

struct Scratch {
  std::vector<uint8_t> symbols;
  std::vector<double> derivs;
};

// Generates replica `r`, evaluates the functional, and returns its value.
double eval_replica(const ProbabilisticIFS& ifs, const PathFunctional& functional,
                    const McOptions& opts, uint64_t r, Scratch& scratch, bool& small_scale) {
  detail::SymbolSource src(ifs, opts.master_seed, r);
  const int n = opts.truncation;
  double lam = 1.0, x = 0.0;
  if (opts.deriv_order > 0) {
    const int q = opts.deriv_direction.index;
    const bool ratio_dir = opts.deriv_direction.kind == ParamDirection::Kind::Ratio;
    const int L = opts.deriv_order;
    double binom[kMaxDerivativeOrder + 1] = {1.0};
    double sums[kMaxDerivativeOrder + 1] = {0.0};
    double trans_sum = 0.0;
    for (int m = 0; m < n; ++m) {
      const uint8_t s = src.next();
      scratch.symbols[std::size_t(m)] = s;
      const double base = ifs.translation(s) * lam;
      x += base;
      if (ratio_dir) {
        for (int j = 1; j <= L; ++j) sums[j] += base * binom[j];
      } else if (s == q) {
        trans_sum += lam;
      }
      lam *= ifs.ratio(s);
      if (ratio_dir && s == q)
        for (int j = L; j >= 1; --j) binom[j] += binom[j - 1];
    }
    if (ratio_dir) {
      const double lq = ifs.ratio(std::size_t(q));
      double factor = 1.0;
      for (int j = 1; j <= L; ++j) {
        factor *= double(j) / lq;
        scratch.derivs[std::size_t(j) - 1] = factor * sums[j];
      }
    } else {
      scratch.derivs[0] = trans_sum;
      for (int j = 2; j <= L; ++j) scratch.derivs[std::size_t(j) - 1] = 0.0;
    }
  } else {
    for (int m = 0; m < n; ++m) {
      const uint8_t s = src.next();
      scratch.symbols[std::size_t(m)] = s;
      x += ifs.translation(s) * lam;
      lam *= ifs.ratio(s);
    }
  }
  small_scale = lam <= kSmallScale;

  PathView view;
  view.symbols = std::span<const uint8_t>(scratch.symbols.data(), std::size_t(n));
  view.x_n = x;
  view.lambda_n = lam;
  view.derivatives = std::span<const double>(scratch.derivs.data(), std::size_t(opts.deriv_order));
  view.replica = r;
  return functional(view);
}

BlockAccum run_block(const ProbabilisticIFS& ifs, const PathFunctional& functional,
                     const McOptions& opts, long long begin, long long end, Scratch& scratch) {
  BlockAccum acc;
  for (long long r = begin; r < end; ++r) {
    bool small = false;
    const double v = eval_replica(ifs, functional, opts, uint64_t(r), scratch, small);
    if (!std::isfinite(v)) {
      if (acc.bad_replica < 0) acc.bad_replica = r;
      continue;
    }
    acc.sum += v;
    acc.sumsq += v * v;
    acc.small_scale += small;
  }
  return acc;
}

MCEstimate finish(const McOptions& opts, std::vector<BlockAccum>& blocks) {
  for (const auto& b : blocks)
    if (b.bad_replica >= 0)
      throw Error(ErrorCode::NonFiniteSample,
                  "functional returned a non-finite value at replica " +
                      std::to_string(b.bad_replica));
  std::vector<double> sums(blocks.size()), sumsqs(blocks.size());
  long long small = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    sums[i] = blocks[i].sum;
    sumsqs[i] = blocks[i].sumsq;
    small += blocks[i].small_scale;
  }
  const double total = pairwise_tree_sum(sums);
  const double total_sq = pairwise_tree_sum(sumsqs);
  const long long R = opts.replicas;

  MCEstimate est;
  est.mean = total / double(R);
  const double var = std::max(0.0, (total_sq - double(R) * est.mean * est.mean) / double(R - 1));
  est.std_error = std::sqrt(var / double(R));
  est.replicas = R;
  est.truncation_n = opts.truncation;
  est.master_seed = opts.master_seed;
  est.lambda_small_fraction = double(small) / double(R);
  return est;
}

}  // namespace

double pairwise_tree_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() == 1) return values[0];
  // Split at the largest power of two strictly below size: the shape is a
  // function of the length alone.
  std::size_t half = 1;
  while (half * 2 < values.size()) half *= 2;
  return pairwise_tree_sum(values.first(half)) + pairwise_tree_sum(values.subspan(half));
}

MCEstimate estimate_expectation_serial(const ProbabilisticIFS& ifs,
                                       const PathFunctional& functional, const McOptions& opts) {
  McOptions serial = opts;
  serial.threads = 1;
  return estimate_expectation(ifs, functional, serial);
}

MCEstimate estimate_expectation(const ProbabilisticIFS& ifs, const PathFunctional& functional,
                                const McOptions& opts) {
  if (opts.replicas < 2) throw Error(ErrorCode::OutOfRange, "need at least two replicas");
  if (opts.deriv_order < 0 || opts.deriv_order > kMaxDerivativeOrder)
    throw Error(ErrorCode::OrderTooLarge, "derivative order must be in 0..8");

  const long long nblocks = (opts.replicas + kBlock - 1) / kBlock;
  std::vector<BlockAccum> blocks;
  blocks.resize(std::size_t(nblocks));
  const int nthreads = opts.threads > 0 ? opts.threads : omp_get_max_threads();

#pragma omp parallel num_threads(nthreads)
  {
    Scratch scratch;
    scratch.symbols.resize(std::size_t(opts.truncation));
    scratch.derivs.resize(kMaxDerivativeOrder);
#pragma omp for schedule(dynamic, 1)
    for (long long b = 0; b < nblocks; ++b) {
      const long long begin = b * kBlock;
      const long long end = std::min(opts.replicas, begin + kBlock);
      blocks[std::size_t(b)] = run_block(ifs, functional, opts, begin, end, scratch);
    }
  }
  return finish(opts, blocks);
}

std::vector<TailPoint> empirical_tail(const ProbabilisticIFS& ifs, std::span<const double> thresholds,
                                      const McOptions& opts) {
  for (double r : thresholds)
    if (!(r > 0.0)) throw Error(ErrorCode::OutOfRange, "thresholds must be positive");

  const long long nblocks = (opts.replicas + kBlock - 1) / kBlock;
  const std::size_t nt = thresholds.size();
  std::vector<long long> counts(std::size_t(nblocks) * nt, 0);
  const int nthreads = opts.threads > 0 ? opts.threads : omp_get_max_threads();
  const int n = opts.truncation;

#pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
  for (long long b = 0; b < nblocks; ++b) {
    const long long begin = b * kBlock;
    const long long end = std::min(opts.replicas, begin + kBlock);
    long long* row = counts.data() + std::size_t(b) * nt;
    for (long long r = begin; r < end; ++r) {
      detail::SymbolSource src(ifs, opts.master_seed, uint64_t(r));
      double lam = 1.0, x = 0.0;
      for (int m = 0; m < n; ++m) {
        const uint8_t s = src.next();
        x += ifs.translation(s) * lam;
        lam *= ifs.ratio(s);
      }
      for (std::size_t t = 0; t < nt; ++t) row[t] += x >= thresholds[t];
    }
  }

  std::vector<TailPoint> out(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    long long hits = 0;
    for (long long b = 0; b < nblocks; ++b) hits += counts[std::size_t(b) * nt + t];
    const double p = double(hits) / double(opts.replicas);
    out[t].threshold = thresholds[t];
    out[t].p_hat = p;
    out[t].std_error = std::sqrt(p * (1.0 - p) / double(opts.replicas));
    out[t].hits = hits;
  }
  return out;
}

std::vector<double> empirical_quantiles(const ProbabilisticIFS& ifs, std::span<const double> qs,
                                        double shift, const McOptions& opts) {
  for (double q : qs)
    if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::OutOfRange, "quantile must be in (0,1)");

  std::vector<double> values(std::size_t(opts.replicas));
  const int nthreads = opts.threads > 0 ? opts.threads : omp_get_max_threads();
  const int n = opts.truncation;
#pragma omp parallel for schedule(dynamic, 4096) num_threads(nthreads)
  for (long long r = 0; r < opts.replicas; ++r) {
    detail::SymbolSource src(ifs, opts.master_seed, uint64_t(r));
    double lam = 1.0, x = 0.0;
    for (int m = 0; m < n; ++m) {
      const uint8_t s = src.next();
      x += ifs.translation(s) * lam;
      lam *= ifs.ratio(s);
    }
    x += shift;
    // Barely-contracting systems can overflow on rare paths; saturate so the
    // order statistics below the top stay exact.
    if (!std::isfinite(x)) x = std::numeric_limits<double>::max();
    values[std::size_t(r)] = x;
  }

  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double scale = std::max(1.0, std::max(std::abs(*lo), std::abs(*hi)));
  if (*hi - *lo <= 1e-12 * scale)
    throw Error(ErrorCode::DegenerateDistribution, "sample range below resolution");

  std::vector<double> out;
  out.reserve(qs.size());
  std::vector<double> work = values;
  for (double q : qs) {
    const std::size_t k =
        std::min(std::size_t(opts.replicas) - 1,
                 std::size_t(std::max(0.0, std::ceil(q * double(opts.replicas)) - 1.0)));
    std::nth_element(work.begin(), work.begin() + std::ptrdiff_t(k), work.end());
    out.push_back(work[k]);
  }
  return out;
}

double empirical_quantile(const ProbabilisticIFS& ifs, double q, double shift,
                          const McOptions& opts) {
  const double qs[1] = {q};
  return empirical_quantiles(ifs, qs, shift, opts)[0];
}

int suggested_truncation(const ProbabilisticIFS& ifs, double atol, double q) {
  double mean = 0.0, second = 0.0;
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    const double l = std::log(ifs.ratio(i));
    mean += ifs.probs[i] * l;
    second += ifs.probs[i] * l * l;
  }
  const double sigma = std::sqrt(std::max(0.0, second - mean * mean));
  const double z = q >= 0.999 ? 3.1 : (q >= 0.99 ? 2.3263 : 1.6449);
  const double target = std::log(atol);
  // smallest n with mean*n + z*sigma*sqrt(n) <= target (mean < 0)
  const double disc = z * sigma + std::sqrt(z * z * sigma * sigma - 4.0 * mean * (-target));
  const double u = disc / (-2.0 * mean);
  const double n = 1.1 * u * u;
  return std::clamp(int(std::ceil(n)), 200, 65536);
}

}  // namespace ifslr
