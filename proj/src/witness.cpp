#include "ifslr/witness.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ifslr/jet.hpp"
#include "json.hpp"

namespace ifslr {

namespace {

uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void require_canonical(const ProbabilisticIFS& ifs) {
  if (!ifs.is_canonical_pair())
    throw Error(ErrorCode::UnsupportedIFS,
                "needs the unit-translation two-map equal-probability system");
}

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-14) break;
  }
  return h;
}

double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
               b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

// Clopper-Pearson bounds at two-sided confidence `conf`.
double cp_lower(long long k, long long n, double conf) {
  if (k <= 0) return 0.0;
  const double alpha = 0.5 * (1.0 - conf);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (betai(double(k), double(n - k + 1), mid) < alpha) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double cp_upper(long long k, long long n, double conf) {
  if (k >= n) return 1.0;
  const double alpha = 0.5 * (1.0 - conf);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (betai(double(k + 1), double(n - k), mid) < 1.0 - alpha) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

AtomList dedup_atoms(std::vector<double> values, std::vector<double> weights, double threshold) {
  AtomList out;
  std::vector<std::size_t> idx(values.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  constexpr double kTol = 1e-12;
  double group_value = 0.0, group_prob = 0.0;
  bool open = false;
  auto flush = [&]() {
    if (!open) return;
    if (group_value >= threshold) {
      out.values.push_back(group_value);
      out.probs.push_back(group_prob);
      out.total_prob += group_prob;
    }
    open = false;
  };
  for (std::size_t i : idx) {
    if (!open || values[i] - group_value > kTol) {
      flush();
      group_value = values[i];
      group_prob = weights[i];
      open = true;
    } else {
      group_prob += weights[i];
    }
  }
  flush();
  return out;
}

struct ScanResult {
  long long m = 0;
  double p = 0.0;
  bool found = false;
};

// Largest integer M with M * p(M) >= depth^{-1/2} and p(M) >= floor_prob,
// where p(M) = P(value >= M) over the sorted sample/ensemble.
ScanResult scan_for_m(const std::vector<double>& sorted_values, double weight_each, int depth,
                      double floor_prob) {
  ScanResult res;
  const double target1 = 1.0 / std::sqrt(double(depth));
  const long long top = (long long)std::floor(sorted_values.back());
  for (long long m = top; m >= 1; --m) {
    const auto it =
        std::lower_bound(sorted_values.begin(), sorted_values.end(), double(m));
    const double p = weight_each * double(sorted_values.end() - it);
    if (double(m) * p >= target1 && p >= floor_prob) {
      res.m = m;
      res.p = p;
      res.found = true;
      return res;
    }
  }
  return res;
}

}  // namespace

double first_derivative_lower_constant(const ProbabilisticIFS& ifs) {
  require_canonical(ifs);
  const double l1 = ifs.ratio(0), l2 = ifs.ratio(1);
  return 1.0 / (l2 * (1.0 - l1) / (l2 - 1.0) + 1.0);
}

RegimeParams detect_regime(const ProbabilisticIFS& ifs) {
  require_canonical(ifs);
  const double l1 = ifs.ratio(0), l2 = ifs.ratio(1);
  RegimeParams out;
  if (l1 * l2 < 0.25) {
    out.regime_a = true;
    out.rho_a = std::sqrt(std::sqrt(l1 * l2) * 0.5);  // between sqrt(l1 l2) and 1/2
    out.delta_a = cramer_rate(ifs, std::log(out.rho_a));
  }
  const double kappa_lo = std::log(l2) / -std::log(l1);  // log_{1/l1}(l2)
  const double kappa_hi = std::log2(l2) - 1.0;
  if (kappa_hi > kappa_lo) {
    out.regime_b = true;
    out.kappa = 0.5 * (kappa_lo + kappa_hi);
    out.rho_b = l2 * std::pow(l1, out.kappa);
  }
  return out;
}

PrefixEnsemble enumerate_prefixes(const ProbabilisticIFS& ifs, int depth) {
  require_canonical(ifs);
  if (depth < 1 || depth > kEnumerationCap)
    throw Error(ErrorCode::EnumerationTooLarge,
                "depth " + std::to_string(depth) + " outside 1.." + std::to_string(kEnumerationCap));
  const std::size_t count = std::size_t(1) << depth;
  PrefixEnsemble ens;
  ens.depth = depth;
  ens.values.resize(count);
  ens.scales.resize(count);
  ens.ones.resize(count);
  ens.derivs.resize(count);
  const double l[2] = {ifs.ratio(0), ifs.ratio(1)};

#pragma omp parallel for schedule(static)
  for (long long w = 0; w < (long long)count; ++w) {
    double lam = 1.0, value = 1.0, dsum = 0.0;  // value includes the m = 0 term
    int ones = 0;
    for (int m = 1; m <= depth; ++m) {
      const int s = int((uint64_t(w) >> (m - 1)) & 1u);  // bit m-1 = symbol i_m
      lam *= l[s];
      ones += (s == 0);
      value += lam;
      dsum += lam * double(ones);
    }
    ens.values[std::size_t(w)] = value;
    ens.scales[std::size_t(w)] = lam;
    ens.ones[std::size_t(w)] = ones;
    ens.derivs[std::size_t(w)] = dsum / l[0];
  }
  return ens;
}

AtomList enumerate_prefix_atoms(const ProbabilisticIFS& ifs, int depth, double threshold) {
  PrefixEnsemble ens = enumerate_prefixes(ifs, depth);
  const double w = std::ldexp(1.0, -depth);
  std::vector<double> weights(ens.values.size(), w);
  return dedup_atoms(std::move(ens.values), std::move(weights), threshold);
}

WitnessA find_M(const ProbabilisticIFS& ifs, int depth, double rho, double delta,
                double median_r) {
  PrefixEnsemble ens = enumerate_prefixes(ifs, depth);
  const double weight = std::ldexp(1.0, -depth);
  const double rho_n = std::pow(rho, double(depth));
  long long exceed = 0;
  for (double s : ens.scales) exceed += s > rho_n;
  const double q_n = weight * double(exceed);

  std::vector<double> sorted = ens.values;
  std::sort(sorted.begin(), sorted.end());
  const ScanResult scan = scan_for_m(sorted, weight, depth, 2.0 * q_n);
  if (!scan.found)
    throw Error(ErrorCode::NoFeasibleM,
                "no integer threshold satisfies both conditions at depth " +
                    std::to_string(depth));

  WitnessA w;
  w.depth = depth;
  w.threshold = scan.m;
  w.atoms = dedup_atoms(std::move(ens.values),
                        std::vector<double>(sorted.size(), weight), double(scan.m));
  w.ball_radius = median_r * rho_n;
  w.support_radius = 2.0 * median_r * rho_n;
  w.median_r = median_r;
  w.p_n = w.atoms.total_prob;
  w.q_n = q_n;
  w.rho = rho;
  w.delta = delta;
  w.exact = true;
  return w;
}

WitnessA find_M_mc(const ProbabilisticIFS& ifs, int depth, double rho, double delta,
                   double median_r, long long replicas, uint64_t master_seed, double confidence) {
  require_canonical(ifs);
  if (depth <= kEnumerationCap)
    return find_M(ifs, depth, rho, delta, median_r);

  std::vector<double> values;
  values.resize(std::size_t(replicas));
  long long exceed = 0;
  const double rho_n = std::pow(rho, double(depth));
#pragma omp parallel for schedule(static) reduction(+ : exceed)
  for (long long r = 0; r < replicas; ++r) {
    detail::SymbolSource src(ifs, master_seed, uint64_t(r));
    double lam = 1.0, v = 1.0;
    for (int m = 0; m < depth; ++m) {
      const uint8_t s = src.next();
      lam *= ifs.ratio(s);
      v += lam;
    }
    values[std::size_t(r)] = v;
    exceed += lam > rho_n;
  }
  const double q_upper = cp_upper(exceed, replicas, confidence);

  std::sort(values.begin(), values.end());
  // conservative scan: Clopper-Pearson lower bound in place of p(M)
  const double target1 = 1.0 / std::sqrt(double(depth));
  const long long top = (long long)std::floor(values.back());
  for (long long m = top; m >= 1; --m) {
    const auto it = std::lower_bound(values.begin(), values.end(), double(m));
    const long long hits = values.end() - it;
    const double p_lower = cp_lower(hits, replicas, confidence);
    if (double(m) * p_lower >= target1 && p_lower >= 2.0 * q_upper) {
      WitnessA w;
      w.depth = depth;
      w.threshold = m;
      w.ball_radius = median_r * rho_n;
      w.support_radius = 2.0 * median_r * rho_n;
      w.median_r = median_r;
      w.p_n = p_lower;
      w.q_n = q_upper;
      w.rho = rho;
      w.delta = delta;
      w.exact = false;
      // approximate atom list: distinct sampled values above the threshold
      std::vector<double> tail_vals(it, values.end());
      w.atoms = dedup_atoms(std::move(tail_vals),
                            std::vector<double>(std::size_t(hits), 1.0 / double(replicas)),
                            double(m));
      return w;
    }
  }
  throw Error(ErrorCode::NoFeasibleM,
              "no integer threshold certified at depth " + std::to_string(depth));
}

SmoothPlateauBump::SmoothPlateauBump(std::span<const double> centers_sorted, double inner_radius,
                                     double outer_radius) {
  if (centers_sorted.empty()) throw Error(ErrorCode::OutOfRange, "no centers");
  if (!(inner_radius > 0.0 && outer_radius > inner_radius))
    throw Error(ErrorCode::OutOfRange, "need 0 < inner_radius < outer_radius");
  double chain_first = centers_sorted[0], chain_last = centers_sorted[0];
  auto close_chain = [&]() {
    Block b;
    b.outer_lo = chain_first - outer_radius;
    b.inner_lo = chain_first - inner_radius;
    b.inner_hi = chain_last + inner_radius;
    b.outer_hi = chain_last + outer_radius;
    b.cum_before = 0.0;
    blocks_.push_back(b);
  };
  for (std::size_t i = 1; i < centers_sorted.size(); ++i) {
    const double c = centers_sorted[i];
    if (c < chain_last) throw Error(ErrorCode::OutOfRange, "centers must be ascending");
    if (c - outer_radius <= chain_last + outer_radius) {
      chain_last = c;
    } else {
      close_chain();
      chain_first = chain_last = c;
    }
  }
  close_chain();
  double cum = 0.0;
  for (auto& b : blocks_) {
    const double scale = std::max(std::abs(b.outer_lo), std::abs(b.outer_hi));
    if (b.outer_hi - b.outer_lo <= 16.0 * std::numeric_limits<double>::epsilon() * scale)
      throw Error(ErrorCode::OutOfRange,
                  "plateau narrower than floating-point resolution at its location");
    b.cum_before = cum;
    cum += 0.5 * (b.inner_lo - b.outer_lo) + (b.inner_hi - b.inner_lo) +
           0.5 * (b.outer_hi - b.inner_hi);
  }
}

double SmoothPlateauBump::derivative(double x, int k) const {
  auto it = std::upper_bound(blocks_.begin(), blocks_.end(), x,
                             [](double v, const Block& b) { return v < b.outer_lo; });
  if (it == blocks_.begin()) return 0.0;
  const Block& b = *(it - 1);
  if (x >= b.outer_hi) return 0.0;
  if (x >= b.inner_lo && x <= b.inner_hi) return k == 0 ? 1.0 : 0.0;
  double t0, slope;
  if (x < b.inner_lo) {
    const double w = b.inner_lo - b.outer_lo;
    t0 = (x - b.outer_lo) / w;
    slope = 1.0 / w;
  } else {
    const double w = b.outer_hi - b.inner_hi;
    t0 = (b.outer_hi - x) / w;
    slope = -1.0 / w;
  }
  if (k == 0) return smooth_ramp_value(t0);
  Jet t = Jet::constant(t0, k);
  t.c[1] = slope;
  return smooth_ramp(t).derivative(k);
}

double SmoothPlateauBump::integral(double x) const {
  auto it = std::upper_bound(blocks_.begin(), blocks_.end(), x,
                             [](double v, const Block& b) { return v < b.outer_lo; });
  if (it == blocks_.begin()) return 0.0;
  const Block& b = *(it - 1);
  const double wl = b.inner_lo - b.outer_lo;
  const double wr = b.outer_hi - b.inner_hi;
  const double full = 0.5 * wl + (b.inner_hi - b.inner_lo) + 0.5 * wr;
  if (x >= b.outer_hi) return b.cum_before + full;
  if (x < b.inner_lo) return b.cum_before + wl * smooth_ramp_integral((x - b.outer_lo) / wl);
  if (x <= b.inner_hi) return b.cum_before + 0.5 * wl + (x - b.inner_lo);
  return b.cum_before + 0.5 * wl + (b.inner_hi - b.inner_lo) +
         wr * (0.5 - smooth_ramp_integral((b.outer_hi - x) / wr));
}

double SmoothPlateauBump::l1_norm() const {
  if (blocks_.empty()) return 0.0;
  return integral(blocks_.back().outer_hi);
}

double SmoothPlateauBump::support_lo() const { return blocks_.front().outer_lo; }
double SmoothPlateauBump::support_hi() const { return blocks_.back().outer_hi; }

double SmoothPlateauBump::support_measure() const {
  double acc = 0.0;
  for (const auto& b : blocks_) acc += b.outer_hi - b.outer_lo;
  return acc;
}

std::vector<std::pair<double, double>> SmoothPlateauBump::plateau_intervals() const {
  std::vector<std::pair<double, double>> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.emplace_back(b.inner_lo, b.inner_hi);
  return out;
}

std::pair<WitnessA, SmoothPlateauBump> build_witness_a(const ProbabilisticIFS& ifs,
                                                       const RegimeParams& regime, int depth,
                                                       double median_r) {
  if (!regime.regime_a) throw Error(ErrorCode::NoFeasibleM, "region A not available");
  WitnessA w = find_M(ifs, depth, regime.rho_a, regime.delta_a, median_r);
  SmoothPlateauBump bump(w.atoms.values, w.ball_radius, w.support_radius);
  return {std::move(w), std::move(bump)};
}

std::pair<WitnessB, SmoothPlateauBump> build_witness_b(const ProbabilisticIFS& ifs,
                                                       const RegimeParams& regime, int depth,
                                                       double median_r) {
  if (!regime.regime_b) throw Error(ErrorCode::NoFeasibleM, "region B not available");
  require_canonical(ifs);
  WitnessB w;
  w.depth = depth;
  w.kappa_n = int(std::ceil(regime.kappa * double(depth)));
  const double l1 = ifs.ratio(0), l2 = ifs.ratio(1);
  // word 2...2 1...1 (depth twos, kappa_n ones), value over depth+kappa_n+1 terms
  double lam = 1.0, value = 1.0;
  for (int m = 0; m < depth; ++m) {
    lam *= l2;
    value += lam;
  }
  for (int m = 0; m < w.kappa_n; ++m) {
    lam *= l1;
    value += lam;
  }
  w.center = value;
  const double rho_n = std::pow(regime.rho_b, double(depth));
  w.ball_radius = median_r * rho_n;
  w.support_radius = 2.0 * median_r * rho_n;
  w.median_r = median_r;
  w.kappa = regime.kappa;
  w.rho = regime.rho_b;
  const double centers[1] = {w.center};
  SmoothPlateauBump bump(centers, w.ball_radius, w.support_radius);
  return {w, std::move(bump)};
}

namespace {

class WitnessFunction final : public TestFunction {
 public:
  explicit WitnessFunction(SmoothPlateauBump bump) : bump_(std::move(bump)) {}

  double value(double x) const override { return bump_.integral(x); }
  double derivative(double x, int k) const override {
    if (k == 0) return value(x);
    return bump_.derivative(x, k - 1);
  }
  int max_derivative_order() const override { return Jet::kMaxOrder; }
  std::string describe() const override { return "witness"; }
  std::string regime_violation(const ProbabilisticIFS&, int) const override { return {}; }

 private:
  SmoothPlateauBump bump_;
};

}  // namespace

std::unique_ptr<TestFunction> make_witness_function(SmoothPlateauBump bump) {
  return std::make_unique<WitnessFunction>(std::move(bump));
}

MCEstimate estimate_hN_prime(const ProbabilisticIFS& ifs, const SmoothPlateauBump& bump,
                             int prefix_depth, const HNOptions& opts) {
  require_canonical(ifs);
  const PrefixEnsemble ens = enumerate_prefixes(ifs, prefix_depth);
  const std::size_t strata = ens.values.size();
  const long long T = opts.tail_samples;
  if (T < 2) throw Error(ErrorCode::OutOfRange, "need at least two tail samples");
  const double l1 = ifs.ratio(0);
  const double weight = std::ldexp(1.0, -prefix_depth);
  const double slo = bump.support_lo(), shi = bump.support_hi();

  // Shared tail pool: Y ~ X - 1 over shifted symbols, D~ its first-order
  // series derivative. One pool for every stratum keeps the estimator a
  // plain average of per-tail aggregates.
  const std::size_t pool = std::size_t(T);
  std::vector<double> tail_y(pool), tail_d(pool);
  const int nthreads = opts.threads > 0 ? opts.threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (long long t = 0; t < T; ++t) {
    RandomStream stream(opts.master_seed, stream_id::kTail, uint64_t(t));
    double lam = 1.0, y = 0.0, d = 0.0;
    int ones = 0;
    for (int m = 0; m < opts.tail_truncation; ++m) {
      const double u = double(stream.next_u32()) * 0x1.0p-32;
      const int s = u < 0.5 ? 0 : 1;
      lam *= ifs.ratio(std::size_t(s));
      ones += (s == 0);
      y += lam;
      d += lam * double(ones);
    }
    tail_y[std::size_t(t)] = y;
    tail_d[std::size_t(t)] = d / l1;
  }

  // Fixed-size stratum chunks, each with its own per-tail accumulator,
  // merged in chunk order: identical bits for any worker count.
  constexpr std::size_t kChunk = 16384;
  const std::size_t nchunks = (strata + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> chunk_acc(nchunks);

#pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
  for (long long ci = 0; ci < (long long)nchunks; ++ci) {
    auto& acc = chunk_acc[std::size_t(ci)];
    acc.assign(std::size_t(T), 0.0);
    const std::size_t begin = std::size_t(ci) * kChunk;
    const std::size_t end = std::min(strata, begin + kChunk);
    for (std::size_t w = begin; w < end; ++w) {
      const double v = ens.values[w];
      if (v > shi) continue;  // the tail only moves the point upward
      const double scale = ens.scales[w];
      const double dw = ens.derivs[w];
      const double ow = double(ens.ones[w]);
      for (long long t = 0; t < T; ++t) {
        const double y = tail_y[std::size_t(t)];
        const double x = v + scale * y;
        if (x < slo || x > shi) continue;
        const double phi = bump.derivative(x, 0);
        if (phi == 0.0) continue;
        const double deriv = dw + scale * (ow * y / l1 + tail_d[std::size_t(t)]);
        acc[std::size_t(t)] += weight * (phi * deriv);
      }
    }
  }

  std::vector<double> g(std::size_t(T), 0.0);
  for (std::size_t ci = 0; ci < nchunks; ++ci)
    for (long long t = 0; t < T; ++t) g[std::size_t(t)] += chunk_acc[ci][std::size_t(t)];

  const double total = pairwise_tree_sum(g);
  MCEstimate est;
  est.mean = total / double(T);
  double ss = 0.0;
  for (double v : g) ss += (v - est.mean) * (v - est.mean);
  est.std_error = std::sqrt(ss / double(T - 1) / double(T));
  est.replicas = T;
  est.truncation_n = opts.tail_truncation;
  est.master_seed = opts.master_seed;
  return est;
}

MCEstimate estimate_hN_prime_plain(const ProbabilisticIFS& ifs, const SmoothPlateauBump& bump,
                                   const McOptions& opts) {
  McOptions mc = opts;
  mc.deriv_order = 1;
  mc.deriv_direction = ParamDirection{ParamDirection::Kind::Ratio, 0};
  return estimate_expectation(
      ifs,
      [&](const PathView& path) {
        const double phi = bump.derivative(path.x_n, 0);
        return phi == 0.0 ? 0.0 : phi * path.derivatives[0];
      },
      mc);
}

DivergenceReport divergence_report(const ProbabilisticIFS& ifs, char regime_choice, int n_lo,
                                   int n_hi, const DivergenceOptions& opts) {
  require_canonical(ifs);
  if (n_lo > n_hi) {
    DivergenceReport empty;
    empty.regime = regime_choice;
    return empty;
  }
  const RegimeParams regime = detect_regime(ifs);
  const bool use_a = regime_choice == 'A' || regime_choice == 'a';
  if (use_a && !regime.regime_a)
    throw Error(ErrorCode::NoFeasibleM, "region A conditions not satisfied");
  if (!use_a && !regime.regime_b)
    throw Error(ErrorCode::NoFeasibleM, "region B conditions not satisfied");

  const int truncation = opts.truncation > 0 ? opts.truncation : suggested_truncation(ifs);

  McOptions qopts;
  qopts.replicas = opts.quantile_replicas;
  qopts.truncation = truncation;
  qopts.master_seed = mix64(opts.master_seed ^ 0x72ull);
  qopts.threads = opts.threads;
  const double median_r = empirical_quantile(ifs, 0.5, -1.0, qopts);

  DivergenceReport rep;
  rep.regime = use_a ? 'A' : 'B';
  rep.median_r = median_r;
  rep.rho = use_a ? regime.rho_a : regime.rho_b;
  rep.kappa = regime.kappa;
  rep.delta = regime.delta_a;
  rep.c_lower = first_derivative_lower_constant(ifs);

  const double growth = std::pow(2.0, -1.0 - regime.kappa) * ifs.ratio(1);
  double prev_mean = 0.0, prev_se = 0.0;
  bool have_prev = false;

  for (int n = n_lo; n <= n_hi; ++n) {
    DivergenceRow row;
    row.depth = n;
    SmoothPlateauBump bump;
    int prefix_depth = n;
    if (use_a) {
      auto [w, b] = build_witness_a(ifs, regime, n, median_r);
      bump = std::move(b);
      row.threshold_m = w.threshold;
      row.p_n = w.p_n;
      row.q_n = w.q_n;
      row.l1_bound = 8.0 * median_r * std::pow(2.0 * regime.rho_a, double(n));
      row.lower_bound = rep.c_lower / 8.0 / std::sqrt(double(n));
    } else {
      auto [w, b] = build_witness_b(ifs, regime, n, median_r);
      bump = std::move(b);
      prefix_depth = w.depth + w.kappa_n;
      row.l1_bound = 4.0 * median_r * std::pow(regime.rho_b, double(n));
      row.lower_bound = rep.c_lower / 8.0 * std::pow(growth, double(n));
    }

    HNOptions hn;
    hn.tail_samples = opts.tail_samples;
    hn.tail_truncation = truncation;
    hn.master_seed = mix64(opts.master_seed ^ (uint64_t(n) << 8));
    hn.threads = opts.threads;
    const MCEstimate est = estimate_hN_prime(ifs, bump, prefix_depth, hn);
    row.estimate = est.mean;
    row.std_error = est.std_error;
    row.bound_pass = est.mean >= row.lower_bound - 4.0 * est.std_error;

    row.l1 = bump.l1_norm();
    row.l1_pass = row.l1 <= row.l1_bound * (1.0 + 1e-12);

    if (use_a) {
      row.ball_bound = 0.25 * row.p_n;
      const auto plateaus = bump.plateau_intervals();
      McOptions bopts;
      bopts.replicas = opts.ball_replicas;
      bopts.truncation = truncation;
      bopts.master_seed = mix64(opts.master_seed ^ (uint64_t(n) << 16) ^ 0xBA11ull);
      bopts.threads = opts.threads;
      const MCEstimate ball = estimate_expectation(
          ifs,
          [&](const PathView& path) {
            auto it = std::upper_bound(
                plateaus.begin(), plateaus.end(), path.x_n,
                [](double v, const std::pair<double, double>& p) { return v < p.first; });
            if (it == plateaus.begin()) return 0.0;
            return path.x_n <= (it - 1)->second ? 1.0 : 0.0;
          },
          bopts);
      row.ball_prob = ball.mean;
      row.ball_se = ball.std_error;
      row.ball_pass = ball.mean >= row.ball_bound - 4.0 * ball.std_error;
    }

    if (have_prev && prev_mean != 0.0) {
      row.ratio = est.mean / prev_mean;
      row.ratio_se = std::abs(row.ratio) *
                     std::sqrt(est.std_error * est.std_error / (est.mean * est.mean) +
                               prev_se * prev_se / (prev_mean * prev_mean));
      row.ratio_pass = row.ratio >= 1.0 - 4.0 * row.ratio_se;
      rep.all_ratios_pass = rep.all_ratios_pass && row.ratio_pass;
    }
    prev_mean = est.mean;
    prev_se = est.std_error;
    have_prev = true;

    rep.partial_sum += est.mean;
    rep.l1_total += row.l1;
    rep.l1_bound_total += row.l1_bound;
    rep.all_bounds_pass = rep.all_bounds_pass && row.bound_pass && row.l1_pass && row.ball_pass;
    rep.rows.push_back(row);
  }
  return rep;
}

std::string witness_family_to_json(const ProbabilisticIFS& ifs, const RegimeParams& regime,
                                   double median_r, std::span<const WitnessA> a_entries,
                                   std::span<const WitnessB> b_entries) {
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  doc["ratios"] = {ifs.ratio(0), ifs.ratio(1)};
  doc["median_r"] = median_r;
  doc["regime"] = {{"a", regime.regime_a},   {"b", regime.regime_b}, {"rho_a", regime.rho_a},
                   {"delta_a", regime.delta_a}, {"kappa", regime.kappa}, {"rho_b", regime.rho_b}};
  doc["a_entries"] = nlohmann::ordered_json::array();
  for (const auto& w : a_entries) {
    nlohmann::ordered_json e;
    e["depth"] = w.depth;
    e["threshold"] = w.threshold;
    e["ball_radius"] = w.ball_radius;
    e["support_radius"] = w.support_radius;
    e["p_n"] = w.p_n;
    e["q_n"] = w.q_n;
    e["exact"] = w.exact;
    e["atoms"] = w.atoms.values;
    e["atom_probs"] = w.atoms.probs;
    doc["a_entries"].push_back(std::move(e));
  }
  doc["b_entries"] = nlohmann::ordered_json::array();
  for (const auto& w : b_entries) {
    nlohmann::ordered_json e;
    e["depth"] = w.depth;
    e["kappa_n"] = w.kappa_n;
    e["center"] = w.center;
    e["ball_radius"] = w.ball_radius;
    e["support_radius"] = w.support_radius;
    doc["b_entries"].push_back(std::move(e));
  }
  return doc.dump(2);
}

WitnessFamilyDoc parse_witness_family(const std::string& json_text) {
  const auto doc = nlohmann::json::parse(json_text);
  if (doc.at("version").get<int>() != 1)
    throw Error(ErrorCode::BadConfig, "unknown witness document version");
  WitnessFamilyDoc out;
  out.ratios = doc.at("ratios").get<std::vector<double>>();
  out.median_r = doc.at("median_r").get<double>();
  const auto& rg = doc.at("regime");
  out.regime.regime_a = rg.at("a").get<bool>();
  out.regime.regime_b = rg.at("b").get<bool>();
  out.regime.rho_a = rg.at("rho_a").get<double>();
  out.regime.delta_a = rg.at("delta_a").get<double>();
  out.regime.kappa = rg.at("kappa").get<double>();
  out.regime.rho_b = rg.at("rho_b").get<double>();
  for (const auto& e : doc.at("a_entries")) {
    WitnessA w;
    w.depth = e.at("depth").get<int>();
    w.threshold = e.at("threshold").get<long long>();
    w.ball_radius = e.at("ball_radius").get<double>();
    w.support_radius = e.at("support_radius").get<double>();
    w.p_n = e.at("p_n").get<double>();
    w.q_n = e.at("q_n").get<double>();
    w.exact = e.at("exact").get<bool>();
    w.atoms.values = e.at("atoms").get<std::vector<double>>();
    w.atoms.probs = e.at("atom_probs").get<std::vector<double>>();
    for (double p : w.atoms.probs) w.atoms.total_prob += p;
    w.median_r = out.median_r;
    w.rho = out.regime.rho_a;
    w.delta = out.regime.delta_a;
    out.a_entries.push_back(std::move(w));
  }
  for (const auto& e : doc.at("b_entries")) {
    WitnessB w;
    w.depth = e.at("depth").get<int>();
    w.kappa_n = e.at("kappa_n").get<int>();
    w.center = e.at("center").get<double>();
    w.ball_radius = e.at("ball_radius").get<double>();
    w.support_radius = e.at("support_radius").get<double>();
    w.median_r = out.median_r;
    w.kappa = out.regime.kappa;
    w.rho = out.regime.rho_b;
    out.b_entries.push_back(std::move(w));
  }
  return out;
}

}  // namespace ifslr
