#include "ifslr/ifs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ifslr {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotContractingOnAverage: return "NotContractingOnAverage";
    case ErrorCode::BadProbabilityVector: return "BadProbabilityVector";
    case ErrorCode::CommonFixedPoint: return "CommonFixedPoint";
    case ErrorCode::NonPositiveRatio: return "NonPositiveRatio";
    case ErrorCode::EqualRatios: return "EqualRatios";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MomentDiverges: return "MomentDiverges";
    case ErrorCode::UnsupportedIFS: return "UnsupportedIFS";
    case ErrorCode::InadmissiblePerturbation: return "InadmissiblePerturbation";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::DegenerateDistribution: return "DegenerateDistribution";
    case ErrorCode::EnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorCode::NoFeasibleM: return "NoFeasibleM";
    case ErrorCode::OrderTooLarge: return "OrderTooLarge";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "UnknownError";
}

bool ProbabilisticIFS::is_two_map_equal_prob() const {
  return size() == 2 && std::abs(probs[0] - 0.5) <= 1e-12 && std::abs(probs[1] - 0.5) <= 1e-12;
}

bool ProbabilisticIFS::is_canonical_pair() const {
  return is_two_map_equal_prob() && maps[0].ratio < 1.0 && maps[1].ratio > 1.0 &&
         maps[0].ratio * maps[1].ratio < 1.0 && maps[0].translation == 1.0 &&
         maps[1].translation == 1.0;
}

ProbabilisticIFS validate_ifs(std::vector<AffineMap> maps, std::vector<double> probs) {
  if (maps.size() < 2)
    throw Error(ErrorCode::UnsupportedIFS, "need at least two maps");
  if (probs.size() != maps.size())
    throw Error(ErrorCode::BadProbabilityVector, "probability count does not match map count");

  double psum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw Error(ErrorCode::BadProbabilityVector, "negative probability");
    psum += p;
  }
  if (std::abs(psum - 1.0) > 1e-12)
    throw Error(ErrorCode::BadProbabilityVector, "probabilities do not sum to 1");

  bool any_contracting = false;
  double mean_log = 0.0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (!(maps[i].ratio > 0.0))
      throw Error(ErrorCode::NonPositiveRatio, "ratios must be positive");
    if (maps[i].ratio < 1.0) any_contracting = true;
    mean_log += probs[i] * std::log(maps[i].ratio);
  }
  if (!(mean_log < 0.0))
    throw Error(ErrorCode::NotContractingOnAverage, "sum p_i log lambda_i must be negative");
  if (!any_contracting)
    throw Error(ErrorCode::NotContractingOnAverage, "no contracting map");

  // Shared fixed point d/(1-lambda) makes the attractor a single atom. Only
  // meaningful when every map actually has one (lambda != 1); a map with
  // lambda == 1, d == 0 fixes everything and is rejected outright.
  bool all_have_fixed_point = true;
  for (const auto& m : maps) {
    if (std::abs(1.0 - m.ratio) <= 1e-9) {
      if (m.translation == 0.0)
        throw Error(ErrorCode::CommonFixedPoint, "identity map fixes every point");
      all_have_fixed_point = false;
    }
  }
  if (all_have_fixed_point) {
    double ref = maps[0].translation / (1.0 - maps[0].ratio);
    bool all_equal = true;
    for (const auto& m : maps) {
      const double fp = m.translation / (1.0 - m.ratio);
      const double scale = std::max({1.0, std::abs(ref), std::abs(fp)});
      if (std::abs(fp - ref) > 1e-10 * scale) { all_equal = false; break; }
    }
    if (all_equal)
      throw Error(ErrorCode::CommonFixedPoint, "all maps share one fixed point");
  }

  ProbabilisticIFS out;
  out.maps = std::move(maps);
  out.probs = std::move(probs);
  return out;
}

ProbabilisticIFS make_two_map(double l1, double l2, double d1, double d2) {
  return validate_ifs({{l1, d1}, {l2, d2}}, {0.5, 0.5});
}

namespace {

// log f(s) via log-sum-exp; stable for large s and extreme ratios.
double log_moment_growth(const ProbabilisticIFS& ifs, double s) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ifs.size(); ++i)
    m = std::max(m, std::log(ifs.probs[i]) + s * std::log(ifs.ratio(i)));
  double acc = 0.0;
  for (std::size_t i = 0; i < ifs.size(); ++i)
    acc += std::exp(std::log(ifs.probs[i]) + s * std::log(ifs.ratio(i)) - m);
  return m + std::log(acc);
}

// Cumulant generating function of log lambda and its derivative.
double cgf(const ProbabilisticIFS& ifs, double theta) { return log_moment_growth(ifs, theta); }

double cgf_prime(const ProbabilisticIFS& ifs, double theta) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ifs.size(); ++i)
    m = std::max(m, std::log(ifs.probs[i]) + theta * std::log(ifs.ratio(i)));
  double z = 0.0, zl = 0.0;
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    const double w = std::exp(std::log(ifs.probs[i]) + theta * std::log(ifs.ratio(i)) - m);
    z += w;
    zl += w * std::log(ifs.ratio(i));
  }
  return zl / z;
}

}  // namespace

double moment_growth(const ProbabilisticIFS& ifs, double s) {
  if (!(s >= 0.0)) throw Error(ErrorCode::OutOfRange, "moment_growth needs s >= 0");
  double acc = 0.0;
  for (std::size_t i = 0; i < ifs.size(); ++i)
    acc += ifs.probs[i] * std::pow(ifs.ratio(i), s);
  return acc;
}

TailExponent tail_exponent(const ProbabilisticIFS& ifs) {
  TailExponent out;
  bool any_expanding = false;
  for (const auto& m : ifs.maps) any_expanding |= m.ratio > 1.0;
  if (!any_expanding) {
    out.value = std::numeric_limits<double>::infinity();
    out.finite = false;
    return out;
  }

  // log f is convex, zero at s = 0, negative just to the right (contraction on
  // average), and goes to +inf. Locate the minimizer by golden section, then
  // bisect on [s1, hi].
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, b = 64.0;
  while (log_moment_growth(ifs, b) < 0.0) {
    a = b;
    b *= 2.0;
    if (b > 1e9) throw Error(ErrorCode::OutOfRange, "tail exponent beyond search range");
  }
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = log_moment_growth(ifs, x1), f2 = log_moment_growth(ifs, x2);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * std::max(1.0, b); ++it) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - gr * (b - a); f1 = log_moment_growth(ifs, x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + gr * (b - a); f2 = log_moment_growth(ifs, x2);
    }
  }
  double lo = 0.5 * (a + b);  // minimizer s1; f(s1) < 1
  double hi = std::max(64.0, 2.0 * lo);
  while (log_moment_growth(ifs, hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (log_moment_growth(ifs, mid) < 0.0) lo = mid; else hi = mid;
  }
  out.value = 0.5 * (lo + hi);
  out.finite = true;
  out.residual = std::abs(moment_growth(ifs, out.value) - 1.0);
  return out;
}

SpectralReport spectral_report(const ProbabilisticIFS& ifs) {
  SpectralReport rep;
  double chi = 0.0, ent = 0.0;
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    chi -= ifs.probs[i] * std::log(ifs.ratio(i));
    if (ifs.probs[i] > 0.0) ent -= ifs.probs[i] * std::log(ifs.probs[i]);
  }
  rep.lyapunov_exponent = chi;
  rep.entropy = ent;
  rep.lyapunov_dimension = ent / chi;
  rep.tail = tail_exponent(ifs);
  for (const auto& m : ifs.maps) rep.rate_available |= m.ratio > 1.0;
  return rep;
}

double cramer_rate(const ProbabilisticIFS& ifs, double y) {
  double lo_log = std::numeric_limits<double>::infinity();
  double hi_log = -std::numeric_limits<double>::infinity();
  double mean = 0.0;
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    lo_log = std::min(lo_log, std::log(ifs.ratio(i)));
    hi_log = std::max(hi_log, std::log(ifs.ratio(i)));
    mean += ifs.probs[i] * std::log(ifs.ratio(i));
  }
  if (std::abs(y - mean) <= 1e-15 * std::max(1.0, std::abs(mean))) return 0.0;
  if (!(y > lo_log && y < hi_log))
    throw Error(ErrorCode::OutOfRange, "rate defined between min and max of log lambda");

  // cgf' is increasing with range (lo_log, hi_log); solve cgf'(theta) = y and
  // evaluate the transform there.
  double lo = 0.0, hi = 0.0;
  if (y > mean) {
    hi = 1.0;
    while (cgf_prime(ifs, hi) < y) hi *= 2.0;
  } else {
    lo = -1.0;
    while (cgf_prime(ifs, lo) > y) lo *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cgf_prime(ifs, mid) < y) lo = mid; else hi = mid;
  }
  const double theta = 0.5 * (lo + hi);
  return std::max(0.0, theta * y - cgf(ifs, theta));
}

std::pair<ProbabilisticIFS, AffineChange> conjugate_to_unit_translations(const ProbabilisticIFS& ifs) {
  if (ifs.size() != 2)
    throw Error(ErrorCode::UnsupportedIFS, "conjugation implemented for two maps");
  const double l1 = ifs.ratio(0), l2 = ifs.ratio(1);
  const double d1 = ifs.translation(0), d2 = ifs.translation(1);
  if (std::abs(l1 - l2) <= 1e-12 * std::max(l1, l2))
    throw Error(ErrorCode::EqualRatios, "conjugation needs distinct ratios");

  const double a = ((1.0 - l1) * d2 - (1.0 - l2) * d1) / (l2 - l1);
  const double b = (d2 - d1) / (l1 - l2);
  if (std::abs(a) <= 1e-12 * std::max({1.0, std::abs(d1), std::abs(d2)}))
    throw Error(ErrorCode::CommonFixedPoint, "degenerate change of variables");

  ProbabilisticIFS canonical = ifs;
  canonical.maps[0].translation = 1.0;
  canonical.maps[1].translation = 1.0;
  return {std::move(canonical), AffineChange{a, b}};
}

}  // namespace ifslr
