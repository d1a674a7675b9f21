#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ifslr/errors.hpp"

namespace ifslr {

// One affine map f(x) = ratio * x + translation with ratio > 0.
struct AffineMap {
  double ratio = 0.0;
  double translation = 0.0;
};

// A finite family of affine maps applied i.i.d. with the given probabilities.
// Instances are produced by validate_ifs and are immutable afterwards, so they
// can be shared freely across threads.
struct ProbabilisticIFS {
  std::vector<AffineMap> maps;
  std::vector<double> probs;

  std::size_t size() const { return maps.size(); }
  double ratio(std::size_t i) const { return maps[i].ratio; }
  double translation(std::size_t i) const { return maps[i].translation; }

  bool is_two_map_equal_prob() const;
  // ratios (l1, l2) with 0 < l1 < 1 < l2, l1*l2 < 1, p = (1/2, 1/2), d = (1, 1).
  bool is_canonical_pair() const;
};

// x -> scale * x + offset, scale != 0.
struct AffineChange {
  double scale = 1.0;
  double offset = 0.0;

  double operator()(double x) const { return scale * x + offset; }
};

struct TailExponent {
  double value = 0.0;   // +inf when no map expands
  bool finite = false;
  double residual = 0.0;  // |sum_i p_i lambda_i^s0 - 1| for accepted roots
};

struct SpectralReport {
  double lyapunov_exponent = 0.0;   // chi = -sum p_i log lambda_i
  double entropy = 0.0;             // -sum p_i log p_i
  double lyapunov_dimension = 0.0;  // entropy / chi
  TailExponent tail;
  bool rate_available = false;      // some lambda_i > 1
};

// Checks every structural requirement: k >= 2, positive ratios, a probability
// vector, contraction on average, and no shared fixed point.
ProbabilisticIFS validate_ifs(std::vector<AffineMap> maps, std::vector<double> probs);

ProbabilisticIFS make_two_map(double l1, double l2, double d1 = 1.0, double d2 = 1.0);

// f(s) = sum_i p_i lambda_i^s. Equals 1 at s = 0 and is convex in s.
double moment_growth(const ProbabilisticIFS& ifs, double s);

// The positive root s0 > 0 of moment_growth(., s) = 1, when some lambda_i > 1;
// governs the power-law tail P(X >= R) <= c R^{-s0}.
TailExponent tail_exponent(const ProbabilisticIFS& ifs);

SpectralReport spectral_report(const ProbabilisticIFS& ifs);

// Large-deviation rate of the sample mean of log lambda: the Legendre
// transform I(y) = sup_theta (theta*y - log sum_i p_i lambda_i^theta).
// Defined for y strictly between min and max of log lambda_i; zero at the mean.
double cramer_rate(const ProbabilisticIFS& ifs, double y);

// For a two-map system with distinct ratios and no common fixed point, returns
// the system with unit translations together with the affine change c such
// that c o f_i^unit = f_i o c. Stationary measures push forward through c.
std::pair<ProbabilisticIFS, AffineChange> conjugate_to_unit_translations(const ProbabilisticIFS& ifs);

}  // namespace ifslr
