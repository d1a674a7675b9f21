#include "ifslr/moments.hpp"

#include <cmath>
#include <string>

namespace ifslr {

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double acc = 1.0;
  for (int i = 1; i <= k; ++i) acc = acc * double(n - k + i) / double(i);
  return acc;
}

// Falling factorial a(a-1)...(a-i+1).
double falling(double a, int i) {
  double acc = 1.0;
  for (int t = 0; t < i; ++t) acc *= a - t;
  return acc;
}

void require_convergent(const ProbabilisticIFS& ifs, int k) {
  for (int m = 1; m <= k; ++m)
    if (!(moment_growth(ifs, double(m)) < 1.0))
      throw Error(ErrorCode::MomentDiverges,
                  "moment_growth >= 1 at order " + std::to_string(m));
}

// i-th theta-derivative of a_k(theta) = sum_j p_j lambda_j(theta)^k.
double coeff_a(const ProbabilisticIFS& ifs, ParamDirection dir, int k, int i) {
  if (i == 0) return moment_growth(ifs, double(k));
  if (dir.kind == ParamDirection::Kind::Translation) return 0.0;
  if (i > k) return 0.0;
  const std::size_t q = std::size_t(dir.index);
  return ifs.probs[q] * falling(double(k), i) * std::pow(ifs.ratio(q), double(k - i));
}

// i-th theta-derivative of b_{k,m}(theta) = C(k,m) sum_j p_j lambda_j^m d_j^{k-m}.
double coeff_b(const ProbabilisticIFS& ifs, ParamDirection dir, int k, int m, int i) {
  const double c = binomial(k, m);
  const std::size_t q = std::size_t(dir.index);
  if (i == 0) {
    double acc = 0.0;
    for (std::size_t j = 0; j < ifs.size(); ++j)
      acc += ifs.probs[j] * std::pow(ifs.ratio(j), double(m)) *
             std::pow(ifs.translation(j), double(k - m));
    return c * acc;
  }
  if (dir.kind == ParamDirection::Kind::Ratio) {
    if (i > m) return 0.0;
    return c * ifs.probs[q] * falling(double(m), i) * std::pow(ifs.ratio(q), double(m - i)) *
           std::pow(ifs.translation(q), double(k - m));
  }
  if (i > k - m) return 0.0;
  return c * ifs.probs[q] * std::pow(ifs.ratio(q), double(m)) * falling(double(k - m), i) *
         std::pow(ifs.translation(q), double(k - m - i));
}

}  // namespace

MomentTable moment_table(const ProbabilisticIFS& ifs, int max_order) {
  if (max_order < 1) throw Error(ErrorCode::OutOfRange, "max_order must be >= 1");
  require_convergent(ifs, max_order);
  MomentTable table;
  table.max_order = max_order;
  std::vector<double> e(std::size_t(max_order) + 1, 0.0);
  e[0] = 1.0;
  ParamDirection dir;  // coefficients only, order 0
  for (int k = 1; k <= max_order; ++k) {
    double rhs = 0.0;
    for (int m = 0; m < k; ++m) rhs += coeff_b(ifs, dir, k, m, 0) * e[std::size_t(m)];
    e[std::size_t(k)] = rhs / (1.0 - moment_growth(ifs, double(k)));
  }
  table.values.assign(e.begin() + 1, e.end());
  return table;
}

double exact_moment(const ProbabilisticIFS& ifs, int k) {
  return moment_table(ifs, k).values[std::size_t(k) - 1];
}

double exact_moment_derivative(const ProbabilisticIFS& ifs, int k, ParamDirection direction,
                               int order) {
  if (order < 0 || order > kMaxDerivativeOrder)
    throw Error(ErrorCode::OrderTooLarge, "derivative order must be in 0..8");
  if (direction.index < 0 || std::size_t(direction.index) >= ifs.size())
    throw Error(ErrorCode::OutOfRange, "direction index out of range");
  if (order == 0) return exact_moment(ifs, k);
  require_convergent(ifs, k);

  // D[m][i] = i-th derivative of E[X^m]. Leibniz on (1 - a_k) E_k = S_k:
  //   (1 - a_k) E_k^(l) = S_k^(l) + sum_{i>=1} C(l,i) a_k^(i) E_k^(l-i).
  std::vector<std::vector<double>> d(std::size_t(k) + 1,
                                     std::vector<double>(std::size_t(order) + 1, 0.0));
  d[0][0] = 1.0;
  for (int kk = 1; kk <= k; ++kk) {
    for (int l = 0; l <= order; ++l) {
      double rhs = 0.0;
      for (int m = 0; m < kk; ++m)
        for (int i = 0; i <= l; ++i)
          rhs += binomial(l, i) * coeff_b(ifs, direction, kk, m, i) *
                 d[std::size_t(m)][std::size_t(l - i)];
      for (int i = 1; i <= l; ++i)
        rhs += binomial(l, i) * coeff_a(ifs, direction, kk, i) *
               d[std::size_t(kk)][std::size_t(l - i)];
      d[std::size_t(kk)][std::size_t(l)] = rhs / (1.0 - moment_growth(ifs, double(kk)));
    }
  }
  return d[std::size_t(k)][std::size_t(order)];
}

double expected_weighted_product(const ProbabilisticIFS& ifs, int m, int j, int counted_index) {
  if (!ifs.is_two_map_equal_prob())
    throw Error(ErrorCode::UnsupportedIFS,
                "closed form available for two maps with equal probabilities");
  if (m < 0 || j < 0) throw Error(ErrorCode::OutOfRange, "m and j must be >= 0");
  if (j > m) return 0.0;
  const double lam = ifs.ratio(std::size_t(counted_index));
  const double sum = ifs.ratio(0) + ifs.ratio(1);
  return std::pow(0.5, double(m)) * std::pow(lam, double(j)) * std::pow(sum, double(m - j)) *
         binomial(m, j);
}

double expected_formal_derivative(const ProbabilisticIFS& ifs, int j, int counted_index) {
  if (!ifs.is_two_map_equal_prob())
    throw Error(ErrorCode::UnsupportedIFS,
                "closed form available for two maps with equal probabilities");
  if (j < 1 || j > kMaxDerivativeOrder)
    throw Error(ErrorCode::OrderTooLarge, "order must be in 1..8");
  const double q = 0.5 * (ifs.ratio(0) + ifs.ratio(1));
  if (!(q < 1.0))
    throw Error(ErrorCode::MomentDiverges, "first moment growth >= 1");
  const double dbar = 0.5 * (ifs.translation(0) + ifs.translation(1));
  (void)counted_index;  // symmetric in the counted map
  double jf = 1.0;
  for (int i = 2; i <= j; ++i) jf *= i;
  return jf * dbar / (std::pow(2.0, double(j)) * std::pow(1.0 - q, double(j + 1)));
}

std::pair<double, double> binomial_identity(int j, int t, double l1, double l2) {
  if (t < 0 || j < t || j > 60) throw Error(ErrorCode::OutOfRange, "need 0 <= t <= j <= 60");
  double lhs = 0.0;
  for (int k = t; k <= j; ++k)
    lhs += falling(double(k), t) * binomial(j, k) * std::pow(l1, double(k - t)) *
           std::pow(l2, double(j - k));
  const double rhs = falling(double(j), t) * std::pow(l1 + l2, double(j - t));
  return {lhs, rhs};
}

}  // namespace ifslr
