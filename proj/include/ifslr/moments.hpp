#pragma once

#include <utility>
#include <vector>

#include "ifslr/ifs.hpp"
#include "ifslr/path.hpp"

namespace ifslr {

// Closed-form ground truth from stationarity: X has the same law as
// d_I + lambda_I * X' with I ~ p independent of X', which turns integer
// moments into the triangular linear system
//   E[X^k] (1 - sum_j p_j lambda_j^k)
//     = sum_{m<k} C(k,m) (sum_j p_j lambda_j^m d_j^{k-m}) E[X^m].

struct MomentTable {
  int max_order = 0;
  std::vector<double> values;  // E[X^1..X^K]
};

// E[X^k]; throws MomentDiverges unless moment_growth(ifs, m) < 1 for all m <= k.
double exact_moment(const ProbabilisticIFS& ifs, int k);

MomentTable moment_table(const ProbabilisticIFS& ifs, int max_order);

// d^order/d theta^order E[X^k] at the base parameters, theta being the ratio
// or translation selected by `direction`. Obtained by differentiating the
// recursion; the coefficients are explicit polynomials in (lambda, d), so the
// propagation is exact.
double exact_moment_derivative(const ProbabilisticIFS& ifs, int k, ParamDirection direction,
                               int order);

// E[L_m * C(o(m), j)] for the two-map equal-probability system, where o(m)
// counts occurrences of `counted_index` among the first m symbols:
//   (1/2^m) lambda^j (lambda_1 + lambda_2)^{m-j} C(m, j).
double expected_weighted_product(const ProbabilisticIFS& ifs, int m, int j, int counted_index = 0);

// E[x^(j)] for the canonical two-map system in the Ratio(counted_index)
// direction, summed in closed form: j! dbar / (2^j (1-q)^{j+1}) with
// q = (lambda_1+lambda_2)/2 and dbar the mean translation.
double expected_formal_derivative(const ProbabilisticIFS& ifs, int j, int counted_index = 0);

// Both sides of the t-fold derivative of the binomial theorem:
//   sum_k k(k-1)...(k-t+1) C(j,k) l1^{k-t} l2^{j-k}
//     = j(j-1)...(j-t+1) (l1+l2)^{j-t}.
// Exposed for property testing; 0 <= t <= j <= 60.
std::pair<double, double> binomial_identity(int j, int t, double l1, double l2);

}  // namespace ifslr
