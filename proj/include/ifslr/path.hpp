#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ifslr/ifs.hpp"
#include "ifslr/rng.hpp"

namespace ifslr {

// Which scalar parameter an epsilon-perturbation moves.
struct ParamDirection {
  enum class Kind { Ratio, Translation };
  Kind kind = Kind::Ratio;
  int index = 0;
};

inline constexpr int kMaxDerivativeOrder = 8;

// Series convention used throughout: a path of n symbols i_1..i_n represents
//   x_n = sum_{m=0}^{n-1} d_{i_{m+1}} * L_m,   L_m = lambda_{i_1} ... lambda_{i_m},
// so x_1 = d_{i_1} and the full series is the n -> inf limit. The trailing
// scale L_n is kept because x_{n+k} = x_n + L_n * (same series over shifted
// symbols), which is how tails get attached.
struct TruncatedPath {
  std::vector<uint8_t> symbols;          // i_1..i_n as 0-based map indices
  std::vector<double> partial_products;  // L_0..L_n (n+1 values)
  std::vector<int> one_counts;           // occurrences of map 0 among i_1..i_m
  double x_n = 0.0;
  uint64_t seed_id = 0;
};

// Derivative values d^j/d eps^j x_n(eps) at eps = 0, j = 1..order.
struct FormalDerivatives {
  int order = 0;
  ParamDirection direction;
  std::vector<double> values;
};

TruncatedPath sample_path(const ProbabilisticIFS& ifs, int n, uint64_t master_seed,
                          uint64_t replica_index);

// Re-evaluates the truncated series with the chosen parameter moved by eps.
// eps = 0 reproduces x_n bit-for-bit.
double eval_series(std::span<const uint8_t> symbols, const ProbabilisticIFS& ifs, double eps,
                   ParamDirection direction);
double eval_series(const TruncatedPath& path, const ProbabilisticIFS& ifs, double eps,
                   ParamDirection direction);

// Term-by-term derivatives of the truncated series. In a ratio direction,
//   x_n^(j) = (j! / lambda^j) sum_m d_{i_{m+1}} L_m C(o(m), j)
// with o(m) counting the perturbed symbol among i_1..i_m. In a translation
// direction the series is linear in the parameter: order one is the
// indicator-weighted sum and higher orders vanish.
FormalDerivatives eval_formal_derivatives(std::span<const uint8_t> symbols,
                                          const ProbabilisticIFS& ifs, int order,
                                          ParamDirection direction);
FormalDerivatives eval_formal_derivatives(const TruncatedPath& path, const ProbabilisticIFS& ifs,
                                          int order, ParamDirection direction);

// Throws InadmissiblePerturbation unless every map stays valid and the system
// stays contracting on average after the move.
void check_perturbation(const ProbabilisticIFS& ifs, double eps, ParamDirection direction);

ProbabilisticIFS perturbed(const ProbabilisticIFS& ifs, double eps, ParamDirection direction);

namespace detail {

// Streams the symbols of one replica without materializing them.
class SymbolSource {
 public:
  SymbolSource(const ProbabilisticIFS& ifs, uint64_t seed, uint64_t replica)
      : stream_(seed, stream_id::kSymbols, replica) {
    k_ = ifs.size();
    for (std::size_t i = 0; i + 1 < ifs.size(); ++i)
      cum_.push_back((i ? cum_[i - 1] : 0.0) + ifs.probs[i]);
  }

  uint8_t next() {
    const double u = double(stream_.next_u32()) * 0x1.0p-32;
    for (std::size_t i = 0; i + 1 < k_; ++i)
      if (u < cum_[i]) return uint8_t(i);
    return uint8_t(k_ - 1);
  }

 private:
  RandomStream stream_;
  std::size_t k_;
  std::vector<double> cum_;
};

}  // namespace detail

}  // namespace ifslr
