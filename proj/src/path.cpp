#include "ifslr/path.hpp"

#include <cmath>

namespace ifslr {

TruncatedPath sample_path(const ProbabilisticIFS& ifs, int n, uint64_t master_seed,
                          uint64_t replica_index) {
  if (n < 0) throw Error(ErrorCode::OutOfRange, "truncation depth must be >= 0");
  TruncatedPath path;
  path.seed_id = replica_index;
  path.symbols.resize(std::size_t(n));
  path.partial_products.resize(std::size_t(n) + 1);
  path.one_counts.resize(std::size_t(n) + 1);

  detail::SymbolSource src(ifs, master_seed, replica_index);
  double lam = 1.0, x = 0.0;
  int ones = 0;
  path.partial_products[0] = 1.0;
  path.one_counts[0] = 0;
  for (int m = 0; m < n; ++m) {
    const uint8_t s = src.next();
    path.symbols[std::size_t(m)] = s;
    x += ifs.translation(s) * lam;
    lam *= ifs.ratio(s);
    ones += (s == 0);
    path.partial_products[std::size_t(m) + 1] = lam;
    path.one_counts[std::size_t(m) + 1] = ones;
  }
  path.x_n = x;
  return path;
}

double eval_series(std::span<const uint8_t> symbols, const ProbabilisticIFS& ifs, double eps,
                   ParamDirection direction) {
  check_perturbation(ifs, eps, direction);
  const int q = direction.index;
  const bool ratio_dir = direction.kind == ParamDirection::Kind::Ratio;
  double lam = 1.0, x = 0.0;
  for (const uint8_t s : symbols) {
    double d = ifs.translation(s);
    double r = ifs.ratio(s);
    if (s == q) {
      if (ratio_dir) r += eps; else d += eps;
    }
    x += d * lam;
    lam *= r;
  }
  return x;
}

double eval_series(const TruncatedPath& path, const ProbabilisticIFS& ifs, double eps,
                   ParamDirection direction) {
  return eval_series(std::span<const uint8_t>(path.symbols), ifs, eps, direction);
}

FormalDerivatives eval_formal_derivatives(std::span<const uint8_t> symbols,
                                          const ProbabilisticIFS& ifs, int order,
                                          ParamDirection direction) {
  if (order < 1 || order > kMaxDerivativeOrder)
    throw Error(ErrorCode::OrderTooLarge, "derivative order must be in 1..8");
  const int q = direction.index;
  if (q < 0 || std::size_t(q) >= ifs.size())
    throw Error(ErrorCode::OutOfRange, "direction index out of range");

  FormalDerivatives out;
  out.order = order;
  out.direction = direction;
  out.values.assign(std::size_t(order), 0.0);

  if (direction.kind == ParamDirection::Kind::Translation) {
    double lam = 1.0, acc = 0.0;
    for (const uint8_t s : symbols) {
      if (s == q) acc += lam;
      lam *= ifs.ratio(s);
    }
    out.values[0] = acc;  // orders >= 2 vanish: the series is affine in d_q
    return out;
  }

  // Running Pascal row binom[j] = C(o(m), j), updated as o(m) increments.
  double binom[kMaxDerivativeOrder + 1] = {1.0};
  double sums[kMaxDerivativeOrder + 1] = {0.0};
  double lam = 1.0;
  for (const uint8_t s : symbols) {
    const double base = ifs.translation(s) * lam;
    for (int j = 1; j <= order; ++j) sums[j] += base * binom[j];
    lam *= ifs.ratio(s);
    if (s == q)
      for (int j = order; j >= 1; --j) binom[j] += binom[j - 1];
  }
  const double lambda_q = ifs.ratio(std::size_t(q));
  double factor = 1.0;
  for (int j = 1; j <= order; ++j) {
    factor *= double(j) / lambda_q;  // j! / lambda^j
    out.values[std::size_t(j) - 1] = factor * sums[j];
  }
  return out;
}

FormalDerivatives eval_formal_derivatives(const TruncatedPath& path, const ProbabilisticIFS& ifs,
                                          int order, ParamDirection direction) {
  return eval_formal_derivatives(std::span<const uint8_t>(path.symbols), ifs, order, direction);
}

void check_perturbation(const ProbabilisticIFS& ifs, double eps, ParamDirection direction) {
  if (eps == 0.0) return;
  if (direction.kind == ParamDirection::Kind::Translation) return;
  const int q = direction.index;
  if (q < 0 || std::size_t(q) >= ifs.size())
    throw Error(ErrorCode::OutOfRange, "direction index out of range");
  const double moved = ifs.ratio(std::size_t(q)) + eps;
  if (!(moved > 0.0))
    throw Error(ErrorCode::InadmissiblePerturbation, "perturbed ratio not positive");
  double mean_log = 0.0;
  for (std::size_t i = 0; i < ifs.size(); ++i)
    mean_log += ifs.probs[i] * std::log(i == std::size_t(q) ? moved : ifs.ratio(i));
  if (!(mean_log < 0.0))
    throw Error(ErrorCode::InadmissiblePerturbation,
                "perturbed system is no longer contracting on average");
}

ProbabilisticIFS perturbed(const ProbabilisticIFS& ifs, double eps, ParamDirection direction) {
  check_perturbation(ifs, eps, direction);
  std::vector<AffineMap> maps = ifs.maps;
  if (direction.kind == ParamDirection::Kind::Ratio)
    maps[std::size_t(direction.index)].ratio += eps;
  else
    maps[std::size_t(direction.index)].translation += eps;
  return validate_ifs(std::move(maps), ifs.probs);
}

}  // namespace ifslr
