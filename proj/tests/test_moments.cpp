#include <cmath>
#include <random>

#include "doctest.h"
#include "ifslr/moments.hpp"

using namespace ifslr;

namespace {
const ParamDirection kRatio1{ParamDirection::Kind::Ratio, 0};
const ParamDirection kTrans1{ParamDirection::Kind::Translation, 0};
const ParamDirection kRatio2{ParamDirection::Kind::Ratio, 1};
}  // namespace

TEST_CASE("exact moments of the reference system") {
  auto ifs = make_two_map(0.5, 1.2);
  CHECK(exact_moment(ifs, 1) == doctest::Approx(20.0 / 3.0).epsilon(1e-14));
  // (1 + (l1+l2) E[X]) / (1 - (l1^2+l2^2)/2)
  CHECK(exact_moment(ifs, 2) == doctest::Approx((1.0 + 1.7 * 20.0 / 3.0) / 0.155).epsilon(1e-13));
  CHECK(exact_moment(ifs, 2) >= exact_moment(ifs, 1) * exact_moment(ifs, 1));

  auto div = make_two_map(0.5, 1.5);
  CHECK_THROWS_AS(exact_moment(div, 2), Error);  // (0.25 + 2.25)/2 >= 1

  const MomentTable table = moment_table(ifs, 3);
  CHECK(table.values[0] == exact_moment(ifs, 1));
  CHECK(table.values[2] == exact_moment(ifs, 3));
}

TEST_CASE("moment recursion against brute-force enumeration") {
  // k-map support: three maps, unequal probabilities, small depth suffices
  auto ifs = validate_ifs({{0.3, 1.0}, {0.5, 2.0}, {0.8, 0.5}}, {0.5, 0.3, 0.2});
  const int depth = 18;
  // E[x_depth^k] by dynamic programming over the recursion
  // X ~ d_I + lambda_I X' truncated: iterate the moment map `depth` times
  std::vector<double> m(4, 0.0);
  m[0] = 1.0;  // moments of the point mass at 0
  for (int it = 0; it < depth; ++it) {
    std::vector<double> next(4, 0.0);
    next[0] = 1.0;
    for (int k = 1; k <= 3; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < ifs.size(); ++j) {
        double inner = 0.0;
        for (int i = 0; i <= k; ++i) {
          double binom = 1.0;
          for (int t = 1; t <= i; ++t) binom = binom * double(k - i + t) / double(t);
          inner += binom * std::pow(ifs.ratio(j), double(i)) *
                   std::pow(ifs.translation(j), double(k - i)) * m[std::size_t(i)];
        }
        acc += ifs.probs[j] * inner;
      }
      next[std::size_t(k)] = acc;
    }
    m = next;
  }
  for (int k = 1; k <= 3; ++k)
    CHECK(exact_moment(ifs, k) == doctest::Approx(m[std::size_t(k)]).epsilon(1e-6));
}

TEST_CASE("moment derivatives: closed forms") {
  auto ifs = make_two_map(0.5, 1.2);
  CHECK(exact_moment_derivative(ifs, 1, kRatio1, 1) == doctest::Approx(200.0 / 9.0).epsilon(1e-13));
  CHECK(exact_moment_derivative(ifs, 1, kTrans1, 1) == doctest::Approx(10.0 / 3.0).epsilon(1e-13));
  CHECK(exact_moment_derivative(ifs, 2, kRatio1, 0) == exact_moment(ifs, 2));
}

TEST_CASE("moment derivatives match finite differences of the recursion") {
  auto ifs = make_two_map(0.5, 1.2);
  const double h = 1e-6;
  for (int k : {1, 2, 3}) {
    for (auto dir : {kRatio1, kRatio2, kTrans1}) {
      auto bump = [&](double eps) {
        auto maps = ifs.maps;
        if (dir.kind == ParamDirection::Kind::Ratio)
          maps[std::size_t(dir.index)].ratio += eps;
        else
          maps[std::size_t(dir.index)].translation += eps;
        return exact_moment(validate_ifs(maps, ifs.probs), k);
      };
      const double fd = (bump(h) - bump(-h)) / (2.0 * h);
      const double an = exact_moment_derivative(ifs, k, dir, 1);
      CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
    }
  }
  // second order, one spot check against a 3-point stencil
  auto bump2 = [&](double eps) {
    auto maps = ifs.maps;
    maps[0].ratio += eps;
    return exact_moment(validate_ifs(maps, ifs.probs), 2);
  };
  const double h2 = 1e-4;
  const double fd2 = (bump2(h2) - 2.0 * bump2(0.0) + bump2(-h2)) / (h2 * h2);
  CHECK(exact_moment_derivative(ifs, 2, kRatio1, 2) ==
        doctest::Approx(fd2).epsilon(1e-5));
}

TEST_CASE("weighted products") {
  auto ifs = make_two_map(0.5, 1.2);
  // no weight: ((l1+l2)/2)^m
  CHECK(expected_weighted_product(ifs, 3, 0) == doctest::Approx(std::pow(0.85, 3)).epsilon(1e-14));
  // m=2, j=1: (1/4) * 0.5 * 1.7 * C(2,1)
  CHECK(expected_weighted_product(ifs, 2, 1) == doctest::Approx(0.425).epsilon(1e-14));
  CHECK(expected_weighted_product(ifs, 2, 3) == 0.0);

  // enumeration oracle: sum over all 2^m words of L_m C(o(m), j) / 2^m
  for (int m : {2, 5, 9}) {
    for (int j = 0; j <= m; ++j) {
      double acc = 0.0;
      for (int w = 0; w < (1 << m); ++w) {
        double lam = 1.0;
        int ones = 0;
        for (int i = 0; i < m; ++i) {
          const int s = (w >> i) & 1;
          lam *= s == 0 ? 0.5 : 1.2;
          ones += s == 0;
        }
        double binom = 1.0;
        for (int t = 1; t <= j; ++t) binom = binom * double(ones - j + t) / double(t);
        if (j > ones) binom = 0.0;
        acc += lam * binom;
      }
      acc /= double(1 << m);
      CHECK(expected_weighted_product(ifs, m, j) == doctest::Approx(acc).epsilon(1e-12));
    }
  }

  auto kmap = validate_ifs({{0.3, 1.0}, {0.5, 2.0}, {0.8, 0.5}}, {0.5, 0.3, 0.2});
  CHECK_THROWS_AS(expected_weighted_product(kmap, 2, 1), Error);
}

TEST_CASE("expected formal derivative") {
  auto ifs = make_two_map(0.5, 1.2);
  CHECK(expected_formal_derivative(ifs, 1) == doctest::Approx(200.0 / 9.0).epsilon(1e-14));
  // the two oracles must agree at first order
  CHECK(expected_formal_derivative(ifs, 1) ==
        doctest::Approx(exact_moment_derivative(ifs, 1, kRatio1, 1)).epsilon(1e-13));
  // geometric-series oracle at higher order: sum_m E[L_m C(o(m), j)] * j!/l1^j
  for (int j : {2, 3}) {
    double acc = 0.0;
    for (int m = j; m < 4000; ++m) acc += expected_weighted_product(ifs, m, j);
    double jf = 1.0;
    for (int i = 2; i <= j; ++i) jf *= i;
    acc *= jf / std::pow(0.5, j);
    CHECK(expected_formal_derivative(ifs, j) == doctest::Approx(acc).epsilon(1e-10));
  }

  auto div = make_two_map(0.9, 1.2);  // (0.9+1.2)/2 > 1
  CHECK_THROWS_AS(expected_formal_derivative(div, 1), Error);
}

TEST_CASE("binomial identity") {
  // j=2, t=1: lhs = 2 l1 + 2 l2 = rhs
  auto [l, r] = binomial_identity(2, 1, 0.7, 1.9);
  CHECK(l == doctest::Approx(2.0 * (0.7 + 1.9)).epsilon(1e-15));
  CHECK(r == doctest::Approx(l).epsilon(1e-15));

  // t=0 is the plain binomial theorem
  auto [l0, r0] = binomial_identity(7, 0, 0.3, 1.7);
  CHECK(l0 == doctest::Approx(std::pow(2.0, 7)).epsilon(1e-13));
  CHECK(r0 == doctest::Approx(l0).epsilon(1e-13));

  auto [l20, r20] = binomial_identity(20, 7, 0.3, 1.7);
  CHECK(std::abs(l20 - r20) <= 1e-10 * std::abs(r20));

  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    const double l1 = u(gen), l2 = u(gen);
    for (int j = 0; j <= 40; j += 5) {
      for (int t = 0; t <= j; t += 3) {
        auto [lhs, rhs] = binomial_identity(j, t, l1, l2);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
      }
    }
  }
}
