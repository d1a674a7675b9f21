#include <cmath>

#include "doctest.h"
#include "ifslr/path.hpp"

using namespace ifslr;

namespace {
const ParamDirection kRatio1{ParamDirection::Kind::Ratio, 0};
const ParamDirection kTrans1{ParamDirection::Kind::Translation, 0};
}  // namespace

TEST_CASE("equal ratios make the truncated series deterministic") {
  // built directly: equal maps would be rejected as sharing a fixed point
  ProbabilisticIFS unit{{{0.5, 1.0}, {0.5, 1.0}}, {0.5, 0.5}};
  auto path = sample_path(unit, 10, 123, 0);
  // x_10 = sum_{m=0}^{9} 2^-m = 2 - 2^-9, L_10 = 2^-10 for every word
  CHECK(path.x_n == doctest::Approx(2.0 - std::pow(2.0, -9.0)).epsilon(1e-15));
  CHECK(path.partial_products.back() == doctest::Approx(std::pow(2.0, -10.0)).epsilon(1e-15));
}

TEST_CASE("path invariants") {
  auto ifs = make_two_map(0.5, 1.2);
  auto path = sample_path(ifs, 64, 99, 5);
  REQUIRE(path.symbols.size() == 64);
  REQUIRE(path.partial_products.size() == 65);
  CHECK(path.partial_products[0] == 1.0);
  double x = 0.0;
  int ones = 0;
  for (int m = 0; m < 64; ++m) {
    const auto s = path.symbols[std::size_t(m)];
    CHECK(path.partial_products[std::size_t(m) + 1] ==
          doctest::Approx(path.partial_products[std::size_t(m)] * ifs.ratio(s)).epsilon(1e-15));
    x += ifs.translation(s) * path.partial_products[std::size_t(m)];
    ones += s == 0;
    CHECK(path.one_counts[std::size_t(m) + 1] == ones);
    CHECK(path.one_counts[std::size_t(m) + 1] <= m + 1);
  }
  CHECK(path.x_n == doctest::Approx(x).epsilon(1e-15));
}

TEST_CASE("replica reconstruction is bit exact") {
  auto ifs = make_two_map(0.5, 1.2);
  auto a = sample_path(ifs, 200, 4242, 7);
  auto b = sample_path(ifs, 200, 4242, 7);
  CHECK(a.symbols == b.symbols);
  CHECK(a.x_n == b.x_n);
  CHECK(a.partial_products == b.partial_products);
}

TEST_CASE("monotone truncation in depth") {
  auto ifs = make_two_map(0.5, 1.2);
  double prev = 0.0;
  for (int n : {1, 2, 4, 8, 16, 32, 64, 128}) {
    auto path = sample_path(ifs, n, 31, 3);
    CHECK(path.x_n >= prev);
    prev = path.x_n;
  }
}

TEST_CASE("series decomposition x_{n+m} = x_n + L_n * shifted x_m") {
  auto ifs = make_two_map(0.5, 1.2);
  auto path = sample_path(ifs, 96, 5150, 11);
  for (int n : {1, 7, 32, 64}) {
    const int m = 96 - n;
    const std::span<const uint8_t> all(path.symbols);
    double head = 0.0, lam = 1.0;
    for (int i = 0; i < n; ++i) {
      head += ifs.translation(all[std::size_t(i)]) * lam;
      lam *= ifs.ratio(all[std::size_t(i)]);
    }
    double shifted = 0.0, lam2 = 1.0;
    for (int i = 0; i < m; ++i) {
      shifted += ifs.translation(all[std::size_t(n + i)]) * lam2;
      lam2 *= ifs.ratio(all[std::size_t(n + i)]);
    }
    CHECK(path.x_n == doctest::Approx(head + lam * shifted).epsilon(1e-12));
    CHECK(lam == doctest::Approx(path.partial_products[std::size_t(n)]).epsilon(1e-15));
  }
}

TEST_CASE("eval_series at zero reproduces the path bit for bit") {
  auto ifs = make_two_map(0.5, 1.2);
  auto path = sample_path(ifs, 150, 808, 2);
  CHECK(eval_series(path, ifs, 0.0, kRatio1) == path.x_n);
  CHECK(eval_series(path, ifs, 0.0, kTrans1) == path.x_n);
}

TEST_CASE("eval_series hand expansions") {
  // all-ones word, ratio direction, eps = 0.1 on lambda_1 = 0.5:
  // 1 + 0.6 + 0.36 over three terms
  ProbabilisticIFS unit{{{0.5, 1.0}, {0.5, 1.0}}, {0.5, 0.5}};
  const uint8_t word111[3] = {0, 0, 0};
  CHECK(eval_series(std::span<const uint8_t>(word111, 3), unit, 0.1, kRatio1) ==
        doctest::Approx(1.0 + 0.6 + 0.36).epsilon(1e-15));

  // translation direction: word (1,2) with d_1 moved by 0.5:
  // d_1(eps) + L_1 d_2 = 1.5 + 0.5
  auto ifs = make_two_map(0.5, 1.2);
  const uint8_t word12[2] = {0, 1};
  CHECK(eval_series(std::span<const uint8_t>(word12, 2), ifs, 0.5, kTrans1) ==
        doctest::Approx(1.5 + 0.5).epsilon(1e-15));
}

TEST_CASE("inadmissible perturbations are rejected") {
  auto ifs = make_two_map(0.5, 1.2);
  // lambda_1 + eps <= 0
  CHECK_THROWS_AS(eval_series(sample_path(ifs, 4, 1, 0), ifs, -0.5, kRatio1), Error);
  // perturbed system no longer contracting on average: 1/lambda_2 = 5/6
  CHECK_THROWS_AS(check_perturbation(ifs, 1.0 / 1.2 - 0.5 + 1e-6, kRatio1), Error);
  CHECK_NOTHROW(check_perturbation(ifs, 1.0 / 1.2 - 0.5 - 1e-6, kRatio1));
  // translations are always admissible
  CHECK_NOTHROW(check_perturbation(ifs, 1e9, kTrans1));
}

TEST_CASE("formal derivatives: hand cases") {
  ProbabilisticIFS unit{{{0.5, 1.0}, {0.5, 1.0}}, {0.5, 0.5}};
  // never the perturbed symbol: all orders vanish
  const uint8_t all2[5] = {1, 1, 1, 1, 1};
  auto d = eval_formal_derivatives(std::span<const uint8_t>(all2, 5), unit, 3, kRatio1);
  for (double v : d.values) CHECK(v == 0.0);

  // three-term all-ones word: (1/0.5)(L_1 * 1 + L_2 * 2) = 2(0.5 + 0.5) = 2
  const uint8_t ones3[3] = {0, 0, 0};
  auto d1 = eval_formal_derivatives(std::span<const uint8_t>(ones3, 3), unit, 1, kRatio1);
  CHECK(d1.values[0] == doctest::Approx(2.0).epsilon(1e-15));

  // translation direction: order one is the indicator sum, higher orders zero
  auto ifs = make_two_map(0.5, 1.2);
  const uint8_t word121[3] = {0, 1, 0};
  auto dt = eval_formal_derivatives(std::span<const uint8_t>(word121, 3), ifs, 3, kTrans1);
  CHECK(dt.values[0] == doctest::Approx(1.0 + 0.5 * 1.2).epsilon(1e-15));
  CHECK(dt.values[1] == 0.0);
  CHECK(dt.values[2] == 0.0);
}

TEST_CASE("derivatives are nonnegative with positive translations") {
  auto ifs = make_two_map(0.5, 1.2);
  for (uint64_t rep = 0; rep < 50; ++rep) {
    auto path = sample_path(ifs, 80, 6, rep);
    auto d = eval_formal_derivatives(path, ifs, 4, kRatio1);
    for (double v : d.values) CHECK(v >= 0.0);
  }
}

TEST_CASE("difference quotients converge to the formal derivative") {
  auto ifs = make_two_map(0.5, 1.2);
  for (auto dir : {kRatio1, kTrans1, ParamDirection{ParamDirection::Kind::Ratio, 1}}) {
    auto path = sample_path(ifs, 120, 17, 9);
    const double d1 = eval_formal_derivatives(path, ifs, 1, dir).values[0];
    double err_prev = -1.0;
    int improving = 0;
    for (double eps : {1e-3, 1e-4, 1e-5}) {
      const double quot =
          (eval_series(path, ifs, eps, dir) - eval_series(path, ifs, 0.0, dir)) / eps;
      const double err = std::abs(quot - d1);
      if (err_prev >= 0.0 && err <= err_prev * 0.2) ++improving;  // order >= 1 in eps
      err_prev = err;
    }
    CHECK(improving == 2);
  }
}
