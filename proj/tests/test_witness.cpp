#include <cmath>

#include "doctest.h"
#include "ifslr/witness.hpp"

using namespace ifslr;

TEST_CASE("regime detection") {
  // the large-ratio instance satisfies the log2 condition
  const auto b = detect_regime(make_two_map(1.0 / 11.0, 10.0));
  CHECK(b.regime_b);
  CHECK(b.kappa == doctest::Approx(0.5 * (std::log(10.0) / std::log(11.0) +
                                          std::log2(10.0) - 1.0)).epsilon(1e-12));
  CHECK(b.rho_b == doctest::Approx(10.0 * std::pow(1.0 / 11.0, b.kappa)).epsilon(1e-12));
  CHECK(b.rho_b < 1.0);
  CHECK(10.0 > std::pow(2.0, 1.0 + b.kappa));

  // l1 l2 = 0.2 < 1/4
  const auto a = detect_regime(make_two_map(0.1, 2.0));
  CHECK(a.regime_a);
  CHECK(a.rho_a > std::sqrt(0.2));
  CHECK(a.rho_a < 0.5);
  CHECK(a.delta_a > 0.0);

  // neither: 0.9 >= 1/4 and log2(1.5) < 1 + log_{1/0.6}(1.5)
  const auto none = detect_regime(make_two_map(0.6, 1.5));
  CHECK_FALSE(none.regime_a);
  CHECK_FALSE(none.regime_b);

  CHECK_THROWS_AS(detect_regime(validate_ifs({{0.5, 2.0}, {1.2, 3.0}}, {0.5, 0.5})), Error);
}

TEST_CASE("prefix atoms by hand") {
  auto ifs = make_two_map(0.1, 2.0);
  // two symbols: words 11, 12, 21, 22 -> values 1.11, 1.3, 3.2, 7
  const auto atoms = enumerate_prefix_atoms(ifs, 2, 0.0);
  REQUIRE(atoms.values.size() == 4);
  CHECK(atoms.values[0] == doctest::Approx(1.11).epsilon(1e-14));
  CHECK(atoms.values[1] == doctest::Approx(1.3).epsilon(1e-14));
  CHECK(atoms.values[2] == doctest::Approx(3.2).epsilon(1e-14));
  CHECK(atoms.values[3] == doctest::Approx(7.0).epsilon(1e-14));
  for (double p : atoms.probs) CHECK(p == 0.25);
  CHECK(atoms.total_prob == 1.0);

  const auto filtered = enumerate_prefix_atoms(ifs, 2, 3.0);
  REQUIRE(filtered.values.size() == 2);
  CHECK(filtered.values[0] == doctest::Approx(3.2));
  CHECK(filtered.total_prob == 0.5);

  // equal ratios: one atom with full mass, value 2 - 2^-3
  ProbabilisticIFS unit{{{0.5, 1.0}, {0.5, 1.0}}, {0.5, 0.5}};
  const auto single = enumerate_prefix_atoms(unit, 3, 0.0);
  REQUIRE(single.values.size() == 1);
  CHECK(single.values[0] == doctest::Approx(1.875).epsilon(1e-15));
  CHECK(single.total_prob == 1.0);

  CHECK_THROWS_AS(enumerate_prefixes(ifs, 25), Error);
}

TEST_CASE("threshold scan") {
  auto ifs = make_two_map(0.1, 2.0);
  const auto regime = detect_regime(ifs);
  const double r = 2.24;  // close to the measured median of X - 1

  const WitnessA w = find_M(ifs, 10, regime.rho_a, regime.delta_a, r);
  CHECK(w.exact);
  CHECK(w.threshold >= 1);
  // both defining inequalities re-verified on the output
  CHECK(double(w.threshold) * w.p_n >= 1.0 / std::sqrt(10.0));
  CHECK(w.p_n >= 2.0 * w.q_n);
  // every atom clears the threshold
  for (double v : w.atoms.values) CHECK(v >= double(w.threshold));
  // tail probability is monotone: the scan's floor condition only improves
  // as the threshold decreases
  const auto all = enumerate_prefix_atoms(ifs, 10, double(w.threshold) - 1.0);
  CHECK(all.total_prob >= w.p_n);

  // an over-tight scale floor has no feasible threshold
  CHECK_THROWS_AS(find_M(ifs, 4, 0.2, 0.0, r), Error);
}

TEST_CASE("plateau bump geometry") {
  const double centers[3] = {1.0, 1.05, 3.0};
  SmoothPlateauBump bump(centers, 0.1, 0.2);
  // first two centers chain into one block
  REQUIRE(bump.blocks().size() == 2);
  CHECK(bump.support_lo() == doctest::Approx(0.8));
  CHECK(bump.support_hi() == doctest::Approx(3.2));

  // values in [0,1], one on plateaus, zero outside
  CHECK(bump.derivative(1.0, 0) == 1.0);
  CHECK(bump.derivative(1.02, 0) == 1.0);  // filled gap between chained plateaus
  CHECK(bump.derivative(3.05, 0) == 1.0);
  CHECK(bump.derivative(0.5, 0) == 0.0);
  CHECK(bump.derivative(2.0, 0) == 0.0);
  for (double x = 0.5; x <= 3.5; x += 0.01) {
    const double v = bump.derivative(x, 0);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  // integral: nondecreasing, l1 norm below the support measure
  double prev = 0.0;
  for (double x = 0.5; x <= 3.5; x += 0.01) {
    const double v = bump.integral(x);
    CHECK(v >= prev - 1e-15);
    prev = v;
  }
  CHECK(bump.l1_norm() <= bump.support_measure() + 1e-12);
  CHECK(bump.l1_norm() <= 3 * 2 * 0.2 + 1e-12);  // sum of per-center support widths

  // quadrature cross-check of the integral
  double quad = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const double a = 0.5 + 3.0 * double(i) / n, b = 0.5 + 3.0 * double(i + 1) / n;
    quad += 0.5 * (bump.derivative(a, 0) + bump.derivative(b, 0)) * (b - a);
  }
  CHECK(bump.l1_norm() == doctest::Approx(quad).epsilon(1e-6));

  // collapse below floating-point resolution is rejected
  const double far[1] = {1e15};
  CHECK_THROWS_AS(SmoothPlateauBump(far, 1e-9, 2e-9), Error);
}

TEST_CASE("witness construction, expanding regime") {
  auto ifs = make_two_map(1.0 / 11.0, 10.0);
  const auto regime = detect_regime(ifs);
  auto [w, bump] = build_witness_b(ifs, regime, 2, 1.5);
  CHECK(w.kappa_n == int(std::ceil(2.0 * regime.kappa)));
  // closed form: sum of lambda_2 powers plus the decaying tail of the word
  double expect = 1.0 + 10.0 + 100.0;
  double lam = 100.0;
  for (int j = 0; j < w.kappa_n; ++j) {
    lam /= 11.0;
    expect += lam;
  }
  CHECK(w.center == doctest::Approx(expect).epsilon(1e-13));
  CHECK(w.center > std::pow(10.0, 2));
  CHECK(lam < std::pow(regime.rho_b, 2));  // word scale below rho^N
  CHECK(bump.derivative(w.center, 0) == 1.0);
  CHECK(bump.derivative(w.center + 2.5 * w.support_radius, 0) == 0.0);
  CHECK(bump.l1_norm() <= 4.0 * 1.5 * std::pow(regime.rho_b, 2) + 1e-12);
}

TEST_CASE("stratified estimator agrees with the plain one") {
  auto ifs = make_two_map(0.1, 2.0);
  const auto regime = detect_regime(ifs);
  McOptions q;
  q.replicas = 200'000;
  q.truncation = 200;
  q.master_seed = 40;
  const double r = empirical_quantile(ifs, 0.5, -1.0, q);

  auto [w, bump] = build_witness_a(ifs, regime, 10, r);
  HNOptions hn;
  hn.tail_samples = 20'000;
  hn.tail_truncation = 200;
  hn.master_seed = 41;
  const MCEstimate strat = estimate_hN_prime(ifs, bump, 10, hn);

  McOptions plain_opts;
  plain_opts.replicas = 400'000;
  plain_opts.truncation = 210;
  plain_opts.master_seed = 42;
  const MCEstimate plain = estimate_hN_prime_plain(ifs, bump, plain_opts);

  const double combined =
      std::sqrt(strat.std_error * strat.std_error + plain.std_error * plain.std_error);
  CHECK(std::abs(strat.mean - plain.mean) <= 4.0 * combined);
  CHECK(strat.std_error < plain.std_error);  // the prefix layer carries no noise

  // worker count does not change the stratified estimate
  HNOptions hn1 = hn, hn8 = hn;
  hn1.threads = 1;
  hn8.threads = 8;
  CHECK(estimate_hN_prime(ifs, bump, 10, hn1).mean ==
        estimate_hN_prime(ifs, bump, 10, hn8).mean);
}

TEST_CASE("witness family document round trip") {
  auto ifs = make_two_map(0.1, 2.0);
  const auto regime = detect_regime(ifs);
  auto [w, bump] = build_witness_a(ifs, regime, 8, 2.24);
  const std::string text = witness_family_to_json(ifs, regime, 2.24, {&w, 1}, {});
  const WitnessFamilyDoc doc = parse_witness_family(text);
  CHECK(doc.ratios[0] == doctest::Approx(0.1));
  CHECK(doc.median_r == 2.24);
  REQUIRE(doc.a_entries.size() == 1);
  CHECK(doc.a_entries[0].depth == 8);
  CHECK(doc.a_entries[0].threshold == w.threshold);
  CHECK(doc.a_entries[0].atoms.values == w.atoms.values);
  CHECK(doc.a_entries[0].p_n == doctest::Approx(w.p_n));
  CHECK(doc.regime.regime_a);
}

TEST_CASE("supports sit above the threshold line") {
  auto ifs = make_two_map(0.1, 2.0);
  const auto regime = detect_regime(ifs);
  for (int n : {8, 10, 12}) {
    auto [w, bump] = build_witness_a(ifs, regime, n, 2.24);
    CHECK(bump.support_lo() >= double(w.threshold) - w.support_radius - 1e-12);
  }
}
