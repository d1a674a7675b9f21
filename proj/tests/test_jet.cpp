#include <cmath>

#include "doctest.h"
#include "ifslr/jet.hpp"

using namespace ifslr;

TEST_CASE("jet arithmetic reproduces known derivatives") {
  // f(x) = exp(x^2) at x = 0.4: f' = 2x f, f'' = (2 + 4x^2) f
  const double x0 = 0.4;
  Jet x = Jet::variable(x0, 4);
  Jet f = exp(x * x);
  const double fx = std::exp(x0 * x0);
  CHECK(f.derivative(0) == doctest::Approx(fx).epsilon(1e-14));
  CHECK(f.derivative(1) == doctest::Approx(2.0 * x0 * fx).epsilon(1e-13));
  CHECK(f.derivative(2) == doctest::Approx((2.0 + 4.0 * x0 * x0) * fx).epsilon(1e-13));

  // quotient: g = 1/(1+x), g^(k) = (-1)^k k! (1+x)^{-k-1}
  Jet g = Jet::constant(1.0, 4) / (Jet::constant(1.0, 4) + x);
  for (int k = 0; k <= 4; ++k) {
    double expect = std::pow(-1.0, k) * std::pow(1.0 + x0, -k - 1.0);
    for (int i = 2; i <= k; ++i) expect *= i;
    CHECK(g.derivative(k) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("smooth ramp endpoints and symmetry") {
  CHECK(smooth_ramp_value(-1.0) == 0.0);
  CHECK(smooth_ramp_value(0.0) == 0.0);
  CHECK(smooth_ramp_value(1.0) == 1.0);
  CHECK(smooth_ramp_value(2.0) == 1.0);
  CHECK(smooth_ramp_value(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  for (double t : {0.1, 0.3, 0.45}) {
    CHECK(smooth_ramp_value(t) + smooth_ramp_value(1.0 - t) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(smooth_ramp_value(t) > 0.0);
    CHECK(smooth_ramp_value(t) < 1.0);
  }
}

TEST_CASE("ramp jet matches finite differences") {
  for (double t0 : {0.2, 0.5, 0.8}) {
    Jet t = Jet::variable(t0, 3);
    Jet s = smooth_ramp(t);
    const double h = 1e-5;
    const double d1 = (smooth_ramp_value(t0 + h) - smooth_ramp_value(t0 - h)) / (2.0 * h);
    const double d2 =
        (smooth_ramp_value(t0 + h) - 2.0 * smooth_ramp_value(t0) + smooth_ramp_value(t0 - h)) /
        (h * h);
    CHECK(s.derivative(1) == doctest::Approx(d1).epsilon(1e-8));
    CHECK(s.derivative(2) == doctest::Approx(d2).epsilon(1e-5));
  }
  // outside the ramp every derivative vanishes
  Jet flat = smooth_ramp(Jet::variable(1.5, 5));
  CHECK(flat.derivative(0) == 1.0);
  for (int k = 1; k <= 5; ++k) CHECK(flat.derivative(k) == 0.0);
}

TEST_CASE("ramp integral") {
  CHECK(smooth_ramp_integral(0.0) == 0.0);
  CHECK(smooth_ramp_integral(1.0) == doctest::Approx(0.5).epsilon(1e-14));
  // symmetry: int_0^u s + int_0^{1-u} s = u - ... direct check against
  // trapezoid refinement
  for (double u : {0.3, 0.6, 0.9}) {
    double acc = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double a = u * double(i) / n, b = u * double(i + 1) / n;
      acc += 0.5 * (smooth_ramp_value(a) + smooth_ramp_value(b)) * (b - a);
    }
    CHECK(smooth_ramp_integral(u) == doctest::Approx(acc).epsilon(1e-9));
  }
  // monotone in u
  double prev = 0.0;
  for (double u = 0.05; u <= 1.0; u += 0.05) {
    const double cur = smooth_ramp_integral(u);
    CHECK(cur >= prev);
    prev = cur;
  }
}
