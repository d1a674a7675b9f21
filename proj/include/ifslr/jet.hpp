#pragma once

#include <array>
#include <cmath>

namespace ifslr {

// Truncated Taylor series at a point: c[k] is the k-th coefficient, so the
// k-th derivative is k! * c[k]. Enough orders for the response formulas.
struct Jet {
  static constexpr int kMaxOrder = 9;
  std::array<double, kMaxOrder + 1> c{};
  int order = 0;

  static Jet constant(double v, int ord) {
    Jet j;
    j.order = ord;
    j.c[0] = v;
    return j;
  }
  static Jet variable(double x, int ord) {
    Jet j = constant(x, ord);
    if (ord >= 1) j.c[1] = 1.0;
    return j;
  }

  double value() const { return c[0]; }
  double derivative(int k) const {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f * c[std::size_t(k)];
  }
};

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r = a;
  for (int k = 0; k <= a.order; ++k) r.c[std::size_t(k)] += b.c[std::size_t(k)];
  return r;
}

inline Jet operator-(const Jet& a, const Jet& b) {
  Jet r = a;
  for (int k = 0; k <= a.order; ++k) r.c[std::size_t(k)] -= b.c[std::size_t(k)];
  return r;
}

inline Jet operator*(const Jet& a, double s) {
  Jet r = a;
  for (int k = 0; k <= a.order; ++k) r.c[std::size_t(k)] *= s;
  return r;
}

inline Jet operator*(double s, const Jet& a) { return a * s; }

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r = Jet::constant(0.0, a.order);
  for (int k = 0; k <= a.order; ++k) {
    double acc = 0.0;
    for (int i = 0; i <= k; ++i) acc += a.c[std::size_t(i)] * b.c[std::size_t(k - i)];
    r.c[std::size_t(k)] = acc;
  }
  return r;
}

inline Jet operator/(const Jet& a, const Jet& b) {
  Jet q = Jet::constant(0.0, a.order);
  for (int k = 0; k <= a.order; ++k) {
    double acc = a.c[std::size_t(k)];
    for (int i = 0; i < k; ++i) acc -= q.c[std::size_t(i)] * b.c[std::size_t(k - i)];
    q.c[std::size_t(k)] = acc / b.c[0];
  }
  return q;
}

// exp via e_k = (1/k) sum_{i=1..k} i a_i e_{k-i}.
inline Jet exp(const Jet& a) {
  Jet e = Jet::constant(0.0, a.order);
  e.c[0] = std::exp(a.c[0]);
  for (int k = 1; k <= a.order; ++k) {
    double acc = 0.0;
    for (int i = 1; i <= k; ++i) acc += double(i) * a.c[std::size_t(i)] * e.c[std::size_t(k - i)];
    e.c[std::size_t(k)] = acc / double(k);
  }
  return e;
}

// The standard C^inf ramp s(t) = f(t) / (f(t) + f(1-t)) with f(t) = e^{-1/t}
// for t > 0, extended by 0 and 1 off [0, 1]. All derivatives vanish at both
// endpoints.
inline Jet smooth_ramp(const Jet& t) {
  if (t.c[0] <= 0.0) return Jet::constant(0.0, t.order);
  if (t.c[0] >= 1.0) return Jet::constant(1.0, t.order);
  const Jet one = Jet::constant(1.0, t.order);
  const Jet ft = exp(Jet::constant(0.0, t.order) - one / t);
  const Jet fs = exp(Jet::constant(0.0, t.order) - one / (one - t));
  return ft / (ft + fs);
}

inline double smooth_ramp_value(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

// int_0^u s(t) dt for u in [0, 1]; fixed Gauss-Legendre panel, exact enough
// for double accuracy. By symmetry the full integral is 1/2.
double smooth_ramp_integral(double u);

}  // namespace ifslr
