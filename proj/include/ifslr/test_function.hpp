#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ifslr/ifs.hpp"

namespace ifslr {

// A smooth observable with evaluable derivatives up to a declared order.
class TestFunction {
 public:
  virtual ~TestFunction() = default;

  virtual double value(double x) const = 0;
  // k = 0 returns the value; 1 <= k <= max_derivative_order() otherwise.
  virtual double derivative(double x, int k) const = 0;
  virtual int max_derivative_order() const = 0;
  virtual std::string describe() const = 0;

  // Empty when the response formula at this derivative order is covered for
  // the given system; otherwise a description of the violated condition.
  virtual std::string regime_violation(const ProbabilisticIFS& ifs, int response_order) const = 0;
};

// C^inf, == 1 on [center - inner, center + inner], == 0 outside
// [center - outer, center + outer].
std::unique_ptr<TestFunction> make_smooth_bump(double center, double inner_radius,
                                               double outer_radius);

// phi(x) = x^t on x >= 1 (guaranteed in the unit-translation normalization).
std::unique_ptr<TestFunction> make_power_moment(double t);

// phi(x) = x^r below cap_x0, then continued with a polynomial-ramp r-th
// derivative that decays to 0 over [cap_x0, 2 cap_x0]; phi^(r) stays bounded
// by r! while values below the cap are untouched. C^{r+2} overall.
std::unique_ptr<TestFunction> make_capped_polynomial(int r, double cap_x0);

// Fixed reference point for the capped polynomial: 10 E[X].
double default_cap(const ProbabilisticIFS& ifs);

}  // namespace ifslr
