#pragma once

#include <functional>
#include <span>
#include <vector>

namespace eraselab::numerics {

struct ValueAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

using DifferentiableFn = std::function<ValueAndGradient(std::span<const double>)>;

// Max over coordinates of |analytic - central difference| / max(1e-8, |central difference|).
// Throws Error(Input) if f is non-finite at any probe point.
double finite_difference_check(const DifferentiableFn& f, std::span<const double> point,
                               double step);

}  // namespace eraselab::numerics
