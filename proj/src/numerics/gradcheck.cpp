#include "eraselab/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "eraselab/errors.hpp"

namespace eraselab::numerics {

double finite_difference_check(const DifferentiableFn& f, std::span<const double> point,
                               double step) {
  require(step > 0.0, ErrorKind::Parameter, "finite_difference_check: step must be positive");
  const auto analytic = f(point);
  require(std::isfinite(analytic.value), ErrorKind::Input, "finite_difference_check: f is not finite");
  require(analytic.gradient.size() == point.size(), ErrorKind::Input,
          "finite_difference_check: gradient length differs from point");

  std::vector<double> probe(point.begin(), point.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double x = probe[i];
    probe[i] = x + step;
    const double up = f(probe).value;
    probe[i] = x - step;
    const double down = f(probe).value;
    probe[i] = x;
    require(std::isfinite(up) && std::isfinite(down), ErrorKind::Input,
            "finite_difference_check: f is not finite at a probe point");
    const double fd = (up - down) / (2.0 * step);
    worst = std::max(worst, std::abs(analytic.gradient[i] - fd) / std::max(1e-8, std::abs(fd)));
  }
  return worst;
}

}  // namespace eraselab::numerics
