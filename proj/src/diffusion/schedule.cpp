#include "eraselab/diffusion/schedule.hpp"

#include <cmath>
#include <string>

#include "eraselab/errors.hpp"

namespace eraselab::diffusion {

NoiseSchedule make_schedule(std::size_t steps, double beta_start, double beta_end) {
  require(steps >= 2, ErrorKind::Parameter, "noise schedule needs at least 2 steps");
  require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0, ErrorKind::Parameter,
          "noise schedule needs 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.beta.resize(steps);
  s.alpha.resize(steps);
  s.alpha_bar.resize(steps);
  double running = 1.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const double frac = static_cast<double>(t) / static_cast<double>(steps - 1);
    s.beta[t] = beta_start + (beta_end - beta_start) * frac;
    s.alpha[t] = 1.0 - s.beta[t];
    running *= s.alpha[t];
    s.alpha_bar[t] = running;
  }
  return s;
}

std::vector<double> q_sample(std::span<const double> x0, std::size_t t, std::span<const double> eps,
                             const NoiseSchedule& schedule) {
  require(t < schedule.steps(), ErrorKind::Parameter,
          "timestep " + std::to_string(t) + " outside schedule of " + std::to_string(schedule.steps()));
  require(x0.size() == eps.size(), ErrorKind::Input, "q_sample: x0 and eps differ in length");
  const double a = std::sqrt(schedule.alpha_bar[t]);
  const double b = std::sqrt(1.0 - schedule.alpha_bar[t]);
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * eps[i];
  return out;
}

}  // namespace eraselab::diffusion
