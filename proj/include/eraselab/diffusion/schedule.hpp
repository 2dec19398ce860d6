#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace eraselab::diffusion {

struct NoiseSchedule {
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::vector<double> beta;
  std::vector<double> alpha;      // 1 - beta
  std::vector<double> alpha_bar;  // running product of alpha

  std::size_t steps() const noexcept { return beta.size(); }
};

// Linear beta from beta_start to beta_end over T steps.
// Requires T >= 2 and 0 < beta_start <= beta_end < 1.
NoiseSchedule make_schedule(std::size_t steps, double beta_start, double beta_end);

// sqrt(alpha_bar[t]) * x0 + sqrt(1 - alpha_bar[t]) * eps
std::vector<double> q_sample(std::span<const double> x0, std::size_t t, std::span<const double> eps,
                             const NoiseSchedule& schedule);

}  // namespace eraselab::diffusion
