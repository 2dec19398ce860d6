#pragma once

#include <cstdint>
#include <vector>

#include "eraselab/concepts/concept_space.hpp"
#include "eraselab/diffusion/denoiser.hpp"

namespace eraselab::diffusion {

struct TrainingConfig {
  std::size_t steps = 12000;
  std::size_t batch_size = 64;
  double learning_rate = 2e-3;
  // Cosine decay from learning_rate down to learning_rate * final_lr_fraction.
  double final_lr_fraction = 0.05;
  // Ground-truth points drawn once per named concept.
  std::size_t samples_per_concept = 500;
  // The abnormal concept gets this fraction of samples_per_concept.
  double abnormal_budget_fraction = 0.1;
  // Fraction of the abnormal concept's points taken from other named
  // concepts' modes instead of its own (mislabelled examples).
  double abnormal_label_noise = 0.5;
  // Fraction of batch rows conditioned on the null concept; their points are
  // drawn uniformly from the pooled training set.
  double null_fraction = 0.15;

  std::size_t budget_for(const concepts::ConceptRecord& record) const;
};

struct TrainingResult {
  DenoiserModel model;
  std::vector<double> loss_trace;  // one entry per step
};

// Minimizes E ||eps - eps_theta(sqrt(ab_t) x0 + sqrt(1 - ab_t) eps, t, tau(c))||^2
// over a fixed per-concept dataset, uniform t and Gaussian eps.
// Throws Error(Training) naming the step if the loss stops being finite.
TrainingResult train_base_model(const concepts::ConceptSpace& space, const DenoiserArch& arch,
                                const NoiseSchedule& schedule, const TrainingConfig& config,
                                std::uint64_t seed);

// Mean of the first and last `window` entries of a loss trace.
std::pair<double, double> smoothed_endpoints(const std::vector<double>& trace, std::size_t window);

}  // namespace eraselab::diffusion
