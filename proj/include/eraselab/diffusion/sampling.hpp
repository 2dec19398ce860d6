#pragma once

#include <span>
#include <vector>

#include "eraselab/diffusion/denoiser.hpp"
#include "eraselab/numerics/random.hpp"

namespace eraselab::diffusion {

// DDPM ancestral sampling with the posterior variance
// beta_t (1 - alpha_bar[t-1]) / (1 - alpha_bar[t]). Starts from N(0, I) at
// the last step. Throws Error(Sampling) if the state becomes non-finite.
std::vector<double> ancestral_sample(const DenoiserModel& model, std::span<const double> concept_embedding,
                                     numerics::Rng& rng);

// n independent chains advanced together; row-major [n x data_dim].
// Identical (model, embedding, rng state) give identical output.
std::vector<double> sample_batch(const DenoiserModel& model, std::span<const double> concept_embedding,
                                 std::size_t n, numerics::Rng& rng);

}  // namespace eraselab::diffusion
