#include "eraselab/diffusion/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "eraselab/errors.hpp"

namespace eraselab::diffusion {

std::vector<double> ancestral_sample(const DenoiserModel& model, std::span<const double> concept_embedding,
                                     numerics::Rng& rng) {
  return sample_batch(model, concept_embedding, 1, rng);
}

std::vector<double> sample_batch(const DenoiserModel& model, std::span<const double> concept_embedding,
                                 std::size_t n, numerics::Rng& rng) {
  const auto& s = model.schedule();
  const std::size_t d = model.arch().data_dim;
  require(concept_embedding.size() == model.arch().embed_dim, ErrorKind::Input,
          "sampling: embedding length differs from embed_dim");
  if (n == 0) return {};
  std::vector<double> x = rng.normal_vector(n * d);
  for (std::size_t t = s.steps(); t-- > 0;) {
    const auto eps = model.predict(x, n, t, concept_embedding);
    const double coef = s.beta[t] / std::sqrt(1.0 - s.alpha_bar[t]);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha[t]);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = inv_sqrt_alpha * (x[i] - coef * eps[i]);
    if (t > 0) {
      const double var = s.beta[t] * (1.0 - s.alpha_bar[t - 1]) / (1.0 - s.alpha_bar[t]);
      const double sigma = std::sqrt(var);
      for (double& xi : x) xi += sigma * rng.normal();
    }
    if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); }))
      fail(ErrorKind::Sampling, "non-finite sampler state at step " + std::to_string(t));
  }
  return x;
}

}  // namespace eraselab::diffusion
