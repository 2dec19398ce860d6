#include "eraselab/diffusion/training.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "eraselab/errors.hpp"
#include "eraselab/numerics/optim.hpp"

namespace eraselab::diffusion {

using concepts::ConceptId;
using numerics::Tensor;

std::size_t TrainingConfig::budget_for(const concepts::ConceptRecord& record) const {
  if (record.is_null || record.synonym_of) return 0;
  if (record.abnormal)
    return static_cast<std::size_t>(std::lround(abnormal_budget_fraction * static_cast<double>(samples_per_concept)));
  return samples_per_concept;
}

TrainingResult train_base_model(const concepts::ConceptSpace& space, const DenoiserArch& arch,
                                const NoiseSchedule& schedule, const TrainingConfig& config,
                                std::uint64_t seed) {
  require(arch.data_dim == space.data_dim() && arch.embed_dim == space.embed_dim(), ErrorKind::Input,
          "denoiser dimensions do not match the concept space");
  require(config.batch_size >= 1, ErrorKind::Parameter, "batch_size must be positive");
  require(config.learning_rate >= 0.0, ErrorKind::Parameter, "learning_rate must be non-negative");
  require(config.null_fraction >= 0.0 && config.null_fraction <= 1.0, ErrorKind::Parameter,
          "null_fraction must lie in [0, 1]");
  require(config.abnormal_budget_fraction >= 0.0 && config.abnormal_budget_fraction <= 1.0,
          ErrorKind::Parameter, "abnormal_budget_fraction must lie in [0, 1]");
  require(config.abnormal_label_noise >= 0.0 && config.abnormal_label_noise <= 1.0, ErrorKind::Parameter,
          "abnormal_label_noise must lie in [0, 1]");

  TrainingResult result{DenoiserModel::initialize(arch, schedule, seed), {}};
  if (config.steps == 0) return result;

  // Fixed dataset: (concept, point) pairs, budget per named concept.
  const std::size_t d = space.data_dim();
  std::vector<ConceptId> owners;
  std::vector<double> points;
  auto data_rng = numerics::Rng::substream(seed, 11);
  const auto named = space.named_concepts();
  for (const auto& r : space.records()) {
    const std::size_t budget = config.budget_for(r);
    if (budget == 0) continue;
    std::size_t noisy = 0;
    if (r.abnormal)
      noisy = static_cast<std::size_t>(std::lround(config.abnormal_label_noise * static_cast<double>(budget)));
    const auto pts = concepts::sample_data(space, r.id, budget - noisy, data_rng);
    points.insert(points.end(), pts.begin(), pts.end());
    for (std::size_t i = 0; i < noisy; ++i) {
      ConceptId other = r.id;
      while (other == r.id) other = named[data_rng.uniform_index(named.size())];
      const auto p = concepts::sample_data(space, other, 1, data_rng);
      points.insert(points.end(), p.begin(), p.end());
    }
    owners.insert(owners.end(), budget, r.id);
  }
  require(!owners.empty(), ErrorKind::Parameter, "training set is empty");

  auto& model = result.model;
  numerics::Adam adam(model.parameters(), {config.learning_rate});
  auto rng = numerics::Rng::substream(seed, 12);
  const std::size_t B = config.batch_size;
  const auto null_emb = space.embedding_of(space.null_id());
  result.loss_trace.reserve(config.steps);

  for (std::size_t step = 0; step < config.steps; ++step) {
    const double progress = static_cast<double>(step) / static_cast<double>(config.steps);
    const double floor = config.final_lr_fraction;
    adam.set_learning_rate(config.learning_rate *
                           (floor + (1.0 - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress))));

    std::vector<double> x_t(B * d), eps(B * d), emb;
    std::vector<std::size_t> ts(B);
    emb.reserve(B * space.embed_dim());
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t row = rng.uniform_index(owners.size());
      const bool null_row = rng.uniform_open() < config.null_fraction;
      const auto e = null_row ? null_emb : space.embedding_of(owners[row]);
      emb.insert(emb.end(), e.begin(), e.end());
      ts[b] = rng.uniform_index(schedule.steps());
      const double a = std::sqrt(schedule.alpha_bar[ts[b]]);
      const double s = std::sqrt(1.0 - schedule.alpha_bar[ts[b]]);
      for (std::size_t j = 0; j < d; ++j) {
        eps[b * d + j] = rng.normal();
        x_t[b * d + j] = a * points[row * d + j] + s * eps[b * d + j];
      }
    }
    numerics::Tape tape;
    try {
      const auto pred = model.forward(tape, Tensor::constant({B, d}, std::move(x_t)), ts,
                                      Tensor::constant({B, space.embed_dim()}, std::move(emb)));
      const auto loss = numerics::mse(tape, pred, Tensor::constant({B, d}, std::move(eps)));
      tape.backward(loss);
      result.loss_trace.push_back(loss.item());
    } catch (const Error& e) {
      fail(ErrorKind::Training, "training diverged at step " + std::to_string(step) + ": " + e.what());
    }
    adam.step();
  }
  return result;
}

std::pair<double, double> smoothed_endpoints(const std::vector<double>& trace, std::size_t window) {
  require(!trace.empty() && window >= 1, ErrorKind::Input, "smoothed_endpoints: empty trace");
  window = std::min(window, trace.size());
  const double head = std::accumulate(trace.begin(), trace.begin() + static_cast<std::ptrdiff_t>(window), 0.0);
  const double tail = std::accumulate(trace.end() - static_cast<std::ptrdiff_t>(window), trace.end(), 0.0);
  return {head / static_cast<double>(window), tail / static_cast<double>(window)};
}

}  // namespace eraselab::diffusion
