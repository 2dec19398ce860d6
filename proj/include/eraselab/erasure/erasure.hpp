#pragma once

// Concept erasure by fine-tuning a copy of a frozen denoiser.
//
// Fixed-target erasure pulls the sanitized model's prediction for the erased
// concept onto the frozen model's prediction for a chosen target, while the
// null concept anchors preservation. Adaptive guided erasure replaces the
// fixed target with a Gumbel-Softmax mixture over the erased concept's
// nearest vocabulary, found by gradient ascent on the same objective
// (inner max) before every descent step on the sanitized model (outer min).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "eraselab/concepts/concept_space.hpp"
#include "eraselab/diffusion/denoiser.hpp"
#include "eraselab/numerics/optim.hpp"
#include "eraselab/numerics/random.hpp"
#include "eraselab/numerics/tensor.hpp"

namespace eraselab::erasure {

using concepts::ConceptId;

enum class TargetStrategy { Synonym, InFamily, General, Unrelated, Null, Explicit };

// Which sanitized-model weights the outer step may change. Conditioning
// restricts updates to the first-layer rows that read the concept embedding
// (the analog of cross-attention fine-tuning); All updates every weight.
enum class ParameterScope { Conditioning, All };

std::string to_string(ParameterScope s);
ParameterScope parse_scope(std::string_view name);

// The leaves an optimizer should own for `scope`.
std::vector<numerics::Tensor> trainable_parameters(const diffusion::DenoiserModel& model, ParameterScope scope);
// Zeroes gradient entries outside `scope` (after a backward pass).
void mask_gradients(const diffusion::DenoiserModel& model, ParameterScope scope);

std::string to_string(TargetStrategy s);
// Throws Error(Config) for unknown names.
TargetStrategy parse_strategy(std::string_view name);

struct ErasureConfig {
  std::vector<ConceptId> erase_set;
  double lambda = 1.0;        // weight of the preservation term
  double temperature = 0.1;   // Gumbel-Softmax temperature
  double inner_rate = 2e-2;   // ascent step on the mixture logits
  std::size_t inner_iterations = 1;
  double outer_rate = 0.3;    // gradient-descent step on the sanitized model
  std::size_t steps = 1000;
  std::size_t vocab_k = 5;
  std::size_t batch_size = 8;
  std::size_t pool_size = 512;  // frozen-model samples per erased concept
  TargetStrategy target_strategy = TargetStrategy::Null;
  std::optional<ConceptId> explicit_target;
  std::optional<double> grad_clip;  // L2 clip on the logit gradient
  ParameterScope scope = ParameterScope::Conditioning;
  std::uint64_t seed = 0;

  // Throws Error(Config) naming the first invalid field.
  void validate() const;
};

nlohmann::json to_json(const ErasureConfig& config, const concepts::ConceptSpace& space);

// A batch of noised inputs shared by both models.
struct NoisedBatch {
  numerics::Tensor x_t;  // [B x data_dim]
  std::vector<std::size_t> timesteps;
};

struct LossPair {
  numerics::Tensor l1;
  numerics::Tensor l2;
};

// L1 = mean ||eps_theta'(x, t, e_erase) - eps_theta(x, t, e_target)||^2
// L2 = mean ||eps_theta'(x, t, e_null) - eps_theta(x, t, e_null)||^2
// Gradients reach the sanitized parameters only.
LossPair fixed_target_loss(numerics::Tape& tape, const diffusion::DenoiserModel& sanitized,
                           const diffusion::DenoiserModel& frozen, std::span<const double> erase_embedding,
                           std::span<const double> target_embedding, std::span<const double> null_embedding,
                           const NoisedBatch& batch);

// L1 and L2 of the adaptive objective, before weighting by lambda.
LossPair age_loss_terms(numerics::Tape& tape, const diffusion::DenoiserModel& sanitized,
                        const diffusion::DenoiserModel& frozen, std::span<const double> erase_embedding,
                        const numerics::Tensor& logits, const concepts::VocabularySubset& subset,
                        double temperature, std::span<const double> gumbel_noise, const NoisedBatch& batch);

// With e = mixture_embedding(gumbel_softmax(logits, temperature, noise), subset):
// returns L1 + lambda * L2 with
//   L1 = mean ||eps_theta'(x, t, e_erase) - eps_theta(x, t, e)||^2
//   L2 = mean ||eps_theta'(x, t, e) - eps_theta(x, t, e)||^2
// Differentiable in the sanitized parameters and in `logits` (through the
// frozen branch's embedding input as well). Throws Error(Numeric) if the
// loss is not finite.
numerics::Tensor age_loss(numerics::Tape& tape, const diffusion::DenoiserModel& sanitized,
                          const diffusion::DenoiserModel& frozen, std::span<const double> erase_embedding,
                          const numerics::Tensor& logits, const concepts::VocabularySubset& subset,
                          double lambda, double temperature, std::span<const double> gumbel_noise,
                          const NoisedBatch& batch);

// Per-concept logits over that concept's restricted vocabulary.
class TargetDictionary {
 public:
  struct HistoryEntry {
    std::size_t step = 0;
    ConceptId erased;
    ConceptId argmax;
    double max_weight = 0.0;  // of softmax(logits / temperature)
    double entropy = 0.0;     // nats, same distribution
  };

  // Every entry starts at the constant 1/k, i.e. a uniform mixture.
  TargetDictionary(const concepts::ConceptSpace& space, const std::vector<ConceptId>& erase_set,
                   std::size_t vocab_k);

  const concepts::VocabularySubset& subset(ConceptId erased) const;
  const std::vector<double>& logits(ConceptId erased) const;
  void store(ConceptId erased, std::vector<double> logits);
  void record(std::size_t step, ConceptId erased, double temperature);

  ConceptId argmax(ConceptId erased) const;
  std::vector<double> weights(ConceptId erased, double temperature) const;
  const std::vector<HistoryEntry>& history() const noexcept { return history_; }
  std::size_t visits(ConceptId erased) const;

 private:
  std::map<ConceptId, concepts::VocabularySubset> subsets_;
  std::map<ConceptId, std::vector<double>> logits_;
  std::vector<HistoryEntry> history_;
};

// Draws frozen-model samples for the erased concept and noises them.
class NoisedInputSource {
 public:
  NoisedInputSource(const diffusion::DenoiserModel& frozen, const concepts::ConceptSpace& space,
                    const ErasureConfig& config);
  NoisedBatch next(ConceptId erased, numerics::Rng& rng) const;
  const std::vector<double>& pool(ConceptId erased) const;

 private:
  const diffusion::DenoiserModel* frozen_;
  std::size_t batch_size_;
  std::map<ConceptId, std::vector<double>> pools_;
};

// N_iter ascent steps logits += rate * grad(L1 + lambda L2), fresh Gumbel
// noise each step from `gumbel_rng`. Returns the updated logits and the
// noise used by the last step.
struct InnerResult {
  std::vector<double> logits;
  std::vector<double> last_noise;
};
InnerResult inner_max_step(std::vector<double> logits, const diffusion::DenoiserModel& sanitized,
                           const diffusion::DenoiserModel& frozen, std::span<const double> erase_embedding,
                           const concepts::VocabularySubset& subset, const ErasureConfig& config,
                           const NoisedBatch& batch, numerics::Rng& gumbel_rng);

struct StepLosses {
  double l1 = 0.0;
  double l2 = 0.0;
};

// One descent step on the sanitized model with the mixture frozen (logits
// and noise are constants). `optimizer` must own the sanitized parameters.
// Returns the pre-step losses.
StepLosses outer_min_step(numerics::Optimizer& optimizer, const diffusion::DenoiserModel& sanitized,
                          const diffusion::DenoiserModel& frozen, std::span<const double> erase_embedding,
                          std::span<const double> logits, std::span<const double> noise,
                          const concepts::VocabularySubset& subset, const ErasureConfig& config,
                          const NoisedBatch& batch);

struct ErasureStepRecord {
  std::size_t step = 0;
  ConceptId erased;
  double l1 = 0.0;
  double l2 = 0.0;
};

struct ErasureRunRecord {
  std::string method;  // "age" or "fixed:<strategy>"
  nlohmann::json config;
  std::vector<ErasureStepRecord> steps;
  std::vector<TargetDictionary::HistoryEntry> dictionary_history;
  std::map<ConceptId, ConceptId> final_argmax;            // AGE only
  std::map<ConceptId, std::string> resolved_targets;      // fixed-target only
  std::string checkpoint_path;
};

struct ErasureResult {
  diffusion::DenoiserModel sanitized;
  ErasureRunRecord record;
};

// The fixed-target embedding for `erased` under `strategy`.
// Throws Error(Config) naming the concept when the strategy cannot resolve.
struct ResolvedTarget {
  std::vector<double> embedding;
  std::string label;
};
ResolvedTarget resolve_target(const concepts::ConceptSpace& space, ConceptId erased, TargetStrategy strategy,
                              std::optional<ConceptId> explicit_target);

ErasureResult run_age(const diffusion::DenoiserModel& frozen, const concepts::ConceptSpace& space,
                      const ErasureConfig& config);
// Starts from the given dictionary instead of the uniform one.
ErasureResult run_age(const diffusion::DenoiserModel& frozen, const concepts::ConceptSpace& space,
                      const ErasureConfig& config, TargetDictionary dictionary);
ErasureResult run_fixed_target(const diffusion::DenoiserModel& frozen, const concepts::ConceptSpace& space,
                               const ErasureConfig& config);

// Run-record serialization: structured text report and dictionary CSV
// (step,erased,argmax,max_weight,entropy).
std::string run_report_text(const ErasureRunRecord& record, const concepts::ConceptSpace& space);
std::string dictionary_history_csv(const ErasureRunRecord& record, const concepts::ConceptSpace& space);
std::string loss_trace_csv(const ErasureRunRecord& record, const concepts::ConceptSpace& space);

}  // namespace eraselab::erasure
