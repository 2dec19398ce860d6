#include "eraselab/erasure/erasure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eraselab/diffusion/sampling.hpp"
#include "eraselab/errors.hpp"
#include "eraselab/support/keyvalue.hpp"

namespace eraselab::erasure {

using concepts::ConceptSpace;
using concepts::VocabularySubset;
using diffusion::DenoiserModel;
using numerics::Rng;
using numerics::Tape;
using numerics::Tensor;

namespace {

// Stream tags for the run's independent random streams.
constexpr std::uint64_t kSelectStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kGumbelStream = 3;
constexpr std::uint64_t kPoolStream = 0x706f6f6c00000000ULL;

Tensor constant_vector(std::span<const double> v) { return Tensor::vector({v.begin(), v.end()}); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::vector<double> softmax_tempered(std::span<const double> logits, double temperature) {
  std::vector<double> zeros(logits.size(), 0.0);
  return numerics::gumbel_softmax(logits, temperature, zeros);
}

void check_erase_set(const ConceptSpace& space, const ErasureConfig& config) {
  for (auto id : config.erase_set) {
    require(id.value < space.size(), ErrorKind::Config, "erase_set: unknown concept id " + std::to_string(id.value));
    require(id != space.null_id(), ErrorKind::Config, "erase_set: the null concept cannot be erased");
  }
}

struct RunStreams {
  Rng select;
  Rng batch;
  Rng gumbel;
  explicit RunStreams(std::uint64_t seed)
      : select(Rng::substream(seed, kSelectStream)),
        batch(Rng::substream(seed, kBatchStream)),
        gumbel(Rng::substream(seed, kGumbelStream)) {}
};

[[noreturn]] void rethrow_at(const Error& e, std::size_t step) {
  throw Error(e.kind(), "erasure step " + std::to_string(step) + ": " + e.what());
}

}  // namespace

std::string to_string(ParameterScope s) {
  return s == ParameterScope::Conditioning ? "conditioning" : "all";
}

ParameterScope parse_scope(std::string_view name) {
  if (name == "conditioning") return ParameterScope::Conditioning;
  if (name == "all") return ParameterScope::All;
  fail(ErrorKind::Config, "unknown parameter scope '" + std::string(name) + "'");
}

std::vector<Tensor> trainable_parameters(const DenoiserModel& model, ParameterScope scope) {
  if (scope == ParameterScope::All) return model.parameters();
  require(!model.layers().empty(), ErrorKind::Input, "model has no layers");
  return {model.layers().front().weight};
}

void mask_gradients(const DenoiserModel& model, ParameterScope scope) {
  if (scope == ParameterScope::All) return;
  auto& w = model.layers().front().weight.data();
  if (w.grad.empty()) return;
  // Rows are input features: [x_t | time features | embedding].
  const auto& arch = model.arch();
  const std::size_t keep_from = (arch.data_dim + arch.time_features) * w.shape[1];
  std::fill(w.grad.begin(), w.grad.begin() + static_cast<std::ptrdiff_t>(keep_from), 0.0);
}

std::string to_string(TargetStrategy s) {
  switch (s) {
    case TargetStrategy::Synonym: return "synonym";
    case TargetStrategy::InFamily: return "in_family";
    case TargetStrategy::General: return "general";
    case TargetStrategy::Unrelated: return "unrelated";
    case TargetStrategy::Null: return "null";
    case TargetStrategy::Explicit: return "explicit";
  }
  return "unknown";
}

TargetStrategy parse_strategy(std::string_view name) {
  for (auto s : {TargetStrategy::Synonym, TargetStrategy::InFamily, TargetStrategy::General,
                 TargetStrategy::Unrelated, TargetStrategy::Null, TargetStrategy::Explicit})
    if (name == to_string(s)) return s;
  fail(ErrorKind::Config, "unknown target strategy '" + std::string(name) + "'");
}

void ErasureConfig::validate() const {
  require(!erase_set.empty(), ErrorKind::Config, "erase_set must not be empty");
  require(std::isfinite(lambda) && lambda >= 0.0, ErrorKind::Config, "lambda must be finite and >= 0");
  require(std::isfinite(temperature) && temperature > 0.0, ErrorKind::Config, "temperature must be > 0");
  require(std::isfinite(inner_rate) && inner_rate >= 0.0, ErrorKind::Config, "inner_rate must be >= 0");
  require(inner_iterations >= 1, ErrorKind::Config, "inner_iterations must be >= 1");
  require(std::isfinite(outer_rate) && outer_rate >= 0.0, ErrorKind::Config, "outer_rate must be >= 0");
  require(vocab_k >= 1, ErrorKind::Config, "vocab_k must be >= 1");
  require(batch_size >= 1, ErrorKind::Config, "batch_size must be >= 1");
  require(pool_size >= 1, ErrorKind::Config, "pool_size must be >= 1");
  require(!grad_clip || (std::isfinite(*grad_clip) && *grad_clip > 0.0), ErrorKind::Config,
          "grad_clip must be > 0 when set");
  require(target_strategy != TargetStrategy::Explicit || explicit_target.has_value(), ErrorKind::Config,
          "explicit target strategy needs explicit_target");
}

nlohmann::json to_json(const ErasureConfig& config, const ConceptSpace& space) {
  nlohmann::json j;
  auto names = nlohmann::json::array();
  for (auto id : config.erase_set) names.push_back(space.record(id).name);
  j["erase_set"] = names;
  j["lambda"] = config.lambda;
  j["temperature"] = config.temperature;
  j["inner_rate"] = config.inner_rate;
  j["inner_iterations"] = config.inner_iterations;
  j["outer_rate"] = config.outer_rate;
  j["steps"] = config.steps;
  j["vocab_k"] = config.vocab_k;
  j["batch_size"] = config.batch_size;
  j["pool_size"] = config.pool_size;
  j["target_strategy"] = to_string(config.target_strategy);
  j["explicit_target"] = config.explicit_target ? nlohmann::json(space.record(*config.explicit_target).name)
                                                : nlohmann::json(nullptr);
  j["grad_clip"] = config.grad_clip ? nlohmann::json(*config.grad_clip) : nlohmann::json(nullptr);
  j["scope"] = to_string(config.scope);
  j["seed"] = config.seed;
  return j;
}

// --- losses -----------------------------------------------------------------

LossPair fixed_target_loss(Tape& tape, const DenoiserModel& sanitized, const DenoiserModel& frozen,
                           std::span<const double> erase_embedding, std::span<const double> target_embedding,
                           std::span<const double> null_embedding, const NoisedBatch& batch) {
  const std::size_t e = sanitized.arch().embed_dim;
  require(frozen.arch() == sanitized.arch(), ErrorKind::Input, "fixed_target_loss: model architectures differ");
  require(erase_embedding.size() == e && target_embedding.size() == e && null_embedding.size() == e,
          ErrorKind::Input, "fixed_target_loss: embedding length does not match embed_dim");
  const auto erase = constant_vector(erase_embedding);
  const auto target = constant_vector(target_embedding);
  const auto null = constant_vector(null_embedding);
  const auto l1 = numerics::mse(tape, sanitized.forward(tape, batch.x_t, batch.timesteps, erase),
                                frozen.forward(tape, batch.x_t, batch.timesteps, target));
  const auto l2 = numerics::mse(tape, sanitized.forward(tape, batch.x_t, batch.timesteps, null),
                                frozen.forward(tape, batch.x_t, batch.timesteps, null));
  return {l1, l2};
}

LossPair age_loss_terms(Tape& tape, const DenoiserModel& sanitized, const DenoiserModel& frozen,
                        std::span<const double> erase_embedding, const Tensor& logits,
                        const VocabularySubset& subset, double temperature, std::span<const double> gumbel_noise,
                        const NoisedBatch& batch) {
  require(frozen.arch() == sanitized.arch(), ErrorKind::Input, "age_loss: model architectures differ");
  require(erase_embedding.size() == sanitized.arch().embed_dim, ErrorKind::Input,
          "age_loss: embedding length does not match embed_dim");
  require(logits.rank() == 1 && logits.size() == subset.ids.size(), ErrorKind::Input,
          "age_loss: " + std::to_string(logits.size()) + " logits for a subset of " +
              std::to_string(subset.ids.size()));
  const auto weights = numerics::gumbel_softmax(tape, logits, temperature, gumbel_noise);
  const auto mixture = concepts::mixture_embedding(tape, weights, subset);
  const auto erase = constant_vector(erase_embedding);
  const auto frozen_target = frozen.forward(tape, batch.x_t, batch.timesteps, mixture);
  const auto l1 = numerics::mse(tape, sanitized.forward(tape, batch.x_t, batch.timesteps, erase), frozen_target);
  const auto l2 = numerics::mse(tape, sanitized.forward(tape, batch.x_t, batch.timesteps, mixture), frozen_target);
  return {l1, l2};
}

Tensor age_loss(Tape& tape, const DenoiserModel& sanitized, const DenoiserModel& frozen,
                std::span<const double> erase_embedding, const Tensor& logits, const VocabularySubset& subset,
                double lambda, double temperature, std::span<const double> gumbel_noise, const NoisedBatch& batch) {
  const auto terms =
      age_loss_terms(tape, sanitized, frozen, erase_embedding, logits, subset, temperature, gumbel_noise, batch);
  const auto loss = numerics::add(tape, terms.l1, numerics::scale(tape, terms.l2, lambda));
  if (!std::isfinite(loss.item())) {
    std::ostringstream os;
    os << "age_loss is not finite (L1=" << terms.l1.item() << ", L2=" << terms.l2.item() << ", lambda=" << lambda
       << ")";
    fail(ErrorKind::Numeric, os.str());
  }
  return loss;
}

// --- dictionary -------------------------------------------------------------

TargetDictionary::TargetDictionary(const ConceptSpace& space, const std::vector<ConceptId>& erase_set,
                                   std::size_t vocab_k) {
  for (auto id : erase_set) {
    if (subsets_.count(id)) continue;
    auto subset = concepts::restrict_vocabulary(space, id, vocab_k);
    logits_[id] = std::vector<double>(subset.ids.size(), 1.0 / static_cast<double>(subset.ids.size()));
    subsets_.emplace(id, std::move(subset));
  }
}

const VocabularySubset& TargetDictionary::subset(ConceptId erased) const {
  const auto it = subsets_.find(erased);
  require(it != subsets_.end(), ErrorKind::Lookup, "no dictionary entry for concept " + std::to_string(erased.value));
  return it->second;
}

const std::vector<double>& TargetDictionary::logits(ConceptId erased) const {
  const auto it = logits_.find(erased);
  require(it != logits_.end(), ErrorKind::Lookup, "no dictionary entry for concept " + std::to_string(erased.value));
  return it->second;
}

void TargetDictionary::store(ConceptId erased, std::vector<double> logits) {
  require(logits.size() == subset(erased).ids.size(), ErrorKind::Input, "dictionary entry has the wrong length");
  require(all_finite(logits), ErrorKind::Numeric, "dictionary entry is not finite");
  logits_[erased] = std::move(logits);
}

std::vector<double> TargetDictionary::weights(ConceptId erased, double temperature) const {
  return softmax_tempered(logits(erased), temperature);
}

ConceptId TargetDictionary::argmax(ConceptId erased) const {
  const auto& pi = logits(erased);
  const auto best = std::max_element(pi.begin(), pi.end()) - pi.begin();
  return subset(erased).ids[static_cast<std::size_t>(best)];
}

void TargetDictionary::record(std::size_t step, ConceptId erased, double temperature) {
  const auto w = weights(erased, temperature);
  double entropy = 0.0;
  for (double p : w)
    if (p > 0.0) entropy -= p * std::log(p);
  history_.push_back({step, erased, argmax(erased), *std::max_element(w.begin(), w.end()), entropy});
}

std::size_t TargetDictionary::visits(ConceptId erased) const {
  return static_cast<std::size_t>(
      std::count_if(history_.begin(), history_.end(), [&](const auto& h) { return h.erased == erased; }));
}

// --- inputs -----------------------------------------------------------------

NoisedInputSource::NoisedInputSource(const DenoiserModel& frozen, const ConceptSpace& space,
                                     const ErasureConfig& config)
    : frozen_(&frozen), batch_size_(config.batch_size) {
  for (auto id : config.erase_set) {
    if (pools_.count(id)) continue;
    auto rng = Rng::substream(config.seed, kPoolStream + id.value);
    pools_[id] = diffusion::sample_batch(frozen, space.embedding_of(id), config.pool_size, rng);
  }
}

const std::vector<double>& NoisedInputSource::pool(ConceptId erased) const {
  const auto it = pools_.find(erased);
  require(it != pools_.end(), ErrorKind::Lookup, "no sample pool for concept " + std::to_string(erased.value));
  return it->second;
}

NoisedBatch NoisedInputSource::next(ConceptId erased, Rng& rng) const {
  const auto& points = pool(erased);
  const auto& schedule = frozen_->schedule();
  const std::size_t d = frozen_->arch().data_dim;
  const std::size_t count = points.size() / d;
  std::vector<double> x(batch_size_ * d);
  std::vector<std::size_t> ts(batch_size_);
  for (std::size_t b = 0; b < batch_size_; ++b) {
    const std::size_t row = rng.uniform_index(count);
    ts[b] = rng.uniform_index(schedule.steps());
    const double a = std::sqrt(schedule.alpha_bar[ts[b]]);
    const double s = std::sqrt(1.0 - schedule.alpha_bar[ts[b]]);
    for (std::size_t j = 0; j < d; ++j) x[b * d + j] = a * points[row * d + j] + s * rng.normal();
  }
  return {Tensor::constant({batch_size_, d}, std::move(x)), std::move(ts)};
}

// --- steps ------------------------------------------------------------------

InnerResult inner_max_step(std::vector<double> logits, const DenoiserModel& sanitized, const DenoiserModel& frozen,
                           std::span<const double> erase_embedding, const VocabularySubset& subset,
                           const ErasureConfig& config, const NoisedBatch& batch, Rng& gumbel_rng) {
  InnerResult out;
  for (std::size_t it = 0; it < config.inner_iterations; ++it) {
    out.last_noise = gumbel_rng.gumbel_vector(logits.size());
    Tape tape;
    const auto pi = Tensor::parameter({logits.size()}, logits);
    const auto loss = age_loss(tape, sanitized, frozen, erase_embedding, pi, subset, config.lambda,
                               config.temperature, out.last_noise, batch);
    tape.backward(loss);
    std::vector<double> g(pi.grad().begin(), pi.grad().end());
    if (g.empty()) g.assign(logits.size(), 0.0);
    require(all_finite(g), ErrorKind::Numeric, "inner step: gradient with respect to the logits is not finite");
    if (config.grad_clip) {
      double norm = 0.0;
      for (double v : g) norm += v * v;
      norm = std::sqrt(norm);
      if (norm > *config.grad_clip)
        for (double& v : g) v *= *config.grad_clip / norm;
    }
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += config.inner_rate * g[i];
  }
  out.logits = std::move(logits);
  return out;
}

StepLosses outer_min_step(numerics::Optimizer& optimizer, const DenoiserModel& sanitized, const DenoiserModel& frozen,
                          std::span<const double> erase_embedding, std::span<const double> logits,
                          std::span<const double> noise, const VocabularySubset& subset, const ErasureConfig& config,
                          const NoisedBatch& batch) {
  Tape tape;
  const auto pi = constant_vector(logits);
  const auto terms =
      age_loss_terms(tape, sanitized, frozen, erase_embedding, pi, subset, config.temperature, noise, batch);
  const auto loss = numerics::add(tape, terms.l1, numerics::scale(tape, terms.l2, config.lambda));
  require(std::isfinite(loss.item()), ErrorKind::Numeric, "outer step: loss is not finite");
  tape.backward(loss);
  mask_gradients(sanitized, config.scope);
  optimizer.step();
  return {terms.l1.item(), terms.l2.item()};
}

// --- targets ----------------------------------------------------------------

ResolvedTarget resolve_target(const ConceptSpace& space, ConceptId erased, TargetStrategy strategy,
                              std::optional<ConceptId> explicit_target) {
  const auto& rec = space.record(erased);
  const auto unresolvable = [&](const std::string& why) -> ResolvedTarget {
    fail(ErrorKind::Config, "target strategy " + to_string(strategy) + " cannot resolve for " + rec.name + ": " + why);
  };
  const auto from = [&](ConceptId id) {
    const auto e = space.embedding_of(id);
    return ResolvedTarget{{e.begin(), e.end()}, space.record(id).name};
  };
  const auto referent = space.referent_of(erased);
  const auto& family = space.record(referent).family;

  // Best candidate by cosine to the erased concept; ties go to the lower id.
  const auto pick = [&](auto&& admissible, bool nearest) -> std::optional<ConceptId> {
    std::optional<ConceptId> best;
    double best_cos = 0.0;
    for (const auto& r : space.records()) {
      if (!admissible(r)) continue;
      const double c = concepts::cosine_similarity(rec.embedding, r.embedding);
      if (!best || (nearest ? c > best_cos : c < best_cos)) {
        best = r.id;
        best_cos = c;
      }
    }
    return best;
  };

  switch (strategy) {
    case TargetStrategy::Synonym: {
      const auto syn = space.synonym_for(referent);
      if (!syn || *syn == erased) return unresolvable("no synonym exists");
      return from(*syn);
    }
    case TargetStrategy::InFamily: {
      const auto id = pick(
          [&](const concepts::ConceptRecord& r) {
            return !r.is_null && !r.synonym_of && r.family == family && r.id != referent;
          },
          true);
      if (!id) return unresolvable("no other family member");
      return from(*id);
    }
    case TargetStrategy::General: {
      if (family.empty()) return unresolvable("no family");
      std::vector<double> mean(space.embed_dim(), 0.0);
      for (auto id : space.family_members(family)) {
        const auto e = space.embedding_of(id);
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += e[j];
      }
      double norm = 0.0;
      for (double v : mean) norm += v * v;
      norm = std::sqrt(norm);
      if (!(norm > 0.0)) return unresolvable("family mean embedding is zero");
      for (double& v : mean) v /= norm;
      return {std::move(mean), "general:" + family};
    }
    case TargetStrategy::Unrelated: {
      const auto id = pick(
          [&](const concepts::ConceptRecord& r) { return !r.is_null && !r.synonym_of && !space.same_group(r.id, erased); }, false);
      if (!id) return unresolvable("no other concept");
      return from(*id);
    }
    case TargetStrategy::Null:
      return from(space.null_id());
    case TargetStrategy::Explicit:
      if (!explicit_target) return unresolvable("no explicit target given");
      require(explicit_target->value < space.size(), ErrorKind::Config,
              "explicit target id " + std::to_string(explicit_target->value) + " is unknown");
      return from(*explicit_target);
  }
  return unresolvable("unknown strategy");
}

// --- runs -------------------------------------------------------------------

ErasureResult run_age(const DenoiserModel& frozen, const ConceptSpace& space, const ErasureConfig& config) {
  config.validate();
  check_erase_set(space, config);
  return run_age(frozen, space, config, TargetDictionary(space, config.erase_set, config.vocab_k));
}

ErasureResult run_age(const DenoiserModel& frozen, const ConceptSpace& space, const ErasureConfig& config,
                      TargetDictionary dictionary) {
  config.validate();
  check_erase_set(space, config);
  ErasureResult result{frozen, {}};
  result.record.method = "age";
  result.record.config = to_json(config, space);
  if (config.steps > 0) {
    const auto reference = frozen.constant_copy();
    const NoisedInputSource source(reference, space, config);
    numerics::GradientDescent descent(trainable_parameters(result.sanitized, config.scope), config.outer_rate);
    RunStreams streams(config.seed);
    result.record.steps.reserve(config.steps);
    for (std::size_t step = 0; step < config.steps; ++step) {
      try {
        const auto ce = config.erase_set[streams.select.uniform_index(config.erase_set.size())];
        const auto batch = source.next(ce, streams.batch);
        const auto erase = space.embedding_of(ce);
        const auto& subset = dictionary.subset(ce);
        auto inner = inner_max_step(dictionary.logits(ce), result.sanitized, reference, erase, subset, config, batch,
                                    streams.gumbel);
        dictionary.store(ce, inner.logits);
        dictionary.record(step, ce, config.temperature);
        const auto losses = outer_min_step(descent, result.sanitized, reference, erase, dictionary.logits(ce),
                                           inner.last_noise, subset, config, batch);
        result.record.steps.push_back({step, ce, losses.l1, losses.l2});
      } catch (const Error& e) {
        rethrow_at(e, step);
      }
    }
  }
  result.record.dictionary_history = dictionary.history();
  for (auto id : config.erase_set) result.record.final_argmax[id] = dictionary.argmax(id);
  return result;
}

ErasureResult run_fixed_target(const DenoiserModel& frozen, const ConceptSpace& space, const ErasureConfig& config) {
  config.validate();
  check_erase_set(space, config);
  std::map<ConceptId, ResolvedTarget> targets;
  for (auto id : config.erase_set)
    targets.emplace(id, resolve_target(space, id, config.target_strategy, config.explicit_target));

  ErasureResult result{frozen, {}};
  result.record.method = "fixed:" + to_string(config.target_strategy);
  result.record.config = to_json(config, space);
  for (const auto& [id, t] : targets) result.record.resolved_targets[id] = t.label;
  if (config.steps == 0) return result;

  const auto reference = frozen.constant_copy();
  const NoisedInputSource source(reference, space, config);
  numerics::GradientDescent descent(trainable_parameters(result.sanitized, config.scope), config.outer_rate);
  RunStreams streams(config.seed);
  const auto null = space.embedding_of(space.null_id());
  result.record.steps.reserve(config.steps);
  for (std::size_t step = 0; step < config.steps; ++step) {
    try {
      const auto ce = config.erase_set[streams.select.uniform_index(config.erase_set.size())];
      const auto batch = source.next(ce, streams.batch);
      Tape tape;
      const auto terms = fixed_target_loss(tape, result.sanitized, reference, space.embedding_of(ce),
                                           targets.at(ce).embedding, null, batch);
      const auto loss = numerics::add(tape, terms.l1, numerics::scale(tape, terms.l2, config.lambda));
      require(std::isfinite(loss.item()), ErrorKind::Numeric, "fixed-target loss is not finite");
      tape.backward(loss);
      mask_gradients(result.sanitized, config.scope);
      descent.step();
      result.record.steps.push_back({step, ce, terms.l1.item(), terms.l2.item()});
    } catch (const Error& e) {
      rethrow_at(e, step);
    }
  }
  return result;
}

// --- serialization ----------------------------------------------------------

std::string run_report_text(const ErasureRunRecord& record, const ConceptSpace& space) {
  std::ostringstream os;
  os << "# eraselab erasure run\n[run]\n";
  os << "method = " << record.method << "\n";
  os << "steps_recorded = " << record.steps.size() << "\n";
  if (!record.checkpoint_path.empty()) os << "checkpoint = " << record.checkpoint_path << "\n";
  os << "\n[config]\n";
  for (const auto& [key, value] : record.config.items()) os << key << " = " << value.dump() << "\n";
  if (!record.resolved_targets.empty()) {
    os << "\n[targets]\n";
    for (const auto& [id, label] : record.resolved_targets) os << space.record(id).name << " = " << label << "\n";
  }
  if (!record.final_argmax.empty()) {
    os << "\n[final_argmax]\n";
    for (const auto& [id, target] : record.final_argmax)
      os << space.record(id).name << " = " << space.record(target).name << "\n";
  }
  if (!record.steps.empty()) {
    std::map<ConceptId, std::pair<double, double>> last;
    for (const auto& s : record.steps) last[s.erased] = {s.l1, s.l2};
    os << "\n[final_losses]\n";
    for (const auto& [id, l] : last)
      os << space.record(id).name << " = " << support::format_double(l.first) << " "
         << support::format_double(l.second) << "\n";
  }
  return os.str();
}

std::string dictionary_history_csv(const ErasureRunRecord& record, const ConceptSpace& space) {
  std::ostringstream os;
  os << "step,erased,argmax,max_weight,entropy\n";
  for (const auto& h : record.dictionary_history)
    os << h.step << ',' << space.record(h.erased).name << ',' << space.record(h.argmax).name << ','
       << support::format_double(h.max_weight) << ',' << support::format_double(h.entropy) << '\n';
  return os.str();
}

std::string loss_trace_csv(const ErasureRunRecord& record, const ConceptSpace& space) {
  std::ostringstream os;
  os << "step,erased,l1,l2\n";
  for (const auto& s : record.steps)
    os << s.step << ',' << space.record(s.erased).name << ',' << support::format_double(s.l1) << ','
       << support::format_double(s.l2) << '\n';
  return os.str();
}

}  // namespace eraselab::erasure
