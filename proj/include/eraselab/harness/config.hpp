#pragma once

// Experiment configuration. The file grammar is the support key-value format;
// see README "Experiment config" for every key and its default.
//
//   [experiment]
//   kind = target_sweep
//   seed = 7
//   base = runs/base        # output directory of a train_base run
//
// Every section other than [experiment] is optional.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eraselab/concepts/concept_space.hpp"
#include "eraselab/diffusion/training.hpp"
#include "eraselab/erasure/erasure.hpp"

namespace eraselab::harness {

enum class ExperimentKind { TrainBase, TargetSweep, AgeBenchmark, MixtureSweep, SynonymEval };

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(std::string_view text);

struct DiffusionSettings {
  std::size_t timesteps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.2;
  std::size_t time_features = 16;
  std::vector<std::size_t> hidden = {128, 128, 128};
  diffusion::TrainingConfig training;
};

struct ErasureSettings {
  // "anchors" or concept names; resolved against the space at run time.
  std::vector<std::string> erase = {"anchors"};
  std::vector<erasure::TargetStrategy> strategies = {
      erasure::TargetStrategy::Synonym, erasure::TargetStrategy::InFamily, erasure::TargetStrategy::General,
      erasure::TargetStrategy::Unrelated, erasure::TargetStrategy::Null};
  std::optional<std::string> explicit_target;
  erasure::ErasureConfig run;  // erase_set and explicit_target are filled per run
};

struct EvaluationSettings {
  std::size_t k = 3;
  std::size_t n = 500;
  std::optional<std::uint64_t> seed;  // experiment seed when unset
};

struct MixtureSettings {
  // Empty: the first anchor against two siblings and every other anchor.
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::TrainBase;
  std::uint64_t seed = 0;
  std::string output = "out";
  std::string base;        // train_base output directory; required by other kinds
  std::string space_file;  // train_base only: load instead of building
  std::optional<std::uint64_t> space_seed;
  concepts::SpaceLayout layout;
  DiffusionSettings diffusion;
  ErasureSettings erasure;
  EvaluationSettings evaluation;
  MixtureSettings mixture;

  std::uint64_t evaluation_seed() const { return evaluation.seed.value_or(seed); }
  std::string base_checkpoint() const;
  std::string base_space() const;

  // Throws Error(Config) naming the offending key.
  void validate() const;
  bool operator==(const ExperimentConfig& other) const;
};

// Canonical text form; every key is written, so load(to_text(c)) == c.
std::string to_text(const ExperimentConfig& config);

// Throws Error(Config) with "<source>:<line>:" for unknown sections or keys,
// bad values and out-of-range settings; Error(Io) for unreadable files.
ExperimentConfig parse_config(std::string_view text, std::string_view source_name = "<config>");
ExperimentConfig load_config(const std::string& path);

// to_text with the output directory masked: where a run writes does not
// change what it writes.
std::string content_text(const ExperimentConfig& config);

// First 16 hex digits of the SHA-256 of content_text(config).
std::string config_hash(const ExperimentConfig& config);

}  // namespace eraselab::harness
