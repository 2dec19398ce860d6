#pragma once

// Generation-capability metrics (DS-k, CS-k), erasure metrics (ESR-k,
// PSR-k), impact matrices and concept-graph statistics.
//
// Every estimate draws its samples from a substream keyed by (seed, concept
// id), so two models evaluated with the same seed see identical sampler
// noise for each concept. Differences between reports are therefore paired.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "eraselab/concepts/concept_space.hpp"
#include "eraselab/diffusion/denoiser.hpp"
#include "eraselab/evaluation/oracle.hpp"

namespace eraselab::evaluation {

using concepts::ConceptId;

struct ConceptScores {
  ConceptId id;
  double ds1 = 0.0;
  double dsk = 0.0;
  double cs1 = 0.0;
  double csk = 0.0;
};

struct GenerationReport {
  std::string model_label;
  std::size_t k = 3;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<ConceptScores> rows;  // ascending concept id

  const ConceptScores& at(ConceptId id) const;
};

enum class Metric { DS1, DSk, CS1, CSk };
std::string metric_name(Metric m, std::size_t k);
double metric_value(const ConceptScores& s, Metric m);

// Draws n conditional samples for `concept` with the evaluation substream.
std::vector<double> evaluation_samples(const diffusion::DenoiserModel& model,
                                       const concepts::ConceptSpace& space, ConceptId target,
                                       std::size_t n, std::uint64_t seed);

double detection_score(const diffusion::DenoiserModel& model, const concepts::ConceptSpace& space,
                       const ClassifierOracle& oracle, ConceptId target, std::size_t k,
                       std::size_t n, std::uint64_t seed);
double confidence_score(const diffusion::DenoiserModel& model, const concepts::ConceptSpace& space,
                        const ClassifierOracle& oracle, ConceptId target, std::size_t k,
                        std::size_t n, std::uint64_t seed);

// DS-1, DS-k, CS-1 and CS-k for each concept from one shared sample set.
GenerationReport generation_report(const diffusion::DenoiserModel& model, const concepts::ConceptSpace& space,
                                   const ClassifierOracle& oracle, const std::vector<ConceptId>& concepts,
                                   std::size_t k, std::size_t n, std::uint64_t seed,
                                   std::string model_label = "model");

struct ImpactMatrix {
  std::string metric;
  std::vector<std::string> row_labels;
  std::vector<ConceptId> row_concepts;  // the erased concept of each row
  std::vector<ConceptId> columns;
  std::vector<double> values;           // row-major [rows x columns]
  std::size_t n = 0;
  std::uint64_t seed = 0;

  std::size_t row_count() const noexcept { return row_labels.size(); }
  std::size_t column_count() const noexcept { return columns.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
  // Restriction to the columns named by the rows (rows must be distinct).
  ImpactMatrix square() const;
};

// Delta[r][c] = G_0(c) - G_r(c) for the chosen metric.
ImpactMatrix impact_matrix(const GenerationReport& base, const std::vector<std::string>& row_labels,
                           const std::vector<ConceptId>& row_concepts,
                           const std::vector<GenerationReport>& sanitized, Metric metric);

// Model-level form: G_0 is estimated once and reused for every row.
// Throws Error(Input) naming any erased concept without a sanitized model.
ImpactMatrix impact_matrix(const diffusion::DenoiserModel& base,
                           const std::map<ConceptId, diffusion::DenoiserModel>& sanitized,
                           const std::vector<ConceptId>& erased, const concepts::ConceptSpace& space,
                           const ClassifierOracle& oracle, const std::vector<ConceptId>& columns,
                           Metric metric, std::size_t k, std::size_t n, std::uint64_t seed);

struct LocalityScore {
  double within_mean = 0.0;
  double cross_mean = 0.0;
  double ratio = 0.0;
};

// Same-family vs cross-family mean impact, skipping each row's own column and
// the abnormal concept's column. ratio = within / max(cross, 1e-6).
LocalityScore locality_score(const ImpactMatrix& delta, const concepts::ConceptSpace& space);

// ||D - D^T||_F / max(||D||_F, 1e-12); D must be square over one concept set.
double asymmetry_score(const ImpactMatrix& delta);

// Mean impact over every off-diagonal cell.
double mean_off_diagonal(const ImpactMatrix& delta, std::size_t row);

struct AbnormalThresholds {
  double base_detection_below = 0.90;
  double mean_impact_above = 0.05;
};

// Concepts whose base DS-k is below the first threshold and whose mean
// column impact (rows erasing other concepts) exceeds the second.
std::set<ConceptId> abnormal_concepts(const GenerationReport& base, const ImpactMatrix& delta,
                                      const AbnormalThresholds& thresholds);

struct ErasureRates {
  double esr = 0.0;
  double psr = 0.0;
};

// ESR-k = mean over erased of (1 - DS-k); PSR-k = mean over preserved of DS-k.
// k = 1 uses DS-1. Sets must be non-empty and disjoint.
ErasureRates esr_psr(const GenerationReport& report, const std::vector<ConceptId>& erase_set,
                     const std::vector<ConceptId>& preserve_set, std::size_t k);
ErasureRates esr_psr(const diffusion::DenoiserModel& model, const concepts::ConceptSpace& space,
                     const ClassifierOracle& oracle, const std::vector<ConceptId>& erase_set,
                     const std::vector<ConceptId>& preserve_set, std::size_t k, std::size_t n,
                     std::uint64_t seed);

// Serialization. CSV columns are documented in the README.
std::string report_csv(const GenerationReport& report, const concepts::ConceptSpace& space);
nlohmann::json report_json(const GenerationReport& report, const concepts::ConceptSpace& space);
std::string impact_csv(const ImpactMatrix& delta, const concepts::ConceptSpace& space);
nlohmann::json impact_json(const ImpactMatrix& delta, const concepts::ConceptSpace& space);

}  // namespace eraselab::evaluation
