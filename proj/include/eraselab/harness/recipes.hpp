#pragma once

// Named experiment recipes. Each writes its artifacts under config.output
// and returns the manifest; manifest.json and run.log are always written,
// including after a failure.
//
//   train_base     base.ckpt, concepts.txt, base_report, base_summary, loss_trace
//   target_sweep   one sanitized checkpoint per (strategy, erased concept),
//                  stacked delta CSV/JSON/SVG, sweep_rows, strategy_summary
//   age_benchmark  null-target baseline and AGE checkpoints, rates, reports,
//                  dictionary_history, targets, loss traces
//   mixture_sweep  base-model samples along (1 - a) tau(c1) + a tau(c2)
//   synonym_eval   rates on the synonyms of erased and preserved concepts
//
// CSV column orders are listed in the README.

#include <string>
#include <vector>

#include "json.hpp"

#include "eraselab/concepts/concept_space.hpp"
#include "eraselab/evaluation/metrics.hpp"
#include "eraselab/harness/config.hpp"
#include "eraselab/harness/manifest.hpp"

namespace eraselab::harness {

// Module errors are not thrown: they end the run and are reported in
// manifest.failure along with the stage that raised them.
ArtifactManifest run_experiment(const ExperimentConfig& config);

// DS/CS report of a checkpoint (the base model when `checkpoint` is empty)
// over every concept with a mode, written to <output>/analyze/.
ArtifactManifest run_analyze(const ExperimentConfig& config, const std::string& checkpoint);

// Heatmap and locality summary for an impact JSON written by target_sweep,
// written to <output>/report/.
ArtifactManifest run_report(const ExperimentConfig& config, const std::string& impact_json_path);

// Names to ids; "anchors" expands to every family anchor.
std::vector<concepts::ConceptId> resolve_concepts(const concepts::ConceptSpace& space,
                                                  const std::vector<std::string>& names);

// Inverse of evaluation::impact_json. Throws Error(Format) on malformed input.
evaluation::ImpactMatrix impact_from_json(const nlohmann::json& j, const concepts::ConceptSpace& space);

// The mixture-sweep pairs after defaults are applied.
std::vector<std::pair<concepts::ConceptId, concepts::ConceptId>> mixture_pairs(const ExperimentConfig& config,
                                                                             const concepts::ConceptSpace& space);

}  // namespace eraselab::harness
