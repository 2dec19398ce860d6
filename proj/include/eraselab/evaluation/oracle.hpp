#pragma once

#include <span>
#include <vector>

#include "eraselab/concepts/concept_space.hpp"

namespace eraselab::evaluation {

struct RankedConcept {
  concepts::ConceptId id;
  double posterior = 0.0;
};

// Bayes classifier over every concept with a ground-truth mode, uniform
// prior, isotropic Gaussian likelihoods. Synonyms share their referent's
// mode, so they tie with it and are ordered after it by id.
class ClassifierOracle {
 public:
  explicit ClassifierOracle(const concepts::ConceptSpace& space);

  // Ranked by posterior descending, ties by ascending id.
  std::vector<RankedConcept> classify(std::span<const double> point) const;

  const concepts::ConceptSpace& space() const noexcept { return *space_; }

 private:
  const concepts::ConceptSpace* space_;
  std::vector<concepts::ConceptId> classes_;
};

struct SampleScores {
  double detection = 0.0;   // fraction of samples whose top-k holds the concept's group
  double confidence = 0.0;  // mean posterior of the concept when detected, 0 otherwise
};

// Scores row-major points [n x data_dim] for `target` at top-k. A synonym
// and its referent count as one class: detection accepts either id, and
// confidence is their summed posterior.
SampleScores score_samples(const ClassifierOracle& oracle, concepts::ConceptId target,
                           std::span<const double> points, std::size_t k);

}  // namespace eraselab::evaluation
