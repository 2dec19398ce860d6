#include "eraselab/evaluation/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "eraselab/errors.hpp"

namespace eraselab::evaluation {

using concepts::ConceptId;

ClassifierOracle::ClassifierOracle(const concepts::ConceptSpace& space)
    : space_(&space), classes_(space.concepts_with_modes()) {
  require(!classes_.empty(), ErrorKind::Input, "classifier oracle needs concepts with modes");
}

std::vector<RankedConcept> ClassifierOracle::classify(std::span<const double> point) const {
  require(point.size() == space_->data_dim(), ErrorKind::Input, "classify: point has the wrong dimension");
  std::vector<double> logp(classes_.size());
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const auto& mode = *space_->record(classes_[i]).mode;
    double sq = 0.0;
    for (std::size_t j = 0; j < point.size(); ++j) {
      const double diff = point[j] - mode.mean[j];
      sq += diff * diff;
    }
    const double var = mode.stddev * mode.stddev;
    logp[i] = -0.5 * sq / var - static_cast<double>(point.size()) * std::log(mode.stddev);
  }
  const double mx = *std::max_element(logp.begin(), logp.end());
  double z = 0.0;
  for (double& v : logp) z += (v = std::exp(v - mx));
  std::vector<RankedConcept> ranked(classes_.size());
  for (std::size_t i = 0; i < classes_.size(); ++i) ranked[i] = {classes_[i], logp[i] / z};
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedConcept& a, const RankedConcept& b) {
    if (a.posterior != b.posterior) return a.posterior > b.posterior;
    return a.id < b.id;
  });
  return ranked;
}

SampleScores score_samples(const ClassifierOracle& oracle, ConceptId target, std::span<const double> points,
                           std::size_t k) {
  const auto& space = oracle.space();
  const std::size_t d = space.data_dim();
  require(k >= 1, ErrorKind::Parameter, "top-k needs k >= 1");
  require(points.size() % d == 0, ErrorKind::Input, "score_samples: ragged point buffer");
  const std::size_t n = points.size() / d;
  if (n == 0) return {};
  std::size_t hits = 0;
  double confidence = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ranked = oracle.classify(points.subspan(i * d, d));
    const std::size_t top = std::min(k, ranked.size());
    for (std::size_t r = 0; r < top; ++r) {
      if (space.same_group(ranked[r].id, target)) {
        ++hits;
        for (const auto& entry : ranked)
          if (space.same_group(entry.id, target)) confidence += entry.posterior;
        break;
      }
    }
  }
  return {static_cast<double>(hits) / static_cast<double>(n), confidence / static_cast<double>(n)};
}

}  // namespace eraselab::evaluation
