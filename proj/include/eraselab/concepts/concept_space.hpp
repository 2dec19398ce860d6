#pragma once

// Synthetic concept space: families of concepts with Gaussian ground-truth
// modes in data space and frozen unit-norm embeddings whose cosine structure
// follows family membership. Plays the role of the prompt vocabulary plus
// text encoder for the toy diffusion model.

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eraselab/numerics/random.hpp"
#include "eraselab/numerics/tensor.hpp"

namespace eraselab::concepts {

struct ConceptId {
  std::uint32_t value = 0;
  auto operator<=>(const ConceptId&) const = default;
};

inline std::size_t index_of(ConceptId id) { return id.value; }

struct Mode {
  std::vector<double> mean;
  double stddev = 0.0;
};

struct ConceptRecord {
  ConceptId id;
  std::string name;
  std::string family;  // empty for the null concept
  std::optional<Mode> mode;  // absent only for the null concept
  std::vector<double> embedding;
  std::optional<ConceptId> synonym_of;
  bool abnormal = false;
  bool is_null = false;
};

struct MemberIndex {
  std::size_t family = 0;
  std::size_t member = 0;
};

// Construction recipe. Records are laid out family-major (member 0 of each
// family is its anchor), then one synonym per anchor, then the null concept.
struct SpaceLayout {
  std::size_t families = 5;
  std::size_t members = 5;
  std::size_t embed_dim = 16;
  std::size_t data_dim = 2;
  double family_radius = 4.0;   // distance of family centres from the origin
  double member_radius = 1.0;   // distance of member modes from their centre
  double mode_std = 0.12;
  double family_spread = 0.2;   // embedding noise around the family direction
  double synonym_spread = 0.02; // embedding noise around the anchor
  // Embedding noise of the abnormal concept relative to family_spread; a
  // value below 1 leaves it close to the family direction, so the little
  // training it gets must separate it from every sibling.
  double abnormal_spread_scale = 1.0;
  bool synonyms = true;
  std::optional<MemberIndex> abnormal = MemberIndex{2, 3};
  std::vector<std::string> family_names;  // defaults when empty
};

class ConceptSpace {
 public:
  // Throws Error(Parameter) for fewer than 2 families or members.
  static ConceptSpace build(const SpaceLayout& layout, std::uint64_t seed);

  // Human-readable file format; see README "Concept-space file".
  std::string to_text() const;
  static ConceptSpace from_text(std::string_view text, std::string_view source_name = "<text>");
  void save(const std::string& path) const;
  static ConceptSpace load(const std::string& path);

  std::size_t size() const noexcept { return records_.size(); }
  std::size_t embed_dim() const noexcept { return layout_.embed_dim; }
  std::size_t data_dim() const noexcept { return layout_.data_dim; }
  const SpaceLayout& layout() const noexcept { return layout_; }
  std::uint64_t seed() const noexcept { return seed_; }

  const std::vector<ConceptRecord>& records() const noexcept { return records_; }
  // Throws Error(Lookup) for unknown ids or names.
  const ConceptRecord& record(ConceptId id) const;
  ConceptId find(std::string_view name) const;

  ConceptId null_id() const noexcept { return null_id_; }
  std::optional<ConceptId> abnormal_id() const;
  std::optional<ConceptId> synonym_for(ConceptId id) const;
  // The referent for a synonym, the concept itself otherwise.
  ConceptId referent_of(ConceptId id) const;
  // True when a and b share a referent (a synonym and its source, or equal).
  bool same_group(ConceptId a, ConceptId b) const;

  const std::vector<std::string>& families() const noexcept { return family_names_; }
  std::vector<ConceptId> family_members(std::string_view family) const;
  std::vector<ConceptId> anchors() const;
  // Family members in id order, excluding synonyms and the null concept.
  std::vector<ConceptId> named_concepts() const;
  // Every concept with a ground-truth mode (named concepts and synonyms).
  std::vector<ConceptId> concepts_with_modes() const;

  std::span<const double> embedding_of(ConceptId id) const;
  // [size() x embed_dim] constant tensor; row i is concept i.
  const numerics::Tensor& embedding_table() const noexcept { return table_; }

 private:
  void finalize();

  SpaceLayout layout_;
  std::uint64_t seed_ = 0;
  std::vector<ConceptRecord> records_;
  std::vector<std::string> family_names_;
  ConceptId null_id_;
  numerics::Tensor table_;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct CosineSummary {
  double within_family_mean = 0.0;
  double cross_family_mean = 0.0;
};
// Over named concepts only (synonyms and the null concept excluded).
CosineSummary family_cosine_summary(const ConceptSpace& space);

struct VocabularySubset {
  ConceptId source;
  std::size_t k = 0;
  std::vector<ConceptId> ids;
  numerics::Tensor embeddings;  // [k x embed_dim]
};

// The k concepts with the highest embedding cosine to `source`, excluding
// it; ties broken by ascending id. Throws Error(Parameter) unless
// 1 <= k <= size() - 1.
VocabularySubset restrict_vocabulary(const ConceptSpace& space, ConceptId source, std::size_t k);

// sum_i weights[i] * embedding(subset.ids[i]), differentiable in weights.
numerics::Tensor mixture_embedding(numerics::Tape& tape, const numerics::Tensor& weights,
                                   const VocabularySubset& subset);
std::vector<double> mixture_embedding(std::span<const double> weights, const VocabularySubset& subset);

// (1 - alpha) * tau(c1) + alpha * tau(c2); alpha must lie in [0, 1].
std::vector<double> interpolate_concepts(const ConceptSpace& space, ConceptId c1, ConceptId c2,
                                         double alpha);

// n i.i.d. draws from the concept's mode, row-major [n x data_dim].
// Throws Error(Usage) for the null concept.
std::vector<double> sample_data(const ConceptSpace& space, ConceptId id, std::size_t n,
                                numerics::Rng& rng);

}  // namespace eraselab::concepts

template <>
struct std::hash<eraselab::concepts::ConceptId> {
  std::size_t operator()(eraselab::concepts::ConceptId id) const noexcept { return id.value; }
};
