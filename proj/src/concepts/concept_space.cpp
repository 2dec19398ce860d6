#include "eraselab/concepts/concept_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "eraselab/errors.hpp"
#include "eraselab/support/keyvalue.hpp"

namespace eraselab::concepts {

namespace {

const std::vector<std::string> kDefaultFamilies = {"dog", "vehicle", "horn", "player", "tower"};

std::vector<double> normalized(std::vector<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  require(n > 0.0, ErrorKind::Numeric, "cannot normalize a zero vector");
  for (double& x : v) x /= n;
  return v;
}

std::vector<double> random_unit(numerics::Rng& rng, std::size_t dim) {
  return normalized(rng.normal_vector(dim));
}

std::vector<double> jittered(std::span<const double> base, double spread, numerics::Rng& rng) {
  std::vector<double> v(base.begin(), base.end());
  for (double& x : v) x += spread * rng.normal();
  return normalized(std::move(v));
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::Input, "cosine_similarity: length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  require(aa > 0.0 && bb > 0.0, ErrorKind::Input, "cosine_similarity: zero vector");
  return ab / std::sqrt(aa * bb);
}

ConceptSpace ConceptSpace::build(const SpaceLayout& layout, std::uint64_t seed) {
  require(layout.families >= 2, ErrorKind::Parameter, "concept space needs at least 2 families");
  require(layout.members >= 2, ErrorKind::Parameter, "each family needs at least 2 members");
  require(layout.embed_dim >= 2, ErrorKind::Parameter, "embed_dim must be at least 2");
  require(layout.data_dim >= 2, ErrorKind::Parameter, "data_dim must be at least 2");
  require(layout.mode_std > 0.0, ErrorKind::Parameter, "mode_std must be positive");
  require(layout.family_spread >= 0.0 && layout.synonym_spread >= 0.0, ErrorKind::Parameter,
          "embedding spreads must be non-negative");
  if (layout.abnormal) {
    require(layout.abnormal->family < layout.families && layout.abnormal->member < layout.members,
            ErrorKind::Parameter, "abnormal concept index outside the layout");
    require(layout.abnormal->member != 0, ErrorKind::Parameter,
            "the abnormal concept cannot be a family anchor");
  }
  require(layout.family_names.empty() || layout.family_names.size() == layout.families,
          ErrorKind::Parameter, "family_names must name every family");

  ConceptSpace space;
  space.layout_ = layout;
  space.seed_ = seed;
  auto& names = space.layout_.family_names;
  if (names.empty()) {
    for (std::size_t f = 0; f < layout.families; ++f)
      names.push_back(f < kDefaultFamilies.size() ? kDefaultFamilies[f] : "family" + std::to_string(f));
  }

  auto geometry = numerics::Rng::substream(seed, 1);
  auto embed = numerics::Rng::substream(seed, 2);
  const double two_pi = 2.0 * std::numbers::pi;

  std::uint32_t next_id = 0;
  for (std::size_t f = 0; f < layout.families; ++f) {
    const double fa = two_pi * static_cast<double>(f) / static_cast<double>(layout.families);
    const double offset = two_pi * geometry.uniform_open();
    const auto direction = random_unit(embed, layout.embed_dim);
    for (std::size_t m = 0; m < layout.members; ++m) {
      ConceptRecord r;
      r.id = ConceptId{next_id++};
      r.name = names[f] + "-" + std::to_string(m);
      r.family = names[f];
      const double ma = offset + two_pi * static_cast<double>(m) / static_cast<double>(layout.members);
      Mode mode;
      mode.mean.assign(layout.data_dim, 0.0);
      mode.mean[0] = layout.family_radius * std::cos(fa) + layout.member_radius * std::cos(ma);
      mode.mean[1] = layout.family_radius * std::sin(fa) + layout.member_radius * std::sin(ma);
      mode.stddev = layout.mode_std;
      r.mode = std::move(mode);
      r.abnormal = layout.abnormal && layout.abnormal->family == f && layout.abnormal->member == m;
      r.embedding = jittered(direction,
                             layout.family_spread * (r.abnormal ? layout.abnormal_spread_scale : 1.0), embed);
      space.records_.push_back(std::move(r));
    }
  }
  if (layout.synonyms) {
    for (std::size_t f = 0; f < layout.families; ++f) {
      const auto& anchor = space.records_[f * layout.members];
      ConceptRecord r;
      r.id = ConceptId{next_id++};
      r.name = anchor.name + "~syn";
      r.family = anchor.family;
      r.mode = anchor.mode;
      r.embedding = jittered(anchor.embedding, layout.synonym_spread, embed);
      r.synonym_of = anchor.id;
      space.records_.push_back(std::move(r));
    }
  }
  ConceptRecord null_record;
  null_record.id = ConceptId{next_id++};
  null_record.name = "<null>";
  null_record.embedding = random_unit(embed, layout.embed_dim);
  null_record.is_null = true;
  space.records_.push_back(std::move(null_record));

  space.finalize();
  const auto summary = family_cosine_summary(space);
  require(summary.within_family_mean > summary.cross_family_mean, ErrorKind::Parameter,
          "family_spread too large: within-family cosine does not exceed cross-family cosine");
  return space;
}

void ConceptSpace::finalize() {
  family_names_ = layout_.family_names;
  std::vector<double> flat;
  flat.reserve(records_.size() * layout_.embed_dim);
  bool have_null = false;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    require(r.id.value == i, ErrorKind::Format, "concept ids must be dense and ordered");
    require(r.embedding.size() == layout_.embed_dim, ErrorKind::Format,
            "embedding of '" + r.name + "' has the wrong length");
    if (r.is_null) {
      require(!have_null, ErrorKind::Format, "more than one null concept");
      require(!r.mode.has_value(), ErrorKind::Format, "the null concept cannot have a mode");
      have_null = true;
      null_id_ = r.id;
    } else {
      require(r.mode.has_value() && r.mode->mean.size() == layout_.data_dim, ErrorKind::Format,
              "concept '" + r.name + "' needs a mode of dimension data_dim");
    }
    flat.insert(flat.end(), r.embedding.begin(), r.embedding.end());
  }
  require(have_null, ErrorKind::Format, "concept space has no null concept");
  for (const auto& r : records_) {
    if (!r.synonym_of) continue;
    require(r.synonym_of->value < records_.size(), ErrorKind::Format, "dangling synonym reference");
    const auto& ref = records_[r.synonym_of->value];
    require(ref.mode && r.mode && ref.mode->mean == r.mode->mean && ref.mode->stddev == r.mode->stddev,
            ErrorKind::Format, "synonym '" + r.name + "' must share its referent's mode");
  }
  table_ = numerics::Tensor::constant({records_.size(), layout_.embed_dim}, std::move(flat));
}

const ConceptRecord& ConceptSpace::record(ConceptId id) const {
  require(id.value < records_.size(), ErrorKind::Lookup,
          "unknown concept id " + std::to_string(id.value));
  return records_[id.value];
}

ConceptId ConceptSpace::find(std::string_view name) const {
  for (const auto& r : records_)
    if (r.name == name) return r.id;
  fail(ErrorKind::Lookup, "unknown concept '" + std::string(name) + "'");
}

std::optional<ConceptId> ConceptSpace::abnormal_id() const {
  for (const auto& r : records_)
    if (r.abnormal) return r.id;
  return std::nullopt;
}

std::optional<ConceptId> ConceptSpace::synonym_for(ConceptId id) const {
  for (const auto& r : records_)
    if (r.synonym_of && *r.synonym_of == id) return r.id;
  return std::nullopt;
}

ConceptId ConceptSpace::referent_of(ConceptId id) const {
  const auto& r = record(id);
  return r.synonym_of ? *r.synonym_of : r.id;
}

bool ConceptSpace::same_group(ConceptId a, ConceptId b) const { return referent_of(a) == referent_of(b); }

std::vector<ConceptId> ConceptSpace::family_members(std::string_view family) const {
  std::vector<ConceptId> out;
  for (const auto& r : records_)
    if (r.family == family && !r.synonym_of && !r.is_null) out.push_back(r.id);
  return out;
}

std::vector<ConceptId> ConceptSpace::anchors() const {
  std::vector<ConceptId> out;
  for (const auto& f : family_names_) {
    const auto members = family_members(f);
    if (!members.empty()) out.push_back(members.front());
  }
  return out;
}

std::vector<ConceptId> ConceptSpace::named_concepts() const {
  std::vector<ConceptId> out;
  for (const auto& r : records_)
    if (!r.synonym_of && !r.is_null) out.push_back(r.id);
  return out;
}

std::vector<ConceptId> ConceptSpace::concepts_with_modes() const {
  std::vector<ConceptId> out;
  for (const auto& r : records_)
    if (r.mode) out.push_back(r.id);
  return out;
}

std::span<const double> ConceptSpace::embedding_of(ConceptId id) const { return record(id).embedding; }

// --- file format ----------------------------------------------------------

std::string ConceptSpace::to_text() const {
  using support::format_double;
  using support::format_doubles;
  std::ostringstream os;
  os << "# eraselab concept space\n";
  os << "format = eraselab-concepts/1\n";
  os << "seed = " << seed_ << "\n\n[layout]\n";
  os << "families = " << layout_.families << "\n";
  os << "members = " << layout_.members << "\n";
  os << "embed_dim = " << layout_.embed_dim << "\n";
  os << "data_dim = " << layout_.data_dim << "\n";
  os << "family_radius = " << format_double(layout_.family_radius) << "\n";
  os << "member_radius = " << format_double(layout_.member_radius) << "\n";
  os << "mode_std = " << format_double(layout_.mode_std) << "\n";
  os << "family_spread = " << format_double(layout_.family_spread) << "\n";
  os << "synonym_spread = " << format_double(layout_.synonym_spread) << "\n";
  os << "abnormal_spread_scale = " << format_double(layout_.abnormal_spread_scale) << "\n";
  os << "synonyms = " << (layout_.synonyms ? "true" : "false") << "\n";
  os << "abnormal = ";
  if (layout_.abnormal) os << layout_.abnormal->family << " " << layout_.abnormal->member;
  else os << "none";
  os << "\nfamily_names =";
  for (const auto& n : layout_.family_names) os << " " << n;
  os << "\n";
  for (const auto& r : records_) {
    os << "\n[concept " << r.id.value << "]\n";
    os << "name = " << r.name << "\n";
    os << "family = " << r.family << "\n";
    if (r.mode) {
      os << "mode_mean = " << format_doubles(r.mode->mean) << "\n";
      os << "mode_std = " << format_double(r.mode->stddev) << "\n";
    }
    os << "synonym_of = " << (r.synonym_of ? std::to_string(r.synonym_of->value) : "none") << "\n";
    os << "abnormal = " << (r.abnormal ? "true" : "false") << "\n";
    os << "null = " << (r.is_null ? "true" : "false") << "\n";
    os << "embedding = " << format_doubles(r.embedding) << "\n";
  }
  return os.str();
}

ConceptSpace ConceptSpace::from_text(std::string_view text, std::string_view source_name) {
  const auto doc = support::parse_keyvalue(text, source_name);
  const std::string src(source_name);
  auto where = [&](const support::Entry& e) { return src + ":" + std::to_string(e.line) + ": "; };
  auto get = [&](const support::Section& s, const char* key) -> const support::Entry& {
    const auto* e = s.find(key);
    if (!e) fail(ErrorKind::Format, src + ":" + std::to_string(s.line) + ": section [" + s.name +
                                        "] is missing '" + key + "'");
    return *e;
  };
  auto as_uint = [&](const support::Entry& e) {
    const auto v = support::parse_int(e.value);
    if (!v || *v < 0) fail(ErrorKind::Format, where(e) + "expected a non-negative integer for '" + e.key + "'");
    return static_cast<std::size_t>(*v);
  };
  auto as_double = [&](const support::Entry& e) {
    const auto v = support::parse_double(e.value);
    if (!v) fail(ErrorKind::Format, where(e) + "expected a number for '" + e.key + "'");
    return *v;
  };
  auto as_bool = [&](const support::Entry& e) {
    const auto v = support::parse_bool(e.value);
    if (!v) fail(ErrorKind::Format, where(e) + "expected true/false for '" + e.key + "'");
    return *v;
  };
  auto as_doubles = [&](const support::Entry& e) {
    const auto v = support::parse_doubles(e.value);
    if (!v) fail(ErrorKind::Format, where(e) + "expected a list of numbers for '" + e.key + "'");
    return *v;
  };

  ConceptSpace space;
  const auto& top = doc.sections.front();
  const auto& fmt = get(top, "format");
  if (fmt.value != "eraselab-concepts/1")
    fail(ErrorKind::Format, where(fmt) + "unsupported format '" + fmt.value + "'");
  space.seed_ = as_uint(get(top, "seed"));

  const support::Section* layout = nullptr;
  for (const auto& s : doc.sections)
    if (s.name == "layout") layout = &s;
  if (!layout) fail(ErrorKind::Format, src + ": missing [layout] section");
  auto& L = space.layout_;
  L.families = as_uint(get(*layout, "families"));
  L.members = as_uint(get(*layout, "members"));
  L.embed_dim = as_uint(get(*layout, "embed_dim"));
  L.data_dim = as_uint(get(*layout, "data_dim"));
  L.family_radius = as_double(get(*layout, "family_radius"));
  L.member_radius = as_double(get(*layout, "member_radius"));
  L.mode_std = as_double(get(*layout, "mode_std"));
  L.family_spread = as_double(get(*layout, "family_spread"));
  L.synonym_spread = as_double(get(*layout, "synonym_spread"));
  L.abnormal_spread_scale = as_double(get(*layout, "abnormal_spread_scale"));
  L.synonyms = as_bool(get(*layout, "synonyms"));
  {
    const auto& e = get(*layout, "abnormal");
    if (e.value == "none") {
      L.abnormal.reset();
    } else {
      const auto v = support::parse_doubles(e.value);
      if (!v || v->size() != 2) fail(ErrorKind::Format, where(e) + "expected 'family member' or 'none'");
      L.abnormal = MemberIndex{static_cast<std::size_t>((*v)[0]), static_cast<std::size_t>((*v)[1])};
    }
  }
  {
    std::istringstream ss(get(*layout, "family_names").value);
    L.family_names.clear();
    for (std::string n; ss >> n;) L.family_names.push_back(n);
  }

  for (const auto& s : doc.sections) {
    if (s.name.rfind("concept ", 0) != 0) {
      if (!s.name.empty() && s.name != "layout")
        fail(ErrorKind::Format, src + ":" + std::to_string(s.line) + ": unknown section [" + s.name + "]");
      continue;
    }
    const auto id = support::parse_int(std::string_view(s.name).substr(8));
    if (!id || *id < 0) fail(ErrorKind::Format, src + ":" + std::to_string(s.line) + ": bad concept id");
    ConceptRecord r;
    r.id = ConceptId{static_cast<std::uint32_t>(*id)};
    r.name = get(s, "name").value;
    r.family = get(s, "family").value;
    if (const auto* mean = s.find("mode_mean")) {
      r.mode = Mode{as_doubles(*mean), as_double(get(s, "mode_std"))};
    }
    const auto& syn = get(s, "synonym_of");
    if (syn.value != "none") r.synonym_of = ConceptId{static_cast<std::uint32_t>(as_uint(syn))};
    r.abnormal = as_bool(get(s, "abnormal"));
    r.is_null = as_bool(get(s, "null"));
    r.embedding = as_doubles(get(s, "embedding"));
    space.records_.push_back(std::move(r));
  }
  space.finalize();
  return space;
}

void ConceptSpace::save(const std::string& path) const { support::write_file(path, to_text()); }

ConceptSpace ConceptSpace::load(const std::string& path) {
  return from_text(support::read_file(path), path);
}

// --- derived operations ---------------------------------------------------

CosineSummary family_cosine_summary(const ConceptSpace& space) {
  const auto named = space.named_concepts();
  double within = 0.0, cross = 0.0;
  std::size_t nw = 0, nc = 0;
  for (std::size_t i = 0; i < named.size(); ++i) {
    for (std::size_t j = i + 1; j < named.size(); ++j) {
      const auto& a = space.record(named[i]);
      const auto& b = space.record(named[j]);
      const double c = cosine_similarity(a.embedding, b.embedding);
      if (a.family == b.family) {
        within += c;
        ++nw;
      } else {
        cross += c;
        ++nc;
      }
    }
  }
  return {nw ? within / static_cast<double>(nw) : 0.0, nc ? cross / static_cast<double>(nc) : 0.0};
}

VocabularySubset restrict_vocabulary(const ConceptSpace& space, ConceptId source, std::size_t k) {
  const auto& src = space.record(source);
  require(k >= 1 && k + 1 <= space.size(), ErrorKind::Parameter,
          "vocabulary size k=" + std::to_string(k) + " outside [1, " + std::to_string(space.size() - 1) + "]");
  std::vector<std::pair<double, ConceptId>> scored;
  for (const auto& r : space.records()) {
    if (r.id == source) continue;
    scored.emplace_back(cosine_similarity(src.embedding, r.embedding), r.id);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  VocabularySubset subset;
  subset.source = source;
  subset.k = k;
  std::vector<double> flat;
  for (std::size_t i = 0; i < k; ++i) {
    subset.ids.push_back(scored[i].second);
    const auto e = space.embedding_of(scored[i].second);
    flat.insert(flat.end(), e.begin(), e.end());
  }
  subset.embeddings = numerics::Tensor::constant({k, space.embed_dim()}, std::move(flat));
  return subset;
}

numerics::Tensor mixture_embedding(numerics::Tape& tape, const numerics::Tensor& weights,
                                   const VocabularySubset& subset) {
  require(weights.rank() == 1 && weights.size() == subset.ids.size(), ErrorKind::Input,
          "mixture_embedding: " + std::to_string(weights.size()) + " weights for a subset of " +
              std::to_string(subset.ids.size()));
  double total = 0.0;
  for (double w : weights.values()) total += w;
  require(std::abs(total - 1.0) <= 1e-9, ErrorKind::Input, "mixture_embedding: weights must sum to 1");
  return numerics::weighted_sum(tape, weights, subset.embeddings);
}

std::vector<double> mixture_embedding(std::span<const double> weights, const VocabularySubset& subset) {
  numerics::Tape tape;
  const auto out =
      mixture_embedding(tape, numerics::Tensor::vector({weights.begin(), weights.end()}), subset);
  return {out.values().begin(), out.values().end()};
}

std::vector<double> interpolate_concepts(const ConceptSpace& space, ConceptId c1, ConceptId c2,
                                         double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::Parameter, "interpolation alpha must lie in [0, 1]");
  const auto a = space.embedding_of(c1);
  const auto b = space.embedding_of(c2);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - alpha) * a[i] + alpha * b[i];
  return out;
}

std::vector<double> sample_data(const ConceptSpace& space, ConceptId id, std::size_t n,
                                numerics::Rng& rng) {
  const auto& r = space.record(id);
  require(r.mode.has_value(), ErrorKind::Usage, "concept '" + r.name + "' has no ground-truth mode");
  const std::size_t d = r.mode->mean.size();
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = r.mode->mean[j] + r.mode->stddev * rng.normal();
  return out;
}

}  // namespace eraselab::concepts
