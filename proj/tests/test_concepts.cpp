#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eraselab/concepts/concept_space.hpp"
#include "eraselab/errors.hpp"

using namespace eraselab;
using namespace eraselab::concepts;

namespace {

const ConceptSpace& default_space() {
  static const ConceptSpace space = ConceptSpace::build(SpaceLayout{}, 7);
  return space;
}

long double norm(std::span<const double> v) {
  long double s = 0;
  for (double x : v) s += static_cast<long double>(x) * x;
  return std::sqrt(s);
}

long double cosine(std::span<const double> a, std::span<const double> b) {
  long double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += static_cast<long double>(a[i]) * b[i];
  return d / (norm(a) * norm(b));
}

}  // namespace

TEST_CASE("default space: 25 named concepts, 5 synonyms and the null concept") {
  const auto& s = default_space();
  CHECK(s.size() == 31);
  CHECK(s.named_concepts().size() == 25);
  CHECK(s.anchors().size() == 5);
  CHECK(s.concepts_with_modes().size() == 30);
  CHECK(s.record(s.null_id()).is_null);
  CHECK_FALSE(s.record(s.null_id()).mode.has_value());
  std::size_t nulls = 0, synonyms = 0;
  for (const auto& r : s.records()) {
    nulls += r.is_null;
    synonyms += r.synonym_of.has_value();
  }
  CHECK(nulls == 1);
  CHECK(synonyms == 5);
  REQUIRE(s.abnormal_id());
  CHECK(s.record(*s.abnormal_id()).name == "horn-3");
}

TEST_CASE("default space: embeddings are unit norm and synonyms keep the referent's mode") {
  const auto& s = default_space();
  for (const auto& r : s.records()) CHECK(static_cast<double>(norm(s.embedding_of(r.id))) == doctest::Approx(1.0).epsilon(1e-12));
  for (auto a : s.anchors()) {
    const auto syn = s.synonym_for(a);
    REQUIRE(syn);
    CHECK(s.record(*syn).mode->mean == s.record(a).mode->mean);
    CHECK(s.record(*syn).mode->stddev == s.record(a).mode->stddev);
    CHECK(s.record(*syn).embedding != s.record(a).embedding);
    CHECK(cosine(s.embedding_of(a), s.embedding_of(*syn)) >= 0.9);
    CHECK(s.referent_of(*syn) == a);
    CHECK(s.same_group(a, *syn));
  }
}

TEST_CASE("default space: within-family cosine exceeds cross-family by 0.2") {
  const auto& s = default_space();
  long double within = 0, cross = 0;
  std::size_t nw = 0, nc = 0;
  const auto named = s.named_concepts();
  for (std::size_t i = 0; i < named.size(); ++i)
    for (std::size_t j = i + 1; j < named.size(); ++j) {
      const auto c = cosine(s.embedding_of(named[i]), s.embedding_of(named[j]));
      if (s.record(named[i]).family == s.record(named[j]).family) {
        within += c;
        ++nw;
      } else {
        cross += c;
        ++nc;
      }
    }
  const auto summary = family_cosine_summary(s);
  CHECK(summary.within_family_mean == doctest::Approx(static_cast<double>(within / nw)).epsilon(1e-12));
  CHECK(summary.cross_family_mean == doctest::Approx(static_cast<double>(cross / nc)).epsilon(1e-12));
  CHECK(summary.within_family_mean >= summary.cross_family_mean + 0.2);
}

TEST_CASE("build: deterministic per seed, rejects degenerate layouts") {
  const auto a = ConceptSpace::build(SpaceLayout{}, 99), b = ConceptSpace::build(SpaceLayout{}, 99);
  CHECK(a.to_text() == b.to_text());
  CHECK(a.to_text() != default_space().to_text());
  SpaceLayout one_family;
  one_family.families = 1;
  CHECK_THROWS_AS(ConceptSpace::build(one_family, 1), Error);
  SpaceLayout one_member;
  one_member.members = 1;
  CHECK_THROWS_AS(ConceptSpace::build(one_member, 1), Error);
}

TEST_CASE("concept-space file round-trips exactly") {
  const auto& s = default_space();
  const auto back = ConceptSpace::from_text(s.to_text());
  CHECK(back.to_text() == s.to_text());
  for (const auto& r : s.records()) CHECK(back.record(r.id).embedding == r.embedding);
  CHECK_THROWS_AS(ConceptSpace::from_text("format = nope\n"), Error);
}

TEST_CASE("lookup errors") {
  const auto& s = default_space();
  CHECK_THROWS_AS(s.record(ConceptId{999}), Error);
  CHECK_THROWS_AS(s.find("no-such-concept"), Error);
  CHECK(s.record(s.find("tower-2")).family == "tower");
}

TEST_CASE("restrict_vocabulary: equals a brute-force cosine sort") {
  const auto& s = default_space();
  for (const auto& src : s.records()) {
    std::vector<std::pair<long double, std::uint32_t>> all;
    for (const auto& r : s.records())
      if (r.id != src.id) all.emplace_back(cosine(s.embedding_of(src.id), s.embedding_of(r.id)), r.id.value);
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
      return x.first != y.first ? x.first > y.first : x.second < y.second;
    });
    for (std::size_t k : {1u, 5u, 30u}) {
      const auto sub = restrict_vocabulary(s, src.id, k);
      REQUIRE(sub.ids.size() == k);
      for (std::size_t i = 0; i < k; ++i) CHECK(sub.ids[i].value == all[i].second);
      CHECK(sub.embeddings.shape() == numerics::Shape{k, s.embed_dim()});
    }
  }
}

TEST_CASE("restrict_vocabulary: synonym first, prefix-consistent, range-checked") {
  const auto& s = default_space();
  for (auto a : s.anchors()) CHECK(restrict_vocabulary(s, a, 1).ids.front() == *s.synonym_for(a));
  const auto src = s.find("vehicle-3");
  for (std::size_t k = 1; k < s.size() - 1; ++k) {
    const auto small = restrict_vocabulary(s, src, k), big = restrict_vocabulary(s, src, k + 1);
    CHECK(std::equal(small.ids.begin(), small.ids.end(), big.ids.begin()));
  }
  CHECK_THROWS_AS(restrict_vocabulary(s, src, 0), Error);
  CHECK_THROWS_AS(restrict_vocabulary(s, src, s.size()), Error);
}

TEST_CASE("mixture_embedding: one-hot, duplicate and random weights") {
  const auto& s = default_space();
  const auto sub = restrict_vocabulary(s, s.find("dog-0"), 5);
  for (std::size_t i = 0; i < 5; ++i) {
    std::vector<double> w(5, 0.0);
    w[i] = 1.0;
    const auto e = mixture_embedding(w, sub);
    const auto ref = s.embedding_of(sub.ids[i]);
    CHECK(std::equal(e.begin(), e.end(), ref.begin()));
  }

  VocabularySubset twin;
  twin.source = s.find("dog-0");
  twin.k = 2;
  twin.ids = {s.find("dog-1"), s.find("dog-1")};
  const auto e1 = s.embedding_of(twin.ids[0]);
  std::vector<double> rows(e1.begin(), e1.end());
  rows.insert(rows.end(), e1.begin(), e1.end());
  twin.embeddings = numerics::Tensor::constant({2, s.embed_dim()}, rows);
  const auto mixed = mixture_embedding(std::vector<double>{0.5, 0.5}, twin);
  for (std::size_t d = 0; d < mixed.size(); ++d) CHECK(mixed[d] == doctest::Approx(e1[d]).epsilon(1e-15));

  numerics::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w(5);
    double total = 0;
    for (auto& v : w) total += (v = rng.uniform_open());
    for (auto& v : w) v /= total;
    const auto e = mixture_embedding(w, sub);
    for (std::size_t d = 0; d < s.embed_dim(); ++d) {
      long double ref = 0;
      for (std::size_t i = 0; i < 5; ++i) ref += static_cast<long double>(w[i]) * s.embedding_of(sub.ids[i])[d];
      CHECK(std::abs(e[d] - static_cast<double>(ref)) < 1e-12);
    }
  }
  CHECK_THROWS_AS(mixture_embedding(std::vector<double>{1.0}, sub), Error);
}

TEST_CASE("interpolate_concepts: endpoints, midpoint of a concept with itself, range") {
  const auto& s = default_space();
  const auto a = s.find("dog-0"), b = s.find("tower-0");
  const auto e0 = interpolate_concepts(s, a, b, 0.0), e1 = interpolate_concepts(s, a, b, 1.0);
  CHECK(std::equal(e0.begin(), e0.end(), s.embedding_of(a).begin()));
  CHECK(std::equal(e1.begin(), e1.end(), s.embedding_of(b).begin()));
  const auto mid = interpolate_concepts(s, a, a, 0.5);
  for (std::size_t d = 0; d < mid.size(); ++d) CHECK(mid[d] == doctest::Approx(s.embedding_of(a)[d]).epsilon(1e-15));
  CHECK_THROWS_AS(interpolate_concepts(s, a, b, -0.1), Error);
  CHECK_THROWS_AS(interpolate_concepts(s, a, b, 1.1), Error);
}

TEST_CASE("sample_data: empty, law of large numbers, seeds, null concept") {
  const auto& s = default_space();
  const auto id = s.find("player-2");
  numerics::Rng rng(1);
  CHECK(sample_data(s, id, 0, rng).empty());
  const std::size_t n = 10000;
  const auto pts = sample_data(s, id, n, rng);
  const auto& mode = *s.record(id).mode;
  for (std::size_t d = 0; d < s.data_dim(); ++d) {
    long double m = 0;
    for (std::size_t i = 0; i < n; ++i) m += pts[i * s.data_dim() + d];
    CHECK(std::abs(static_cast<double>(m / n) - mode.mean[d]) < 5 * mode.stddev / 100);
  }
  numerics::Rng r1(1), r2(2);
  CHECK(sample_data(s, id, 4, r1) != sample_data(s, id, 4, r2));
  CHECK_THROWS_AS(sample_data(s, s.null_id(), 1, rng), Error);
}
