#include "eraselab/evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eraselab/diffusion/sampling.hpp"
#include "eraselab/errors.hpp"
#include "eraselab/support/keyvalue.hpp"

namespace eraselab::evaluation {

using support::format_double;

namespace {
constexpr std::uint64_t kEvalStream = 0x6576616c00000000ull;  // "eval"
}

const ConceptScores& GenerationReport::at(ConceptId id) const {
  for (const auto& r : rows)
    if (r.id == id) return r;
  fail(ErrorKind::Lookup, "report '" + model_label + "' has no row for concept " + std::to_string(id.value));
}

std::string metric_name(Metric m, std::size_t k) {
  switch (m) {
    case Metric::DS1: return "DS-1";
    case Metric::DSk: return "DS-" + std::to_string(k);
    case Metric::CS1: return "CS-1";
    case Metric::CSk: return "CS-" + std::to_string(k);
  }
  return "?";
}

double metric_value(const ConceptScores& s, Metric m) {
  switch (m) {
    case Metric::DS1: return s.ds1;
    case Metric::DSk: return s.dsk;
    case Metric::CS1: return s.cs1;
    case Metric::CSk: return s.csk;
  }
  return 0.0;
}

std::vector<double> evaluation_samples(const diffusion::DenoiserModel& model, const concepts::ConceptSpace& space,
                                       ConceptId target, std::size_t n, std::uint64_t seed) {
  auto rng = numerics::Rng::substream(seed, kEvalStream + target.value);
  return diffusion::sample_batch(model, space.embedding_of(target), n, rng);
}

double detection_score(const diffusion::DenoiserModel& model, const concepts::ConceptSpace& space,
                       const ClassifierOracle& oracle, ConceptId target, std::size_t k, std::size_t n,
                       std::uint64_t seed) {
  require(n >= 1, ErrorKind::Parameter, "detection_score needs n >= 1");
  return score_samples(oracle, target, evaluation_samples(model, space, target, n, seed), k).detection;
}

double confidence_score(const diffusion::DenoiserModel& model, const concepts::ConceptSpace& space,
                        const ClassifierOracle& oracle, ConceptId target, std::size_t k, std::size_t n,
                        std::uint64_t seed) {
  require(n >= 1, ErrorKind::Parameter, "confidence_score needs n >= 1");
  return score_samples(oracle, target, evaluation_samples(model, space, target, n, seed), k).confidence;
}

GenerationReport generation_report(const diffusion::DenoiserModel& model, const concepts::ConceptSpace& space,
                                   const ClassifierOracle& oracle, const std::vector<ConceptId>& concepts,
                                   std::size_t k, std::size_t n, std::uint64_t seed, std::string model_label) {
  require(n >= 1, ErrorKind::Parameter, "generation_report needs n >= 1");
  GenerationReport report;
  report.model_label = std::move(model_label);
  report.k = k;
  report.n = n;
  report.seed = seed;
  auto ids = concepts;
  std::sort(ids.begin(), ids.end());
  for (const auto id : ids) {
    const auto pts = evaluation_samples(model, space, id, n, seed);
    const auto top1 = score_samples(oracle, id, pts, 1);
    const auto topk = score_samples(oracle, id, pts, k);
    report.rows.push_back({id, top1.detection, topk.detection, top1.confidence, topk.confidence});
  }
  return report;
}

ImpactMatrix ImpactMatrix::square() const {
  ImpactMatrix out;
  out.metric = metric;
  out.row_labels = row_labels;
  out.row_concepts = row_concepts;
  out.columns = row_concepts;
  out.n = n;
  out.seed = seed;
  for (std::size_t r = 0; r < row_count(); ++r) {
    for (const auto c : row_concepts) {
      const auto it = std::find(columns.begin(), columns.end(), c);
      require(it != columns.end(), ErrorKind::Input, "square(): a row concept has no column");
      out.values.push_back(at(r, static_cast<std::size_t>(it - columns.begin())));
    }
  }
  return out;
}

ImpactMatrix impact_matrix(const GenerationReport& base, const std::vector<std::string>& row_labels,
                           const std::vector<ConceptId>& row_concepts,
                           const std::vector<GenerationReport>& sanitized, Metric metric) {
  require(row_labels.size() == sanitized.size() && row_concepts.size() == sanitized.size(), ErrorKind::Input,
          "impact_matrix: one label, erased concept and report per row required");
  ImpactMatrix m;
  m.metric = metric_name(metric, base.k);
  m.row_labels = row_labels;
  m.row_concepts = row_concepts;
  m.n = base.n;
  m.seed = base.seed;
  for (const auto& r : base.rows) m.columns.push_back(r.id);
  for (const auto& rep : sanitized) {
    require(rep.n == base.n && rep.seed == base.seed && rep.k == base.k, ErrorKind::Input,
            "impact_matrix: sanitized report '" + rep.model_label + "' used different n, k or seed");
    for (const auto& col : base.rows)
      m.values.push_back(metric_value(col, metric) - metric_value(rep.at(col.id), metric));
  }
  return m;
}

ImpactMatrix impact_matrix(const diffusion::DenoiserModel& base,
                           const std::map<ConceptId, diffusion::DenoiserModel>& sanitized,
                           const std::vector<ConceptId>& erased, const concepts::ConceptSpace& space,
                           const ClassifierOracle& oracle, const std::vector<ConceptId>& columns, Metric metric,
                           std::size_t k, std::size_t n, std::uint64_t seed) {
  for (const auto c : erased)
    require(sanitized.count(c) == 1, ErrorKind::Input,
            "impact_matrix: no sanitized model for erased concept '" + space.record(c).name + "'");
  const auto g0 = generation_report(base, space, oracle, columns, k, n, seed, "base");
  std::vector<std::string> labels;
  std::vector<GenerationReport> reports;
  for (const auto c : erased) {
    labels.push_back(space.record(c).name);
    reports.push_back(generation_report(sanitized.at(c), space, oracle, columns, k, n, seed, labels.back()));
  }
  return impact_matrix(g0, labels, erased, reports, metric);
}

LocalityScore locality_score(const ImpactMatrix& delta, const concepts::ConceptSpace& space) {
  const auto abnormal = space.abnormal_id();
  double within = 0.0, cross = 0.0;
  std::size_t nw = 0, nc = 0;
  for (std::size_t r = 0; r < delta.row_count(); ++r) {
    const auto& erased = space.record(delta.row_concepts[r]);
    require(!erased.family.empty(), ErrorKind::Input, "locality_score: erased concept has no family");
    for (std::size_t c = 0; c < delta.column_count(); ++c) {
      const auto col = delta.columns[c];
      if (space.same_group(col, erased.id) || (abnormal && col == *abnormal)) continue;
      if (space.record(col).family == erased.family) {
        within += delta.at(r, c);
        ++nw;
      } else {
        cross += delta.at(r, c);
        ++nc;
      }
    }
  }
  require(nw > 0, ErrorKind::Input, "locality_score: no within-family cells");
  LocalityScore s;
  s.within_mean = within / static_cast<double>(nw);
  s.cross_mean = nc ? cross / static_cast<double>(nc) : 0.0;
  s.ratio = s.within_mean / std::max(s.cross_mean, 1e-6);
  return s;
}

double asymmetry_score(const ImpactMatrix& delta) {
  const std::size_t n = delta.row_count();
  require(n == delta.column_count() && delta.row_concepts == delta.columns, ErrorKind::Input,
          "asymmetry_score: matrix must be square over one concept set");
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = delta.at(i, j) - delta.at(j, i);
      diff += d * d;
      norm += delta.at(i, j) * delta.at(i, j);
    }
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12);
}

double mean_off_diagonal(const ImpactMatrix& delta, std::size_t row) {
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < delta.column_count(); ++c) {
    if (delta.columns[c] == delta.row_concepts[row]) continue;
    s += delta.at(row, c);
    ++count;
  }
  return count ? s / static_cast<double>(count) : 0.0;
}

std::set<ConceptId> abnormal_concepts(const GenerationReport& base, const ImpactMatrix& delta,
                                      const AbnormalThresholds& thresholds) {
  std::set<ConceptId> flagged;
  for (std::size_t c = 0; c < delta.column_count(); ++c) {
    const auto id = delta.columns[c];
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < delta.row_count(); ++r) {
      if (delta.row_concepts[r] == id) continue;
      total += delta.at(r, c);
      ++count;
    }
    if (count == 0) continue;
    const double mean_impact = total / static_cast<double>(count);
    if (base.at(id).dsk < thresholds.base_detection_below && mean_impact > thresholds.mean_impact_above)
      flagged.insert(id);
  }
  return flagged;
}

ErasureRates esr_psr(const GenerationReport& report, const std::vector<ConceptId>& erase_set,
                     const std::vector<ConceptId>& preserve_set, std::size_t k) {
  require(!erase_set.empty() && !preserve_set.empty(), ErrorKind::Input, "esr_psr: empty concept set");
  for (const auto e : erase_set)
    require(std::find(preserve_set.begin(), preserve_set.end(), e) == preserve_set.end(), ErrorKind::Input,
            "esr_psr: erase and preserve sets overlap");
  require(k == 1 || k == report.k, ErrorKind::Input,
          "esr_psr: report has DS-1 and DS-" + std::to_string(report.k) + " only");
  auto ds = [&](ConceptId id) { return k == 1 ? report.at(id).ds1 : report.at(id).dsk; };
  ErasureRates rates;
  for (const auto e : erase_set) rates.esr += 1.0 - ds(e);
  for (const auto p : preserve_set) rates.psr += ds(p);
  rates.esr /= static_cast<double>(erase_set.size());
  rates.psr /= static_cast<double>(preserve_set.size());
  return rates;
}

ErasureRates esr_psr(const diffusion::DenoiserModel& model, const concepts::ConceptSpace& space,
                     const ClassifierOracle& oracle, const std::vector<ConceptId>& erase_set,
                     const std::vector<ConceptId>& preserve_set, std::size_t k, std::size_t n,
                     std::uint64_t seed) {
  std::vector<ConceptId> all = erase_set;
  all.insert(all.end(), preserve_set.begin(), preserve_set.end());
  const auto report = generation_report(model, space, oracle, all, std::max<std::size_t>(k, 1), n, seed);
  return esr_psr(report, erase_set, preserve_set, k);
}

std::string report_csv(const GenerationReport& report, const concepts::ConceptSpace& space) {
  std::ostringstream os;
  os << "concept_id,name,family,ds1,ds" << report.k << ",cs1,cs" << report.k << ",k,n,seed,model\n";
  for (const auto& r : report.rows) {
    const auto& rec = space.record(r.id);
    os << r.id.value << ',' << rec.name << ',' << rec.family << ',' << format_double(r.ds1) << ','
       << format_double(r.dsk) << ',' << format_double(r.cs1) << ',' << format_double(r.csk) << ',' << report.k
       << ',' << report.n << ',' << report.seed << ',' << report.model_label << '\n';
  }
  return os.str();
}

nlohmann::json report_json(const GenerationReport& report, const concepts::ConceptSpace& space) {
  nlohmann::json j;
  j["model"] = report.model_label;
  j["k"] = report.k;
  j["n"] = report.n;
  j["seed"] = report.seed;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"concept_id", r.id.value},
                         {"name", space.record(r.id).name},
                         {"ds1", r.ds1},
                         {"dsk", r.dsk},
                         {"cs1", r.cs1},
                         {"csk", r.csk}});
  }
  return j;
}

std::string impact_csv(const ImpactMatrix& delta, const concepts::ConceptSpace& space) {
  std::ostringstream os;
  os << "row,erased,metric,n,seed";
  for (const auto c : delta.columns) os << ',' << space.record(c).name;
  os << '\n';
  for (std::size_t r = 0; r < delta.row_count(); ++r) {
    os << delta.row_labels[r] << ',' << space.record(delta.row_concepts[r]).name << ',' << delta.metric << ','
       << delta.n << ',' << delta.seed;
    for (std::size_t c = 0; c < delta.column_count(); ++c) os << ',' << format_double(delta.at(r, c));
    os << '\n';
  }
  return os.str();
}

nlohmann::json impact_json(const ImpactMatrix& delta, const concepts::ConceptSpace& space) {
  nlohmann::json j;
  j["metric"] = delta.metric;
  j["n"] = delta.n;
  j["seed"] = delta.seed;
  j["columns"] = nlohmann::json::array();
  for (const auto c : delta.columns) j["columns"].push_back(space.record(c).name);
  j["rows"] = nlohmann::json::array();
  for (std::size_t r = 0; r < delta.row_count(); ++r) {
    std::vector<double> vals(delta.values.begin() + static_cast<std::ptrdiff_t>(r * delta.column_count()),
                             delta.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * delta.column_count()));
    j["rows"].push_back({{"label", delta.row_labels[r]},
                         {"erased", space.record(delta.row_concepts[r]).name},
                         {"values", vals}});
  }
  return j;
}

}  // namespace eraselab::evaluation
