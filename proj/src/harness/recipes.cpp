#include "eraselab/harness/recipes.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include "eraselab/diffusion/checkpoint.hpp"
#include "eraselab/diffusion/sampling.hpp"
#include "eraselab/diffusion/training.hpp"
#include "eraselab/erasure/erasure.hpp"
#include "eraselab/evaluation/oracle.hpp"
#include "eraselab/harness/heatmap.hpp"
#include "eraselab/support/keyvalue.hpp"

namespace eraselab::harness {

using concepts::ConceptId;
using concepts::ConceptSpace;
using diffusion::DenoiserModel;
using evaluation::GenerationReport;
using support::format_double;

namespace {

constexpr std::uint64_t kMixtureStream = 0x6d69787475726500ULL;

struct Base {
  ConceptSpace space;
  DenoiserModel model;
};

Base load_base(const ExperimentConfig& config) {
  auto space = ConceptSpace::load(config.base_space());
  auto ck = diffusion::load_checkpoint(config.base_checkpoint());
  require(ck.model.arch().embed_dim == space.embed_dim() && ck.model.arch().data_dim == space.data_dim(),
          ErrorKind::Input, "base checkpoint does not match the concept space in " + config.base);
  return {std::move(space), std::move(ck.model)};
}

std::vector<ConceptId> complement(const std::vector<ConceptId>& all, const std::vector<ConceptId>& remove) {
  std::vector<ConceptId> out;
  for (auto id : all)
    if (std::find(remove.begin(), remove.end(), id) == remove.end()) out.push_back(id);
  return out;
}

erasure::ErasureConfig erasure_config(const ExperimentConfig& config, const ConceptSpace& space,
                                      std::vector<ConceptId> erase_set, erasure::TargetStrategy strategy) {
  auto run = config.erasure.run;
  run.erase_set = std::move(erase_set);
  run.target_strategy = strategy;
  if (config.erasure.explicit_target) run.explicit_target = space.find(*config.erasure.explicit_target);
  run.seed = config.seed;
  return run;
}

nlohmann::json checkpoint_echo(const ExperimentConfig& config, const std::string& role) {
  return {{"experiment", to_string(config.kind)}, {"role", role}, {"config", content_text(config)}};
}

std::string rates_header(std::size_t k) {
  return "method,esr1,esr" + std::to_string(k) + ",psr1,psr" + std::to_string(k) + ",n,seed\n";
}

struct MethodRates {
  std::string method;
  evaluation::ErasureRates top1;
  evaluation::ErasureRates topk;
};

MethodRates rates_for(const std::string& method, const GenerationReport& report, const std::vector<ConceptId>& erase,
                      const std::vector<ConceptId>& preserve, std::size_t k) {
  return {method, evaluation::esr_psr(report, erase, preserve, 1), evaluation::esr_psr(report, erase, preserve, k)};
}

void write_report(ArtifactSink& sink, const std::string& stem, const GenerationReport& report, const ConceptSpace& space) {
  sink.csv(stem + ".csv", evaluation::report_csv(report, space));
  sink.json(stem + ".json", evaluation::report_json(report, space));
}

nlohmann::json history_json(const erasure::ErasureRunRecord& record, const ConceptSpace& space) {
  auto rows = nlohmann::json::array();
  for (const auto& h : record.dictionary_history)
    rows.push_back({{"step", h.step},
                    {"erased", space.record(h.erased).name},
                    {"argmax", space.record(h.argmax).name},
                    {"max_weight", h.max_weight},
                    {"entropy", h.entropy}});
  return {{"history", rows}};
}

nlohmann::json loss_json(const erasure::ErasureRunRecord& record, const ConceptSpace& space) {
  auto rows = nlohmann::json::array();
  for (const auto& s : record.steps)
    rows.push_back({{"step", s.step}, {"erased", space.record(s.erased).name}, {"l1", s.l1}, {"l2", s.l2}});
  return {{"method", record.method}, {"steps", rows}};
}

// Shared run scaffolding: manifest, log and failure capture.
using Body = std::function<void(ArtifactSink&, RunLog&)>;

ArtifactManifest guarded(const ExperimentConfig& config, const std::string& root, const std::string& name,
                         const Body& body) {
  ArtifactSink sink(root, name, config_hash(config), config.seed);
  RunLog log;
  std::optional<StageFailure> failure;
  try {
    body(sink, log);
    log.stage("done");
  } catch (const Error& e) {
    failure = StageFailure{log.current_stage(), e.kind(), e.what()};
  } catch (const std::filesystem::filesystem_error& e) {
    failure = StageFailure{log.current_stage(), ErrorKind::Io, e.what()};
  } catch (const std::exception& e) {
    failure = StageFailure{log.current_stage(), ErrorKind::Input, e.what()};
  }
  sink.manifest().failure = failure;
  try {
    sink.log("run.log", log.text(to_text(config), failure));
  } catch (const Error&) {
  }
  sink.finish();
  return sink.manifest();
}

void train_base(const ExperimentConfig& config, ArtifactSink& sink, RunLog& log) {
  log.stage("space");
  const auto space = config.space_file.empty() ? ConceptSpace::build(config.layout, config.space_seed.value_or(config.seed))
                                               : ConceptSpace::load(config.space_file);
  sink.text("concepts.txt", space.to_text());
  log.note("concepts: " + std::to_string(space.size()));

  log.stage("train");
  const auto& D = config.diffusion;
  diffusion::DenoiserArch arch;
  arch.data_dim = space.data_dim();
  arch.embed_dim = space.embed_dim();
  arch.time_features = D.time_features;
  arch.hidden = D.hidden;
  const auto schedule = diffusion::make_schedule(D.timesteps, D.beta_start, D.beta_end);
  auto trained = diffusion::train_base_model(space, arch, schedule, D.training, config.seed);
  const auto [first, last] = diffusion::smoothed_endpoints(trained.loss_trace, 200);
  log.note("loss " + format_double(first) + " -> " + format_double(last));
  sink.checkpoint("base.ckpt", trained.model, config.seed, checkpoint_echo(config, "base"));
  std::ostringstream trace;
  trace << "step,loss\n";
  for (std::size_t i = 0; i < trained.loss_trace.size(); ++i) trace << i << ',' << format_double(trained.loss_trace[i]) << '\n';
  sink.csv("loss_trace.csv", trace.str());
  sink.json("loss_trace.json", {{"loss", trained.loss_trace}});

  log.stage("evaluate");
  const evaluation::ClassifierOracle oracle(space);
  const auto& E = config.evaluation;
  const auto report = evaluation::generation_report(trained.model, space, oracle, space.concepts_with_modes(), E.k, E.n,
                                                    config.evaluation_seed(), "base");
  write_report(sink, "base_report", report, space);

  double normal_min = 1.0, normal_sum_ds1 = 0.0, normal_sum_dsk = 0.0;
  std::size_t normal = 0;
  nlohmann::json summary;
  for (const auto& r : report.rows) {
    if (space.record(space.referent_of(r.id)).abnormal) {
      summary["abnormal"] = {{"name", space.record(r.id).name}, {"ds1", r.ds1}, {"dsk", r.dsk}};
      continue;
    }
    normal_min = std::min(normal_min, r.ds1);
    normal_sum_ds1 += r.ds1;
    normal_sum_dsk += r.dsk;
    ++normal;
  }
  summary["k"] = E.k;
  summary["n"] = E.n;
  summary["normal_count"] = normal;
  summary["normal_min_ds1"] = normal_min;
  summary["normal_mean_ds1"] = normal ? normal_sum_ds1 / static_cast<double>(normal) : 0.0;
  summary["normal_mean_dsk"] = normal ? normal_sum_dsk / static_cast<double>(normal) : 0.0;
  sink.json("base_summary.json", summary);
}

void target_sweep(const ExperimentConfig& config, ArtifactSink& sink, RunLog& log) {
  log.stage("load");
  const auto base = load_base(config);
  const auto& space = base.space;
  const evaluation::ClassifierOracle oracle(space);
  const auto erase = resolve_concepts(space, config.erasure.erase);
  const auto columns = space.named_concepts();
  const auto& E = config.evaluation;
  const auto seed = config.evaluation_seed();

  log.stage("evaluate base");
  const auto base_report = evaluation::generation_report(base.model, space, oracle, columns, E.k, E.n, seed, "base");
  write_report(sink, "base_report", base_report, space);

  std::vector<std::string> labels;
  std::vector<ConceptId> row_concepts;
  std::vector<GenerationReport> reports;
  std::vector<std::string> targets;
  for (auto strategy : config.erasure.strategies) {
    const auto sname = erasure::to_string(strategy);
    for (auto anchor : erase) {
      const auto aname = space.record(anchor).name;
      const auto label = sname + "/" + aname;
      log.stage("erase " + label);
      auto run = erasure_config(config, space, {anchor}, strategy);
      auto result = erasure::run_fixed_target(base.model, space, run);
      auto echo = checkpoint_echo(config, label);
      echo["erasure"] = erasure::to_json(run, space);
      sink.checkpoint("sanitized/" + aname + "__" + sname + ".ckpt", result.sanitized, config.seed, echo);
      sink.csv("losses/" + aname + "__" + sname + ".csv", erasure::loss_trace_csv(result.record, space));
      targets.push_back(result.record.resolved_targets.at(anchor));
      log.note(label + " -> " + targets.back());

      log.stage("evaluate " + label);
      reports.push_back(evaluation::generation_report(result.sanitized, space, oracle, columns, E.k, E.n, seed, label));
      labels.push_back(label);
      row_concepts.push_back(anchor);
    }
  }

  log.stage("impact");
  const auto delta = evaluation::impact_matrix(base_report, labels, row_concepts, reports, evaluation::Metric::DS1);
  sink.csv("delta.csv", evaluation::impact_csv(delta, space));
  sink.json("delta.json", evaluation::impact_json(delta, space));
  sink.svg("delta.svg", heatmap_svg(delta, space, "impact " + delta.metric + " (rows: strategy/erased)"));

  std::ostringstream rows_csv;
  rows_csv << "strategy,erased,target,esr1,esr" << E.k << ",mean_off_diagonal\n";
  auto rows_json = nlohmann::json::array();
  std::ostringstream summary_csv;
  summary_csv << "strategy,mean_off_diagonal,esr1_mean,esr1_min,within_mean,cross_mean,locality_ratio\n";
  auto summary_json = nlohmann::json::array();
  std::size_t r = 0;
  for (auto strategy : config.erasure.strategies) {
    const auto sname = erasure::to_string(strategy);
    evaluation::ImpactMatrix block = delta;
    block.row_labels.clear();
    block.row_concepts.clear();
    block.values.clear();
    double off = 0.0, esr_sum = 0.0, esr_min = 1.0;
    for (std::size_t i = 0; i < erase.size(); ++i, ++r) {
      const auto id = row_concepts[r];
      const double row_off = evaluation::mean_off_diagonal(delta, r);
      const double esr1 = 1.0 - reports[r].at(id).ds1;
      const double esrk = 1.0 - reports[r].at(id).dsk;
      rows_csv << sname << ',' << space.record(id).name << ',' << targets[r] << ',' << format_double(esr1) << ','
               << format_double(esrk) << ',' << format_double(row_off) << '\n';
      rows_json.push_back({{"strategy", sname},
                           {"erased", space.record(id).name},
                           {"target", targets[r]},
                           {"esr1", esr1},
                           {"esrk", esrk},
                           {"mean_off_diagonal", row_off}});
      off += row_off;
      esr_sum += esr1;
      esr_min = std::min(esr_min, esr1);
      block.row_labels.push_back(labels[r]);
      block.row_concepts.push_back(id);
      for (std::size_t c = 0; c < delta.column_count(); ++c) block.values.push_back(delta.at(r, c));
    }
    const double count = static_cast<double>(erase.size());
    const auto loc = evaluation::locality_score(block, space);
    summary_csv << sname << ',' << format_double(off / count) << ',' << format_double(esr_sum / count) << ','
                << format_double(esr_min) << ',' << format_double(loc.within_mean) << ','
                << format_double(loc.cross_mean) << ',' << format_double(loc.ratio) << '\n';
    summary_json.push_back({{"strategy", sname},
                            {"mean_off_diagonal", off / count},
                            {"esr1_mean", esr_sum / count},
                            {"esr1_min", esr_min},
                            {"within_mean", loc.within_mean},
                            {"cross_mean", loc.cross_mean},
                            {"locality_ratio", loc.ratio}});
  }
  sink.csv("sweep_rows.csv", rows_csv.str());
  sink.json("sweep_rows.json", {{"k", E.k}, {"rows", rows_json}});
  sink.csv("strategy_summary.csv", summary_csv.str());
  sink.json("strategy_summary.json", {{"strategies", summary_json}});
}

struct BenchmarkRuns {
  erasure::ErasureResult baseline;
  erasure::ErasureResult age;
};

BenchmarkRuns run_both(const ExperimentConfig& config, const Base& base, const std::vector<ConceptId>& erase,
                       ArtifactSink& sink, RunLog& log) {
  const auto& space = base.space;
  log.stage("null baseline");
  const auto baseline_cfg = erasure_config(config, space, erase, erasure::TargetStrategy::Null);
  auto baseline = erasure::run_fixed_target(base.model, space, baseline_cfg);
  auto echo = checkpoint_echo(config, "null_baseline");
  echo["erasure"] = erasure::to_json(baseline_cfg, space);
  sink.checkpoint("sanitized/null_baseline.ckpt", baseline.sanitized, config.seed, echo);
  sink.csv("losses_null_baseline.csv", erasure::loss_trace_csv(baseline.record, space));
  sink.json("losses_null_baseline.json", loss_json(baseline.record, space));

  log.stage("age");
  const auto age_cfg = erasure_config(config, space, erase, config.erasure.run.target_strategy);
  auto age = erasure::run_age(base.model, space, age_cfg);
  echo = checkpoint_echo(config, "age");
  echo["erasure"] = erasure::to_json(age_cfg, space);
  sink.checkpoint("sanitized/age.ckpt", age.sanitized, config.seed, echo);
  sink.csv("losses_age.csv", erasure::loss_trace_csv(age.record, space));
  sink.json("losses_age.json", loss_json(age.record, space));
  sink.csv("dictionary_history.csv", erasure::dictionary_history_csv(age.record, space));
  sink.json("dictionary_history.json", history_json(age.record, space));
  sink.text("run_report_null_baseline.txt", erasure::run_report_text(baseline.record, space));
  sink.text("run_report_age.txt", erasure::run_report_text(age.record, space));
  return {std::move(baseline), std::move(age)};
}

void age_benchmark(const ExperimentConfig& config, ArtifactSink& sink, RunLog& log) {
  log.stage("load");
  const auto base = load_base(config);
  const auto& space = base.space;
  const evaluation::ClassifierOracle oracle(space);
  const auto erase = resolve_concepts(space, config.erasure.erase);
  const auto preserve = complement(space.named_concepts(), erase);
  require(!preserve.empty(), ErrorKind::Config, "age_benchmark needs at least one preserved concept");
  const auto& E = config.evaluation;
  const auto seed = config.evaluation_seed();
  const auto columns = space.named_concepts();

  auto runs = run_both(config, base, erase, sink, log);

  log.stage("evaluate");
  std::vector<MethodRates> rates;
  std::vector<std::pair<std::string, const DenoiserModel*>> models = {
      {"base", &base.model}, {"null_baseline", &runs.baseline.sanitized}, {"age", &runs.age.sanitized}};
  for (const auto& [name, model] : models) {
    const auto report = evaluation::generation_report(*model, space, oracle, columns, E.k, E.n, seed, name);
    write_report(sink, "report_" + name, report, space);
    rates.push_back(rates_for(name, report, erase, preserve, E.k));
  }

  std::ostringstream csv;
  csv << rates_header(E.k);
  auto methods = nlohmann::json::object();
  for (const auto& m : rates) {
    csv << m.method << ',' << format_double(m.top1.esr) << ',' << format_double(m.topk.esr) << ','
        << format_double(m.top1.psr) << ',' << format_double(m.topk.psr) << ',' << E.n << ',' << seed << '\n';
    methods[m.method] = {{"esr1", m.top1.esr}, {"esrk", m.topk.esr}, {"psr1", m.top1.psr}, {"psrk", m.topk.psr}};
    log.note(m.method + " ESR-1 " + format_double(m.top1.esr) + " ESR-k " + format_double(m.topk.esr) + " PSR-1 " +
             format_double(m.top1.psr) + " PSR-k " + format_double(m.topk.psr));
  }
  auto erase_names = nlohmann::json::array();
  for (auto id : erase) erase_names.push_back(space.record(id).name);
  sink.csv("rates.csv", csv.str());
  sink.json("rates.json", {{"k", E.k}, {"n", E.n}, {"erase", erase_names}, {"methods", methods}});

  log.stage("targets");
  std::ostringstream tcsv;
  tcsv << "erased,argmax,max_weight,same_family,is_synonym\n";
  auto tjson = nlohmann::json::array();
  for (auto id : erase) {
    const auto arg = runs.age.record.final_argmax.at(id);
    double weight = 0.0;
    for (auto it = runs.age.record.dictionary_history.rbegin(); it != runs.age.record.dictionary_history.rend(); ++it)
      if (it->erased == id) {
        weight = it->max_weight;
        break;
      }
    const bool same_family = space.record(arg).family == space.record(id).family && !space.same_group(arg, id);
    const bool synonym = space.synonym_for(id) == arg;
    tcsv << space.record(id).name << ',' << space.record(arg).name << ',' << format_double(weight) << ','
         << (same_family ? "true" : "false") << ',' << (synonym ? "true" : "false") << '\n';
    tjson.push_back({{"erased", space.record(id).name},
                     {"argmax", space.record(arg).name},
                     {"max_weight", weight},
                     {"same_family", same_family},
                     {"is_synonym", synonym}});
  }
  sink.csv("targets.csv", tcsv.str());
  sink.json("targets.json", {{"targets", tjson}});
}

void mixture_sweep(const ExperimentConfig& config, ArtifactSink& sink, RunLog& log) {
  log.stage("load");
  const auto base = load_base(config);
  const auto& space = base.space;
  const evaluation::ClassifierOracle oracle(space);
  const auto& E = config.evaluation;
  const auto seed = config.evaluation_seed();

  std::ostringstream csv;
  csv << "c1,c2,alpha,ds1_c1,ds1_c2,ds" << E.k << "_c1,ds" << E.k << "_c2,top1,top1_fraction\n";
  auto rows = nlohmann::json::array();
  for (const auto& [c1, c2] : mixture_pairs(config, space)) {
    const auto n1 = space.record(c1).name, n2 = space.record(c2).name;
    log.stage("mixture " + n1 + ":" + n2);
    for (double alpha : config.mixture.alphas) {
      const auto embedding = concepts::interpolate_concepts(space, c1, c2, alpha);
      // One noise stream per c1, shared by every alpha and c2.
      auto rng = numerics::Rng::substream(seed, kMixtureStream + c1.value);
      const auto points = diffusion::sample_batch(base.model, embedding, E.n, rng);
      const auto s1 = evaluation::score_samples(oracle, c1, points, 1);
      const auto s2 = evaluation::score_samples(oracle, c2, points, 1);
      const auto k1 = evaluation::score_samples(oracle, c1, points, E.k);
      const auto k2 = evaluation::score_samples(oracle, c2, points, E.k);
      std::map<ConceptId, std::size_t> top;
      const std::size_t dim = space.data_dim();
      for (std::size_t i = 0; i < E.n; ++i) {
        const auto ranked = oracle.classify(std::span<const double>(points).subspan(i * dim, dim));
        ++top[space.referent_of(ranked.front().id)];
      }
      auto best = std::max_element(top.begin(), top.end(),
                                   [](const auto& a, const auto& b) { return a.second < b.second; });
      const double frac = static_cast<double>(best->second) / static_cast<double>(E.n);
      const auto top_name = space.record(best->first).name;
      csv << n1 << ',' << n2 << ',' << format_double(alpha) << ',' << format_double(s1.detection) << ','
          << format_double(s2.detection) << ',' << format_double(k1.detection) << ',' << format_double(k2.detection)
          << ',' << top_name << ',' << format_double(frac) << '\n';
      rows.push_back({{"c1", n1},
                      {"c2", n2},
                      {"alpha", alpha},
                      {"ds1_c1", s1.detection},
                      {"ds1_c2", s2.detection},
                      {"dsk_c1", k1.detection},
                      {"dsk_c2", k2.detection},
                      {"top1", top_name},
                      {"top1_fraction", frac}});
    }
  }
  sink.csv("mixture.csv", csv.str());
  sink.json("mixture.json", {{"k", E.k}, {"n", E.n}, {"rows", rows}});
}

void synonym_eval(const ExperimentConfig& config, ArtifactSink& sink, RunLog& log) {
  log.stage("load");
  const auto base = load_base(config);
  const auto& space = base.space;
  const evaluation::ClassifierOracle oracle(space);
  const auto erase = resolve_concepts(space, config.erasure.erase);
  const auto& E = config.evaluation;
  const auto seed = config.evaluation_seed();

  std::vector<ConceptId> erased_syn, preserved_syn;
  for (auto id : space.named_concepts()) {
    const auto syn = space.synonym_for(id);
    if (!syn) continue;
    (std::find(erase.begin(), erase.end(), id) != erase.end() ? erased_syn : preserved_syn).push_back(*syn);
  }
  require(!erased_syn.empty(), ErrorKind::Config, "synonym_eval: no erased concept has a synonym");

  auto runs = run_both(config, base, erase, sink, log);

  log.stage("evaluate");
  std::vector<ConceptId> targets = erased_syn;
  targets.insert(targets.end(), preserved_syn.begin(), preserved_syn.end());
  std::sort(targets.begin(), targets.end());

  std::ostringstream rows_csv, rates_csv;
  rows_csv << "method,synonym,referent,erased,ds1,ds" << E.k << "\n";
  rates_csv << "method,esr_s1,esr_s" << E.k << ",psr_s1,psr_s" << E.k << ",erased_synonyms,preserved_synonyms\n";
  auto rows_json = nlohmann::json::array();
  auto rates_json = nlohmann::json::object();
  std::vector<std::pair<std::string, const DenoiserModel*>> models = {
      {"base", &base.model}, {"null_baseline", &runs.baseline.sanitized}, {"age", &runs.age.sanitized}};
  for (const auto& [name, model] : models) {
    const auto report = evaluation::generation_report(*model, space, oracle, targets, E.k, E.n, seed, name);
    auto mean = [&](const std::vector<ConceptId>& ids, bool erasure_rate, bool top1) {
      double s = 0.0;
      for (auto id : ids) {
        const double ds = top1 ? report.at(id).ds1 : report.at(id).dsk;
        s += erasure_rate ? 1.0 - ds : ds;
      }
      return s / static_cast<double>(ids.size());
    };
    for (const auto& r : report.rows) {
      const bool erased = std::find(erased_syn.begin(), erased_syn.end(), r.id) != erased_syn.end();
      const auto& ref = space.record(space.referent_of(r.id)).name;
      rows_csv << name << ',' << space.record(r.id).name << ',' << ref << ',' << (erased ? "true" : "false") << ','
               << format_double(r.ds1) << ',' << format_double(r.dsk) << '\n';
      rows_json.push_back({{"method", name},
                           {"synonym", space.record(r.id).name},
                           {"referent", ref},
                           {"erased", erased},
                           {"ds1", r.ds1},
                           {"dsk", r.dsk}});
    }
    const double e1 = mean(erased_syn, true, true), ek = mean(erased_syn, true, false);
    nlohmann::json entry = {{"esr_s1", e1}, {"esr_sk", ek}};
    rates_csv << name << ',' << format_double(e1) << ',' << format_double(ek) << ',';
    if (preserved_syn.empty()) {
      entry["psr_s1"] = nullptr;
      entry["psr_sk"] = nullptr;
      rates_csv << ",,";
    } else {
      const double p1 = mean(preserved_syn, false, true), pk = mean(preserved_syn, false, false);
      entry["psr_s1"] = p1;
      entry["psr_sk"] = pk;
      rates_csv << format_double(p1) << ',' << format_double(pk) << ',';
    }
    rates_csv << erased_syn.size() << ',' << preserved_syn.size() << '\n';
    rates_json[name] = entry;
  }
  sink.csv("synonym_rows.csv", rows_csv.str());
  sink.json("synonym_rows.json", {{"k", E.k}, {"n", E.n}, {"rows", rows_json}});
  sink.csv("synonym_rates.csv", rates_csv.str());
  sink.json("synonym_rates.json", {{"k", E.k}, {"n", E.n}, {"methods", rates_json}});
}

}  // namespace

std::vector<ConceptId> resolve_concepts(const ConceptSpace& space, const std::vector<std::string>& names) {
  std::vector<ConceptId> out;
  auto add = [&](ConceptId id) {
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  };
  for (const auto& n : names) {
    if (n == "anchors") {
      for (auto id : space.anchors()) add(id);
      continue;
    }
    const auto id = space.find(n);
    require(!space.record(id).is_null, ErrorKind::Config, "the null concept cannot be erased");
    add(id);
  }
  require(!out.empty(), ErrorKind::Config, "no concepts selected");
  return out;
}

std::vector<std::pair<ConceptId, ConceptId>> mixture_pairs(const ExperimentConfig& config, const ConceptSpace& space) {
  std::vector<std::pair<ConceptId, ConceptId>> out;
  for (const auto& [a, b] : config.mixture.pairs) out.emplace_back(space.find(a), space.find(b));
  if (!out.empty()) return out;
  const auto anchors = space.anchors();
  const auto c1 = anchors.front();
  const auto siblings = space.family_members(space.record(c1).family);
  for (auto s : siblings) {
    if (s == c1 || space.record(s).synonym_of) continue;
    out.emplace_back(c1, s);
    if (out.size() == 2) break;
  }
  for (std::size_t i = 1; i < anchors.size(); ++i) out.emplace_back(c1, anchors[i]);
  return out;
}

evaluation::ImpactMatrix impact_from_json(const nlohmann::json& j, const ConceptSpace& space) {
  evaluation::ImpactMatrix m;
  try {
    m.metric = j.at("metric").get<std::string>();
    m.n = j.at("n").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& c : j.at("columns")) m.columns.push_back(space.find(c.get<std::string>()));
    for (const auto& r : j.at("rows")) {
      m.row_labels.push_back(r.at("label").get<std::string>());
      m.row_concepts.push_back(space.find(r.at("erased").get<std::string>()));
      const auto vals = r.at("values").get<std::vector<double>>();
      require(vals.size() == m.columns.size(), ErrorKind::Format,
              "impact row '" + m.row_labels.back() + "' has " + std::to_string(vals.size()) + " values, expected " +
                  std::to_string(m.columns.size()));
      m.values.insert(m.values.end(), vals.begin(), vals.end());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed impact JSON: ") + e.what());
  }
  return m;
}

ArtifactManifest run_experiment(const ExperimentConfig& config) {
  config.validate();
  switch (config.kind) {
    case ExperimentKind::TrainBase:
      return guarded(config, config.output, "train_base", [&](auto& s, auto& l) { train_base(config, s, l); });
    case ExperimentKind::TargetSweep:
      return guarded(config, config.output, "target_sweep", [&](auto& s, auto& l) { target_sweep(config, s, l); });
    case ExperimentKind::AgeBenchmark:
      return guarded(config, config.output, "age_benchmark", [&](auto& s, auto& l) { age_benchmark(config, s, l); });
    case ExperimentKind::MixtureSweep:
      return guarded(config, config.output, "mixture_sweep", [&](auto& s, auto& l) { mixture_sweep(config, s, l); });
    case ExperimentKind::SynonymEval:
      return guarded(config, config.output, "synonym_eval", [&](auto& s, auto& l) { synonym_eval(config, s, l); });
  }
  fail(ErrorKind::Config, "unknown experiment kind");
}

ArtifactManifest run_analyze(const ExperimentConfig& config, const std::string& checkpoint) {
  return guarded(config, config.output + "/analyze", "analyze", [&](ArtifactSink& sink, RunLog& log) {
    log.stage("load");
    const auto space = ConceptSpace::load(config.base_space());
    const auto path = checkpoint.empty() ? config.base_checkpoint() : checkpoint;
    const auto ck = diffusion::load_checkpoint(path);
    log.note("checkpoint " + path);
    log.stage("evaluate");
    const evaluation::ClassifierOracle oracle(space);
    const auto& E = config.evaluation;
    const auto label = std::filesystem::path(path).stem().string();
    const auto report = evaluation::generation_report(ck.model, space, oracle, space.concepts_with_modes(), E.k, E.n,
                                                      config.evaluation_seed(), label);
    write_report(sink, "analysis_report", report, space);
  });
}

ArtifactManifest run_report(const ExperimentConfig& config, const std::string& impact_json_path) {
  return guarded(config, config.output + "/report", "report", [&](ArtifactSink& sink, RunLog& log) {
    log.stage("load");
    const auto space = ConceptSpace::load(config.base_space());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(support::read_file(impact_json_path));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Format, impact_json_path + ": " + e.what());
    }
    const auto delta = impact_from_json(j, space);
    log.stage("render");
    sink.svg("report_heatmap.svg", heatmap_svg(delta, space, "impact " + delta.metric));
    const auto loc = evaluation::locality_score(delta, space);
    double off = 0.0;
    for (std::size_t r = 0; r < delta.row_count(); ++r) off += evaluation::mean_off_diagonal(delta, r);
    off /= static_cast<double>(std::max<std::size_t>(delta.row_count(), 1));
    sink.json("report_summary.json", {{"source", impact_json_path},
                                      {"rows", delta.row_count()},
                                      {"within_mean", loc.within_mean},
                                      {"cross_mean", loc.cross_mean},
                                      {"locality_ratio", loc.ratio},
                                      {"mean_off_diagonal", off}});
  });
}

}  // namespace eraselab::harness
