// Acceptance run: one PASS/FAIL line per criterion, then golden-value drift.
//
//   acceptance [--out DIR] [--write-golden]
//
// Runs the shipped configs (configs/) with outputs redirected under DIR.
// Exit status is the number of failed lines.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "eraselab/concepts/concept_space.hpp"
#include "eraselab/diffusion/checkpoint.hpp"
#include "eraselab/diffusion/schedule.hpp"
#include "eraselab/erasure/erasure.hpp"
#include "eraselab/errors.hpp"
#include "eraselab/evaluation/metrics.hpp"
#include "eraselab/evaluation/oracle.hpp"
#include "eraselab/harness/config.hpp"
#include "eraselab/harness/manifest.hpp"
#include "eraselab/harness/recipes.hpp"
#include "eraselab/numerics/gradcheck.hpp"
#include "eraselab/support/keyvalue.hpp"

namespace fs = std::filesystem;
using namespace eraselab;
using nlohmann::json;

namespace {

int failures = 0;

void report(const std::string& id, bool pass, const std::string& detail, double seconds) {
  std::printf("%s %-4s %s (%.1f s)\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json read_json(const harness::ArtifactManifest& m, const std::string& path) {
  return json::parse(support::read_file(m.file(path)));
}

harness::ExperimentConfig shipped(const std::string& name, const std::string& output, const std::string& base) {
  const std::string path = std::string(ERASELAB_CONFIG_DIR) + "/" + name;
  auto c = harness::parse_config(support::read_file(path), path);
  c.output = output;
  c.base = base;
  return c;
}

harness::ArtifactManifest run(const harness::ExperimentConfig& c) {
  std::printf("  running %s -> %s\n", harness::to_string(c.kind).c_str(), c.output.c_str());
  std::fflush(stdout);
  auto m = harness::run_experiment(c);
  if (!m.complete())
    throw Error(ErrorKind::Training, "recipe failed at " + m.failure->stage + ": " + m.failure->message);
  return m;
}

// --- criterion 1 -------------------------------------------------------------

diffusion::DenoiserArch check_arch() {
  diffusion::DenoiserArch a;
  a.time_features = 4;
  a.hidden = {16, 16};
  return a;
}

erasure::NoisedBatch random_batch(numerics::Rng& rng, std::size_t rows, std::size_t steps) {
  erasure::NoisedBatch b{numerics::Tensor::constant({rows, 2}, rng.normal_vector(rows * 2)), {}};
  for (std::size_t i = 0; i < rows; ++i) b.timesteps.push_back(rng.uniform_index(steps));
  return b;
}

std::vector<double> gumbel_noise(numerics::Rng& rng, std::size_t k) {
  std::vector<double> g(k);
  for (auto& v : g) v = -std::log(-std::log(rng.uniform_open()));
  return g;
}

std::vector<double> all_grads(const diffusion::DenoiserModel& m) {
  std::vector<double> g;
  for (const auto& p : m.parameters()) g.insert(g.end(), p.grad().begin(), p.grad().end());
  return g;
}

void criterion_gradients(const concepts::ConceptSpace& space) {
  Stopwatch clock;
  const auto sched = diffusion::make_schedule(100, 1e-4, 0.2);
  numerics::Rng rng(2024);
  double worst_denoiser = 0, worst_pi = 0, worst_theta = 0;
  const auto frozen = diffusion::DenoiserModel::initialize(check_arch(), sched, 1);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = diffusion::DenoiserModel::initialize(check_arch(), sched, 100 + trial);
    const auto batch = random_batch(rng, 4, 100);
    const auto eps = numerics::Tensor::constant({4, 2}, rng.normal_vector(8));
    const auto emb = numerics::Tensor::constant({4, 16}, rng.normal_vector(64));
    auto denoiser = [&](std::span<const double> flat) {
      model.set_flat_parameters(flat);
      numerics::Tape tape;
      auto loss = numerics::mse(tape, model.forward(tape, batch.x_t, batch.timesteps, emb), eps);
      tape.backward(loss);
      return numerics::ValueAndGradient{loss.item(), all_grads(model)};
    };
    worst_denoiser = std::max(worst_denoiser, numerics::finite_difference_check(denoiser, model.flat_parameters(), 1e-5));

    const auto erased = space.anchors()[trial % space.anchors().size()];
    const auto subset = concepts::restrict_vocabulary(space, erased, 5);
    const auto noise = gumbel_noise(rng, 5);
    const double temperature = trial % 2 ? 0.5 : 1.0;
    auto pi = [&](std::span<const double> l) {
      auto logits = numerics::Tensor::parameter({5}, {l.begin(), l.end()});
      numerics::Tape tape;
      auto loss = erasure::age_loss(tape, model, frozen, space.embedding_of(erased), logits, subset, 1.0,
                                    temperature, noise, batch);
      tape.backward(loss);
      return numerics::ValueAndGradient{loss.item(), {logits.grad().begin(), logits.grad().end()}};
    };
    worst_pi = std::max(worst_pi, numerics::finite_difference_check(pi, rng.normal_vector(5), 1e-5));

    const auto logits = numerics::Tensor::constant({5}, rng.normal_vector(5));
    auto theta = [&](std::span<const double> flat) {
      model.set_flat_parameters(flat);
      numerics::Tape tape;
      auto loss = erasure::age_loss(tape, model, frozen, space.embedding_of(erased), logits, subset, 1.0, 0.1,
                                    noise, batch);
      tape.backward(loss);
      return numerics::ValueAndGradient{loss.item(), all_grads(model)};
    };
    worst_theta = std::max(worst_theta, numerics::finite_difference_check(theta, model.flat_parameters(), 1e-5));
  }
  const bool pass = worst_denoiser < 1e-4 && worst_pi < 1e-4 && worst_theta < 1e-4 && clock.seconds() < 60;
  report("1", pass,
         "gradient check, 20 instances each: denoiser/theta' " + fmt(worst_denoiser) + ", age/pi " + fmt(worst_pi) +
             ", age/theta' " + fmt(worst_theta) + " (< 1e-4, < 60 s)",
         clock.seconds());
}

// --- criterion 2 -------------------------------------------------------------

void criterion_oracle(const concepts::ConceptSpace& space) {
  Stopwatch clock;
  const evaluation::ClassifierOracle oracle(space);
  const auto classes = space.concepts_with_modes();
  numerics::Rng rng(77);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> p = {16 * rng.uniform_open() - 8, 16 * rng.uniform_open() - 8};
    std::vector<long double> lik;
    long double z = 0;
    for (auto id : classes) {
      const auto& mode = *space.record(id).mode;
      long double sq = 0;
      for (int d = 0; d < 2; ++d) sq += (static_cast<long double>(p[d]) - mode.mean[d]) * (p[d] - mode.mean[d]);
      const long double var = static_cast<long double>(mode.stddev) * mode.stddev;
      lik.push_back(std::exp(-0.5L * sq / var) / var);
      z += lik.back();
    }
    for (const auto& r : oracle.classify(p)) {
      const auto j = static_cast<std::size_t>(std::find(classes.begin(), classes.end(), r.id) - classes.begin());
      worst = std::max(worst, std::abs(r.posterior - static_cast<double>(lik[j] / z)));
    }
  }
  report("2", worst < 1e-10, "oracle vs brute-force Bayes on 1000 points: max |diff| " + fmt(worst) + " (< 1e-10)",
         clock.seconds());
}

// --- golden values -----------------------------------------------------------

std::vector<std::vector<std::string>> csv_cells(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

bool as_number(const std::string& s, double& out) {
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return !s.empty() && end == s.c_str() + s.size();
}

// Largest numeric drift between two CSVs; non-numeric cells must match.
double csv_drift(const std::string& golden, const std::string& fresh, std::string& where) {
  const auto a = csv_cells(golden), b = csv_cells(fresh);
  if (a.size() != b.size()) {
    where = "row count";
    return INFINITY;
  }
  double worst = 0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r].size() != b[r].size()) {
      where = "row " + std::to_string(r);
      return INFINITY;
    }
    for (std::size_t c = 0; c < a[r].size(); ++c) {
      double x, y;
      if (as_number(a[r][c], x) && as_number(b[r][c], y)) {
        const double d = std::abs(x - y) / std::max(1.0, std::abs(x));
        if (d > worst) {
          worst = d;
          where = "row " + std::to_string(r) + " col " + std::to_string(c);
        }
      } else if (a[r][c] != b[r][c]) {
        where = "row " + std::to_string(r) + " col " + std::to_string(c) + " text";
        return INFINITY;
      }
    }
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eraselab acceptance run"};
  std::string out = (fs::temp_directory_path() / "eraselab_acceptance").string();
  bool write_golden = false;
  double golden_tol = 0.02;
  app.add_option("--out", out, "scratch directory for every run");
  app.add_flag("--write-golden", write_golden, "record the golden CSVs from this run");
  app.add_option("--golden-tol", golden_tol, "max relative drift of golden values");
  CLI11_PARSE(app, argc, argv);

  try {
    fs::remove_all(out);
    fs::create_directories(out);
    const auto space = concepts::ConceptSpace::build(concepts::SpaceLayout{}, 7);

    criterion_gradients(space);
    criterion_oracle(space);

    // --- base model (criterion 3) ---
    Stopwatch base_clock;
    const auto base_cfg = shipped("base.cfg", out + "/base", "");
    const auto base = run(base_cfg);
    const auto summary = read_json(base, "base_summary.json");
    {
      const double min_ds1 = summary["normal_min_ds1"], mean_dsk = summary["normal_mean_dsk"];
      const double ab_dsk = summary["abnormal"]["dsk"];
      const bool pass = min_ds1 >= 0.90 && ab_dsk <= mean_dsk - 0.15 && base_clock.seconds() < 600;
      report("3", pass,
             "base quality: normal min DS-1 " + fmt(min_ds1) + " (>= 0.90), abnormal " +
                 summary["abnormal"]["name"].get<std::string>() + " DS-3 " + fmt(ab_dsk) + " vs normal mean " +
                 fmt(mean_dsk) + " (gap >= 0.15)",
             base_clock.seconds());
    }
    const std::string base_ckpt_hash = base.find("base.ckpt")->sha256;

    // --- target sweep (criteria 4, 5, 6) ---
    Stopwatch sweep_clock;
    const auto sweep = run(shipped("target_sweep.cfg", out + "/target_sweep", base_cfg.output));
    const double sweep_seconds = sweep_clock.seconds();
    const auto rows = read_json(sweep, "sweep_rows.json")["rows"];
    std::map<std::string, json> strat;
    const auto summary_json = read_json(sweep, "strategy_summary.json");
    for (const auto& s : summary_json["strategies"]) strat[s["strategy"].get<std::string>()] = s;
    {
      bool pass = true;
      std::string detail = "null-target ESR-1 per anchor:";
      for (const auto& r : rows) {
        if (r["strategy"] != "null") continue;
        const double esr = r["esr1"];
        pass = pass && esr >= 0.95;
        detail += " " + r["erased"].get<std::string>() + " " + fmt(esr);
      }
      // 25 erasures share the sweep time; one anchor's share is well under 5 min.
      report("4", pass, detail + " (each >= 0.95)", sweep_seconds / 25);
    }
    {
      const double ratio = strat.at("null")["locality_ratio"];
      report("5", ratio >= 2.0,
             "locality ratio (null sweep) " + fmt(ratio) + " = within " + fmt(strat.at("null")["within_mean"].get<double>()) +
                 " / cross " + fmt(strat.at("null")["cross_mean"].get<double>()) + " (>= 2.0)",
             0);
    }
    {
      auto mod = [&](const std::string& s) { return strat.at(s)["mean_off_diagonal"].get<double>(); };
      auto esr = [&](const std::string& s) { return strat.at(s)["esr1_mean"].get<double>(); };
      bool smallest_mod = true, smallest_esr = true;
      for (const auto& [name, s] : strat) {
        if (name == "synonym") continue;
        smallest_mod = smallest_mod && mod("synonym") < mod(name);
        smallest_esr = smallest_esr && esr("synonym") < esr(name);
      }
      report("6a", smallest_mod && smallest_esr,
             "synonym strategy: mean off-diagonal " + fmt(mod("synonym")) + ", ESR-1 " + fmt(esr("synonym")) +
                 " (both smallest of five)",
             0);
      const double min_fam = strat.at("in_family")["esr1_min"];
      report("6b", mod("in_family") < mod("null") && min_fam >= 0.90,
             "in_family mean off-diagonal " + fmt(mod("in_family")) + " < null " + fmt(mod("null")) +
                 ", in_family ESR-1 min " + fmt(min_fam) + " (>= 0.90)",
             0);
      const double gap = std::abs(mod("unrelated") - mod("null"));
      report("6c", gap < 0.05,
             "|mean off-diagonal unrelated " + fmt(mod("unrelated")) + " - null " + fmt(mod("null")) + "| = " +
                 fmt(gap) + " (< 0.05)",
             0);
    }

    // --- AGE benchmark, three seeds (criteria 7, 8) ---
    Stopwatch age_clock;
    std::vector<harness::ArtifactManifest> age_runs;
    for (std::uint64_t seed : {1, 2, 3}) {
      auto c = shipped("age_benchmark.cfg", out + "/age_seed" + std::to_string(seed), base_cfg.output);
      c.seed = seed;
      age_runs.push_back(run(c));
    }
    {
      bool pass = true;
      std::string detail;
      for (std::size_t i = 0; i < age_runs.size(); ++i) {
        const auto m = read_json(age_runs[i], "rates.json")["methods"];
        const double dpsr = m["age"]["psrk"].get<double>() - m["null_baseline"]["psrk"].get<double>();
        const double desr = std::abs(m["age"]["esrk"].get<double>() - m["null_baseline"]["esrk"].get<double>());
        pass = pass && dpsr >= 0.10 && desr <= 0.05;
        detail += " seed " + std::to_string(i + 1) + ": dPSR-3 " + fmt(dpsr) + " |dESR-3| " + fmt(desr) + ";";
      }
      report("7", pass && age_clock.seconds() < 1800,
             "AGE vs null baseline (PSR-3 gain >= 0.10, ESR-3 within 0.05):" + detail, age_clock.seconds());
    }
    {
      bool pass = true;
      std::string detail;
      for (std::size_t i = 0; i < age_runs.size(); ++i) {
        int same = 0, syn = 0;
        std::string picks;
        const auto targets = read_json(age_runs[i], "targets.json");
        for (const auto& t : targets["targets"]) {
          same += t["same_family"].get<bool>();
          syn += t["is_synonym"].get<bool>();
          picks += " " + t["argmax"].get<std::string>();
        }
        pass = pass && syn == 0 && same >= 3;
        detail += " seed " + std::to_string(i + 1) + ":" + picks + " (same family " + std::to_string(same) +
                  ", synonym " + std::to_string(syn) + ");";
      }
      report("8", pass, "final argmax(pi), never synonym, same family >= 3 of 5:" + detail, 0);
    }

    // --- determinism and persistence (criterion 9) ---
    Stopwatch det_clock;
    const auto mixture = run(shipped("mixture_sweep.cfg", out + "/mixture", base_cfg.output));
    {
      std::vector<std::string> mismatched;
      std::size_t compared = 0;
      auto compare = [&](const harness::ArtifactManifest& a, const harness::ArtifactManifest& b) {
        for (const auto& art : a.artifacts) {
          if (art.kind != harness::ArtifactKind::Csv && art.kind != harness::ArtifactKind::Json) continue;
          const auto* other = b.find(art.path);
          ++compared;
          if (!other || other->sha256 != art.sha256) mismatched.push_back(art.path);
        }
      };
      compare(base, run(shipped("base.cfg", out + "/base_rerun", "")));
      compare(mixture, run(shipped("mixture_sweep.cfg", out + "/mixture_rerun", base_cfg.output)));
      auto age1 = shipped("age_benchmark.cfg", out + "/age_rerun", base_cfg.output);
      age1.seed = 1;
      compare(age_runs[0], run(age1));

      const auto loaded = diffusion::load_checkpoint(base.file("base.ckpt"));
      const std::string copy = out + "/roundtrip.ckpt";
      diffusion::save_checkpoint(copy, loaded.model, loaded.seed, loaded.config);
      const bool bit_exact = support::read_file(copy) == support::read_file(base.file("base.ckpt")) &&
                             diffusion::load_checkpoint(copy).model.flat_parameters() == loaded.model.flat_parameters();
      std::string detail = std::to_string(compared) + " CSV/JSON artifacts across base, mixture and AGE reruns, " +
                           std::to_string(mismatched.size()) + " differ; checkpoint round trip " +
                           (bit_exact ? "bit-exact" : "NOT bit-exact");
      if (!mismatched.empty()) detail += " (first: " + mismatched.front() + ")";
      report("9", mismatched.empty() && bit_exact && compared > 0, detail, det_clock.seconds());
    }

    // --- definitional invariants (criterion 10) ---
    Stopwatch inv_clock;
    {
      std::vector<std::string> problems;
      const auto model = diffusion::load_checkpoint(base.file("base.ckpt")).model;
      const evaluation::ClassifierOracle oracle(space);

      std::map<concepts::ConceptId, diffusion::DenoiserModel> identity;
      for (auto a : space.anchors()) identity.emplace(a, model);
      const auto delta = evaluation::impact_matrix(model, identity, space.anchors(), space, oracle,
                                                   space.named_concepts(), evaluation::Metric::DS1, 3, 100, 5);
      for (double v : delta.values)
        if (v != 0.0) problems.push_back("identity map impact " + fmt(v));

      std::size_t reports = 0, rows_checked = 0;
      auto check_report = [&](const json& r, const std::string& label) {
        ++reports;
        for (const auto& row : r["rows"]) {
          ++rows_checked;
          const double ds1 = row["ds1"], dsk = row["dsk"], cs1 = row["cs1"], csk = row["csk"];
          if (ds1 > dsk || cs1 > ds1 + 1e-12 || csk > dsk + 1e-12)
            problems.push_back(label + " " + row["name"].get<std::string>());
        }
      };
      check_report(read_json(base, "base_report.json"), "base_report");
      check_report(read_json(sweep, "base_report.json"), "sweep base_report");
      for (std::size_t i = 0; i < age_runs.size(); ++i)
        for (const auto* name : {"report_base.json", "report_null_baseline.json", "report_age.json"})
          check_report(read_json(age_runs[i], name), name);

      numerics::Rng rng(9);
      for (int trial = 0; trial < 200; ++trial) {
        const auto logits = rng.normal_vector(6);
        const auto noise = gumbel_noise(rng, 6);
        double previous = -1;
        for (double temp : {0.05, 0.1, 0.5, 1.0, 2.0, 10.0}) {
          const auto y = numerics::gumbel_softmax(logits, temp, noise);
          double sum = 0, entropy = 0;
          for (double v : y) {
            if (v < 0) problems.push_back("gumbel_softmax negative weight");
            sum += v;
            if (v > 0) entropy -= v * std::log(v);
          }
          if (std::abs(sum - 1) > 1e-12) problems.push_back("gumbel_softmax sum " + fmt(sum, 17));
          if (entropy < previous - 1e-12) problems.push_back("entropy fell as temperature rose");
          previous = entropy;
        }
      }

      const auto before = model.flat_parameters();
      erasure::ErasureConfig ec;
      ec.erase_set = space.anchors();
      ec.steps = 50;
      ec.pool_size = 32;
      erasure::run_age(model, space, ec);
      for (auto s : {erasure::TargetStrategy::Null, erasure::TargetStrategy::InFamily}) {
        ec.target_strategy = s;
        erasure::run_fixed_target(model, space, ec);
      }
      ec.scope = erasure::ParameterScope::All;
      ec.outer_rate = 1e-3;
      erasure::run_fixed_target(model, space, ec);
      if (model.flat_parameters() != before) problems.push_back("frozen model changed in memory");
      if (harness::sha256_hex(support::read_file(base.file("base.ckpt"))) != base_ckpt_hash)
        problems.push_back("base.ckpt changed on disk");

      std::string detail = "identity impact zero over " + std::to_string(delta.values.size()) + " cells; " +
                           std::to_string(rows_checked) + " rows in " + std::to_string(reports) +
                           " reports with DS-1 <= DS-3 and CS-k <= DS-k; gumbel simplex and entropy; frozen theta "
                           "unchanged";
      if (!problems.empty()) detail = std::to_string(problems.size()) + " problems, first: " + problems.front();
      report("10", problems.empty(), detail, inv_clock.seconds());
    }

    // --- golden CSVs ---
    {
      const std::string dir = ERASELAB_GOLDEN_DIR;
      const std::vector<std::pair<const harness::ArtifactManifest*, std::string>> files = {
          {&base, "base_report.csv"},
          {&sweep, "delta.csv"},
          {&sweep, "strategy_summary.csv"},
          {&mixture, "mixture.csv"},
          {&age_runs[0], "rates.csv"}};
      double worst = 0;
      std::string where = "-";
      for (const auto& [m, name] : files) {
        const auto fresh = support::read_file(m->file(name));
        const std::string golden = dir + "/acceptance_" + name;
        if (write_golden) support::write_file(golden, fresh);
        if (!fs::exists(golden)) {
          worst = INFINITY;
          where = name + " missing";
          continue;
        }
        std::string at;
        const double d = csv_drift(support::read_file(golden), fresh, at);
        if (d > worst) {
          worst = d;
          where = name + " " + at;
        }
      }
      report("gold", worst <= golden_tol,
             "max relative drift from golden CSVs " + fmt(worst) + " at " + where + " (<= " + fmt(golden_tol) + ")",
             0);
    }
  } catch (const std::exception& e) {
    std::printf("FAIL run  aborted: %s\n", e.what());
    return 100;
  }
  std::printf("%d failed\n", failures);
  return failures;
}
