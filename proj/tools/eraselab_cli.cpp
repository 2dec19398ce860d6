// eraselab command-line driver.
//
//   eraselab train   --config base.cfg
//   eraselab sweep   --config sweep.cfg [--seed N] [--out DIR]
//   eraselab erase   --config bench.cfg
//   eraselab analyze --config sweep.cfg [--checkpoint FILE]
//   eraselab report  --config sweep.cfg [--impact FILE]
//
// Exit codes: 0 success, 2 config error, 3 numeric error, 4 I/O error.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include "CLI11.hpp"

#include "eraselab/errors.hpp"
#include "eraselab/harness/config.hpp"
#include "eraselab/harness/recipes.hpp"

using namespace eraselab;
using harness::ExperimentKind;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Numeric:
    case ErrorKind::Training:
    case ErrorKind::Sampling:
      return 3;
    case ErrorKind::Io:
    case ErrorKind::Format:
      return 4;
    default:
      return 2;
  }
}

int report_manifest(const harness::ArtifactManifest& m) {
  for (const auto& a : m.artifacts)
    std::printf("%-10s %s  %s\n", harness::to_string(a.kind).c_str(), a.sha256.substr(0, 12).c_str(), a.path.c_str());
  if (m.failure) {
    std::fprintf(stderr, "eraselab: %s failed at stage '%s' (%s): %s\n", m.experiment.c_str(),
                 m.failure->stage.c_str(), to_string(m.failure->kind), m.failure->message.c_str());
    std::fprintf(stderr, "eraselab: partial manifest in %s\n", m.file("manifest.json").c_str());
    return exit_code(m.failure->kind);
  }
  std::printf("%s complete: %zu artifacts in %s (config %s, seed %llu)\n", m.experiment.c_str(), m.artifacts.size(),
              m.root.c_str(), m.config_hash.c_str(), static_cast<unsigned long long>(m.seed));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eraselab: concept erasure experiments on a toy conditional diffusion model"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
  std::string impact;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override [experiment] seed");
    sub->add_option("--out", out, "override [experiment] output");
  };
  auto* train = app.add_subcommand("train", "train the base model (kind train_base)");
  auto* erase = app.add_subcommand("erase", "run an erasure benchmark (kind age_benchmark or synonym_eval)");
  auto* sweep = app.add_subcommand("sweep", "run a sweep (kind target_sweep or mixture_sweep)");
  auto* analyze = app.add_subcommand("analyze", "DS/CS report of the base model or a given checkpoint");
  auto* report = app.add_subcommand("report", "heatmap and locality summary of an impact JSON");
  for (auto* sub : {train, erase, sweep, analyze, report}) common(sub);
  analyze->add_option("--checkpoint", checkpoint, "checkpoint to evaluate (default: the base model)");
  report->add_option("--impact", impact, "impact JSON (default: <out>/delta.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    auto config = harness::load_config(config_path);
    if (seed) config.seed = *seed;
    if (!out.empty()) config.output = out;
    config.validate();

    auto expect = [&](const char* cmd, std::set<ExperimentKind> kinds) {
      if (kinds.count(config.kind)) return;
      fail(ErrorKind::Config, std::string("'") + cmd + "' cannot run kind " + harness::to_string(config.kind));
    };
    // A train_base output directory doubles as the base for analyze/report.
    auto base_from_output = [&] {
      if (config.base.empty()) config.base = config.output;
    };

    if (train->parsed()) {
      expect("train", {ExperimentKind::TrainBase});
      return report_manifest(harness::run_experiment(config));
    }
    if (erase->parsed()) {
      expect("erase", {ExperimentKind::AgeBenchmark, ExperimentKind::SynonymEval});
      return report_manifest(harness::run_experiment(config));
    }
    if (sweep->parsed()) {
      expect("sweep", {ExperimentKind::TargetSweep, ExperimentKind::MixtureSweep});
      return report_manifest(harness::run_experiment(config));
    }
    if (analyze->parsed()) {
      base_from_output();
      return report_manifest(harness::run_analyze(config, checkpoint));
    }
    base_from_output();
    if (impact.empty()) impact = (std::filesystem::path(config.output) / "delta.json").string();
    return report_manifest(harness::run_report(config, impact));
  } catch (const Error& e) {
    std::fprintf(stderr, "eraselab: %s error: %s\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "eraselab: %s\n", e.what());
    return 4;
  }
}
