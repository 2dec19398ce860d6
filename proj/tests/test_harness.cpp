#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <regex>

#include "eraselab/errors.hpp"
#include "eraselab/harness/config.hpp"
#include "eraselab/harness/heatmap.hpp"
#include "eraselab/harness/manifest.hpp"
#include "eraselab/harness/recipes.hpp"
#include "eraselab/support/keyvalue.hpp"

using namespace eraselab;
using namespace eraselab::harness;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("eraselab_harness_" + name);
  fs::remove_all(dir);
  return dir.string();
}

const concepts::ConceptSpace& space() {
  static const auto s = concepts::ConceptSpace::build(concepts::SpaceLayout{}, 7);
  return s;
}

evaluation::ImpactMatrix two_by_two(std::vector<double> v) {
  evaluation::ImpactMatrix m;
  m.metric = "DS-1";
  m.row_concepts = {space().find("dog-0"), space().find("vehicle-0")};
  m.row_labels = {"dog-0", "vehicle-0"};
  m.columns = m.row_concepts;
  m.values = std::move(v);
  return m;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "t.cfg");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  return "";
}

constexpr const char* kTinyBase = R"([experiment]
kind = train_base
seed = 3

[diffusion]
timesteps = 10
hidden = 16 16
time_features = 4
train_steps = 60
samples_per_concept = 10

[evaluation]
n = 12
)";

}  // namespace

TEST_CASE("config: a minimal file gets every default") {
  const auto c = parse_config("[experiment]\nkind = train_base\nseed = 4\n");
  CHECK(c.seed == 4);
  CHECK(c.diffusion.timesteps == 100);
  CHECK(c.diffusion.beta_end == 0.2);
  CHECK(c.diffusion.hidden == std::vector<std::size_t>{128, 128, 128});
  CHECK(c.erasure.run.temperature == 0.1);
  CHECK(c.erasure.run.lambda == 1.0);
  CHECK(c.erasure.run.vocab_k == 5);
  CHECK(c.evaluation.k == 3);
  CHECK(c.evaluation.n == 500);
  CHECK(c.evaluation_seed() == 4);
  CHECK(c.erasure.strategies.size() == 5);
}

TEST_CASE("config: errors name the key and the line") {
  const auto bad_temp = error_of("[experiment]\nkind = train_base\nseed = 1\n[erasure]\ntemperature = -1\n");
  CHECK(bad_temp.find("temperature") != std::string::npos);
  CHECK(bad_temp.find("t.cfg:5") != std::string::npos);

  const auto unknown = error_of("[experiment]\nkind = train_base\nseed = 1\nspeed = 3\n");
  CHECK(unknown.find("t.cfg:4") != std::string::npos);
  CHECK(unknown.find("speed") != std::string::npos);

  CHECK(error_of("[experiment]\nkind = train_base\n").find("seed") != std::string::npos);
  CHECK(error_of("[experiment]\nkind = target_sweep\nseed = 1\n").find("base") != std::string::npos);
  CHECK(error_of("[experiment]\nkind = warp\nseed = 1\n").find("kind") != std::string::npos);
  CHECK(error_of("[experiment]\nkind = train_base\nseed = 1\n[nope]\n").find("nope") != std::string::npos);
}

TEST_CASE("config: text round trip and hash") {
  auto c = parse_config(
      "[experiment]\nkind = age_benchmark\nseed = 9\nbase = somewhere\n"
      "[erasure]\nerase = dog-0 horn-2\nlambda = 0.5\nsteps = 40\ngrad_clip = 2\n"
      "[evaluation]\nseed = 11\n[mixture]\npairs = dog-0:dog-1 dog-0:tower-0\n");
  const auto back = parse_config(to_text(c));
  CHECK(back == c);
  CHECK(to_text(back) == to_text(c));
  CHECK(back.evaluation_seed() == 11);
  CHECK(back.mixture.pairs.size() == 2);
  CHECK(config_hash(c).size() == 16);
  auto moved = c;
  moved.output = "elsewhere";
  CHECK(config_hash(moved) == config_hash(c));
  moved.erasure.run.lambda = 0.25;
  CHECK(config_hash(moved) != config_hash(c));
}

TEST_CASE("heatmap: colour scale") {
  CHECK(heat_color(0.0) == kNeutral);
  CHECK(heat_color(1.0) == kPositive);
  CHECK(heat_color(3.0) == kPositive);
  CHECK(heat_color(-1.0) == kNegative);
  CHECK(hex_color(kPositive) == "#b2182b");
}

TEST_CASE("heatmap: zero matrix is uniformly neutral, one saturated cell is drawn once") {
  const auto zero = heatmap_svg(two_by_two({0, 0, 0, 0}), space());
  const std::regex cell(R"re(fill="(#[0-9a-f]{6})"><title>)re");
  std::size_t cells = 0;
  for (auto it = std::sregex_iterator(zero.begin(), zero.end(), cell); it != std::sregex_iterator(); ++it) {
    CHECK((*it)[1] == hex_color(kNeutral));
    ++cells;
  }
  CHECK(cells == 4);
  const auto one = heatmap_svg(two_by_two({0, 1, 0, 0}), space());
  CHECK(count(one, "fill=\"" + hex_color(kPositive) + "\"><title>") == 1);
  CHECK(heatmap_svg(two_by_two({0, 1, 0, 0}), space()) == one);
}

TEST_CASE("heatmap: matches the golden file") {
  const auto svg = heatmap_svg(two_by_two({0.0, 0.75, -0.5, 0.1}), space(), "golden");
  const std::string path = std::string(ERASELAB_GOLDEN_DIR) + "/heatmap_2x2.svg";
  if (std::getenv("ERASELAB_UPDATE_GOLDEN")) support::write_file(path, svg);
  REQUIRE(fs::exists(path));
  CHECK(support::read_file(path) == svg);
}

TEST_CASE("manifest: stamps, hashes and tamper detection") {
  const auto root = scratch("manifest");
  ArtifactSink sink(root, "unit", "0123456789abcdef", 5);
  sink.csv("a.csv", "x,y\n1,2\n");
  sink.json("b.json", {{"v", 1}});
  sink.svg("c.svg", "<svg xmlns=\"http://www.w3.org/2000/svg\"><desc>x</desc></svg>\n");
  sink.finish();
  const auto& m = sink.manifest();
  CHECK(m.complete());
  CHECK(m.verify() == std::nullopt);
  CHECK(support::read_file(m.file("a.csv")).rfind("# config_hash=0123456789abcdef seed=5\n", 0) == 0);
  const auto j = nlohmann::json::parse(support::read_file(m.file("b.json")));
  CHECK(j["config_hash"] == "0123456789abcdef");
  CHECK(j["seed"] == 5);
  CHECK(support::read_file(m.file("c.svg")).find("config_hash=0123456789abcdef") != std::string::npos);
  CHECK(fs::exists(root + "/manifest.json"));
  CHECK(m.find("a.csv")->sha256 == sha256_hex(support::read_file(m.file("a.csv"))));
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  support::write_file(m.file("a.csv"), "tampered\n");
  CHECK(m.verify().has_value());
}

TEST_CASE("train_base end to end: byte-identical artifacts across reruns") {
  auto c = parse_config(kTinyBase);
  c.output = scratch("base_a");
  const auto a = run_experiment(c);
  REQUIRE_MESSAGE(a.complete(), a.failure->message);
  c.output = scratch("base_b");
  const auto b = run_experiment(c);
  REQUIRE(b.complete());
  REQUIRE(a.artifacts.size() == b.artifacts.size());
  for (std::size_t i = 0; i < a.artifacts.size(); ++i) {
    CHECK(a.artifacts[i].path == b.artifacts[i].path);
    if (a.artifacts[i].kind == ArtifactKind::Log) continue;
    CHECK_MESSAGE(a.artifacts[i].sha256 == b.artifacts[i].sha256, a.artifacts[i].path);
  }
  CHECK(a.find("base.ckpt"));
  CHECK(a.find("base_summary.json"));
  CHECK(a.verify() == std::nullopt);
  const auto log = support::read_file(a.file("run.log"));
  CHECK(log.find("train_steps = 60") != std::string::npos);
}

TEST_CASE("target_sweep and age_benchmark on a tiny base") {
  auto base = parse_config(kTinyBase);
  base.output = scratch("sweep_base");
  REQUIRE(run_experiment(base).complete());

  auto sweep = parse_config(
      "[experiment]\nkind = target_sweep\nseed = 2\nbase = " + base.output +
      "\n[erasure]\nerase = dog-0 horn-0\nstrategies = null in_family\nsteps = 5\npool_size = 8\n"
      "[evaluation]\nn = 10\n");
  sweep.output = scratch("sweep");
  const auto m = run_experiment(sweep);
  REQUIRE_MESSAGE(m.complete(), m.failure->message);
  const auto rows = nlohmann::json::parse(support::read_file(m.file("sweep_rows.json")));
  CHECK(rows["rows"].size() == 4);
  CHECK(m.find("delta.svg"));
  const auto delta = impact_from_json(nlohmann::json::parse(support::read_file(m.file("delta.json"))), space());
  CHECK(delta.row_count() == 4);
  CHECK(delta.column_count() == 25);

  const auto rep = run_report(sweep, m.file("delta.json"));
  REQUIRE_MESSAGE(rep.complete(), rep.failure->message);
  CHECK(rep.find("report_heatmap.svg"));
  const auto ana = run_analyze(sweep, "");
  REQUIRE_MESSAGE(ana.complete(), ana.failure->message);
  CHECK(ana.root == sweep.output + "/analyze");
  const auto sweep_manifest = nlohmann::json::parse(support::read_file(sweep.output + "/manifest.json"));
  CHECK(sweep_manifest["experiment"] == "target_sweep");
  CHECK(m.verify() == std::nullopt);

  auto age = sweep;
  age.kind = ExperimentKind::AgeBenchmark;
  age.output = scratch("age");
  const auto r = run_experiment(age);
  REQUIRE_MESSAGE(r.complete(), r.failure->message);
  const auto rates = nlohmann::json::parse(support::read_file(r.file("rates.json")));
  CHECK(rates["methods"].contains("age"));
  CHECK(rates["methods"].contains("null_baseline"));
  CHECK(r.find("sanitized/age.ckpt"));
}

TEST_CASE("a missing base yields a partial manifest naming the stage") {
  auto c = parse_config("[experiment]\nkind = target_sweep\nseed = 1\nbase = /nonexistent/base\n");
  c.output = scratch("broken");
  const auto m = run_experiment(c);
  REQUIRE_FALSE(m.complete());
  CHECK_FALSE(m.failure->stage.empty());
  CHECK_FALSE(m.failure->message.empty());
  const auto j = nlohmann::json::parse(support::read_file(c.output + "/manifest.json"));
  CHECK(j.contains("failure"));
  CHECK(fs::exists(c.output + "/run.log"));
}

TEST_CASE("resolve_concepts and mixture pairs") {
  CHECK(resolve_concepts(space(), {"anchors"}) == space().anchors());
  CHECK(resolve_concepts(space(), {"dog-1", "tower-0"}).size() == 2);
  CHECK_THROWS_AS(resolve_concepts(space(), {"nobody"}), Error);
  auto c = parse_config("[experiment]\nkind = mixture_sweep\nseed = 1\nbase = x\n");
  const auto pairs = mixture_pairs(c, space());
  CHECK(pairs.size() == 6);
  for (const auto& p : pairs) CHECK(p.first == space().find("dog-0"));
}
