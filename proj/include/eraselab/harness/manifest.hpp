#pragma once

// Emitted-artifact bookkeeping. Every file a recipe writes goes through an
// ArtifactSink, which stamps it with the config hash and seed, hashes the
// bytes and records the entry in the manifest.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "eraselab/diffusion/denoiser.hpp"
#include "eraselab/errors.hpp"

namespace eraselab::harness {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

enum class ArtifactKind { Checkpoint, Csv, Json, Svg, Log, Text };
std::string to_string(ArtifactKind kind);

struct Artifact {
  std::string path;  // relative to the manifest root
  ArtifactKind kind = ArtifactKind::Text;
  std::string sha256;
  std::size_t bytes = 0;
};

struct StageFailure {
  std::string stage;
  ErrorKind kind = ErrorKind::Input;
  std::string message;
};

struct ArtifactManifest {
  std::string root;
  std::string experiment;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<Artifact> artifacts;
  std::optional<StageFailure> failure;

  bool complete() const noexcept { return !failure.has_value(); }
  const Artifact* find(std::string_view path) const;
  std::string file(std::string_view path) const;  // root / path

  nlohmann::json to_json() const;
  // Re-reads every listed file; returns a description of the first missing
  // or modified one.
  std::optional<std::string> verify() const;
};

class ArtifactSink {
 public:
  ArtifactSink(std::string root, std::string experiment, std::string config_hash, std::uint64_t seed);

  // CSV gets a leading "# config_hash=<h> seed=<s>" line; JSON objects get
  // "config_hash" and "seed" members; SVG gets them in <desc>.
  void csv(const std::string& path, std::string_view body);
  void json(const std::string& path, nlohmann::json value);
  void svg(const std::string& path, std::string_view body);
  void text(const std::string& path, std::string_view body);
  void log(const std::string& path, std::string_view body);
  void checkpoint(const std::string& path, const diffusion::DenoiserModel& model, std::uint64_t seed,
                  nlohmann::json config);

  std::string stamp() const;  // "config_hash=<h> seed=<s>"
  ArtifactManifest& manifest() noexcept { return manifest_; }
  // Writes manifest.json (not itself listed).
  void finish();

 private:
  void emit(const std::string& path, ArtifactKind kind, std::string_view bytes);
  ArtifactManifest manifest_;
};

// Stage-by-stage run log with wall times.
class RunLog {
 public:
  RunLog();
  void note(const std::string& line);
  void stage(const std::string& name);  // closes the previous stage
  std::string text(std::string_view config_echo, const std::optional<StageFailure>& failure) const;
  const std::string& current_stage() const noexcept { return current_; }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_;
  Clock::time_point stage_start_;
  std::string current_ = "setup";
  std::vector<std::string> lines_;
};

}  // namespace eraselab::harness
