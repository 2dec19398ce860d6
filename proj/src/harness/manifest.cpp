#include "eraselab/harness/manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "eraselab/diffusion/checkpoint.hpp"
#include "eraselab/support/keyvalue.hpp"

namespace eraselab::harness {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::Io, "SHA-256 digest failed");
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    out += buf;
  }
  return out;
}

std::string to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::Checkpoint: return "checkpoint";
    case ArtifactKind::Csv: return "csv";
    case ArtifactKind::Json: return "json";
    case ArtifactKind::Svg: return "svg";
    case ArtifactKind::Log: return "log";
    case ArtifactKind::Text: return "text";
  }
  return "?";
}

const Artifact* ArtifactManifest::find(std::string_view path) const {
  for (const auto& a : artifacts)
    if (a.path == path) return &a;
  return nullptr;
}

std::string ArtifactManifest::file(std::string_view path) const {
  return (std::filesystem::path(root) / std::string(path)).string();
}

nlohmann::json ArtifactManifest::to_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["complete"] = complete();
  if (failure)
    j["failure"] = {{"stage", failure->stage}, {"kind", eraselab::to_string(failure->kind)}, {"message", failure->message}};
  j["artifacts"] = nlohmann::json::array();
  for (const auto& a : artifacts)
    j["artifacts"].push_back({{"path", a.path}, {"kind", to_string(a.kind)}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  return j;
}

std::optional<std::string> ArtifactManifest::verify() const {
  for (const auto& a : artifacts) {
    const auto p = file(a.path);
    if (!std::filesystem::is_regular_file(p)) return "missing: " + a.path;
    if (sha256_hex(support::read_file(p)) != a.sha256) return "hash mismatch: " + a.path;
  }
  return std::nullopt;
}

ArtifactSink::ArtifactSink(std::string root, std::string experiment, std::string config_hash, std::uint64_t seed) {
  manifest_.root = std::move(root);
  manifest_.experiment = std::move(experiment);
  manifest_.config_hash = std::move(config_hash);
  manifest_.seed = seed;
  std::error_code ec;
  std::filesystem::create_directories(manifest_.root, ec);
  require(!ec, ErrorKind::Io, "cannot create output directory '" + manifest_.root + "': " + ec.message());
}

std::string ArtifactSink::stamp() const {
  return "config_hash=" + manifest_.config_hash + " seed=" + std::to_string(manifest_.seed);
}

void ArtifactSink::emit(const std::string& path, ArtifactKind kind, std::string_view bytes) {
  const auto full = std::filesystem::path(manifest_.root) / path;
  std::error_code ec;
  std::filesystem::create_directories(full.parent_path(), ec);
  require(!ec, ErrorKind::Io, "cannot create directory for '" + full.string() + "'");
  support::write_file(full.string(), bytes);
  Artifact a{path, kind, sha256_hex(bytes), bytes.size()};
  for (auto& existing : manifest_.artifacts)
    if (existing.path == path) {
      existing = a;
      return;
    }
  manifest_.artifacts.push_back(std::move(a));
}

void ArtifactSink::csv(const std::string& path, std::string_view body) {
  emit(path, ArtifactKind::Csv, "# " + stamp() + "\n" + std::string(body));
}

void ArtifactSink::json(const std::string& path, nlohmann::json value) {
  if (value.is_object()) {
    value["config_hash"] = manifest_.config_hash;
    value["seed"] = manifest_.seed;
  }
  emit(path, ArtifactKind::Json, value.dump(2) + "\n");
}

void ArtifactSink::svg(const std::string& path, std::string_view body) {
  std::string s(body);
  const std::string desc = "<desc>" + stamp() + "</desc>";
  auto close = s.find('>', s.find("<svg"));
  if (close != std::string::npos) s.insert(close + 1, "\n" + desc);
  emit(path, ArtifactKind::Svg, s);
}

void ArtifactSink::text(const std::string& path, std::string_view body) {
  emit(path, ArtifactKind::Text, "# " + stamp() + "\n" + std::string(body));
}

void ArtifactSink::log(const std::string& path, std::string_view body) { emit(path, ArtifactKind::Log, body); }

void ArtifactSink::checkpoint(const std::string& path, const diffusion::DenoiserModel& model, std::uint64_t seed,
                              nlohmann::json config) {
  config["config_hash"] = manifest_.config_hash;
  config["experiment_seed"] = manifest_.seed;
  emit(path, ArtifactKind::Checkpoint, diffusion::encode_checkpoint(model, seed, config));
}

void ArtifactSink::finish() {
  const auto full = std::filesystem::path(manifest_.root) / "manifest.json";
  support::write_file(full.string(), manifest_.to_json().dump(2) + "\n");
}

RunLog::RunLog() : start_(Clock::now()), stage_start_(start_) {}

void RunLog::note(const std::string& line) { lines_.push_back("  " + line); }

void RunLog::stage(const std::string& name) {
  const auto now = Clock::now();
  const double secs = std::chrono::duration<double>(now - stage_start_).count();
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << "stage " << current_ << " done in " << secs << " s";
  lines_.push_back(os.str());
  current_ = name;
  stage_start_ = now;
}

std::string RunLog::text(std::string_view config_echo, const std::optional<StageFailure>& failure) const {
  std::ostringstream os;
  os << "== config\n" << config_echo << "== stages\n";
  for (const auto& l : lines_) os << l << '\n';
  const double wall = std::chrono::duration<double>(Clock::now() - start_).count();
  os.precision(3);
  os << std::fixed << "== wall time " << wall << " s\n";
  if (failure)
    os << "== status failed at stage " << failure->stage << " (" << eraselab::to_string(failure->kind)
       << "): " << failure->message << '\n';
  else
    os << "== status complete\n";
  return os.str();
}

}  // namespace eraselab::harness
