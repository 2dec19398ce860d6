#include "eraselab/diffusion/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "eraselab/errors.hpp"
#include "eraselab/support/keyvalue.hpp"

namespace eraselab::diffusion {

namespace {
constexpr std::string_view kMagic = "eraselab-checkpoint 1\n";

[[noreturn]] void format_error(std::size_t offset, const std::string& what) {
  fail(ErrorKind::Format, "checkpoint: " + what + " at byte offset " + std::to_string(offset));
}

void put_double(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

double get_double(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}
}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string encode_checkpoint(const DenoiserModel& model, std::uint64_t seed, const nlohmann::json& config) {
  std::string payload;
  const auto flat = model.flat_parameters();
  payload.reserve(flat.size() * 8);
  for (double v : flat) put_double(payload, v);

  const auto& a = model.arch();
  const auto& s = model.schedule();
  nlohmann::json header;
  header["arch"] = {{"data_dim", a.data_dim},
                    {"embed_dim", a.embed_dim},
                    {"time_features", a.time_features},
                    {"hidden", a.hidden}};
  header["schedule"] = {{"steps", s.steps()},
                        {"beta_start", support::format_double(s.beta_start)},
                        {"beta_end", support::format_double(s.beta_end)}};
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& shape : model.parameter_shapes()) shapes.push_back(shape);
  header["layer_shapes"] = shapes;
  header["parameter_count"] = flat.size();
  header["payload_fnv1a64"] = std::to_string(fnv1a64(payload));
  header["seed"] = std::to_string(seed);
  header["config"] = config;
  const std::string text = header.dump();

  std::string out(kMagic);
  out += "header " + std::to_string(text.size()) + "\n";
  out += text;
  out += '\n';
  out += payload;
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) format_error(0, "bad magic line");
  std::size_t pos = kMagic.size();
  const auto nl = bytes.find('\n', pos);
  if (nl == std::string_view::npos) format_error(pos, "truncated header length line");
  const auto len_line = bytes.substr(pos, nl - pos);
  if (len_line.substr(0, 7) != "header ") format_error(pos, "expected 'header <bytes>'");
  const auto len = support::parse_int(len_line.substr(7));
  if (!len || *len <= 0) format_error(pos, "bad header length");
  pos = nl + 1;
  if (bytes.size() < pos + static_cast<std::size_t>(*len) + 1) format_error(bytes.size(), "truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, static_cast<std::size_t>(*len)));
  } catch (const nlohmann::json::exception& e) {
    format_error(pos, std::string("malformed header JSON (") + e.what() + ")");
  }
  pos += static_cast<std::size_t>(*len);
  if (bytes[pos] != '\n') format_error(pos, "missing header terminator");
  ++pos;

  Checkpoint ck;
  std::size_t count = 0;
  std::uint64_t checksum = 0;
  DenoiserArch arch;
  NoiseSchedule schedule;
  try {
    const auto& a = header.at("arch");
    arch.data_dim = a.at("data_dim").get<std::size_t>();
    arch.embed_dim = a.at("embed_dim").get<std::size_t>();
    arch.time_features = a.at("time_features").get<std::size_t>();
    arch.hidden = a.at("hidden").get<std::vector<std::size_t>>();
    const auto& s = header.at("schedule");
    const auto bs = support::parse_double(s.at("beta_start").get<std::string>());
    const auto be = support::parse_double(s.at("beta_end").get<std::string>());
    if (!bs || !be) format_error(kMagic.size(), "bad schedule numbers");
    schedule = make_schedule(s.at("steps").get<std::size_t>(), *bs, *be);
    count = header.at("parameter_count").get<std::size_t>();
    checksum = std::stoull(header.at("payload_fnv1a64").get<std::string>());
    ck.seed = std::stoull(header.at("seed").get<std::string>());
    ck.config = header.value("config", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    format_error(kMagic.size(), std::string("incomplete header (") + e.what() + ")");
  } catch (const std::logic_error& e) {
    format_error(kMagic.size(), std::string("bad header value (") + e.what() + ")");
  }

  const std::size_t need = count * 8;
  if (bytes.size() - pos < need) format_error(bytes.size(), "truncated payload (" + std::to_string(need) + " bytes expected)");
  if (bytes.size() - pos > need) format_error(pos + need, "trailing bytes after payload");
  const auto payload = bytes.substr(pos, need);
  if (fnv1a64(payload) != checksum) format_error(pos, "payload checksum mismatch");

  std::vector<double> flat(count);
  for (std::size_t i = 0; i < count; ++i) flat[i] = get_double(payload.data() + 8 * i);
  auto model = DenoiserModel::zeros(arch, std::move(schedule));
  if (model.parameter_count() != count) format_error(pos, "parameter count does not match the architecture");
  model.set_flat_parameters(flat);
  ck.model = std::move(model);
  return ck;
}

void save_checkpoint(const std::string& path, const DenoiserModel& model, std::uint64_t seed,
                     const nlohmann::json& config) {
  support::write_file(path, encode_checkpoint(model, seed, config));
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto bytes = support::read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const Error& e) {
    fail(e.kind(), path + ": " + e.what());
  }
}

}  // namespace eraselab::diffusion
