#include "eraselab/support/keyvalue.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "eraselab/errors.hpp"

namespace eraselab::support {

const Entry* Section::find(std::string_view key) const {
  for (const auto& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Document parse_keyvalue(std::string_view text, std::string_view source_name) {
  Document doc;
  doc.sections.push_back(Section{"", 0, {}});
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto error = [&](const std::string& msg) {
    fail(ErrorKind::Format, std::string(source_name) + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') error("unterminated section header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) error("empty section name");
      doc.sections.push_back(Section{std::string(name), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) error("expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) error("missing key before '='");
    auto& section = doc.sections.back();
    if (section.find(key) != nullptr) error("duplicate key '" + std::string(key) + "'");
    section.entries.push_back(Entry{std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return doc;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  require(static_cast<bool>(out), ErrorKind::Io, "write to '" + path + "' failed");
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_doubles(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ' ';
    out += format_double(xs[i]);
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  return std::nullopt;
}

std::optional<std::vector<double>> parse_doubles(std::string_view s) {
  std::vector<double> out;
  s = trim(s);
  while (!s.empty()) {
    const auto sp = s.find_first_of(" \t,");
    const auto tok = s.substr(0, sp);
    const auto v = parse_double(tok);
    if (!v) return std::nullopt;
    out.push_back(*v);
    if (sp == std::string_view::npos) break;
    s = trim(s.substr(sp + 1));
    if (!s.empty() && s.front() == ',') s = trim(s.substr(1));
  }
  return out;
}

}  // namespace eraselab::support
