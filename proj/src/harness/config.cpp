#include "eraselab/harness/config.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include "eraselab/errors.hpp"
#include "eraselab/harness/manifest.hpp"
#include "eraselab/support/keyvalue.hpp"

namespace eraselab::harness {

using support::format_double;

namespace {

struct Problem {
  std::string section;
  std::string key;
  std::string message;
};

std::string join_sizes(const std::vector<std::size_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? " " : "") + std::to_string(xs[i]);
  return out;
}

std::string join_words(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? " " : "") + xs[i];
  return out;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == ',') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::optional<Problem> first_problem(const ExperimentConfig& c) {
  auto bad = [](std::string s, std::string k, std::string m) { return Problem{std::move(s), std::move(k), std::move(m)}; };
  const auto& L = c.layout;
  if (L.families < 2) return bad("space", "families", "must be >= 2");
  if (L.members < 2) return bad("space", "members", "must be >= 2");
  if (L.embed_dim < 1) return bad("space", "embed_dim", "must be >= 1");
  if (L.data_dim < 1) return bad("space", "data_dim", "must be >= 1");
  if (!(L.family_radius > 0)) return bad("space", "family_radius", "must be > 0");
  if (!(L.member_radius >= 0)) return bad("space", "member_radius", "must be >= 0");
  if (!(L.mode_std > 0)) return bad("space", "mode_std", "must be > 0");
  if (!(L.family_spread >= 0)) return bad("space", "family_spread", "must be >= 0");
  if (!(L.synonym_spread >= 0)) return bad("space", "synonym_spread", "must be >= 0");
  if (!(L.abnormal_spread_scale >= 0)) return bad("space", "abnormal_spread_scale", "must be >= 0");
  if (L.abnormal && (L.abnormal->family >= L.families || L.abnormal->member >= L.members))
    return bad("space", "abnormal", "family/member index out of range");
  if (!L.family_names.empty() && L.family_names.size() != L.families)
    return bad("space", "family_names", "needs one name per family");

  const auto& D = c.diffusion;
  if (D.timesteps < 2) return bad("diffusion", "timesteps", "must be >= 2");
  if (!(D.beta_start > 0 && D.beta_start < 1)) return bad("diffusion", "beta_start", "must be in (0, 1)");
  if (!(D.beta_end >= D.beta_start && D.beta_end < 1)) return bad("diffusion", "beta_end", "must be in [beta_start, 1)");
  if (D.time_features < 2 || D.time_features % 2) return bad("diffusion", "time_features", "must be even and >= 2");
  if (D.hidden.empty()) return bad("diffusion", "hidden", "needs at least one layer width");
  for (auto h : D.hidden)
    if (h < 1) return bad("diffusion", "hidden", "widths must be >= 1");
  const auto& T = D.training;
  if (T.steps < 1) return bad("diffusion", "train_steps", "must be >= 1");
  if (T.batch_size < 1) return bad("diffusion", "batch_size", "must be >= 1");
  if (!(T.learning_rate > 0)) return bad("diffusion", "learning_rate", "must be > 0");
  if (!(T.final_lr_fraction > 0 && T.final_lr_fraction <= 1)) return bad("diffusion", "final_lr_fraction", "must be in (0, 1]");
  if (T.samples_per_concept < 1) return bad("diffusion", "samples_per_concept", "must be >= 1");
  if (!(T.abnormal_budget_fraction > 0 && T.abnormal_budget_fraction <= 1))
    return bad("diffusion", "abnormal_budget_fraction", "must be in (0, 1]");
  if (!(T.abnormal_label_noise >= 0 && T.abnormal_label_noise <= 1))
    return bad("diffusion", "abnormal_label_noise", "must be in [0, 1]");
  if (!(T.null_fraction >= 0 && T.null_fraction < 1)) return bad("diffusion", "null_fraction", "must be in [0, 1)");

  const auto& E = c.erasure;
  if (E.erase.empty()) return bad("erasure", "erase", "must name at least one concept");
  if (E.strategies.empty()) return bad("erasure", "strategies", "must list at least one strategy");
  const auto& R = E.run;
  if (!(std::isfinite(R.lambda) && R.lambda >= 0)) return bad("erasure", "lambda", "must be >= 0");
  if (!(std::isfinite(R.temperature) && R.temperature > 0)) return bad("erasure", "temperature", "must be > 0");
  if (!(std::isfinite(R.inner_rate) && R.inner_rate >= 0)) return bad("erasure", "inner_rate", "must be >= 0");
  if (R.inner_iterations < 1) return bad("erasure", "inner_iterations", "must be >= 1");
  if (!(std::isfinite(R.outer_rate) && R.outer_rate >= 0)) return bad("erasure", "outer_rate", "must be >= 0");
  if (R.steps < 1) return bad("erasure", "steps", "must be >= 1");
  if (R.vocab_k < 1) return bad("erasure", "vocab_k", "must be >= 1");
  if (R.batch_size < 1) return bad("erasure", "batch_size", "must be >= 1");
  if (R.pool_size < 1) return bad("erasure", "pool_size", "must be >= 1");
  if (R.grad_clip && !(std::isfinite(*R.grad_clip) && *R.grad_clip > 0)) return bad("erasure", "grad_clip", "must be > 0");
  if (R.target_strategy == erasure::TargetStrategy::Explicit && !E.explicit_target)
    return bad("erasure", "target", "explicit needs explicit_target");

  if (c.evaluation.k < 1) return bad("evaluation", "k", "must be >= 1");
  if (c.evaluation.n < 1) return bad("evaluation", "n", "must be >= 1");

  if (c.mixture.alphas.empty()) return bad("mixture", "alphas", "must list at least one value");
  for (double a : c.mixture.alphas)
    if (!(a >= 0 && a <= 1)) return bad("mixture", "alphas", "values must be in [0, 1]");

  if (c.output.empty()) return bad("experiment", "output", "must not be empty");
  if (c.kind != ExperimentKind::TrainBase && c.base.empty())
    return bad("experiment", "base", "required for kind " + to_string(c.kind));
  return std::nullopt;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::TrainBase: return "train_base";
    case ExperimentKind::TargetSweep: return "target_sweep";
    case ExperimentKind::AgeBenchmark: return "age_benchmark";
    case ExperimentKind::MixtureSweep: return "mixture_sweep";
    case ExperimentKind::SynonymEval: return "synonym_eval";
  }
  return "?";
}

std::optional<ExperimentKind> parse_kind(std::string_view text) {
  for (auto k : {ExperimentKind::TrainBase, ExperimentKind::TargetSweep, ExperimentKind::AgeBenchmark,
                 ExperimentKind::MixtureSweep, ExperimentKind::SynonymEval})
    if (to_string(k) == text) return k;
  return std::nullopt;
}

std::string ExperimentConfig::base_checkpoint() const { return (std::filesystem::path(base) / "base.ckpt").string(); }
std::string ExperimentConfig::base_space() const { return (std::filesystem::path(base) / "concepts.txt").string(); }

void ExperimentConfig::validate() const {
  if (auto p = first_problem(*this)) fail(ErrorKind::Config, "[" + p->section + "] " + p->key + ": " + p->message);
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const { return to_text(*this) == to_text(other); }

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[experiment]\n"
     << "kind = " << to_string(c.kind) << "\n"
     << "seed = " << c.seed << "\n"
     << "output = " << c.output << "\n";
  if (!c.base.empty()) os << "base = " << c.base << "\n";
  if (!c.space_file.empty()) os << "space_file = " << c.space_file << "\n";

  const auto& L = c.layout;
  os << "\n[space]\n";
  if (c.space_seed) os << "seed = " << *c.space_seed << "\n";
  os << "families = " << L.families << "\n"
     << "members = " << L.members << "\n"
     << "embed_dim = " << L.embed_dim << "\n"
     << "data_dim = " << L.data_dim << "\n"
     << "family_radius = " << format_double(L.family_radius) << "\n"
     << "member_radius = " << format_double(L.member_radius) << "\n"
     << "mode_std = " << format_double(L.mode_std) << "\n"
     << "family_spread = " << format_double(L.family_spread) << "\n"
     << "synonym_spread = " << format_double(L.synonym_spread) << "\n"
     << "abnormal_spread_scale = " << format_double(L.abnormal_spread_scale) << "\n"
     << "synonyms = " << (L.synonyms ? "true" : "false") << "\n"
     << "abnormal = "
     << (L.abnormal ? std::to_string(L.abnormal->family) + " " + std::to_string(L.abnormal->member) : "none") << "\n";
  if (!L.family_names.empty()) os << "family_names = " << join_words(L.family_names) << "\n";

  const auto& D = c.diffusion;
  const auto& T = D.training;
  os << "\n[diffusion]\n"
     << "timesteps = " << D.timesteps << "\n"
     << "beta_start = " << format_double(D.beta_start) << "\n"
     << "beta_end = " << format_double(D.beta_end) << "\n"
     << "time_features = " << D.time_features << "\n"
     << "hidden = " << join_sizes(D.hidden) << "\n"
     << "train_steps = " << T.steps << "\n"
     << "batch_size = " << T.batch_size << "\n"
     << "learning_rate = " << format_double(T.learning_rate) << "\n"
     << "final_lr_fraction = " << format_double(T.final_lr_fraction) << "\n"
     << "samples_per_concept = " << T.samples_per_concept << "\n"
     << "abnormal_budget_fraction = " << format_double(T.abnormal_budget_fraction) << "\n"
     << "abnormal_label_noise = " << format_double(T.abnormal_label_noise) << "\n"
     << "null_fraction = " << format_double(T.null_fraction) << "\n";

  const auto& E = c.erasure;
  const auto& R = E.run;
  std::vector<std::string> strategies;
  for (auto s : E.strategies) strategies.push_back(erasure::to_string(s));
  os << "\n[erasure]\n"
     << "erase = " << join_words(E.erase) << "\n"
     << "strategies = " << join_words(strategies) << "\n"
     << "target = " << erasure::to_string(R.target_strategy) << "\n";
  if (E.explicit_target) os << "explicit_target = " << *E.explicit_target << "\n";
  os << "lambda = " << format_double(R.lambda) << "\n"
     << "temperature = " << format_double(R.temperature) << "\n"
     << "inner_rate = " << format_double(R.inner_rate) << "\n"
     << "inner_iterations = " << R.inner_iterations << "\n"
     << "outer_rate = " << format_double(R.outer_rate) << "\n"
     << "steps = " << R.steps << "\n"
     << "vocab_k = " << R.vocab_k << "\n"
     << "batch_size = " << R.batch_size << "\n"
     << "pool_size = " << R.pool_size << "\n";
  if (R.grad_clip) os << "grad_clip = " << format_double(*R.grad_clip) << "\n";
  os << "scope = " << erasure::to_string(R.scope) << "\n";

  os << "\n[evaluation]\n"
     << "k = " << c.evaluation.k << "\n"
     << "n = " << c.evaluation.n << "\n";
  if (c.evaluation.seed) os << "seed = " << *c.evaluation.seed << "\n";

  os << "\n[mixture]\n";
  if (!c.mixture.pairs.empty()) {
    os << "pairs =";
    for (const auto& [a, b] : c.mixture.pairs) os << ' ' << a << ':' << b;
    os << "\n";
  }
  os << "alphas = " << support::format_doubles(c.mixture.alphas) << "\n";
  return os.str();
}

ExperimentConfig parse_config(std::string_view text, std::string_view source_name) {
  const std::string src(source_name);
  const auto doc = support::parse_keyvalue(text, source_name);
  ExperimentConfig c;
  bool seen_seed = false;
  bool seen_kind = false;
  std::map<std::string, std::size_t> lines;  // "section.key" -> line

  using Handler = std::function<void(const support::Entry&)>;
  auto where = [&](const std::string& section, const support::Entry& e) {
    return src + ":" + std::to_string(e.line) + ": [" + section + "] " + e.key;
  };

  std::string section;  // current, for messages
  auto as_uint = [&](const support::Entry& e) -> std::uint64_t {
    auto v = support::parse_int(e.value);
    if (!v || *v < 0) fail(ErrorKind::Config, where(section, e) + ": expected a non-negative integer, got '" + e.value + "'");
    return static_cast<std::uint64_t>(*v);
  };
  auto as_double = [&](const support::Entry& e) {
    auto v = support::parse_double(e.value);
    if (!v || !std::isfinite(*v)) fail(ErrorKind::Config, where(section, e) + ": expected a number, got '" + e.value + "'");
    return *v;
  };
  auto as_bool = [&](const support::Entry& e) {
    auto v = support::parse_bool(e.value);
    if (!v) fail(ErrorKind::Config, where(section, e) + ": expected true or false, got '" + e.value + "'");
    return *v;
  };
  auto as_text = [&](const support::Entry& e) {
    if (e.value.empty()) fail(ErrorKind::Config, where(section, e) + ": value must not be empty");
    return e.value;
  };

  std::map<std::string, std::map<std::string, Handler>> table;
  table["experiment"] = {
      {"kind", [&](const auto& e) {
         auto k = parse_kind(e.value);
         if (!k) fail(ErrorKind::Config, where(section, e) + ": unknown kind '" + e.value + "'");
         c.kind = *k;
         seen_kind = true;
       }},
      {"seed", [&](const auto& e) { c.seed = as_uint(e); seen_seed = true; }},
      {"output", [&](const auto& e) { c.output = as_text(e); }},
      {"base", [&](const auto& e) { c.base = as_text(e); }},
      {"space_file", [&](const auto& e) { c.space_file = as_text(e); }},
  };
  auto& L = c.layout;
  table["space"] = {
      {"seed", [&](const auto& e) { c.space_seed = as_uint(e); }},
      {"families", [&](const auto& e) { L.families = as_uint(e); }},
      {"members", [&](const auto& e) { L.members = as_uint(e); }},
      {"embed_dim", [&](const auto& e) { L.embed_dim = as_uint(e); }},
      {"data_dim", [&](const auto& e) { L.data_dim = as_uint(e); }},
      {"family_radius", [&](const auto& e) { L.family_radius = as_double(e); }},
      {"member_radius", [&](const auto& e) { L.member_radius = as_double(e); }},
      {"mode_std", [&](const auto& e) { L.mode_std = as_double(e); }},
      {"family_spread", [&](const auto& e) { L.family_spread = as_double(e); }},
      {"synonym_spread", [&](const auto& e) { L.synonym_spread = as_double(e); }},
      {"abnormal_spread_scale", [&](const auto& e) { L.abnormal_spread_scale = as_double(e); }},
      {"synonyms", [&](const auto& e) { L.synonyms = as_bool(e); }},
      {"abnormal", [&](const auto& e) {
         if (e.value == "none") {
           L.abnormal.reset();
           return;
         }
         auto w = split_words(e.value);
         auto f = w.size() == 2 ? support::parse_int(w[0]) : std::nullopt;
         auto m = w.size() == 2 ? support::parse_int(w[1]) : std::nullopt;
         if (!f || !m || *f < 0 || *m < 0)
           fail(ErrorKind::Config, where(section, e) + ": expected 'none' or '<family> <member>'");
         L.abnormal = concepts::MemberIndex{static_cast<std::size_t>(*f), static_cast<std::size_t>(*m)};
       }},
      {"family_names", [&](const auto& e) { L.family_names = split_words(e.value); }},
  };
  auto& D = c.diffusion;
  auto& T = D.training;
  table["diffusion"] = {
      {"timesteps", [&](const auto& e) { D.timesteps = as_uint(e); }},
      {"beta_start", [&](const auto& e) { D.beta_start = as_double(e); }},
      {"beta_end", [&](const auto& e) { D.beta_end = as_double(e); }},
      {"time_features", [&](const auto& e) { D.time_features = as_uint(e); }},
      {"hidden", [&](const auto& e) {
         D.hidden.clear();
         for (const auto& w : split_words(e.value)) {
           auto v = support::parse_int(w);
           if (!v || *v < 1) fail(ErrorKind::Config, where(section, e) + ": expected positive layer widths");
           D.hidden.push_back(static_cast<std::size_t>(*v));
         }
       }},
      {"train_steps", [&](const auto& e) { T.steps = as_uint(e); }},
      {"batch_size", [&](const auto& e) { T.batch_size = as_uint(e); }},
      {"learning_rate", [&](const auto& e) { T.learning_rate = as_double(e); }},
      {"final_lr_fraction", [&](const auto& e) { T.final_lr_fraction = as_double(e); }},
      {"samples_per_concept", [&](const auto& e) { T.samples_per_concept = as_uint(e); }},
      {"abnormal_budget_fraction", [&](const auto& e) { T.abnormal_budget_fraction = as_double(e); }},
      {"abnormal_label_noise", [&](const auto& e) { T.abnormal_label_noise = as_double(e); }},
      {"null_fraction", [&](const auto& e) { T.null_fraction = as_double(e); }},
  };
  auto& E = c.erasure;
  auto& R = E.run;
  auto strategy = [&](const support::Entry& e, const std::string& name) {
    try {
      return erasure::parse_strategy(name);
    } catch (const Error&) {
      fail(ErrorKind::Config, where(section, e) + ": unknown strategy '" + name + "'");
    }
  };
  table["erasure"] = {
      {"erase", [&](const auto& e) { E.erase = split_words(as_text(e)); }},
      {"strategies", [&](const auto& e) {
         E.strategies.clear();
         for (const auto& w : split_words(as_text(e))) E.strategies.push_back(strategy(e, w));
       }},
      {"target", [&](const auto& e) { R.target_strategy = strategy(e, e.value); }},
      {"explicit_target", [&](const auto& e) { E.explicit_target = as_text(e); }},
      {"lambda", [&](const auto& e) { R.lambda = as_double(e); }},
      {"temperature", [&](const auto& e) { R.temperature = as_double(e); }},
      {"inner_rate", [&](const auto& e) { R.inner_rate = as_double(e); }},
      {"inner_iterations", [&](const auto& e) { R.inner_iterations = as_uint(e); }},
      {"outer_rate", [&](const auto& e) { R.outer_rate = as_double(e); }},
      {"steps", [&](const auto& e) { R.steps = as_uint(e); }},
      {"vocab_k", [&](const auto& e) { R.vocab_k = as_uint(e); }},
      {"batch_size", [&](const auto& e) { R.batch_size = as_uint(e); }},
      {"pool_size", [&](const auto& e) { R.pool_size = as_uint(e); }},
      {"grad_clip", [&](const auto& e) { R.grad_clip = as_double(e); }},
      {"scope", [&](const auto& e) {
         if (e.value != "conditioning" && e.value != "all")
           fail(ErrorKind::Config, where(section, e) + ": expected conditioning or all");
         R.scope = erasure::parse_scope(e.value);
       }},
  };
  table["evaluation"] = {
      {"k", [&](const auto& e) { c.evaluation.k = as_uint(e); }},
      {"n", [&](const auto& e) { c.evaluation.n = as_uint(e); }},
      {"seed", [&](const auto& e) { c.evaluation.seed = as_uint(e); }},
  };
  table["mixture"] = {
      {"pairs", [&](const auto& e) {
         c.mixture.pairs.clear();
         for (const auto& w : split_words(e.value)) {
           auto colon = w.find(':');
           if (colon == std::string::npos || colon == 0 || colon + 1 == w.size())
             fail(ErrorKind::Config, where(section, e) + ": expected pairs as c1:c2, got '" + w + "'");
           c.mixture.pairs.emplace_back(w.substr(0, colon), w.substr(colon + 1));
         }
       }},
      {"alphas", [&](const auto& e) {
         auto v = support::parse_doubles(e.value);
         if (!v) fail(ErrorKind::Config, where(section, e) + ": expected a list of numbers");
         c.mixture.alphas = *v;
       }},
  };

  for (const auto& s : doc.sections) {
    section = s.name;
    auto it = table.find(s.name);
    if (it == table.end()) {
      if (s.name.empty() && s.entries.empty()) continue;
      fail(ErrorKind::Config, src + ":" + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
    for (const auto& e : s.entries) {
      auto h = it->second.find(e.key);
      if (h == it->second.end())
        fail(ErrorKind::Config, src + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "' in [" + s.name + "]");
      h->second(e);
      lines[s.name + "." + e.key] = e.line;
    }
  }
  if (!seen_kind) fail(ErrorKind::Config, src + ": missing [experiment] kind");
  if (!seen_seed) fail(ErrorKind::Config, src + ": missing [experiment] seed (mandatory)");

  if (auto p = first_problem(c)) {
    auto it = lines.find(p->section + "." + p->key);
    std::string at = it == lines.end() ? src : src + ":" + std::to_string(it->second);
    fail(ErrorKind::Config, at + ": [" + p->section + "] " + p->key + ": " + p->message);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  auto c = parse_config(support::read_file(path), path);
  namespace fs = std::filesystem;
  auto need = [&](const std::string& file, const char* key) {
    if (!fs::is_regular_file(file))
      fail(ErrorKind::Config, path + ": [experiment] " + key + ": file not found: " + file);
  };
  if (!c.space_file.empty()) need(c.space_file, "space_file");
  if (c.kind != ExperimentKind::TrainBase) {
    need(c.base_checkpoint(), "base");
    need(c.base_space(), "base");
  }
  return c;
}

std::string content_text(const ExperimentConfig& config) {
  auto c = config;
  c.output = "-";
  return to_text(c);
}

std::string config_hash(const ExperimentConfig& config) { return sha256_hex(content_text(config)).substr(0, 16); }

}  // namespace eraselab::harness
