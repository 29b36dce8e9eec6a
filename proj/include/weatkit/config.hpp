#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "weatkit/corpus.hpp"
#include "weatkit/embedding.hpp"
#include "weatkit/error.hpp"
#include "weatkit/numfmt.hpp"
#include "weatkit/stats.hpp"
#include "weatkit/synth.hpp"

namespace weatkit {

// Flat-sectioned key=value configuration:
//   [section]
//   key = value        # comment
// Insertion order inside a section is preserved (the [controls] section maps
// keys to table columns in order). Every key can be overridden on the
// command line with --section.key=value; flags win.
class Config {
 public:
  Config() = default;

  static Config parse(std::istream& is, const std::string& origin) {
    Config cfg;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      std::string t = strip(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw ConfigError(origin + " line " + std::to_string(lineno) +
                            ": malformed section header");
        section = strip(t.substr(1, t.size() - 2));
        if (section.empty())
          throw ConfigError(origin + " line " + std::to_string(lineno) +
                            ": empty section name");
        cfg.sections_[section];  // remember even if empty
        continue;
      }
      auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + " line " + std::to_string(lineno) +
                          ": expected key = value");
      std::string key = strip(t.substr(0, eq));
      std::string value = strip(t.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + " line " + std::to_string(lineno) +
                          ": empty key");
      if (section.empty())
        throw ConfigError(origin + " line " + std::to_string(lineno) +
                          ": key outside any [section]");
      cfg.set(section, key, value);
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    return parse(is, path);
  }

  void set(const std::string& section, const std::string& key,
           const std::string& value) {
    auto& items = sections_[section];
    for (auto& [k, v] : items)
      if (k == key) {
        v = value;
        return;
      }
    items.emplace_back(key, value);
  }

  // "--section.key=value" or "section.key=value"
  void apply_override(std::string_view spec) {
    std::string_view s = spec;
    if (s.starts_with("--")) s.remove_prefix(2);
    auto eq = s.find('=');
    auto dot = s.find('.');
    if (eq == std::string_view::npos || dot == std::string_view::npos ||
        dot > eq || dot == 0 || dot + 1 == eq)
      throw ConfigError("bad override '" + std::string(spec) +
                        "' (expected --section.key=value)");
    set(std::string(s.substr(0, dot)), std::string(s.substr(dot + 1,
                                                            eq - dot - 1)),
        std::string(s.substr(eq + 1)));
  }

  bool has_section(const std::string& section) const {
    return sections_.count(section) != 0;
  }

  std::optional<std::string> raw(const std::string& section,
                                 const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end()) return std::nullopt;
    for (const auto& [k, v] : it->second)
      if (k == key) return v;
    return std::nullopt;
  }

  const std::vector<std::pair<std::string, std::string>>& section_items(
      const std::string& section) const {
    static const std::vector<std::pair<std::string, std::string>> empty;
    auto it = sections_.find(section);
    return it == sections_.end() ? empty : it->second;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    auto v = raw(section, key);
    return v ? *v : fallback;
  }

  std::string require_string(const std::string& section,
                             const std::string& key) const {
    auto v = raw(section, key);
    if (!v || v->empty())
      throw ConfigError("missing required config key [" + section + "] " +
                        key);
    return *v;
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const {
    auto v = raw(section, key);
    if (!v) return fallback;
    try {
      return parse_double(*v, "[" + section + "] " + key);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const {
    auto v = raw(section, key);
    if (!v) return fallback;
    try {
      return parse_u64(*v, "[" + section + "] " + key);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }

  std::uint32_t get_u32(const std::string& section, const std::string& key,
                        std::uint32_t fallback) const {
    std::uint64_t v = get_u64(section, key, fallback);
    if (v > 0xffffffffULL)
      throw ConfigError("[" + section + "] " + key + ": value too large");
    return std::uint32_t(v);
  }

  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const {
    auto v = raw(section, key);
    if (!v) return fallback;
    std::string low = *v;
    for (char& c : low) c = char(std::tolower(static_cast<unsigned char>(c)));
    if (low == "true" || low == "1" || low == "yes" || low == "on")
      return true;
    if (low == "false" || low == "0" || low == "no" || low == "off")
      return false;
    throw ConfigError("[" + section + "] " + key + ": bad boolean '" + *v +
                      "'");
  }

  static std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= value.size(); ++i) {
      if (i == value.size() || value[i] == ',') {
        std::string item = strip(value.substr(start, i - start));
        if (!item.empty()) out.push_back(std::move(item));
        start = i + 1;
      }
    }
    return out;
  }

 private:
  static std::string strip(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

  std::map<std::string, std::vector<std::pair<std::string, std::string>>>
      sections_;
};

// ---------------------------------------------------------------------------
// Typed views over the config sections.

inline SamplingPlan sampling_plan_from(const Config& cfg) {
  SamplingPlan plan;
  plan.baseline_total =
      cfg.get_u64("sampling", "baseline_total", plan.baseline_total);
  plan.per_group_sample =
      cfg.get_u64("sampling", "per_group_sample", plan.per_group_sample);
  plan.min_group_size =
      cfg.get_u64("sampling", "min_group_size", plan.min_group_size);
  plan.repetitions =
      cfg.get_u32("sampling", "repetitions", plan.repetitions);
  plan.seed = cfg.get_u64("run", "seed", 0);
  plan.validate();
  return plan;
}

inline TrainerConfig trainer_config_from(const Config& cfg) {
  TrainerConfig tc;
  tc.vector_dim = cfg.get_u32("trainer", "dim", tc.vector_dim);
  tc.min_count = cfg.get_u32("trainer", "min_count", tc.min_count);
  tc.initial_lr =
      float(cfg.get_double("trainer", "initial_lr", tc.initial_lr));
  tc.window = cfg.get_u32("trainer", "window", tc.window);
  tc.negatives = cfg.get_u32("trainer", "negatives", tc.negatives);
  tc.epochs = cfg.get_u32("trainer", "epochs", tc.epochs);
  tc.subsample_threshold = cfg.get_double("trainer", "subsample_threshold",
                                          tc.subsample_threshold);
  tc.deterministic =
      cfg.get_bool("trainer", "deterministic", tc.deterministic);
  tc.seed = cfg.get_u64("run", "seed", 0);
  tc.validate();
  return tc;
}

// Word lists: plain UTF-8, one token per line, '#' comment lines ignored.
inline std::vector<std::string> load_word_list(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open word list: " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t b = 0, e = line.size();
    while (b < e && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1])))
      --e;
    if (b == e || line[b] == '#') continue;
    words.push_back(line.substr(b, e - b));
  }
  return words;
}

inline WeatWordSets word_sets_from(const Config& cfg) {
  WeatWordSets sets;
  sets.names_a = load_word_list(cfg.require_string("paths", "names_a"));
  sets.names_b = load_word_list(cfg.require_string("paths", "names_b"));
  sets.pleasant = load_word_list(cfg.require_string("paths", "pleasant"));
  sets.unpleasant =
      load_word_list(cfg.require_string("paths", "unpleasant"));
  return sets;
}

// rel_b_freq accepts an explicit comma list, "loggrid:lo:hi" (deterministic
// log-spaced span) or "loguniform:lo:hi" (seeded draws).
inline std::vector<double> rel_b_freq_from(const Config& cfg,
                                           std::uint32_t n_groups,
                                           std::uint64_t seed) {
  std::string spec = cfg.get_string("synth", "rel_b_freq", "loggrid:0.01:0.5");
  auto parse_range = [&](std::string_view body) {
    auto colon = body.find(':');
    if (colon == std::string_view::npos)
      throw ConfigError("[synth] rel_b_freq: expected lo:hi after prefix");
    double lo = parse_double(body.substr(0, colon), "[synth] rel_b_freq lo");
    double hi = parse_double(body.substr(colon + 1), "[synth] rel_b_freq hi");
    return std::make_pair(lo, hi);
  };
  if (spec.starts_with("loggrid:")) {
    auto [lo, hi] = parse_range(std::string_view(spec).substr(8));
    return log_grid(lo, hi, n_groups);
  }
  if (spec.starts_with("loguniform:")) {
    auto [lo, hi] = parse_range(std::string_view(spec).substr(11));
    return log_uniform(lo, hi, n_groups, seed);
  }
  std::vector<double> out;
  for (const auto& item : Config::split_list(spec))
    out.push_back(parse_double(item, "[synth] rel_b_freq"));
  return out;
}

inline SynthConfig synth_config_from(const Config& cfg) {
  if (!cfg.has_section("synth"))
    throw ConfigError("synth config required (missing [synth] section)");
  SynthConfig sc;
  sc.n_groups = cfg.get_u32("synth", "n_groups", 10);
  sc.docs_per_group = cfg.get_u32("synth", "docs_per_group", 1000);
  sc.tokens_per_doc = cfg.get_double("synth", "tokens_per_doc", 20.0);
  sc.vocab_size = cfg.get_u32("synth", "vocab_size", 2000);
  sc.zipf_exponent = cfg.get_double("synth", "zipf_exponent", 1.0);
  sc.name_rate = cfg.get_double("synth", "name_rate", 0.02);
  sc.sentiment_rate = cfg.get_double("synth", "sentiment_rate", 0.05);
  sc.positivity_ratio = cfg.get_double("synth", "positivity_ratio", 2.0);
  sc.association_strength =
      cfg.get_double("synth", "association_strength", 0.0);
  sc.seed = cfg.get_u64("synth", "seed", cfg.get_u64("run", "seed", 0));
  sc.rel_b_freq = rel_b_freq_from(cfg, sc.n_groups, sc.seed);

  WeatWordSets lists = word_sets_from(cfg);
  auto cap = [&](std::vector<std::string>& v, const char* key) {
    std::uint32_t limit =
        cfg.get_u32("synth", key, std::uint32_t(v.size()));
    if (limit < v.size()) v.resize(limit);
  };
  sc.names_a = lists.names_a;
  sc.names_b = lists.names_b;
  sc.pleasant = lists.pleasant;
  sc.unpleasant = lists.unpleasant;
  cap(sc.names_a, "max_names_a");
  cap(sc.names_b, "max_names_b");
  cap(sc.pleasant, "max_pleasant");
  cap(sc.unpleasant, "max_unpleasant");
  sc.validate();
  return sc;
}

inline std::vector<ControlSet> control_sets_from(const Config& cfg) {
  std::vector<ControlSet> sets;
  for (const auto& [label, value] : cfg.section_items("controls"))
    sets.push_back({label, Config::split_list(value)});
  if (sets.empty()) sets.push_back({"no_controls", {}});
  return sets;
}

}  // namespace weatkit
