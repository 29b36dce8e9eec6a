#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "weatkit/error.hpp"
#include "weatkit/rng.hpp"

namespace weatkit {

// One tagged text record: an opaque group key plus the raw text.
struct Document {
  std::string group_id;
  std::string text;
};

struct TokenizedDocument {
  std::string group_id;
  std::vector<std::string> tokens;
};

// Drop rule for retweet-like records: the exact, case-sensitive substring
// "RT @" anywhere in the text.
inline bool is_retweet(std::string_view text) {
  return text.find("RT @") != std::string_view::npos;
}

namespace detail {

inline bool ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline bool ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

inline bool url_like(std::string_view t) {
  return t.starts_with("http://") || t.starts_with("https://") ||
         t.starts_with("www.");
}

}  // namespace detail

// Normalizes one whitespace-delimited raw token. Returns the cleaned token,
// or an empty string when the token is discarded (URLs, @-mentions, pure
// punctuation). Runs to a fixpoint so that its output re-normalizes to
// itself, which makes tokenize() idempotent on its own output.
inline std::string normalize_token(std::string_view raw) {
  std::string t(raw);
  for (char& c : t) c = char(std::tolower(static_cast<unsigned char>(c)));
  for (;;) {
    if (t.empty()) return t;
    if (detail::url_like(t) || t.front() == '@') return {};
    std::size_t before = t.size();
    std::size_t b = 0, e = t.size();
    if (t[b] == '#') {
      while (b < e && t[b] == '#') ++b;  // hashtag marker, keep the word
    } else if (detail::ascii_punct(t[b])) {
      // peel one layer at a time so a wrapped "@user" or "www." prefix is
      // still recognized on the next pass
      ++b;
    }
    while (e > b && detail::ascii_punct(t[e - 1])) --e;
    t = t.substr(b, e - b);
    if (t.size() == before) return t;
  }
}

inline std::vector<std::string> tokenize_text(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::ascii_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !detail::ascii_space(text[i])) ++i;
    if (i > start) {
      std::string tok = normalize_token(text.substr(start, i - start));
      if (!tok.empty()) tokens.push_back(std::move(tok));
    }
  }
  return tokens;
}

inline TokenizedDocument tokenize(const Document& doc) {
  return TokenizedDocument{doc.group_id, tokenize_text(doc.text)};
}

struct GroupCounts {
  std::uint64_t docs = 0;
  std::uint64_t tokens = 0;
};

// Exact per-group document and token counts over a filtered, tokenized
// stream. Zero-token documents are discarded upstream and are not counted.
class GroupInventory {
 public:
  void add(const TokenizedDocument& doc) {
    add(doc.group_id, doc.tokens.size());
  }

  void add(const std::string& group_id, std::uint64_t token_count) {
    if (token_count == 0) return;
    auto& gc = counts_[group_id];
    gc.docs += 1;
    gc.tokens += token_count;
  }

  // Preset counts, for constructing inventories directly (tests, TSV load).
  void set(const std::string& group_id, GroupCounts gc) {
    counts_[group_id] = gc;
  }

  // Shard-merge: counts are additive.
  void merge(const GroupInventory& other) {
    for (const auto& [gid, gc] : other.counts_) {
      auto& mine = counts_[gid];
      mine.docs += gc.docs;
      mine.tokens += gc.tokens;
    }
  }

  const std::map<std::string, GroupCounts>& groups() const { return counts_; }

  std::optional<GroupCounts> find(const std::string& group_id) const {
    auto it = counts_.find(group_id);
    if (it == counts_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return counts_.size(); }

  void write_tsv(std::ostream& os) const {
    os << "group_id\tdoc_count\ttoken_count\n";
    for (const auto& [gid, gc] : counts_)
      os << gid << '\t' << gc.docs << '\t' << gc.tokens << '\n';
  }

  static GroupInventory read_tsv(std::istream& is) {
    GroupInventory inv;
    std::string line;
    if (!std::getline(is, line) ||
        line != "group_id\tdoc_count\ttoken_count")
      throw DataError("inventory TSV: missing or bad header");
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto t1 = line.find('\t');
      auto t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
      if (t1 == std::string::npos || t2 == std::string::npos)
        throw DataError("inventory TSV: malformed line " +
                        std::to_string(lineno));
      GroupCounts gc;
      try {
        gc.docs = std::stoull(line.substr(t1 + 1, t2 - t1 - 1));
        gc.tokens = std::stoull(line.substr(t2 + 1));
      } catch (const std::exception&) {
        throw DataError("inventory TSV: bad count on line " +
                        std::to_string(lineno));
      }
      inv.set(line.substr(0, t1), gc);
    }
    return inv;
  }

 private:
  std::map<std::string, GroupCounts> counts_;
};

template <class Iterable>
GroupInventory build_inventory(const Iterable& docs) {
  GroupInventory inv;
  for (const auto& doc : docs) inv.add(doc);
  return inv;
}

struct SamplingPlan {
  std::uint64_t baseline_total = 1'000'000;
  std::uint64_t per_group_sample = 500'000;
  std::uint64_t min_group_size = 500'000;
  std::uint64_t seed = 0;
  std::uint32_t repetitions = 5;

  void validate() const {
    if (baseline_total == 0 || per_group_sample == 0 || min_group_size == 0 ||
        repetitions == 0)
      throw ConfigError("sampling plan: all counts must be positive");
    if (per_group_sample > min_group_size)
      throw ConfigError(
          "sampling plan: per_group_sample exceeds min_group_size");
  }
};

// Groups whose document count reaches the (inclusive) eligibility threshold.
inline std::vector<std::string> eligible_groups(const GroupInventory& inv,
                                                const SamplingPlan& plan) {
  std::vector<std::string> out;
  for (const auto& [gid, gc] : inv.groups())
    if (gc.docs >= plan.min_group_size) out.push_back(gid);
  return out;
}

// Corpus-level string interning: token <-> dense u32 id, independent of any
// trained vocabulary.
class TokenTable {
 public:
  std::uint32_t intern(std::string_view tok) {
    auto it = index_.find(tok);
    if (it != index_.end()) return it->second;
    auto id = std::uint32_t(tokens_.size());
    tokens_.emplace_back(tok);
    index_.emplace(tokens_.back(), id);
    return id;
  }

  std::optional<std::uint32_t> find(std::string_view tok) const {
    auto it = index_.find(tok);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& token(std::uint32_t id) const { return tokens_[id]; }
  std::size_t size() const { return tokens_.size(); }

 private:
  struct SvHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };
  struct SvEq {
    using is_transparent = void;
    bool operator()(std::string_view a, std::string_view b) const {
      return a == b;
    }
  };

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t, SvHash, SvEq> index_;
};

// In-memory tokenized corpus, grouped, with tokens interned. Documents with
// zero tokens are dropped on insertion.
class CorpusStore {
 public:
  struct GroupData {
    std::vector<std::uint32_t> tokens;   // all docs concatenated
    std::vector<std::uint64_t> doc_end;  // end offset of each doc

    std::uint32_t doc_count() const {
      return std::uint32_t(doc_end.size());
    }

    std::span<const std::uint32_t> doc(std::uint32_t i) const {
      std::uint64_t begin = i == 0 ? 0 : doc_end[i - 1];
      return {tokens.data() + begin, tokens.data() + doc_end[i]};
    }
  };

  void add(const TokenizedDocument& doc) {
    if (doc.tokens.empty()) return;
    if (doc.group_id.empty()) throw DataError("document with empty group_id");
    auto& g = groups_[doc.group_id];
    for (const auto& tok : doc.tokens) g.tokens.push_back(table_.intern(tok));
    g.doc_end.push_back(g.tokens.size());
  }

  const TokenTable& tokens() const { return table_; }

  std::vector<std::string> group_ids() const {
    std::vector<std::string> ids;
    ids.reserve(groups_.size());
    for (const auto& [gid, _] : groups_) ids.push_back(gid);
    return ids;  // std::map keeps them sorted
  }

  const GroupData* group(const std::string& gid) const {
    auto it = groups_.find(gid);
    return it == groups_.end() ? nullptr : &it->second;
  }

  const GroupData& require_group(const std::string& gid) const {
    const GroupData* g = group(gid);
    if (!g) throw DataError("unknown group: " + gid);
    return *g;
  }

  bool empty() const { return groups_.empty(); }

  GroupInventory inventory() const {
    GroupInventory inv;
    for (const auto& [gid, g] : groups_) {
      GroupCounts gc;
      gc.docs = g.doc_count();
      gc.tokens = g.tokens.size();
      inv.set(gid, gc);
    }
    return inv;
  }

 private:
  TokenTable table_;
  std::map<std::string, GroupData> groups_;
};

struct LoadReport {
  std::uint64_t lines = 0;
  std::uint64_t kept = 0;
  std::uint64_t retweets_dropped = 0;
  std::uint64_t empty_dropped = 0;
};

// Streams newline-delimited JSON records ({"group_id": ..., "text": ...},
// unknown fields ignored) through the sink. Errors carry 1-based line
// numbers.
inline LoadReport read_jsonl(
    std::istream& is, const std::function<void(Document&&)>& sink) {
  LoadReport report;
  std::string line;
  while (std::getline(is, line)) {
    ++report.lines;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw DataError("corpus line " + std::to_string(report.lines) +
                      ": invalid JSON");
    if (!j.is_object() || !j.contains("group_id") || !j.contains("text") ||
        !j["group_id"].is_string() || !j["text"].is_string())
      throw DataError("corpus line " + std::to_string(report.lines) +
                      ": expected object with string fields "
                      "\"group_id\" and \"text\"");
    Document doc{j["group_id"].get<std::string>(),
                 j["text"].get<std::string>()};
    if (doc.group_id.empty())
      throw DataError("corpus line " + std::to_string(report.lines) +
                      ": empty group_id");
    sink(std::move(doc));
  }
  return report;
}

// Full ingestion pass: JSONL -> retweet filter -> tokenize -> store.
inline LoadReport load_corpus(std::istream& is, CorpusStore& store) {
  LoadReport inner;
  LoadReport outer = read_jsonl(is, [&](Document&& doc) {
    if (is_retweet(doc.text)) {
      ++inner.retweets_dropped;
      return;
    }
    TokenizedDocument td = tokenize(doc);
    if (td.tokens.empty()) {
      ++inner.empty_dropped;
      return;
    }
    ++inner.kept;
    store.add(td);
  });
  outer.kept = inner.kept;
  outer.retweets_dropped = inner.retweets_dropped;
  outer.empty_dropped = inner.empty_dropped;
  return outer;
}

inline LoadReport load_corpus_file(const std::string& path,
                                   CorpusStore& store) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open corpus file: " + path);
  return load_corpus(is, store);
}

// A drawn sample: references into a CorpusStore.
struct DocRef {
  std::uint32_t group;  // index into SampledCorpus::group_ids
  std::uint32_t doc;
};

struct SampledCorpus {
  std::vector<std::string> group_ids;
  std::vector<DocRef> docs;

  std::uint64_t doc_count() const { return docs.size(); }
};

// Stratified baseline draw: ceil(baseline_total / G) documents uniformly
// without replacement from each eligible group, truncated so the total does
// not exceed baseline_total. Deterministic in (plan.seed, rep_index).
inline SampledCorpus sample_baseline(const CorpusStore& store,
                                     const SamplingPlan& plan,
                                     std::uint32_t rep_index) {
  plan.validate();
  std::vector<std::string> eligible = eligible_groups(store.inventory(), plan);
  if (eligible.empty())
    throw DataError("sample_baseline: no eligible groups at threshold " +
                    std::to_string(plan.min_group_size));

  std::uint64_t g_count = eligible.size();
  std::uint64_t quota = (plan.baseline_total + g_count - 1) / g_count;

  SampledCorpus out;
  out.group_ids = eligible;
  std::uint64_t remaining = plan.baseline_total;
  for (std::uint32_t gi = 0; gi < eligible.size(); ++gi) {
    const auto& g = store.require_group(eligible[gi]);
    std::uint64_t take = std::min<std::uint64_t>(quota, remaining);
    if (take > g.doc_count())
      throw DataError("sample_baseline: group " + eligible[gi] + " has " +
                      std::to_string(g.doc_count()) +
                      " documents, quota is " + std::to_string(take));
    Rng rng(derive_seed(plan.seed, "baseline-sample", rep_index,
                        eligible[gi]));
    for (std::uint32_t idx : sample_without_replacement(g.doc_count(), take,
                                                        rng))
      out.docs.push_back({gi, idx});
    remaining -= take;
  }
  return out;
}

// Per-group draw of plan.per_group_sample documents without replacement.
// Deterministic in (plan.seed, rep_index, group_id).
inline SampledCorpus sample_group(const CorpusStore& store,
                                  const std::string& group_id,
                                  const SamplingPlan& plan,
                                  std::uint32_t rep_index) {
  plan.validate();
  const auto& g = store.require_group(group_id);
  if (g.doc_count() < plan.min_group_size)
    throw DataError("sample_group: group " + group_id +
                    " is ineligible (has " + std::to_string(g.doc_count()) +
                    " documents, threshold " +
                    std::to_string(plan.min_group_size) + ")");
  if (g.doc_count() < plan.per_group_sample)
    throw DataError("sample_group: group " + group_id + " has " +
                    std::to_string(g.doc_count()) +
                    " documents, requested " +
                    std::to_string(plan.per_group_sample));

  SampledCorpus out;
  out.group_ids = {group_id};
  Rng rng(derive_seed(plan.seed, "group-sample", rep_index, group_id));
  for (std::uint32_t idx : sample_without_replacement(
           g.doc_count(), plan.per_group_sample, rng))
    out.docs.push_back({0, idx});
  return out;
}

}  // namespace weatkit
