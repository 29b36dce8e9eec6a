#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "weatkit/corpus.hpp"
#include "weatkit/embedding.hpp"
#include "weatkit/error.hpp"

namespace weatkit {

// The four word lists: two category (name) sets, two attribute (valence)
// sets.
struct WeatWordSets {
  std::vector<std::string> names_a;  // majority-group names
  std::vector<std::string> names_b;  // minority-group names
  std::vector<std::string> pleasant;
  std::vector<std::string> unpleasant;

  void validate() const {
    auto check = [](const std::vector<std::string>& set, const char* name) {
      if (set.empty())
        throw DataError(std::string("word set ") + name + " is empty");
      std::unordered_set<std::string> seen;
      for (const auto& t : set) {
        if (!seen.insert(t).second)
          throw DataError(std::string("word set ") + name +
                          " contains duplicate token: " + t);
        for (char c : t)
          if (c >= 'A' && c <= 'Z')
            throw DataError(std::string("word set ") + name +
                            " contains non-lowercase token: " + t);
      }
    };
    check(names_a, "A");
    check(names_b, "B");
    check(pleasant, "X");
    check(unpleasant, "Y");
    auto disjoint = [](const std::vector<std::string>& u,
                       const std::vector<std::string>& v, const char* what) {
      std::unordered_set<std::string> su(u.begin(), u.end());
      for (const auto& t : v)
        if (su.count(t))
          throw DataError(std::string("word sets ") + what +
                          " overlap on token: " + t);
    };
    disjoint(names_a, names_b, "A and B");
    disjoint(pleasant, unpleasant, "X and Y");
  }
};

inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw NumericError("cosine: vector lengths differ (" +
                       std::to_string(u.size()) + " vs " +
                       std::to_string(v.size()) + ")");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (!(nu > 0.0) || !(nv > 0.0))
    throw NumericError("cosine: zero-norm vector");
  double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(c, -1.0, 1.0);
}

inline double cosine(const std::vector<double>& u,
                     const std::vector<double>& v) {
  return cosine(std::span<const double>(u), std::span<const double>(v));
}

// Vector provider convention: callable returning
// std::optional<std::vector<double>> (nullopt for out-of-vocabulary).
struct ModelVectors {
  const EmbeddingModel& model;

  std::optional<std::vector<double>> operator()(std::string_view token) const {
    auto id = model.vocab.find(token);
    if (!id) return std::nullopt;
    auto row = model.input_row(*id);
    return std::vector<double>(row.begin(), row.end());
  }
};

namespace detail {

template <class Lookup>
std::vector<double> require_vector(Lookup&& lookup, const std::string& token) {
  auto v = lookup(token);
  if (!v) throw OovError("token not in vocabulary: " + token, {token});
  return std::move(*v);
}

}  // namespace detail

template <class Lookup>
concept VectorProvider =
    std::invocable<Lookup&, const std::string&>;

// s(w, A, B): mean cosine of w to A minus mean cosine of w to B.
template <VectorProvider Lookup>
double association(Lookup&& lookup, const std::string& word,
                   const std::vector<std::string>& names_a,
                   const std::vector<std::string>& names_b) {
  if (names_a.empty() || names_b.empty())
    throw DataError("association: empty name set");
  std::vector<double> w = detail::require_vector(lookup, word);
  double mean_a = 0.0;
  for (const auto& a : names_a)
    mean_a += cosine(w, detail::require_vector(lookup, a));
  mean_a /= double(names_a.size());
  double mean_b = 0.0;
  for (const auto& b : names_b)
    mean_b += cosine(w, detail::require_vector(lookup, b));
  mean_b /= double(names_b.size());
  return mean_a - mean_b;
}

inline double association(const EmbeddingModel& model,
                          const std::string& word,
                          const std::vector<std::string>& names_a,
                          const std::vector<std::string>& names_b) {
  return association(ModelVectors{model}, word, names_a, names_b);
}

// S = sum_x s(x,A,B) - sum_y s(y,A,B), with the per-attribute associations
// retained. Positive S: pleasant words sit closer to A and/or unpleasant
// words closer to B.
struct WeatScore {
  double value = 0.0;
  std::vector<std::pair<std::string, double>> pleasant_assoc;
  std::vector<std::pair<std::string, double>> unpleasant_assoc;
  std::string group_id;
  std::uint32_t repetition = 0;

  double recompute() const {
    double sx = 0.0, sy = 0.0;
    for (const auto& [_, v] : pleasant_assoc) sx += v;
    for (const auto& [_, v] : unpleasant_assoc) sy += v;
    return sx - sy;
  }
};

template <VectorProvider Lookup>
WeatScore weat(Lookup&& lookup, const WeatWordSets& sets) {
  sets.validate();
  // Fail fast with the complete list of missing tokens.
  std::vector<std::string> missing;
  auto scan = [&](const std::vector<std::string>& set) {
    for (const auto& t : set)
      if (!lookup(t)) missing.push_back(t);
  };
  scan(sets.names_a);
  scan(sets.names_b);
  scan(sets.pleasant);
  scan(sets.unpleasant);
  if (!missing.empty())
    throw OovError("weat: tokens not in vocabulary: " + join_tokens(missing),
                   missing);

  // The two attribute sums are accumulated separately and combined once, so
  // swapping X and Y (or A and B) negates the statistic exactly.
  WeatScore score;
  double sum_x = 0.0, sum_y = 0.0;
  for (const auto& x : sets.pleasant) {
    double s = association(lookup, x, sets.names_a, sets.names_b);
    score.pleasant_assoc.emplace_back(x, s);
    sum_x += s;
  }
  for (const auto& y : sets.unpleasant) {
    double s = association(lookup, y, sets.names_a, sets.names_b);
    score.unpleasant_assoc.emplace_back(y, s);
    sum_y += s;
  }
  score.value = sum_x - sum_y;
  return score;
}

inline WeatScore weat(const EmbeddingModel& model, const WeatWordSets& sets) {
  return weat(ModelVectors{model}, sets);
}

struct PreparedWordSets {
  WeatWordSets sets;
  std::vector<std::string> dropped;  // "set:token" for each filtered token
};

// Union of sources, lowercased and deduplicated, then filtered to the given
// vocabulary. Errors when any of the four sets ends up empty.
template <VectorProvider InVocab>
PreparedWordSets prepare_word_sets(const WeatWordSets& raw,
                                   InVocab&& in_vocab) {
  PreparedWordSets out;
  auto prepare = [&](const std::vector<std::string>& src, const char* name)
      -> std::vector<std::string> {
    std::vector<std::string> result;
    std::unordered_set<std::string> seen;
    for (const auto& t : src) {
      std::string low = t;
      for (char& c : low)
        c = char(std::tolower(static_cast<unsigned char>(c)));
      if (low.empty() || !seen.insert(low).second) continue;
      if (!in_vocab(low)) {
        out.dropped.push_back(std::string(name) + ":" + low);
        continue;
      }
      result.push_back(std::move(low));
    }
    if (result.empty())
      throw DataError(std::string("word set ") + name +
                      " is empty after vocabulary filtering");
    return result;
  };
  out.sets.names_a = prepare(raw.names_a, "A");
  out.sets.names_b = prepare(raw.names_b, "B");
  out.sets.pleasant = prepare(raw.pleasant, "X");
  out.sets.unpleasant = prepare(raw.unpleasant, "Y");
  out.sets.validate();
  return out;
}

inline PreparedWordSets prepare_word_sets(const WeatWordSets& raw,
                                          const EmbeddingModel& model) {
  return prepare_word_sets(
      raw, [&](const std::string& t) { return model.vocab.contains(t); });
}

// ---------------------------------------------------------------------------
// Relative minority-name frequency: occurrences of B names divided by
// occurrences of A plus B names, counting every occurrence.

struct NameCounts {
  std::uint64_t a = 0;
  std::uint64_t b = 0;

  double relative_b() const {
    if (a + b == 0)
      throw DataError("relative name frequency: no name from A or B occurs "
                      "in the corpus");
    return double(b) / double(a + b);
  }
};

inline NameCounts count_names(const std::vector<TokenizedDocument>& docs,
                              const WeatWordSets& sets) {
  std::unordered_set<std::string> a(sets.names_a.begin(), sets.names_a.end());
  std::unordered_set<std::string> b(sets.names_b.begin(), sets.names_b.end());
  NameCounts counts;
  for (const auto& doc : docs)
    for (const auto& tok : doc.tokens) {
      if (a.count(tok)) ++counts.a;
      else if (b.count(tok)) ++counts.b;
    }
  return counts;
}

namespace detail {

// Token-id membership sets against a TokenTable; names missing from the
// table simply never occur.
struct NameIdSets {
  std::unordered_set<std::uint32_t> a, b;

  NameIdSets(const TokenTable& table, const WeatWordSets& sets) {
    for (const auto& t : sets.names_a)
      if (auto id = table.find(t)) a.insert(*id);
    for (const auto& t : sets.names_b)
      if (auto id = table.find(t)) b.insert(*id);
  }

  void tally(std::span<const std::uint32_t> tokens, NameCounts& counts) const {
    for (std::uint32_t id : tokens) {
      if (a.count(id)) ++counts.a;
      else if (b.count(id)) ++counts.b;
    }
  }
};

}  // namespace detail

inline NameCounts count_names(const CorpusStore& store,
                              const std::string& group_id,
                              const WeatWordSets& sets) {
  detail::NameIdSets ids(store.tokens(), sets);
  NameCounts counts;
  ids.tally(store.require_group(group_id).tokens, counts);
  return counts;
}

inline NameCounts count_names(const CorpusStore& store,
                              const SampledCorpus& sample,
                              const WeatWordSets& sets) {
  detail::NameIdSets ids(store.tokens(), sets);
  NameCounts counts;
  for (const DocRef& ref : sample.docs)
    ids.tally(store.require_group(sample.group_ids[ref.group]).doc(ref.doc),
              counts);
  return counts;
}

inline double relative_name_frequency(const std::vector<TokenizedDocument>&
                                          docs,
                                      const WeatWordSets& sets) {
  return count_names(docs, sets).relative_b();
}

inline double relative_name_frequency(const CorpusStore& store,
                                      const std::string& group_id,
                                      const WeatWordSets& sets) {
  return count_names(store, group_id, sets).relative_b();
}

// One regression row: per-group WEAT estimate plus covariates.
struct GroupBiasRecord {
  std::string group_id;
  double weat_mean = 0.0;
  std::vector<double> weat_values;  // one per repetition
  double rel_b_name_freq = 0.0;
  std::map<std::string, double> covariates;
};

inline double mean_of(const std::vector<double>& values) {
  if (values.empty()) throw NumericError("mean of empty vector");
  double s = 0.0;
  for (double v : values) s += v;
  return s / double(values.size());
}

}  // namespace weatkit
