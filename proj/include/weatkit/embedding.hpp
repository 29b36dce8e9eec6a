#pragma once

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "weatkit/corpus.hpp"
#include "weatkit/error.hpp"
#include "weatkit/numfmt.hpp"
#include "weatkit/rng.hpp"

namespace weatkit {

struct TrainerConfig {
  std::uint32_t vector_dim = 100;
  std::uint32_t min_count = 10;
  float initial_lr = 0.025f;
  std::uint32_t window = 5;
  std::uint32_t negatives = 5;
  std::uint32_t epochs = 5;
  double subsample_threshold = 1e-3;
  std::uint64_t seed = 0;
  bool deterministic = true;

  void validate() const {
    if (vector_dim < 1 || min_count < 1 || negatives < 1 || epochs < 1 ||
        window < 1)
      throw ConfigError("trainer config: dim/min_count/negatives/epochs/"
                        "window must all be >= 1");
    if (!(initial_lr > 0.f))
      throw ConfigError("trainer config: initial_lr must be positive");
    if (subsample_threshold < 0.0 || subsample_threshold > 1.0)
      throw ConfigError("trainer config: subsample_threshold must be in "
                        "[0, 1]");
  }
};

// Tokens retained at min_count, sorted by (count desc, token asc), with the
// 0.75-power unigram noise distribution used for negative sampling.
class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary build(std::vector<std::pair<std::string, std::uint64_t>>
                              counted,
                          std::uint32_t min_count) {
    std::erase_if(counted,
                  [&](const auto& tc) { return tc.second < min_count; });
    if (counted.empty())
      throw DataError("vocabulary: no token reaches min_count " +
                      std::to_string(min_count));
    std::sort(counted.begin(), counted.end(), [](const auto& a,
                                                 const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    Vocabulary v;
    v.tokens_.reserve(counted.size());
    v.counts_.reserve(counted.size());
    for (auto& [tok, cnt] : counted) {
      v.index_.emplace(tok, std::uint32_t(v.tokens_.size()));
      v.tokens_.push_back(std::move(tok));
      v.counts_.push_back(cnt);
      v.total_tokens_ += cnt;
    }
    v.build_noise_table();
    return v;
  }

  std::optional<std::uint32_t> find(std::string_view tok) const {
    auto it = index_.find(std::string(tok));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view tok) const { return find(tok).has_value(); }

  const std::string& token(std::uint32_t id) const { return tokens_[id]; }
  std::uint64_t count(std::uint32_t id) const { return counts_[id]; }
  std::uint32_t size() const { return std::uint32_t(tokens_.size()); }
  std::uint64_t total_tokens() const { return total_tokens_; }

  double frequency(std::uint32_t id) const {
    return double(counts_[id]) / double(total_tokens_);
  }

  double noise_prob(std::uint32_t id) const {
    return noise_probs_[id];
  }

  std::uint32_t sample_noise(Rng& rng) const { return noise_.sample(rng); }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && counts_ == other.counts_;
  }

 private:
  void build_noise_table() {
    std::vector<double> weights(counts_.size());
    double total = 0.0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      weights[i] = std::pow(double(counts_[i]), 0.75);
      total += weights[i];
    }
    noise_probs_.resize(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
      noise_probs_[i] = weights[i] / total;
    noise_ = AliasSampler(weights);
  }

  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::vector<double> noise_probs_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::uint64_t total_tokens_ = 0;
  AliasSampler noise_;
};

inline Vocabulary build_vocabulary(
    const std::vector<TokenizedDocument>& docs, const TrainerConfig& cfg) {
  cfg.validate();
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& doc : docs)
    for (const auto& tok : doc.tokens) ++counts[tok];
  std::vector<std::pair<std::string, std::uint64_t>> counted(counts.begin(),
                                                             counts.end());
  return Vocabulary::build(std::move(counted), cfg.min_count);
}

inline Vocabulary build_vocabulary(const CorpusStore& store,
                                   const SampledCorpus& sample,
                                   const TrainerConfig& cfg) {
  cfg.validate();
  std::vector<std::uint64_t> counts(store.tokens().size(), 0);
  std::vector<const CorpusStore::GroupData*> groups;
  groups.reserve(sample.group_ids.size());
  for (const auto& gid : sample.group_ids)
    groups.push_back(&store.require_group(gid));
  for (const DocRef& ref : sample.docs)
    for (std::uint32_t id : groups[ref.group]->doc(ref.doc)) ++counts[id];
  std::vector<std::pair<std::string, std::uint64_t>> counted;
  for (std::uint32_t id = 0; id < counts.size(); ++id)
    if (counts[id] >= cfg.min_count)
      counted.emplace_back(store.tokens().token(id), counts[id]);
  return Vocabulary::build(std::move(counted), cfg.min_count);
}

// Training corpus in vocabulary ids; out-of-vocabulary tokens are dropped at
// materialization, empty documents skipped.
struct IdCorpus {
  std::vector<std::vector<std::uint32_t>> docs;
  std::uint64_t total_tokens = 0;

  void add_doc(std::vector<std::uint32_t> ids) {
    if (ids.empty()) return;
    total_tokens += ids.size();
    docs.push_back(std::move(ids));
  }
};

inline IdCorpus map_to_ids(const std::vector<TokenizedDocument>& docs,
                           const Vocabulary& vocab) {
  IdCorpus corpus;
  for (const auto& doc : docs) {
    std::vector<std::uint32_t> ids;
    ids.reserve(doc.tokens.size());
    for (const auto& tok : doc.tokens)
      if (auto id = vocab.find(tok)) ids.push_back(*id);
    corpus.add_doc(std::move(ids));
  }
  return corpus;
}

inline IdCorpus map_to_ids(const CorpusStore& store,
                           const SampledCorpus& sample,
                           const Vocabulary& vocab) {
  // store-token-id -> vocab-id lookup table, built once
  constexpr std::uint32_t kNone = 0xffffffffu;
  std::vector<std::uint32_t> lut(store.tokens().size(), kNone);
  for (std::uint32_t sid = 0; sid < lut.size(); ++sid)
    if (auto vid = vocab.find(store.tokens().token(sid))) lut[sid] = *vid;

  std::vector<const CorpusStore::GroupData*> groups;
  groups.reserve(sample.group_ids.size());
  for (const auto& gid : sample.group_ids)
    groups.push_back(&store.require_group(gid));

  IdCorpus corpus;
  for (const DocRef& ref : sample.docs) {
    auto span = groups[ref.group]->doc(ref.doc);
    std::vector<std::uint32_t> ids;
    ids.reserve(span.size());
    for (std::uint32_t sid : span)
      if (lut[sid] != kNone) ids.push_back(lut[sid]);
    corpus.add_doc(std::move(ids));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// CBOW with negative sampling. The example-level math is templated on the
// scalar type: the trainer runs it in float, the gradient checks run the
// identical code in double.
namespace cbow {

template <class T>
inline T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// log(1 + exp(x)), overflow-safe
template <class T>
inline T softplus(T x) {
  if (x > T(35)) return x;
  return std::log1p(std::exp(x));
}

template <class T>
inline T dot(const T* a, const T* b, std::uint32_t dim) {
  T acc = 0;
  for (std::uint32_t i = 0; i < dim; ++i) acc += a[i] * b[i];
  return acc;
}

// Negative-sampling log-loss of one (context, target, negatives) example:
//   L = -log sigmoid(o_t . h) - sum_n log sigmoid(-o_n . h)
// with h the mean of the context rows of `input`. Negative draws equal to
// the target are skipped, mirroring step().
template <class T>
T example_loss(std::span<const T> input, std::span<const T> output,
               std::uint32_t dim, std::span<const std::uint32_t> context,
               std::uint32_t target,
               std::span<const std::uint32_t> negatives) {
  std::vector<T> hidden(dim, T(0));
  for (std::uint32_t c : context) {
    const T* row = input.data() + std::size_t(c) * dim;
    for (std::uint32_t i = 0; i < dim; ++i) hidden[i] += row[i];
  }
  T inv = T(1) / T(context.size());
  for (std::uint32_t i = 0; i < dim; ++i) hidden[i] *= inv;

  T loss = softplus(-dot(output.data() + std::size_t(target) * dim,
                         hidden.data(), dim));
  for (std::uint32_t n : negatives) {
    if (n == target) continue;
    loss += softplus(dot(output.data() + std::size_t(n) * dim, hidden.data(),
                         dim));
  }
  return loss;
}

// One fused SGD step; returns the example loss. All gradients are evaluated
// at the pre-step parameters (the accumulated hidden-layer gradient reads
// each output row before that row is updated), so when the involved rows are
// distinct the step applies exactly -lr * grad of example_loss.
template <class T>
T step(std::span<T> input, std::span<T> output, std::uint32_t dim,
       std::span<const std::uint32_t> context, std::uint32_t target,
       std::span<const std::uint32_t> negatives, T lr, std::vector<T>& hidden,
       std::vector<T>& hgrad) {
  hidden.assign(dim, T(0));
  hgrad.assign(dim, T(0));
  for (std::uint32_t c : context) {
    const T* row = input.data() + std::size_t(c) * dim;
    for (std::uint32_t i = 0; i < dim; ++i) hidden[i] += row[i];
  }
  T inv = T(1) / T(context.size());
  for (std::uint32_t i = 0; i < dim; ++i) hidden[i] *= inv;

  T loss = 0;
  auto update_target = [&](std::uint32_t word, T label) {
    T* row = output.data() + std::size_t(word) * dim;
    T f = dot(row, hidden.data(), dim);
    loss += softplus(label > T(0.5) ? -f : f);
    T g = label - sigmoid(f);
    T step_scale = lr * g;
    for (std::uint32_t i = 0; i < dim; ++i) {
      hgrad[i] += g * row[i];
      row[i] += step_scale * hidden[i];
    }
  };

  update_target(target, T(1));
  for (std::uint32_t n : negatives) {
    if (n == target) continue;
    update_target(n, T(0));
  }

  T ctx_scale = lr * inv;
  for (std::uint32_t c : context) {
    T* row = input.data() + std::size_t(c) * dim;
    for (std::uint32_t i = 0; i < dim; ++i) row[i] += ctx_scale * hgrad[i];
  }
  return loss;
}

}  // namespace cbow

// Word vectors plus everything needed to keep training them.
struct EmbeddingModel {
  Vocabulary vocab;
  std::uint32_t dim = 0;
  std::vector<float> input;   // |V| x dim row-major; the word vectors
  std::vector<float> output;  // |V| x dim row-major; context side
  TrainerConfig config;
  std::vector<std::pair<std::string, std::uint32_t>> provenance;

  std::span<float> input_row(std::uint32_t id) {
    return {input.data() + std::size_t(id) * dim, dim};
  }
  std::span<const float> input_row(std::uint32_t id) const {
    return {input.data() + std::size_t(id) * dim, dim};
  }

  // The word vector consumed by downstream similarity measures.
  std::vector<float> vector(std::string_view token) const {
    auto id = vocab.find(token);
    if (!id)
      throw OovError("token not in vocabulary: " + std::string(token),
                     {std::string(token)});
    auto row = input_row(*id);
    return {row.begin(), row.end()};
  }

  std::vector<double> vector_d(std::string_view token) const {
    auto v = vector(token);
    return {v.begin(), v.end()};
  }

  bool finite() const {
    for (float x : input)
      if (!std::isfinite(x)) return false;
    for (float x : output)
      if (!std::isfinite(x)) return false;
    return true;
  }

  void save(const std::string& path) const;
  static EmbeddingModel load(const std::string& path);
  void export_text(std::ostream& os) const;
};

inline EmbeddingModel init_model(Vocabulary vocab, const TrainerConfig& cfg) {
  cfg.validate();
  EmbeddingModel m;
  m.dim = cfg.vector_dim;
  m.config = cfg;
  m.vocab = std::move(vocab);
  std::size_t n = std::size_t(m.vocab.size()) * m.dim;
  m.input.resize(n);
  m.output.assign(n, 0.f);
  Rng rng(derive_seed(cfg.seed, "init-vectors"));
  float scale = 1.0f / float(m.dim);
  for (auto& x : m.input) x = float(rng.uniform() - 0.5) * scale;
  return m;
}

struct EpochStats {
  std::uint32_t epoch = 0;            // 1-based
  double mean_position_loss = 0.0;
  std::uint64_t positions = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

namespace detail {

// Sequential pass over [begin, end) docs. `consumed` tracks schedule
// progress in in-vocabulary tokens (pre-subsampling), shared across threads
// in the non-deterministic mode.
inline std::pair<double, std::uint64_t> cbow_pass(
    EmbeddingModel& model, const IdCorpus& corpus, std::size_t begin,
    std::size_t end, const TrainerConfig& cfg, std::uint64_t scheduled,
    std::atomic<std::uint64_t>& consumed, Rng& rng) {
  const std::uint32_t dim = model.dim;
  const float initial_lr = cfg.initial_lr;
  const float floor_lr = initial_lr / 10000.0f;
  std::span<float> input(model.input);
  std::span<float> output(model.output);

  std::vector<float> hidden(dim), hgrad(dim);
  std::vector<std::uint32_t> kept, context, negatives;
  double loss_sum = 0.0;
  std::uint64_t positions = 0;

  for (std::size_t d = begin; d < end; ++d) {
    const auto& doc = corpus.docs[d];
    std::uint64_t done = consumed.fetch_add(doc.size(),
                                            std::memory_order_relaxed);
    float lr = initial_lr *
               (1.0f - float(double(done) / double(scheduled + 1)));
    if (lr < floor_lr) lr = floor_lr;

    kept.clear();
    for (std::uint32_t id : doc) {
      if (cfg.subsample_threshold > 0.0) {
        double f = model.vocab.frequency(id);
        if (f > cfg.subsample_threshold) {
          double keep_prob = std::sqrt(cfg.subsample_threshold / f);
          if (rng.uniform() >= keep_prob) continue;
        }
      }
      kept.push_back(id);
    }
    if (kept.size() < 2) continue;

    for (std::size_t t = 0; t < kept.size(); ++t) {
      std::uint32_t w = 1 + std::uint32_t(rng.below(cfg.window));
      std::size_t lo = t > w ? t - w : 0;
      std::size_t hi = std::min(kept.size() - 1, t + w);
      context.clear();
      for (std::size_t j = lo; j <= hi; ++j)
        if (j != t) context.push_back(kept[j]);
      negatives.clear();
      for (std::uint32_t k = 0; k < cfg.negatives; ++k)
        negatives.push_back(model.vocab.sample_noise(rng));
      if (context.empty()) continue;
      loss_sum += cbow::step<float>(input, output, dim, context, kept[t],
                                    negatives, lr, hidden, hgrad);
      ++positions;
    }
  }
  return {loss_sum, positions};
}

}  // namespace detail

// Trains `model` on `corpus` for cfg.epochs. Deterministic mode (or
// threads == 1) processes documents in corpus order on one thread and is a
// pure function of (model, corpus, cfg, train_seed). The opt-in parallel
// mode shards documents across threads with unsynchronized (hogwild) table
// updates and forfeits bit-reproducibility.
inline void train_in_place(EmbeddingModel& model, const IdCorpus& corpus,
                           const TrainerConfig& cfg, std::uint64_t train_seed,
                           std::uint32_t threads = 1,
                           const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (corpus.total_tokens == 0)
    throw DataError("training corpus has no in-vocabulary tokens");
  const std::uint64_t scheduled =
      std::uint64_t(cfg.epochs) * corpus.total_tokens;
  std::atomic<std::uint64_t> consumed{0};

  bool sequential = cfg.deterministic || threads <= 1;
  for (std::uint32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::uint64_t positions = 0;
    if (sequential) {
      Rng rng(derive_seed(train_seed, "epoch", epoch));
      auto [ls, np] = detail::cbow_pass(model, corpus, 0, corpus.docs.size(),
                                        cfg, scheduled, consumed, rng);
      loss_sum = ls;
      positions = np;
    } else {
      std::uint32_t nt =
          std::min<std::uint32_t>(threads,
                                  std::uint32_t(corpus.docs.size()));
      std::vector<std::thread> pool;
      std::vector<std::pair<double, std::uint64_t>> results(nt);
      std::size_t chunk = (corpus.docs.size() + nt - 1) / nt;
      for (std::uint32_t t = 0; t < nt; ++t) {
        std::size_t begin = std::size_t(t) * chunk;
        std::size_t end = std::min(begin + chunk, corpus.docs.size());
        pool.emplace_back([&, t, begin, end] {
          Rng rng(derive_seed(train_seed, "hogwild", epoch, "t" +
                              std::to_string(t)));
          results[t] = detail::cbow_pass(model, corpus, begin, end, cfg,
                                         scheduled, consumed, rng);
        });
      }
      for (auto& th : pool) th.join();
      for (auto& [ls, np] : results) {
        loss_sum += ls;
        positions += np;
      }
    }
    if (on_epoch)
      on_epoch({epoch, positions ? loss_sum / double(positions) : 0.0,
                positions});
  }
}

// Mean per-position loss over the whole corpus with the maximal symmetric
// window, no subsampling, and negatives drawn from eval_seed. Used to track
// objective improvement across epochs; deterministic.
inline double evaluate_loss(const EmbeddingModel& model,
                            const IdCorpus& corpus, std::uint64_t eval_seed) {
  const auto& cfg = model.config;
  Rng rng(derive_seed(eval_seed, "eval-loss"));
  std::span<const float> input(model.input);
  std::span<const float> output(model.output);
  std::vector<std::uint32_t> context, negatives;
  double loss_sum = 0.0;
  std::uint64_t positions = 0;
  for (const auto& doc : corpus.docs) {
    if (doc.size() < 2) continue;
    for (std::size_t t = 0; t < doc.size(); ++t) {
      std::size_t lo = t > cfg.window ? t - cfg.window : 0;
      std::size_t hi = std::min(doc.size() - 1, t + std::size_t(cfg.window));
      context.clear();
      for (std::size_t j = lo; j <= hi; ++j)
        if (j != t) context.push_back(doc[j]);
      if (context.empty()) continue;
      negatives.clear();
      for (std::uint32_t k = 0; k < cfg.negatives; ++k)
        negatives.push_back(model.vocab.sample_noise(rng));
      loss_sum += cbow::example_loss<float>(input, output, model.dim, context,
                                            doc[t], negatives);
      ++positions;
    }
  }
  return positions ? loss_sum / double(positions) : 0.0;
}

inline EmbeddingModel train_baseline(
    const std::vector<TokenizedDocument>& docs, const TrainerConfig& cfg,
    std::uint32_t threads = 1, const EpochCallback& on_epoch = {}) {
  Vocabulary vocab = build_vocabulary(docs, cfg);
  IdCorpus corpus = map_to_ids(docs, vocab);
  EmbeddingModel model = init_model(std::move(vocab), cfg);
  train_in_place(model, corpus, cfg, derive_seed(cfg.seed, "train-baseline"),
                 threads, on_epoch);
  model.provenance.emplace_back("baseline", cfg.epochs);
  return model;
}

inline EmbeddingModel train_baseline(const CorpusStore& store,
                                     const SampledCorpus& sample,
                                     const TrainerConfig& cfg,
                                     std::uint32_t threads = 1,
                                     const EpochCallback& on_epoch = {}) {
  Vocabulary vocab = build_vocabulary(store, sample, cfg);
  IdCorpus corpus = map_to_ids(store, sample, vocab);
  EmbeddingModel model = init_model(std::move(vocab), cfg);
  train_in_place(model, corpus, cfg, derive_seed(cfg.seed, "train-baseline"),
                 threads, on_epoch);
  model.provenance.emplace_back("baseline", cfg.epochs);
  return model;
}

// Continued training: copies the baseline, keeps its vocabulary frozen
// (out-of-vocabulary tokens in the group corpus are skipped), and restarts
// the learning-rate decay over the group corpus schedule. The baseline is
// not mutated. Training hyperparameters come from cfg; the geometry (dim,
// vocabulary) is the baseline's.
inline EmbeddingModel train_updated(const EmbeddingModel& base,
                                    const IdCorpus& group_corpus,
                                    const TrainerConfig& cfg,
                                    const std::string& label = "updated") {
  cfg.validate();
  if (group_corpus.total_tokens == 0)
    throw DataError("train_updated: group corpus has no in-vocabulary "
                    "tokens");
  EmbeddingModel model = base;
  TrainerConfig run = cfg;
  run.vector_dim = base.dim;
  model.config = run;
  train_in_place(model, group_corpus, run,
                 derive_seed(cfg.seed, "train-updated"));
  model.provenance.emplace_back(label, cfg.epochs);
  return model;
}

inline EmbeddingModel train_updated(const EmbeddingModel& base,
                                    const std::vector<TokenizedDocument>&
                                        docs,
                                    const TrainerConfig& cfg,
                                    const std::string& label = "updated") {
  return train_updated(base, map_to_ids(docs, base.vocab), cfg, label);
}

// ---------------------------------------------------------------------------
// Persistence: versioned binary format, little-endian.
//   "EAUD" | version u32 | dim u32 | |V| u64
//   |V| x (token length u32, token bytes, count u64)
//   input matrix  f32 row-major
//   output matrix f32 row-major

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  put_u32(os, std::uint32_t(v));
  put_u32(os, std::uint32_t(v >> 32));
}

inline void put_f32(std::ostream& os, float v) {
  put_u32(os, std::bit_cast<std::uint32_t>(v));
}

inline std::uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw DataError(std::string("model file truncated reading ") + what);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
         std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

inline std::uint64_t get_u64(std::istream& is, const char* what) {
  std::uint64_t lo = get_u32(is, what);
  std::uint64_t hi = get_u32(is, what);
  return lo | hi << 32;
}

inline float get_f32(std::istream& is, const char* what) {
  return std::bit_cast<float>(get_u32(is, what));
}

}  // namespace detail

inline void EmbeddingModel::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open model file for writing: " + path);
  os.write("EAUD", 4);
  detail::put_u32(os, 1);  // format version
  detail::put_u32(os, dim);
  detail::put_u64(os, vocab.size());
  for (std::uint32_t i = 0; i < vocab.size(); ++i) {
    const std::string& tok = vocab.token(i);
    detail::put_u32(os, std::uint32_t(tok.size()));
    os.write(tok.data(), std::streamsize(tok.size()));
    detail::put_u64(os, vocab.count(i));
  }
  for (float v : input) detail::put_f32(os, v);
  for (float v : output) detail::put_f32(os, v);
  if (!os) throw DataError("write failed for model file: " + path);
}

inline EmbeddingModel EmbeddingModel::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open model file: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "EAUD", 4) != 0)
    throw DataError("model file " + path + ": bad magic bytes");
  std::uint32_t version = detail::get_u32(is, "version");
  if (version != 1)
    throw DataError("model file " + path + ": unsupported format version " +
                    std::to_string(version));
  EmbeddingModel m;
  m.dim = detail::get_u32(is, "dim");
  std::uint64_t vsize = detail::get_u64(is, "vocab size");
  std::vector<std::pair<std::string, std::uint64_t>> counted;
  counted.reserve(vsize);
  for (std::uint64_t i = 0; i < vsize; ++i) {
    std::uint32_t len = detail::get_u32(is, "token length");
    std::string tok(len, '\0');
    if (!is.read(tok.data(), len))
      throw DataError("model file truncated reading token");
    std::uint64_t cnt = detail::get_u64(is, "token count");
    counted.emplace_back(std::move(tok), cnt);
  }
  // Counts were stored in vocabulary order; rebuild with min_count 1 so the
  // loaded vocabulary is taken as-is.
  m.vocab = Vocabulary::build(std::move(counted), 1);
  m.config.vector_dim = m.dim;
  std::size_t n = std::size_t(vsize) * m.dim;
  m.input.resize(n);
  m.output.resize(n);
  for (auto& v : m.input) v = detail::get_f32(is, "input matrix");
  for (auto& v : m.output) v = detail::get_f32(is, "output matrix");
  return m;
}

// Plain-text export: first line "|V| dim", then one token plus dim
// space-separated values per line.
inline void EmbeddingModel::export_text(std::ostream& os) const {
  os << vocab.size() << ' ' << dim << '\n';
  for (std::uint32_t i = 0; i < vocab.size(); ++i) {
    os << vocab.token(i);
    auto row = input_row(i);
    for (float v : row) os << ' ' << format_float(v);
    os << '\n';
  }
}

}  // namespace weatkit
