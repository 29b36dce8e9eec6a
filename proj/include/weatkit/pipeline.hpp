#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "weatkit/bias.hpp"
#include "weatkit/corpus.hpp"
#include "weatkit/embedding.hpp"
#include "weatkit/error.hpp"
#include "weatkit/rng.hpp"

namespace weatkit {

struct PipelineOptions {
  SamplingPlan plan;
  TrainerConfig trainer;
  std::uint64_t master_seed = 0;
  std::uint32_t workers = 1;
  // Count name occurrences on the per-repetition sample instead of the full
  // group corpus (sensitivity checks; rep 1 is used).
  bool name_freq_on_sample = false;
};

struct RepetitionLog {
  std::uint32_t rep = 0;
  std::uint64_t baseline_docs = 0;
  std::uint32_t vocab_size = 0;
  std::vector<std::string> dropped_tokens;  // word-list tokens not in vocab
};

struct PipelineResult {
  std::vector<GroupBiasRecord> records;  // sorted by group_id
  std::vector<std::string> eligible;
  std::vector<RepetitionLog> reps;
};

// Lowercases and dedupes the raw lists without vocabulary filtering; used
// for name-frequency counting, which is a corpus property independent of any
// trained vocabulary.
inline WeatWordSets normalize_word_sets(const WeatWordSets& raw) {
  auto norm = [](const std::vector<std::string>& src, const char* name) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& t : src) {
      std::string low = t;
      for (char& c : low)
        c = char(std::tolower(static_cast<unsigned char>(c)));
      if (!low.empty() && seen.insert(low).second) out.push_back(low);
    }
    if (out.empty())
      throw DataError(std::string("word set ") + name + " is empty");
    return out;
  };
  WeatWordSets sets;
  sets.names_a = norm(raw.names_a, "A");
  sets.names_b = norm(raw.names_b, "B");
  sets.pleasant = norm(raw.pleasant, "X");
  sets.unpleasant = norm(raw.unpleasant, "Y");
  sets.validate();
  return sets;
}

namespace detail {

// Re-throws the current exception with (group, rep) context, preserving the
// error category (and thus the CLI exit code).
[[noreturn]] inline void annotate_and_rethrow(const std::string& group_id,
                                              std::uint32_t rep) {
  std::string ctx = "[group " + group_id + ", rep " + std::to_string(rep) +
                    "] ";
  try {
    throw;
  } catch (const OovError& e) {
    throw OovError(ctx + e.what(), e.tokens());
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + e.what());
  } catch (const NumericError& e) {
    throw NumericError(ctx + e.what());
  } catch (const DataError& e) {
    throw DataError(ctx + e.what());
  } catch (const std::exception& e) {
    throw DataError(ctx + e.what());
  }
}

}  // namespace detail

// The end-to-end estimation loop. For each repetition: draw the stratified
// baseline sample, train the baseline model, then per eligible group draw
// the group sample, continue-train a copy of the baseline, and score the
// WEAT. Scores are averaged over repetitions per group, and the relative
// B-name frequency is attached (full group corpus by default). Group-level
// jobs fan out over a worker pool; results are merged in sorted group order,
// so the output is deterministic regardless of scheduling.
inline PipelineResult run_group_pipeline(const CorpusStore& store,
                                         const WeatWordSets& raw_sets,
                                         const PipelineOptions& opts,
                                         std::ostream* log = nullptr) {
  opts.plan.validate();
  opts.trainer.validate();

  SamplingPlan plan = opts.plan;
  plan.seed = derive_seed(opts.master_seed, "sampling");

  PipelineResult result;
  result.eligible = eligible_groups(store.inventory(), plan);
  if (result.eligible.empty())
    throw DataError("pipeline: no eligible groups at threshold " +
                    std::to_string(plan.min_group_size));
  const std::vector<std::string>& groups = result.eligible;

  std::map<std::string, std::vector<double>> weat_values;
  for (const auto& gid : groups)
    weat_values[gid].resize(plan.repetitions, 0.0);

  for (std::uint32_t rep = 1; rep <= plan.repetitions; ++rep) {
    SampledCorpus baseline_sample = sample_baseline(store, plan, rep);
    TrainerConfig base_cfg = opts.trainer;
    base_cfg.seed = derive_seed(opts.master_seed, "trainer-baseline", rep);
    EmbeddingModel baseline = train_baseline(
        store, baseline_sample, base_cfg,
        base_cfg.deterministic ? 1 : opts.workers);

    PreparedWordSets prepared = prepare_word_sets(raw_sets, baseline);

    RepetitionLog rep_log;
    rep_log.rep = rep;
    rep_log.baseline_docs = baseline_sample.doc_count();
    rep_log.vocab_size = baseline.vocab.size();
    rep_log.dropped_tokens = prepared.dropped;
    if (log) {
      *log << "rep " << rep << ": baseline docs "
           << rep_log.baseline_docs << ", vocab " << rep_log.vocab_size;
      if (!rep_log.dropped_tokens.empty())
        *log << ", dropped word-list tokens: "
             << join_tokens(rep_log.dropped_tokens);
      *log << '\n';
    }
    result.reps.push_back(std::move(rep_log));

    std::uint32_t n_workers =
        std::max<std::uint32_t>(1, std::min<std::uint32_t>(
                                       opts.workers,
                                       std::uint32_t(groups.size())));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= groups.size()) return;
        const std::string& gid = groups[i];
        try {
          SampledCorpus group_sample = sample_group(store, gid, plan, rep);
          IdCorpus ids = map_to_ids(store, group_sample, baseline.vocab);
          TrainerConfig group_cfg = opts.trainer;
          group_cfg.seed =
              derive_seed(opts.master_seed, "trainer-group", rep, gid);
          EmbeddingModel updated =
              train_updated(baseline, ids, group_cfg, gid);
          WeatScore score = weat(updated, prepared.sets);
          score.group_id = gid;
          score.repetition = rep;
          weat_values[gid][rep - 1] = score.value;
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) {
            try {
              detail::annotate_and_rethrow(gid, rep);
            } catch (...) {
              first_error = std::current_exception();
            }
          }
        }
      }
    };

    if (n_workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::uint32_t t = 0; t < n_workers; ++t)
        pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
  }

  WeatWordSets name_sets = normalize_word_sets(raw_sets);
  for (const auto& gid : groups) {
    GroupBiasRecord rec;
    rec.group_id = gid;
    rec.weat_values = weat_values[gid];
    rec.weat_mean = mean_of(rec.weat_values);
    try {
      if (opts.name_freq_on_sample) {
        SampledCorpus sample = sample_group(store, gid, plan, 1);
        rec.rel_b_name_freq =
            count_names(store, sample, name_sets).relative_b();
      } else {
        rec.rel_b_name_freq = relative_name_frequency(store, gid, name_sets);
      }
    } catch (...) {
      detail::annotate_and_rethrow(gid, 0);
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

}  // namespace weatkit
