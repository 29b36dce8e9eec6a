#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "weatkit/corpus.hpp"
#include "weatkit/error.hpp"
#include "weatkit/numfmt.hpp"
#include "weatkit/rng.hpp"

namespace weatkit {

// Synthetic grouped corpora with a linguistic positivity bias (pleasant
// words occur more often than unpleasant ones) and group-varying minority
// name prevalence. With association_strength = 0 the sentiment of a token is
// independent of nearby names, so any measured name/valence association is a
// frequency artifact by construction.
struct SynthConfig {
  std::uint32_t n_groups = 0;
  std::uint32_t docs_per_group = 0;
  double tokens_per_doc = 20.0;  // Poisson mean, documents have at least 3
  std::uint32_t vocab_size = 2000;
  double zipf_exponent = 1.0;
  std::vector<std::string> names_a, names_b, pleasant, unpleasant;
  double name_rate = 0.02;
  double sentiment_rate = 0.05;
  std::vector<double> rel_b_freq;  // per group: B share of name positions
  double positivity_ratio = 2.0;   // pleasant : unpleasant odds
  double association_strength = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_groups == 0 || docs_per_group == 0)
      throw ConfigError("synth: n_groups and docs_per_group must be "
                        "positive");
    if (tokens_per_doc < 3.0)
      throw ConfigError("synth: tokens_per_doc must be at least 3");
    if (vocab_size == 0) throw ConfigError("synth: vocab_size must be > 0");
    if (names_a.empty() || names_b.empty() || pleasant.empty() ||
        unpleasant.empty())
      throw ConfigError("synth: all four word lists must be non-empty");
    if (name_rate < 0.0 || sentiment_rate < 0.0 ||
        name_rate + sentiment_rate >= 1.0)
      throw ConfigError("synth: name_rate + sentiment_rate must be in "
                        "[0, 1)");
    if (!(positivity_ratio > 0.0))
      throw ConfigError("synth: positivity_ratio must be positive");
    if (association_strength < 0.0)
      throw ConfigError("synth: association_strength must be >= 0");
    if (rel_b_freq.size() != n_groups)
      throw ConfigError("synth: rel_b_freq needs one entry per group (" +
                        std::to_string(rel_b_freq.size()) + " given, " +
                        std::to_string(n_groups) + " groups)");
    for (double f : rel_b_freq)
      if (!(f >= 0.0) || !(f < 1.0))
        throw ConfigError("synth: rel_b_freq entries must be in [0, 1)");
  }
};

struct GroupGroundTruth {
  std::string group_id;
  double configured_rel_b_freq = 0.0;
  std::uint64_t docs = 0;
  std::uint64_t tokens = 0;
  std::uint64_t a_name_tokens = 0;
  std::uint64_t b_name_tokens = 0;
  std::uint64_t pleasant_tokens = 0;
  std::uint64_t unpleasant_tokens = 0;

  double realized_rel_b_freq() const {
    std::uint64_t total = a_name_tokens + b_name_tokens;
    return total == 0 ? 0.0 : double(b_name_tokens) / double(total);
  }
};

inline std::string synth_group_id(std::uint32_t index,
                                  std::uint32_t n_groups) {
  std::string num = std::to_string(index + 1);
  std::string width = std::to_string(n_groups);
  std::string id = "g";
  for (std::size_t i = num.size(); i < width.size(); ++i) id += '0';
  return id + num;
}

// Evenly log-spaced values spanning [lo, hi]; deterministic.
inline std::vector<double> log_grid(double lo, double hi, std::uint32_t n) {
  if (!(lo > 0.0) || !(hi > lo)) throw ConfigError("log_grid: need 0 < lo < hi");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = std::sqrt(lo * hi);
    return out;
  }
  double llo = std::log(lo), lhi = std::log(hi);
  for (std::uint32_t i = 0; i < n; ++i)
    out[i] = std::exp(llo + (lhi - llo) * double(i) / double(n - 1));
  return out;
}

inline std::vector<double> log_uniform(double lo, double hi, std::uint32_t n,
                                       std::uint64_t seed) {
  if (!(lo > 0.0) || !(hi > lo))
    throw ConfigError("log_uniform: need 0 < lo < hi");
  Rng rng(derive_seed(seed, "log-uniform"));
  std::vector<double> out(n);
  double llo = std::log(lo), lhi = std::log(hi);
  for (auto& v : out) v = std::exp(rng.uniform(llo, lhi));
  return out;
}

// Streams the generated documents through `sink` and returns the per-group
// ground truth. Deterministic: each group has its own sub-seeded stream, so
// groups can be regenerated independently.
inline std::vector<GroupGroundTruth> generate_corpus(
    const SynthConfig& cfg, const std::function<void(const Document&)>& sink) {
  cfg.validate();

  // Zipf background distribution over ranks 1..vocab_size.
  std::vector<double> zipf_weights(cfg.vocab_size);
  for (std::uint32_t k = 0; k < cfg.vocab_size; ++k)
    zipf_weights[k] = 1.0 / std::pow(double(k + 1), cfg.zipf_exponent);
  AliasSampler zipf(zipf_weights);

  std::vector<std::string> background(cfg.vocab_size);
  for (std::uint32_t k = 0; k < cfg.vocab_size; ++k) {
    std::string num = std::to_string(k + 1);
    background[k] = "w" + std::string(6 - std::min<std::size_t>(6,
                                      num.size()), '0') + num;
  }

  const double base_pleasant_prob =
      cfg.positivity_ratio / (1.0 + cfg.positivity_ratio);

  std::vector<GroupGroundTruth> truth;
  truth.reserve(cfg.n_groups);
  for (std::uint32_t g = 0; g < cfg.n_groups; ++g) {
    GroupGroundTruth gt;
    gt.group_id = synth_group_id(g, cfg.n_groups);
    gt.configured_rel_b_freq = cfg.rel_b_freq[g];
    Rng rng(derive_seed(cfg.seed, "synth-group", 0, gt.group_id));

    std::string text;
    for (std::uint32_t d = 0; d < cfg.docs_per_group; ++d) {
      std::uint64_t len = std::max<std::uint64_t>(
          3, rng.poisson(cfg.tokens_per_doc));
      text.clear();
      // last name seen in this document: position and whether it was a B name
      std::int64_t last_name_pos = -100;
      bool last_name_b = false;
      for (std::uint64_t pos = 0; pos < len; ++pos) {
        double u = rng.uniform();
        const std::string* tok;
        if (u < cfg.name_rate) {
          bool is_b = rng.uniform() < cfg.rel_b_freq[g];
          const auto& list = is_b ? cfg.names_b : cfg.names_a;
          tok = &list[rng.below(list.size())];
          (is_b ? gt.b_name_tokens : gt.a_name_tokens)++;
          last_name_pos = std::int64_t(pos);
          last_name_b = is_b;
        } else if (u < cfg.name_rate + cfg.sentiment_rate) {
          double p_pleasant = base_pleasant_prob;
          if (cfg.association_strength > 0.0 &&
              std::int64_t(pos) - last_name_pos <= 5) {
            // tilt valence near a recent name: pleasant-odds shrink after a
            // B name and grow after an A name
            double odds = cfg.positivity_ratio *
                          std::exp(last_name_b ? -cfg.association_strength
                                               : cfg.association_strength);
            p_pleasant = odds / (1.0 + odds);
          }
          bool is_pleasant = rng.uniform() < p_pleasant;
          const auto& list = is_pleasant ? cfg.pleasant : cfg.unpleasant;
          tok = &list[rng.below(list.size())];
          (is_pleasant ? gt.pleasant_tokens : gt.unpleasant_tokens)++;
        } else {
          tok = &background[zipf.sample(rng)];
        }
        if (!text.empty()) text += ' ';
        text += *tok;
        ++gt.tokens;
      }
      ++gt.docs;
      sink(Document{gt.group_id, text});
    }
    truth.push_back(std::move(gt));
  }
  return truth;
}

struct SynthOutcomeSpec {
  double loading_on_prevalence = 0.8;
  double noise_sd = 0.6;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(noise_sd > 0.0))
      throw ConfigError("synth outcomes: noise_sd must be positive");
  }
};

struct OutcomeRow {
  std::string group_id;
  double outcome = 0.0;
  double prevalence = 0.0;  // the configured group prevalence proxy
};

// outcome_g = loading * standardized(configured prevalence) + N(0, noise_sd)
inline std::vector<OutcomeRow> generate_outcomes(
    const std::vector<GroupGroundTruth>& truth, const SynthOutcomeSpec& spec) {
  spec.validate();
  if (truth.size() < 2)
    throw DataError("synth outcomes: need at least 2 groups");
  std::vector<double> prevalence;
  prevalence.reserve(truth.size());
  for (const auto& gt : truth) prevalence.push_back(gt.configured_rel_b_freq);

  double m = 0.0;
  for (double v : prevalence) m += v;
  m /= double(prevalence.size());
  double ss = 0.0;
  for (double v : prevalence) ss += (v - m) * (v - m);
  double sd = std::sqrt(ss / double(prevalence.size() - 1));
  if (sd <= 1e-12)
    throw DataError("synth outcomes: prevalence is constant across groups");

  Rng rng(derive_seed(spec.seed, "synth-outcomes"));
  std::vector<OutcomeRow> rows;
  rows.reserve(truth.size());
  for (std::size_t g = 0; g < truth.size(); ++g) {
    OutcomeRow row;
    row.group_id = truth[g].group_id;
    row.prevalence = prevalence[g];
    row.outcome = spec.loading_on_prevalence * (prevalence[g] - m) / sd +
                  rng.normal(0.0, spec.noise_sd);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_ground_truth_tsv(std::ostream& os,
                                   const std::vector<GroupGroundTruth>&
                                       truth) {
  os << "group_id\tconfigured_rel_b_freq\trealized_rel_b_freq\tdocs\ttokens"
        "\ta_name_tokens\tb_name_tokens\tpleasant_tokens\tunpleasant_tokens"
        "\n";
  for (const auto& gt : truth)
    os << gt.group_id << '\t' << format_double(gt.configured_rel_b_freq)
       << '\t' << format_double(gt.realized_rel_b_freq()) << '\t' << gt.docs
       << '\t' << gt.tokens << '\t' << gt.a_name_tokens << '\t'
       << gt.b_name_tokens << '\t' << gt.pleasant_tokens << '\t'
       << gt.unpleasant_tokens << '\n';
}

inline void write_outcomes_tsv(std::ostream& os,
                               const std::vector<OutcomeRow>& rows) {
  os << "group_id\toutcome\tprevalence\n";
  for (const auto& row : rows)
    os << row.group_id << '\t' << format_double(row.outcome) << '\t'
       << format_double(row.prevalence) << '\n';
}

}  // namespace weatkit
