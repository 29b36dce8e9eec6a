// weatkit command-line driver: synthesize corpora, inventory groups, train
// embedding models, score the WEAT, and run the full group-level estimation
// and regression pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "weatkit/weatkit.hpp"

namespace fs = std::filesystem;
using namespace weatkit;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> workers;
  std::optional<bool> deterministic;
  std::string out_dir;
  std::string corpus;
  std::string covariates;
  std::string names_a, names_b, pleasant, unpleasant;
  std::string model;
  std::string out;
  std::uint32_t rep = 1;
  std::string group;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "configuration file");
  cmd->add_option("--seed", flags.seed, "master seed");
  cmd->add_option("--workers", flags.workers, "worker thread count");
  cmd->add_option("--deterministic", flags.deterministic,
                  "deterministic mode (true/false)");
  cmd->add_option("--out-dir", flags.out_dir, "output directory");
  cmd->add_option("--corpus", flags.corpus, "corpus JSONL path");
  cmd->add_option("--covariates", flags.covariates,
                  "covariates TSV/CSV path");
  cmd->add_option("--names-a", flags.names_a, "majority name list");
  cmd->add_option("--names-b", flags.names_b, "minority name list");
  cmd->add_option("--pleasant", flags.pleasant, "pleasant word list");
  cmd->add_option("--unpleasant", flags.unpleasant, "unpleasant word list");
  cmd->allow_extras();
}

// File keys beat defaults, --section.key=value beats the file, named flags
// beat everything.
Config assemble_config(const CommonFlags& flags,
                       const std::vector<std::string>& extras) {
  Config cfg;
  if (!flags.config_path.empty()) cfg = Config::parse_file(flags.config_path);
  for (const auto& extra : extras) {
    if (!extra.starts_with("--"))
      throw ConfigError("unexpected argument '" + extra + "'");
    cfg.apply_override(extra);
  }
  if (flags.seed) cfg.set("run", "seed", std::to_string(*flags.seed));
  if (flags.workers)
    cfg.set("run", "workers", std::to_string(*flags.workers));
  if (flags.deterministic)
    cfg.set("trainer", "deterministic", *flags.deterministic ? "true"
                                                             : "false");
  if (!flags.out_dir.empty()) cfg.set("paths", "out_dir", flags.out_dir);
  if (!flags.corpus.empty()) cfg.set("paths", "corpus", flags.corpus);
  if (!flags.covariates.empty())
    cfg.set("paths", "covariates", flags.covariates);
  if (!flags.names_a.empty()) cfg.set("paths", "names_a", flags.names_a);
  if (!flags.names_b.empty()) cfg.set("paths", "names_b", flags.names_b);
  if (!flags.pleasant.empty()) cfg.set("paths", "pleasant", flags.pleasant);
  if (!flags.unpleasant.empty())
    cfg.set("paths", "unpleasant", flags.unpleasant);
  return cfg;
}

fs::path ensure_out_dir(const Config& cfg) {
  fs::path dir = cfg.get_string("paths", "out_dir", ".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    throw ConfigError("cannot create output directory: " + dir.string());
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open output file: " + path.string());
  return os;
}

CorpusStore load_store(const Config& cfg) {
  std::string path = cfg.require_string("paths", "corpus");
  CorpusStore store;
  LoadReport report = load_corpus_file(path, store);
  std::cerr << "corpus: " << report.lines << " lines, " << report.kept
            << " kept, " << report.retweets_dropped << " retweets dropped, "
            << report.empty_dropped << " empty after tokenization\n";
  return store;
}

int cmd_inventory(const Config& cfg) {
  CorpusStore store = load_store(cfg);
  GroupInventory inv = store.inventory();
  SamplingPlan plan = sampling_plan_from(cfg);
  fs::path out = ensure_out_dir(cfg) / "inventory.tsv";
  auto os = open_output(out);
  inv.write_tsv(os);
  std::cout << "inventory: " << inv.size() << " groups, "
            << eligible_groups(inv, plan).size()
            << " eligible at threshold " << plan.min_group_size << '\n';
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

int cmd_synth(const Config& cfg) {
  SynthConfig sc = synth_config_from(cfg);
  fs::path dir = ensure_out_dir(cfg);
  auto corpus_os = open_output(dir / "corpus.jsonl");
  auto truth = generate_corpus(sc, [&](const Document& doc) {
    nlohmann::json j;
    j["group_id"] = doc.group_id;
    j["text"] = doc.text;
    corpus_os << j.dump() << '\n';
  });
  auto truth_os = open_output(dir / "ground_truth.tsv");
  write_ground_truth_tsv(truth_os, truth);

  SynthOutcomeSpec spec;
  spec.loading_on_prevalence =
      cfg.get_double("synth", "outcome_loading", spec.loading_on_prevalence);
  spec.noise_sd = cfg.get_double("synth", "outcome_noise_sd", spec.noise_sd);
  spec.seed = derive_seed(sc.seed, "outcome-spec");
  auto outcomes = generate_outcomes(truth, spec);
  auto outcome_os = open_output(dir / "covariates.tsv");
  write_outcomes_tsv(outcome_os, outcomes);

  for (const auto& gt : truth)
    std::cout << gt.group_id << ": configured rel_b "
              << format_fixed(gt.configured_rel_b_freq, 4) << ", realized "
              << format_fixed(gt.realized_rel_b_freq(), 4) << " ("
              << gt.tokens << " tokens)\n";
  std::cout << "wrote " << (dir / "corpus.jsonl").string() << ", "
            << (dir / "ground_truth.tsv").string() << ", "
            << (dir / "covariates.tsv").string() << '\n';
  return 0;
}

int cmd_run(const Config& cfg) {
  CorpusStore store = load_store(cfg);
  WeatWordSets raw = word_sets_from(cfg);

  PipelineOptions opts;
  opts.plan = sampling_plan_from(cfg);
  opts.trainer = trainer_config_from(cfg);
  opts.master_seed = cfg.get_u64("run", "seed", 0);
  opts.workers = cfg.get_u32("run", "workers", 1);
  opts.name_freq_on_sample =
      cfg.get_bool("run", "name_freq_on_sample", false);

  PipelineResult result = run_group_pipeline(store, raw, opts, &std::cerr);

  fs::path dir = ensure_out_dir(cfg);
  {
    auto os = open_output(dir / "group_bias.tsv");
    write_group_bias_tsv(os, result.records);
  }
  std::cout << "wrote " << (dir / "group_bias.tsv").string() << " ("
            << result.records.size() << " groups)\n";

  std::string cov_path = cfg.get_string("paths", "covariates", "");
  if (!cov_path.empty()) {
    CovariateTable table = load_covariates_file(cov_path);
    std::vector<GroupBiasRecord> records = result.records;
    JoinReport join = join_covariates(records, table);
    std::cerr << "covariate join: " << join.joined << " rows, "
              << join.records_without_covariates
              << " groups without covariates, "
              << join.covariate_rows_dropped_incomplete
              << " incomplete covariate rows dropped\n";

    std::vector<std::string> outcomes =
        Config::split_list(cfg.get_string("run", "outcomes", "outcome"));
    std::vector<ControlSet> controls = control_sets_from(cfg);
    AssociationTable assoc = build_association_table(
        records, outcomes, controls, table.indicator_columns);
    {
      auto os = open_output(dir / "association_table.tsv");
      write_association_tsv(os, assoc);
    }
    {
      auto os = open_output(dir / "association_table.json");
      os << association_to_json(assoc).dump(2) << '\n';
    }
    std::cout << "wrote " << (dir / "association_table.tsv").string()
              << " and .json\n";

    std::string prevalence =
        cfg.get_string("run", "prevalence_column", "");
    if (!prevalence.empty()) {
      std::vector<double> x = record_column(records, prevalence);
      std::vector<double> y = record_column(records, kNameFreqColumn);
      double fraction = cfg.get_double("run", "lowess_fraction", 2.0 / 3.0);
      std::vector<double> fitted = lowess(x, y, fraction);
      auto os = open_output(dir / "lowess.tsv");
      write_lowess_tsv(os, x, y, fitted);
      std::cout << "wrote " << (dir / "lowess.tsv").string() << '\n';
    }
  }
  return 0;
}

int cmd_weat(const Config& cfg, const std::string& model_path) {
  if (model_path.empty())
    throw ConfigError("weat: --model is required");
  EmbeddingModel model = EmbeddingModel::load(model_path);
  WeatWordSets raw = word_sets_from(cfg);
  PreparedWordSets prepared = prepare_word_sets(raw, model);
  WeatScore score = weat(model, prepared.sets);
  std::cout << weat_score_to_json(score, prepared.dropped).dump(2) << '\n';
  return 0;
}

int cmd_train_baseline(const Config& cfg, std::uint32_t rep,
                       const std::string& out_flag) {
  CorpusStore store = load_store(cfg);
  SamplingPlan plan = sampling_plan_from(cfg);
  plan.seed = derive_seed(cfg.get_u64("run", "seed", 0), "sampling");
  TrainerConfig tc = trainer_config_from(cfg);
  tc.seed = derive_seed(cfg.get_u64("run", "seed", 0), "trainer-baseline",
                        rep);
  SampledCorpus sample = sample_baseline(store, plan, rep);
  std::uint32_t workers = cfg.get_u32("run", "workers", 1);
  EmbeddingModel model = train_baseline(
      store, sample, tc, tc.deterministic ? 1 : workers,
      [](const EpochStats& s) {
        std::cerr << "epoch " << s.epoch << ": mean loss "
                  << format_fixed(s.mean_position_loss, 5) << " over "
                  << s.positions << " positions\n";
      });
  fs::path out = out_flag.empty()
                     ? ensure_out_dir(cfg) / "baseline.bin"
                     : fs::path(out_flag);
  model.save(out.string());
  std::cout << "wrote " << out.string() << " (vocab " << model.vocab.size()
            << ", dim " << model.dim << ")\n";
  return 0;
}

int cmd_train_updated(const Config& cfg, const std::string& model_path,
                      const std::string& group, std::uint32_t rep,
                      const std::string& out_flag) {
  if (model_path.empty())
    throw ConfigError("train-updated: --model is required");
  if (group.empty())
    throw ConfigError("train-updated: --group is required");
  EmbeddingModel base = EmbeddingModel::load(model_path);
  CorpusStore store = load_store(cfg);
  SamplingPlan plan = sampling_plan_from(cfg);
  plan.seed = derive_seed(cfg.get_u64("run", "seed", 0), "sampling");
  TrainerConfig tc = trainer_config_from(cfg);
  tc.seed = derive_seed(cfg.get_u64("run", "seed", 0), "trainer-group", rep,
                        group);
  SampledCorpus sample = sample_group(store, group, plan, rep);
  IdCorpus ids = map_to_ids(store, sample, base.vocab);
  EmbeddingModel updated = train_updated(base, ids, tc, group);
  fs::path out = out_flag.empty()
                     ? ensure_out_dir(cfg) / ("updated_" + group + ".bin")
                     : fs::path(out_flag);
  updated.save(out.string());
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WEAT bias measurement over per-group embedding models"};
  app.require_subcommand(1);

  CommonFlags flags;
  CLI::App* inventory = app.add_subcommand(
      "inventory", "count documents and tokens per group");
  CLI::App* synth = app.add_subcommand(
      "synth", "generate a synthetic grouped corpus with ground truth");
  CLI::App* run = app.add_subcommand(
      "run", "full pipeline: sample, train, score, regress");
  CLI::App* weat_cmd = app.add_subcommand(
      "weat", "score a saved model against the word lists");
  CLI::App* train_base = app.add_subcommand(
      "train-baseline", "train and save a baseline model");
  CLI::App* train_upd = app.add_subcommand(
      "train-updated", "continue-train a saved baseline on one group");

  for (CLI::App* cmd :
       {inventory, synth, run, weat_cmd, train_base, train_upd})
    add_common_flags(cmd, flags);
  weat_cmd->add_option("--model", flags.model, "saved model path");
  train_upd->add_option("--model", flags.model, "saved baseline model path");
  train_base->add_option("--rep", flags.rep, "repetition index (1-based)");
  train_upd->add_option("--rep", flags.rep, "repetition index (1-based)");
  train_base->add_option("--out", flags.out, "model output path");
  train_upd->add_option("--out", flags.out, "model output path");
  train_upd->add_option("--group", flags.group, "group id to train on");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    Config cfg = assemble_config(flags, active->remaining());
    if (active == inventory) return cmd_inventory(cfg);
    if (active == synth) return cmd_synth(cfg);
    if (active == run) return cmd_run(cfg);
    if (active == weat_cmd) return cmd_weat(cfg, flags.model);
    if (active == train_base)
      return cmd_train_baseline(cfg, flags.rep, flags.out);
    if (active == train_upd)
      return cmd_train_updated(cfg, flags.model, flags.group, flags.rep,
                               flags.out);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
