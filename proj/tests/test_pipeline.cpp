#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "weatkit/covariates.hpp"
#include "weatkit/pipeline.hpp"
#include "weatkit/reports.hpp"
#include "weatkit/synth.hpp"

using namespace weatkit;

namespace {

// tiny but real end-to-end fixture
struct Fixture {
  CorpusStore store;
  WeatWordSets raw;
  PipelineOptions opts;

  Fixture() {
    SynthConfig cfg;
    cfg.n_groups = 3;
    cfg.docs_per_group = 300;
    cfg.tokens_per_doc = 15.0;
    cfg.vocab_size = 60;
    cfg.names_a = {"adam", "harry"};
    cfg.names_b = {"jamal", "leroy"};
    cfg.pleasant = {"joy", "love"};
    cfg.unpleasant = {"agony", "hatred"};
    cfg.name_rate = 0.10;
    cfg.sentiment_rate = 0.12;
    cfg.rel_b_freq = {0.05, 0.2, 0.45};
    cfg.seed = 7;
    generate_corpus(cfg, [&](const Document& d) { store.add(tokenize(d)); });

    raw.names_a = {"Adam", "harry"};
    raw.names_b = {"jamal", "LEROY"};
    raw.pleasant = {"joy", "love"};
    raw.unpleasant = {"agony", "hatred"};

    opts.plan.baseline_total = 300;
    opts.plan.per_group_sample = 250;
    opts.plan.min_group_size = 250;
    opts.plan.repetitions = 2;
    opts.trainer.vector_dim = 12;
    opts.trainer.min_count = 2;
    opts.trainer.epochs = 2;
    opts.trainer.window = 3;
    opts.trainer.subsample_threshold = 1.0;
    opts.master_seed = 99;
    opts.workers = 2;
  }
};

}  // namespace

TEST_CASE("pipeline produces sorted averaged records deterministically") {
  Fixture fx;
  PipelineResult r1 = run_group_pipeline(fx.store, fx.raw, fx.opts);
  REQUIRE(r1.records.size() == 3);
  CHECK(r1.eligible == std::vector<std::string>{"g1", "g2", "g3"});
  for (std::size_t i = 1; i < r1.records.size(); ++i)
    CHECK(r1.records[i - 1].group_id < r1.records[i].group_id);
  for (const auto& rec : r1.records) {
    REQUIRE(rec.weat_values.size() == 2);
    CHECK(rec.weat_mean ==
          doctest::Approx(mean_of(rec.weat_values)).epsilon(1e-12));
    CHECK(rec.rel_b_name_freq >= 0.0);
    CHECK(rec.rel_b_name_freq <= 1.0);
  }
  // higher configured rel_b shows up in the measured name frequency
  CHECK(r1.records[0].rel_b_name_freq < r1.records[2].rel_b_name_freq);

  // byte-level determinism of the emitted TSV across two runs
  PipelineResult r2 = run_group_pipeline(fx.store, fx.raw, fx.opts);
  std::ostringstream t1, t2;
  write_group_bias_tsv(t1, r1.records);
  write_group_bias_tsv(t2, r2.records);
  CHECK(t1.str() == t2.str());

  // worker count must not change results
  PipelineOptions serial = fx.opts;
  serial.workers = 1;
  PipelineResult r3 = run_group_pipeline(fx.store, fx.raw, serial);
  std::ostringstream t3;
  write_group_bias_tsv(t3, r3.records);
  CHECK(t3.str() == t1.str());
}

TEST_CASE("single repetition mean equals the repetition value") {
  Fixture fx;
  fx.opts.plan.repetitions = 1;
  PipelineResult r = run_group_pipeline(fx.store, fx.raw, fx.opts);
  for (const auto& rec : r.records) {
    REQUIRE(rec.weat_values.size() == 1);
    CHECK(rec.weat_mean == rec.weat_values[0]);
  }
}

TEST_CASE("pipeline errors carry group and repetition context") {
  Fixture fx;
  // force an eligible group whose sample cannot satisfy the word sets:
  // word lists that never occur in the corpus
  WeatWordSets bogus;
  bogus.names_a = {"qqq1"};
  bogus.names_b = {"qqq2"};
  bogus.pleasant = {"qqq3"};
  bogus.unpleasant = {"qqq4"};
  try {
    run_group_pipeline(fx.store, bogus, fx.opts);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("word set") != std::string::npos);
  }
}

TEST_CASE("pipeline requires eligible groups") {
  Fixture fx;
  fx.opts.plan.min_group_size = 1'000'000;
  fx.opts.plan.per_group_sample = 1'000'000;
  CHECK_THROWS_AS(run_group_pipeline(fx.store, fx.raw, fx.opts), DataError);
}

TEST_CASE("group bias TSV has the documented columns") {
  std::vector<GroupBiasRecord> records(1);
  records[0].group_id = "g1";
  records[0].weat_values = {1.0, 2.0, 3.0};
  records[0].weat_mean = 2.0;
  records[0].rel_b_name_freq = 0.25;
  std::ostringstream os;
  write_group_bias_tsv(os, records);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "group_id\tweat_mean\tweat_rep_1\tweat_rep_2\tweat_rep_3"
        "\trel_b_name_freq");
  std::string row;
  std::getline(is, row);
  CHECK(row == "g1\t2\t1\t2\t3\t0.25");
}

TEST_CASE("covariate loading, categoricals and join") {
  std::istringstream is(
      "group_id\tincome\tdivision\n"
      "g1\t1.5\tnorth\n"
      "g2\t2.5\tsouth\n"
      "g3\t\tnorth\n"
      "g4\t4.0\twest\n");
  CovariateTable table = load_covariates(is, "test", '\t');
  CHECK(table.dropped_incomplete == 1);  // g3 has a missing income
  REQUIRE(table.columns.size() == 3);
  CHECK(table.columns[0] == "income");
  CHECK(table.columns[1] == "division=south");
  CHECK(table.columns[2] == "division=west");
  CHECK(table.indicator_columns.count("division=south") == 1);
  CHECK(table.rows.at("g2")[1] == 1.0);
  CHECK(table.rows.at("g4")[2] == 1.0);
  CHECK(table.rows.at("g1")[1] == 0.0);

  std::vector<GroupBiasRecord> records(3);
  records[0].group_id = "g1";
  records[1].group_id = "g3";  // dropped: incomplete covariates
  records[2].group_id = "g9";  // dropped: not in table
  JoinReport report = join_covariates(records, table);
  CHECK(report.joined == 1);
  CHECK(report.records_without_covariates == 2);
  CHECK(records.size() == 1);
  CHECK(records[0].covariates.at("income") == 1.5);
}

TEST_CASE("name frequency can be computed on the sample instead") {
  Fixture fx;
  fx.opts.name_freq_on_sample = true;
  PipelineResult r = run_group_pipeline(fx.store, fx.raw, fx.opts);
  for (const auto& rec : r.records) {
    CHECK(rec.rel_b_name_freq >= 0.0);
    CHECK(rec.rel_b_name_freq <= 1.0);
  }
}
