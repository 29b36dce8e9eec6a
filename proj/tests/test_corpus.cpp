#include <doctest.h>

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "weatkit/corpus.hpp"

using namespace weatkit;

TEST_CASE("retweet filter drops exactly the case-sensitive marker") {
  CHECK(is_retweet("RT @alice great point"));
  CHECK_FALSE(is_retweet("great point by alice"));
  CHECK_FALSE(is_retweet("started... rt @Bob"));
  CHECK(is_retweet("prefix RT @x"));
  CHECK_FALSE(is_retweet("RT@x"));  // no space, not the marker
}

TEST_CASE("tokenize matches the documented rules") {
  auto toks = [](const char* s) { return tokenize_text(s); };
  CHECK(toks("Hello, World!") == std::vector<std::string>{"hello", "world"});
  CHECK(toks("see https://x.co #Cool @bob") ==
        std::vector<std::string>{"see", "cool"});
  CHECK(toks("a  b\tc") == std::vector<std::string>{"a", "b", "c"});
  CHECK(toks("HTTP://X.CO stays? no") == std::vector<std::string>{"stays",
                                                                  "no"});
  CHECK(toks("(www.x.com)") == std::vector<std::string>{});
  CHECK(toks("\"@quoted\"") == std::vector<std::string>{});
  CHECK(toks("don't u.s.a.") ==
        std::vector<std::string>{"don't", "u.s.a"});
  CHECK(toks("!!!") == std::vector<std::string>{});
  CHECK(toks("") == std::vector<std::string>{});
}

TEST_CASE("tokenize is idempotent on its own output") {
  std::vector<std::string> samples = {
      "Hello, World! see https://x.co #Cool @bob",
      "(www.x.com) don't STOP!!! #a#b ...wow...",
      "RT rt @A @@b c## #https://x 100% a,b"};
  for (const auto& s : samples) {
    auto once = tokenize_text(s);
    std::string joined;
    for (const auto& t : once) {
      if (!joined.empty()) joined += ' ';
      joined += t;
    }
    CHECK(tokenize_text(joined) == once);
  }
}

TEST_CASE("inventory counts and shard additivity") {
  std::vector<TokenizedDocument> empty;
  CHECK(build_inventory(empty).size() == 0);

  std::vector<TokenizedDocument> docs = {
      {"g1", {"a", "b"}}, {"g1", {"c"}}, {"g1", {"d", "e", "f"}},
      {"g2", {"x"}},      {"g2", {"y"}}};
  GroupInventory inv = build_inventory(docs);
  CHECK(inv.find("g1")->docs == 3);
  CHECK(inv.find("g1")->tokens == 6);
  CHECK(inv.find("g2")->docs == 2);
  CHECK(inv.find("g2")->tokens == 2);

  // two shards merged equal a single pass over the concatenation
  std::vector<TokenizedDocument> shard1(docs.begin(), docs.begin() + 2);
  std::vector<TokenizedDocument> shard2(docs.begin() + 2, docs.end());
  GroupInventory merged = build_inventory(shard1);
  merged.merge(build_inventory(shard2));
  for (const auto& [gid, gc] : inv.groups()) {
    CHECK(merged.find(gid)->docs == gc.docs);
    CHECK(merged.find(gid)->tokens == gc.tokens);
  }
}

TEST_CASE("inventory TSV round-trips") {
  GroupInventory inv;
  inv.set("g1", {3, 10});
  inv.set("g2", {2, 4});
  std::ostringstream os;
  inv.write_tsv(os);
  std::istringstream is(os.str());
  GroupInventory back = GroupInventory::read_tsv(is);
  std::ostringstream os2;
  back.write_tsv(os2);
  CHECK(os.str() == os2.str());
}

TEST_CASE("eligibility threshold is inclusive") {
  GroupInventory inv;
  inv.set("low", {499'999, 1});
  inv.set("edge", {500'000, 1});
  inv.set("high", {600'000, 1});
  SamplingPlan plan;  // min_group_size defaults to 500k
  auto eligible = eligible_groups(inv, plan);
  CHECK(eligible == std::vector<std::string>{"edge", "high"});

  GroupInventory none;
  none.set("a", {10, 10});
  CHECK(eligible_groups(none, plan).empty());
}

namespace {

CorpusStore tiny_store(std::uint32_t docs_per_group) {
  CorpusStore store;
  for (std::string gid : {"g1", "g2"})
    for (std::uint32_t d = 0; d < docs_per_group; ++d)
      store.add({gid, {gid + "tok" + std::to_string(d), "filler"}});
  return store;
}

}  // namespace

TEST_CASE("sample_baseline draws equal quotas deterministically") {
  CorpusStore store = tiny_store(20);
  SamplingPlan plan;
  plan.baseline_total = 10;
  plan.per_group_sample = 5;
  plan.min_group_size = 5;
  plan.seed = 99;

  SampledCorpus s = sample_baseline(store, plan, 1);
  CHECK(s.docs.size() == 10);
  std::map<std::uint32_t, int> per_group;
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> seen;
  for (const auto& ref : s.docs) {
    per_group[ref.group]++;
    seen[{ref.group, ref.doc}]++;
  }
  CHECK(per_group[0] == 5);
  CHECK(per_group[1] == 5);
  for (const auto& [_, count] : seen) CHECK(count == 1);  // no replacement

  SampledCorpus again = sample_baseline(store, plan, 1);
  REQUIRE(again.docs.size() == s.docs.size());
  for (std::size_t i = 0; i < s.docs.size(); ++i) {
    CHECK(again.docs[i].group == s.docs[i].group);
    CHECK(again.docs[i].doc == s.docs[i].doc);
  }

  SampledCorpus other_rep = sample_baseline(store, plan, 2);
  bool identical = true;
  for (std::size_t i = 0; i < s.docs.size(); ++i)
    if (other_rep.docs[i].doc != s.docs[i].doc) identical = false;
  CHECK_FALSE(identical);
}

TEST_CASE("sample_group returns the whole group shuffled at the boundary") {
  CorpusStore store = tiny_store(8);
  SamplingPlan plan;
  plan.baseline_total = 4;
  plan.per_group_sample = 8;
  plan.min_group_size = 8;
  plan.seed = 7;

  SampledCorpus s = sample_group(store, "g1", plan, 1);
  CHECK(s.docs.size() == 8);
  std::set<std::uint32_t> docs;
  for (const auto& ref : s.docs) docs.insert(ref.doc);
  CHECK(docs.size() == 8);

  SampledCorpus again = sample_group(store, "g1", plan, 1);
  bool same = true;
  for (std::size_t i = 0; i < s.docs.size(); ++i)
    if (again.docs[i].doc != s.docs[i].doc) same = false;
  CHECK(same);
}

TEST_CASE("sample_group rejects ineligible groups") {
  CorpusStore store = tiny_store(8);
  SamplingPlan plan;
  plan.per_group_sample = 9;
  plan.min_group_size = 9;
  plan.seed = 1;
  CHECK_THROWS_AS(sample_group(store, "g1", plan, 1), DataError);
  CHECK_THROWS_AS(sample_group(store, "nope", plan, 1), DataError);
}

TEST_CASE("jsonl reader validates records and reports line numbers") {
  std::istringstream good(
      R"({"group_id":"g1","text":"hello world"})" "\n"
      R"({"group_id":"g2","text":"RT @x spam"})" "\n"
      R"({"group_id":"g2","text":"ok then","extra":42})" "\n");
  CorpusStore store;
  LoadReport report = load_corpus(good, store);
  CHECK(report.lines == 3);
  CHECK(report.kept == 2);
  CHECK(report.retweets_dropped == 1);
  CHECK(store.group("g1") != nullptr);
  CHECK(store.group("g2") != nullptr);
  CHECK(store.group("g2")->doc_count() == 1);

  std::istringstream bad("{\"group_id\":\"g\",\"text\":\"x\"}\nnot json\n");
  CorpusStore store2;
  try {
    load_corpus(bad, store2);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  std::istringstream missing("{\"group_id\":\"g\"}\n");
  CorpusStore store3;
  CHECK_THROWS_AS(load_corpus(missing, store3), DataError);
}

TEST_CASE("store drops empty-token documents") {
  CorpusStore store;
  store.add({"g1", {}});
  CHECK(store.empty());
  store.add({"g1", {"tok"}});
  CHECK(store.group("g1")->doc_count() == 1);
}
