#include <doctest.h>

#include <cmath>
#include <map>

#include "test_util.hpp"
#include "tqs/popsuffix.hpp"
#include "tqs/rng.hpp"

using namespace tqs;
using namespace tqs::popsuffix;
using tqs::ingest::TextCorpus;

namespace {

// Independent end-n-gram counter used as the oracle for table construction.
std::map<std::string, uint64_t> brute_force_suffixes(const TextCorpus& corpus, size_t max_len) {
  std::map<std::string, uint64_t> counts;
  for (const auto& entry : corpus.entries) {
    auto words = ingest::split_words(entry);
    for (size_t j = 1; j <= std::min(max_len, words.size()); ++j) {
      std::string s;
      for (size_t i = words.size() - j; i < words.size(); ++i) {
        if (!s.empty()) s += ' ';
        s += words[i];
      }
      ++counts[s];
    }
  }
  return counts;
}

TextCorpus random_corpus(size_t entries, size_t words_per_entry, Rng& rng) {
  TextCorpus corpus;
  for (size_t i = 0; i < entries; ++i) {
    std::string e;
    for (size_t w = 0; w < words_per_entry; ++w) {
      if (w) e += ' ';
      e += "w" + std::to_string(rng.index(12));
    }
    corpus.entries.push_back(e);
  }
  return corpus;
}

}  // namespace

TEST_SUITE("popsuffix") {

TEST_CASE("build_suffix_table counts end n-grams") {
  TextCorpus corpus{{"a b c", "x b c"}};
  auto table = build_suffix_table(corpus, 2);
  CHECK(table.total == 4);
  CHECK(table.counts.at("c") == 2);
  CHECK(table.counts.at("b c") == 2);
  CHECK(table.pop("c") == doctest::Approx(0.5).epsilon(1e-15));

  auto single = build_suffix_table(TextCorpus{{"a"}}, 3);
  CHECK(single.total == 1);
  CHECK(single.counts.at("a") == 1);
  CHECK(single.pop("a") == 1.0);
}

TEST_CASE("build_suffix_table matches the brute-force counter") {
  Rng rng(123);
  auto corpus = random_corpus(1000, 4, rng);
  auto table = build_suffix_table(corpus, 2);
  CHECK(table.total == 2000);  // two suffixes per 4-word entry

  auto oracle = brute_force_suffixes(corpus, 2);
  REQUIRE(table.counts.size() == oracle.size());
  for (const auto& [suffix, count] : oracle) CHECK(table.counts.at(suffix) == count);
}

TEST_CASE("pop sums to one") {
  Rng rng(9);
  auto table = build_suffix_table(random_corpus(500, 5, rng), 3);
  Real sum = 0;
  for (const auto& [suffix, count] : table.counts) sum += table.pop(suffix);
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("table construction is order independent") {
  Rng rng(31);
  auto corpus = random_corpus(200, 4, rng);
  auto table = build_suffix_table(corpus, 3);
  auto shuffled = corpus;
  rng.shuffle(shuffled.entries);
  auto table2 = build_suffix_table(shuffled, 3);
  CHECK(table.total == table2.total);
  CHECK(table.counts == table2.counts);
}

TEST_CASE("min_count prunes and renormalizes") {
  TextCorpus corpus{{"a b", "x b", "y z"}};
  auto table = build_suffix_table(corpus, 1, 2);
  // "b" appears twice; "z" once and is pruned.
  CHECK(table.counts.size() == 1);
  CHECK(table.counts.at("b") == 2);
  CHECK(table.total == 2);
  CHECK(table.pop("b") == 1.0);
}

TEST_CASE("build errors") {
  CHECK_THROWS_AS(build_suffix_table(TextCorpus{}, 2), DataError);
  CHECK_THROWS_AS(build_suffix_table(TextCorpus{{"a"}}, 0), ConfigError);
}

TEST_CASE("suggest ranks by popularity with exact scores") {
  SuffixTable table;
  table.counts = {{"deals", 2}, {"online", 1}};
  table.total = 3;
  table.max_len = 1;
  auto out = suggest("book", table, 2);
  REQUIRE(out.size() == 2);
  CHECK(out[0].text == "book deals");
  CHECK(out[0].score == Real(2) / Real(3));  // exact, not exp(log(...))
  CHECK(out[1].text == "book online");
  CHECK(out[1].score == Real(1) / Real(3));
  CHECK(out[0].flavor == Flavor::QC);
}

TEST_CASE("suggest single suffix") {
  SuffixTable table;
  table.counts = {{"now", 1}};
  table.total = 1;
  table.max_len = 1;
  auto out = suggest("buy", table, 5);
  REQUIRE(out.size() == 1);
  CHECK(out[0].text == "buy now");
  CHECK(out[0].score == 1.0);
}

TEST_CASE("duplicate-last-word guard") {
  SuffixTable table;
  table.counts = {{"now", 5}, {"online", 1}};
  table.total = 6;
  table.max_len = 1;
  auto out = suggest("buy now", table, 1);
  REQUIRE(out.size() == 1);
  CHECK(out[0].text == "buy now online");

  SuggestOptions keep;
  keep.skip_duplicate_last_word = false;
  auto raw = suggest("buy now", table, 1, keep);
  REQUIRE(raw.size() == 1);
  CHECK(raw[0].text == "buy now now");
}

TEST_CASE("suggest properties: prefix, ordering, count") {
  Rng rng(17);
  auto table = build_suffix_table(random_corpus(300, 4, rng), 2);
  for (const std::string q0 : {"w1", "start here", "w3 w5"}) {
    auto out = suggest(q0, table, 7);
    CHECK(out.size() == std::min<size_t>(7, out.size()));
    Real prev = std::numeric_limits<Real>::infinity();
    for (const auto& cand : out) {
      CHECK(cand.text.starts_with(q0 + " "));  // strict word-boundary prefix
      CHECK(cand.score <= prev);
      prev = cand.score;
      // score equals counts/total exactly
      std::string suffix = cand.text.substr(q0.size() + 1);
      CHECK(cand.score == Real(table.counts.at(suffix)) / Real(table.total));
    }
  }
}

TEST_CASE("ties break lexicographically") {
  SuffixTable table;
  table.counts = {{"zebra", 1}, {"apple", 1}, {"mango", 1}};
  table.total = 3;
  table.max_len = 1;
  auto out = suggest("buy", table, 3);
  REQUIRE(out.size() == 3);
  CHECK(out[0].text == "buy apple");
  CHECK(out[1].text == "buy mango");
  CHECK(out[2].text == "buy zebra");
}

TEST_CASE("suggest errors") {
  SuffixTable table;
  table.counts = {{"x", 1}};
  table.total = 1;
  CHECK_THROWS_AS(suggest("", table, 3), DataError);
  CHECK_THROWS_AS(suggest("q", table, 0), ConfigError);
  CHECK_THROWS_AS(suggest("q", SuffixTable{}, 3), DataError);
}

TEST_CASE("serialization round-trips") {
  TempDir dir("popsuffix_io");
  Rng rng(77);
  auto table = build_suffix_table(random_corpus(100, 3, rng), 2);
  save_table(table, dir.file("table.tsv"));
  auto loaded = load_table(dir.file("table.tsv"));
  CHECK(loaded.total == table.total);
  CHECK(loaded.max_len == table.max_len);
  CHECK(loaded.counts == table.counts);

  // Header total is validated against the entries.
  spit(dir.file("bad.tsv"), "5\t2\na\t1\n");
  CHECK_THROWS_AS(load_table(dir.file("bad.tsv")), DataError);
}

}  // TEST_SUITE
