#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "test_util.hpp"
#include "tqs/ingest.hpp"
#include "tqs/rng.hpp"

using namespace tqs;
using namespace tqs::ingest;

TEST_SUITE("ingest") {

TEST_CASE("normalize_text basics") {
  CHECK(normalize_text("  Make   A Pancake ") == "make a pancake");
  CHECK(normalize_text("change gmail password") == "change gmail password");
  CHECK(normalize_text("\t\n") == "");
  CHECK(normalize_text("") == "");
  CHECK(normalize_text("a\x01rb") == "arb");  // stray control byte dropped
}

TEST_CASE("normalize_text is idempotent on random strings") {
  Rng rng(7);
  const std::string alphabet = "aB \t\nxyz!?\r 0";
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    size_t len = rng.index(30);
    for (size_t i = 0; i < len; ++i) s.push_back(alphabet[rng.index(alphabet.size())]);
    std::string once = normalize_text(s);
    CHECK(normalize_text(once) == once);
  }
}

TEST_CASE("split and count words") {
  CHECK(split_words("make a pancake") == std::vector<std::string>{"make", "a", "pancake"});
  CHECK(word_count("make a pancake") == 3);
  CHECK(word_count("") == 0);
}

TEST_CASE("timestamps round-trip") {
  int64_t ts = parse_timestamp("2006-03-01 10:15:00");
  CHECK(format_timestamp(ts) == "2006-03-01 10:15:00");
  CHECK(parse_timestamp("2006-03-01 10:15:30") - ts == 30);
  CHECK_THROWS_AS(parse_timestamp("2006-03-01"), DataError);
  CHECK_THROWS_AS(parse_timestamp("2006-13-01 10:15:00"), DataError);
}

TEST_CASE("parse_query_log splits fields and skips malformed lines") {
  std::istringstream in(
      "1234\tmake a pancake\t2006-03-01 10:15:00\n"
      "1234\t\t2006-03-01 10:15:00\n"
      "1234\tnext query\t2006-03-01 10:16:00\textra\tcols ignored\n"
      "99\tanother\t2006-03-01 11:00:00\n"
      "garbage line without tabs\n"
      "77\tlast\t2006-03-01 12:00:00\n");
  auto parsed = parse_query_log(in);
  CHECK(parsed.records.size() == 4);
  CHECK(parsed.skipped == 2);  // empty query + garbage
  CHECK(parsed.records[0].user_id == "1234");
  CHECK(parsed.records[0].query == "make a pancake");
  CHECK(parsed.records[0].timestamp == parse_timestamp("2006-03-01 10:15:00"));
}

TEST_CASE("parse_query_log rejects majority-malformed input") {
  std::istringstream in(
      "only one good\n"
      "bad\n"
      "also bad\n"
      "1\tq\t2006-03-01 10:15:00\n");
  CHECK_THROWS_AS(parse_query_log(in), DataError);
}

TEST_CASE("parse_query_log honors a custom field layout") {
  std::istringstream in("2006-03-01 10:15:00\tu1\tthe query\n");
  LogFormat fmt;
  fmt.time_col = 0;
  fmt.user_col = 1;
  fmt.query_col = 2;
  auto parsed = parse_query_log(in, fmt);
  REQUIRE(parsed.records.size() == 1);
  CHECK(parsed.records[0].query == "the query");
}

static LogRecord rec(const std::string& user, const std::string& q, const std::string& ts) {
  return {user, q, parse_timestamp(ts)};
}

TEST_CASE("segment_sessions applies the gap rule") {
  std::vector<LogRecord> records = {
      rec("a", "q1", "2006-03-01 10:00:00"),
      rec("a", "q2", "2006-03-01 10:20:00"),
      rec("a", "q3", "2006-03-01 11:05:00"),
  };
  auto sessions = segment_sessions(records, 30 * 60);
  REQUIRE(sessions.size() == 2);
  CHECK(sessions[0].queries.size() == 2);
  CHECK(sessions[1].queries.size() == 1);
  CHECK(sessions[1].queries[0].query == "q3");
}

TEST_CASE("segment_sessions keeps singletons and partitions users") {
  auto single = segment_sessions({rec("u", "only", "2006-03-01 10:00:00")});
  REQUIRE(single.size() == 1);
  CHECK(single[0].queries.size() == 1);

  std::vector<LogRecord> interleaved = {
      rec("b", "b1", "2006-03-01 10:00:00"),
      rec("a", "a1", "2006-03-01 10:01:00"),
      rec("b", "b2", "2006-03-01 10:02:00"),
      rec("a", "a2", "2006-03-01 10:03:00"),
  };
  auto sessions = segment_sessions(interleaved);
  REQUIRE(sessions.size() == 2);
  CHECK(sessions[0].user_id == "a");
  CHECK(sessions[1].user_id == "b");
  CHECK(sessions[0].queries.size() == 2);
}

TEST_CASE("sessionization is a partition of the input records") {
  Rng rng(11);
  std::vector<LogRecord> records;
  int64_t base = parse_timestamp("2006-03-01 00:00:00");
  for (int i = 0; i < 500; ++i) {
    std::string user = "u" + std::to_string(rng.index(20));
    int64_t ts = base + int64_t(rng.index(86400 * 3));
    records.push_back({user, "q" + std::to_string(i), ts});
  }
  auto sessions = segment_sessions(records, 1800);

  size_t total = 0;
  std::map<std::string, std::vector<int64_t>> per_user;
  for (const auto& s : sessions) {
    REQUIRE(!s.queries.empty());
    total += s.queries.size();
    for (size_t i = 0; i < s.queries.size(); ++i) {
      CHECK(s.queries[i].user_id == s.user_id);
      if (i > 0) {
        int64_t gap = s.queries[i].timestamp - s.queries[i - 1].timestamp;
        CHECK(gap >= 0);
        CHECK(gap <= 1800);
      }
      per_user[s.user_id].push_back(s.queries[i].timestamp);
    }
  }
  CHECK(total == records.size());

  // Concatenating a user's sessions in order reproduces their sorted records.
  for (auto& [user, times] : per_user) {
    std::vector<int64_t> expected;
    for (const auto& r : records)
      if (r.user_id == user) expected.push_back(r.timestamp);
    std::sort(expected.begin(), expected.end());
    CHECK(times == expected);
  }
}

TEST_CASE("session_pairs emits ordered non-identical pairs") {
  Session s{"u", {rec("u", "a", "2006-03-01 10:00:00"), rec("u", "b", "2006-03-01 10:01:00"),
                  rec("u", "c", "2006-03-01 10:02:00")}};
  auto pairs = session_pairs({s});
  REQUIRE(pairs.pairs.size() == 3);
  CHECK(pairs.pairs[0] == std::make_pair(std::string("a"), std::string("b")));
  CHECK(pairs.pairs[1] == std::make_pair(std::string("a"), std::string("c")));
  CHECK(pairs.pairs[2] == std::make_pair(std::string("b"), std::string("c")));

  Session singleton{"u", {rec("u", "a", "2006-03-01 10:00:00")}};
  CHECK(session_pairs({singleton}).pairs.empty());

  Session dup{"u", {rec("u", "a", "2006-03-01 10:00:00"), rec("u", "a", "2006-03-01 10:01:00")}};
  CHECK(session_pairs({dup}).pairs.empty());
}

TEST_CASE("session_pairs: n distinct queries give n(n-1)/2 pairs") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    size_t n = 1 + rng.index(8);
    Session s{"u", {}};
    for (size_t i = 0; i < n; ++i)
      s.queries.push_back(rec("u", "q" + std::to_string(i), "2006-03-01 10:00:00"));
    CHECK(session_pairs({s}).pairs.size() == n * (n - 1) / 2);
  }
}

TEST_CASE("session_pairs consecutive mode") {
  Session s{"u", {rec("u", "a", "2006-03-01 10:00:00"), rec("u", "b", "2006-03-01 10:01:00"),
                  rec("u", "c", "2006-03-01 10:02:00")}};
  auto pairs = session_pairs({s}, PairingMode::ConsecutiveOnly);
  REQUIRE(pairs.pairs.size() == 2);
  CHECK(pairs.pairs[0].second == "b");
  CHECK(pairs.pairs[1].second == "c");
}

TEST_CASE("prefix_pairs emits word-boundary proper prefixes") {
  auto pairs = prefix_pairs("make a pancake");
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::make_pair(std::string("make"), std::string("make a pancake")));
  CHECK(pairs[1] == std::make_pair(std::string("make a"), std::string("make a pancake")));

  CHECK(prefix_pairs("pancake").empty());

  auto four = prefix_pairs("a b c d");
  REQUIRE(four.size() == 3);
  CHECK(four[0].first == "a");
  CHECK(four[1].first == "a b");
  CHECK(four[2].first == "a b c");
}

TEST_CASE("prefix_pairs count equals wordcount - 1") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    size_t k = 1 + rng.index(10);
    std::string q;
    for (size_t i = 0; i < k; ++i) {
      if (i) q += ' ';
      q += "w" + std::to_string(i);
    }
    auto pairs = prefix_pairs(q);
    CHECK(pairs.size() == k - 1);
    for (const auto& [prefix, full] : pairs) {
      CHECK(full == q);
      CHECK(prefix.size() < q.size());
      CHECK(q.compare(0, prefix.size(), prefix) == 0);
      CHECK(q[prefix.size()] == ' ');  // word boundary
    }
  }
}

TEST_CASE("load_knowhow collects subjects, objects, and prefix pairs") {
  std::istringstream in(
      "Make a Pancake\thasStep\tPrepare the Mix\n"
      "bad line\n"
      "tie a tie\thasStep\tmake a knot\n");
  auto result = load_knowhow(in);
  CHECK(result.skipped == 1);
  REQUIRE(result.corpus.entries.size() == 4);
  CHECK(result.corpus.entries[0] == "make a pancake");
  CHECK(result.corpus.entries[1] == "prepare the mix");

  auto& pairs = result.pairs.pairs;
  auto has_pair = [&](const std::string& a, const std::string& b) {
    return std::find(pairs.begin(), pairs.end(), std::make_pair(a, b)) != pairs.end();
  };
  CHECK(has_pair("make a pancake", "prepare the mix"));
  CHECK(has_pair("make", "make a pancake"));
  CHECK(has_pair("make a", "make a pancake"));
  CHECK(has_pair("prepare", "prepare the mix"));
  CHECK(has_pair("prepare the", "prepare the mix"));
  // 2 triples: 2 subject-object pairs + (2+2) + (2+2) prefix pairs.
  CHECK(pairs.size() == 10);
}

TEST_CASE("load_knowhow on empty stream") {
  std::istringstream in("");
  auto result = load_knowhow(in);
  CHECK(result.corpus.entries.empty());
  CHECK(result.pairs.pairs.empty());
}

TEST_CASE("load_wikianswers keeps and strips task questions") {
  std::istringstream in(
      "how to change gmail password\n"
      "How do you tie a tie?\n"
      "what is the capital of france\n"
      "how to\n"
      "how to how do you fix a chair\n");
  auto result = load_wikianswers(in);
  REQUIRE(result.corpus.entries.size() == 3);
  CHECK(result.corpus.entries[0] == "change gmail password");
  CHECK(result.corpus.entries[1] == "tie a tie");
  CHECK(result.corpus.entries[2] == "fix a chair");
  CHECK(result.dropped == 2);
}

TEST_CASE("load_wikianswers output never starts with a question construction") {
  std::istringstream in(
      "how to how to do laundry\n"
      "how do you how to sharpen a knife?\n"
      "how to paint?\n");
  auto result = load_wikianswers(in);
  for (const auto& e : result.corpus.entries) {
    CHECK(!e.starts_with("how to "));
    CHECK(!e.starts_with("how do you "));
    CHECK(e == normalize_text(e));
  }
}

TEST_CASE("corpus and pair files round-trip") {
  TempDir dir("ingest_io");
  TextCorpus corpus{{"make a pancake", "tie a tie", "make a pancake"}};
  save_corpus(corpus, dir.file("corpus.txt"));
  auto loaded = load_corpus(dir.file("corpus.txt"));
  CHECK(loaded.entries == corpus.entries);

  PairCorpus pairs;
  pairs.pairs = {{"make", "make a pancake"}, {"tie", "tie a tie"}};
  save_pairs(pairs, dir.file("pairs.txt"));
  auto loaded_pairs = load_pairs(dir.file("pairs.txt"));
  CHECK(loaded_pairs.pairs == pairs.pairs);

  CHECK_THROWS_AS(load_corpus(dir.file("missing.txt")), DataError);
}

}  // TEST_SUITE
