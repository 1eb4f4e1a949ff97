#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tqs/common.hpp"

namespace tqs::ingest {

// One parsed query-log line. Timestamps are seconds since the Unix epoch,
// derived from "YYYY-MM-DD HH:MM:SS" without any timezone adjustment.
struct LogRecord {
  std::string user_id;
  std::string query;  // already normalized
  int64_t timestamp = 0;
};

// Maximal run of one user's queries with no inter-query gap above the
// session threshold. Records are time-sorted.
struct Session {
  std::string user_id;
  std::vector<LogRecord> queries;
};

// Multiset of normalized short texts. Duplicates are kept on purpose:
// suffix popularity needs the frequencies.
struct TextCorpus {
  std::vector<std::string> entries;
};

// Source/target training pairs, both sides normalized and non-empty.
struct PairCorpus {
  std::vector<std::pair<std::string, std::string>> pairs;
};

// Lowercases ASCII, collapses whitespace runs to single spaces, trims, and
// drops other control characters. Idempotent; may return "".
std::string normalize_text(std::string_view raw);

std::vector<std::string> split_words(std::string_view normalized);
size_t word_count(std::string_view normalized);

// "YYYY-MM-DD HH:MM:SS" -> Unix seconds. Throws DataError on malformed input.
int64_t parse_timestamp(std::string_view text);
std::string format_timestamp(int64_t ts);

// Zero-based column indices into tab-separated log lines. Defaults match the
// 5-column AOL layout (user, query, time, rank, click URL); extra columns are
// ignored.
struct LogFormat {
  size_t user_col = 0;
  size_t query_col = 1;
  size_t time_col = 2;
};

struct ParsedLog {
  std::vector<LogRecord> records;
  size_t total_lines = 0;
  size_t skipped = 0;
};

// Malformed lines (missing fields, bad timestamp, empty query) are counted
// and skipped. An unreadable stream raises DataError, and so does a stream
// where more than half of the lines are malformed (wrong field-spec).
ParsedLog parse_query_log(std::istream& in, const LogFormat& format = {});

// Splits each user's time-sorted records wherever the gap exceeds
// `gap_seconds`. Singleton sessions are retained. Users are emitted in
// lexicographic order.
std::vector<Session> segment_sessions(std::vector<LogRecord> records,
                                      int64_t gap_seconds = 30 * 60);

enum class PairingMode { AllOrdered, ConsecutiveOnly };

// Emits (q_i, q_j) with i < j and q_i != q_j from every session.
PairCorpus session_pairs(const std::vector<Session>& sessions,
                         PairingMode mode = PairingMode::AllOrdered);

// Word-boundary proper prefixes: (w1..wi, query) for i in 1..k-1.
std::vector<std::pair<std::string, std::string>> prefix_pairs(const std::string& query);

struct KnowhowResult {
  TextCorpus corpus;  // all subjects and objects
  PairCorpus pairs;   // (subject, object) plus prefix pairs of both sides
  size_t total_lines = 0;
  size_t skipped = 0;
};

// Tab-separated "subject<TAB>predicate<TAB>object" lines.
KnowhowResult load_knowhow(std::istream& in);

struct WikianswersResult {
  TextCorpus corpus;
  size_t total_lines = 0;
  size_t dropped = 0;  // questions not matching the task heuristic
};

// Keeps questions starting with "how do you " or "how to ", strips the
// construction (repeatedly, so outputs never start with one) and trailing
// question marks.
WikianswersResult load_wikianswers(std::istream& in);

// One entry per line / "source<TAB>target" per line, UTF-8, LF-terminated.
void save_corpus(const TextCorpus& corpus, const std::string& path);
TextCorpus load_corpus(const std::string& path);
void save_pairs(const PairCorpus& pairs, const std::string& path);
PairCorpus load_pairs(const std::string& path);

}  // namespace tqs::ingest
