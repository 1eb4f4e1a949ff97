#include "tqs/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

namespace tqs::ingest {

namespace {

bool is_space_like(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

// Howard Hinnant's civil-date algorithm; avoids timezone-dependent mktime.
int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

}  // namespace

std::string normalize_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (is_space_like(c)) {
      pending_space = true;
      continue;
    }
    if (c < 0x20 || c == 0x7f) continue;  // stray control characters
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c >= 'A' && c <= 'Z' ? char(c - 'A' + 'a') : char(c));
  }
  return out;
}

std::vector<std::string> split_words(std::string_view normalized) {
  std::vector<std::string> words;
  size_t start = 0;
  while (start < normalized.size()) {
    size_t pos = normalized.find(' ', start);
    if (pos == std::string_view::npos) pos = normalized.size();
    if (pos > start) words.emplace_back(normalized.substr(start, pos - start));
    start = pos + 1;
  }
  return words;
}

size_t word_count(std::string_view normalized) {
  if (normalized.empty()) return 0;
  return size_t(std::count(normalized.begin(), normalized.end(), ' ')) + 1;
}

int64_t parse_timestamp(std::string_view text) {
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (text.size() != 19 ||
      std::sscanf(std::string(text).c_str(), "%4d-%2d-%2d %2d:%2d:%2d", &year, &month, &day,
                  &hour, &minute, &second) != 6)
    throw DataError("bad timestamp: '" + std::string(text) + "'");
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 59)
    throw DataError("timestamp out of range: '" + std::string(text) + "'");
  return days_from_civil(year, unsigned(month), unsigned(day)) * 86400 + hour * 3600 +
         minute * 60 + second;
}

std::string format_timestamp(int64_t ts) {
  int64_t days = ts / 86400;
  int64_t rem = ts % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u %02lld:%02lld:%02lld",
                static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                static_cast<long long>(rem / 60 % 60), static_cast<long long>(rem % 60));
  return buf;
}

ParsedLog parse_query_log(std::istream& in, const LogFormat& format) {
  if (!in) throw DataError("query log stream unreadable");
  ParsedLog out;
  size_t need = std::max({format.user_col, format.query_col, format.time_col}) + 1;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++out.total_lines;
    auto fields = split_tabs(line);
    if (fields.size() < need) {
      ++out.skipped;
      continue;
    }
    std::string user = std::string(fields[format.user_col]);
    std::string query = normalize_text(fields[format.query_col]);
    if (user.empty() || query.empty()) {
      ++out.skipped;
      continue;
    }
    int64_t ts;
    try {
      ts = parse_timestamp(fields[format.time_col]);
    } catch (const DataError&) {
      ++out.skipped;
      continue;
    }
    out.records.push_back({std::move(user), std::move(query), ts});
  }
  if (in.bad()) throw DataError("query log stream unreadable");
  if (out.total_lines > 0 && out.skipped * 2 > out.total_lines)
    throw DataError("format mismatch: " + std::to_string(out.skipped) + " of " +
                    std::to_string(out.total_lines) + " log lines malformed");
  return out;
}

std::vector<Session> segment_sessions(std::vector<LogRecord> records, int64_t gap_seconds) {
  std::map<std::string, std::vector<LogRecord>> by_user;
  for (auto& r : records) by_user[r.user_id].push_back(std::move(r));

  std::vector<Session> sessions;
  for (auto& [user, recs] : by_user) {
    std::stable_sort(recs.begin(), recs.end(),
                     [](const LogRecord& a, const LogRecord& b) { return a.timestamp < b.timestamp; });
    Session current{user, {}};
    for (auto& r : recs) {
      if (!current.queries.empty() &&
          r.timestamp - current.queries.back().timestamp > gap_seconds) {
        sessions.push_back(std::move(current));
        current = Session{user, {}};
      }
      current.queries.push_back(std::move(r));
    }
    if (!current.queries.empty()) sessions.push_back(std::move(current));
  }
  return sessions;
}

PairCorpus session_pairs(const std::vector<Session>& sessions, PairingMode mode) {
  PairCorpus out;
  for (const auto& s : sessions) {
    const auto& q = s.queries;
    for (size_t i = 0; i + 1 < q.size(); ++i) {
      size_t j_end = mode == PairingMode::ConsecutiveOnly ? i + 2 : q.size();
      for (size_t j = i + 1; j < j_end; ++j) {
        if (q[i].query == q[j].query) continue;
        out.pairs.emplace_back(q[i].query, q[j].query);
      }
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> prefix_pairs(const std::string& query) {
  std::vector<std::pair<std::string, std::string>> out;
  auto words = split_words(query);
  if (words.size() < 2) return out;
  std::string prefix;
  for (size_t i = 0; i + 1 < words.size(); ++i) {
    if (i > 0) prefix += ' ';
    prefix += words[i];
    out.emplace_back(prefix, query);
  }
  return out;
}

KnowhowResult load_knowhow(std::istream& in) {
  if (!in) throw DataError("knowhow stream unreadable");
  KnowhowResult out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++out.total_lines;
    auto fields = split_tabs(line);
    if (fields.size() < 3) {
      ++out.skipped;
      continue;
    }
    std::string subject = normalize_text(fields[0]);
    std::string object = normalize_text(fields[2]);
    if (subject.empty() || object.empty()) {
      ++out.skipped;
      continue;
    }
    out.corpus.entries.push_back(subject);
    out.corpus.entries.push_back(object);
    out.pairs.pairs.emplace_back(subject, object);
    for (auto& p : prefix_pairs(subject)) out.pairs.pairs.push_back(std::move(p));
    for (auto& p : prefix_pairs(object)) out.pairs.pairs.push_back(std::move(p));
  }
  if (in.bad()) throw DataError("knowhow stream unreadable");
  return out;
}

WikianswersResult load_wikianswers(std::istream& in) {
  if (!in) throw DataError("wikianswers stream unreadable");
  static const std::string kConstructions[] = {"how do you ", "how to "};
  WikianswersResult out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++out.total_lines;
    std::string text = normalize_text(line);
    bool matched = false;
    bool stripped = true;
    while (stripped) {
      stripped = false;
      for (const auto& c : kConstructions) {
        if (text.starts_with(c)) {
          text.erase(0, c.size());
          matched = true;
          stripped = true;
        }
      }
    }
    if (!matched) {
      ++out.dropped;
      continue;
    }
    while (!text.empty() && text.back() == '?') text.pop_back();
    text = normalize_text(text);
    if (text.empty()) {
      ++out.dropped;
      continue;
    }
    out.corpus.entries.push_back(std::move(text));
  }
  if (in.bad()) throw DataError("wikianswers stream unreadable");
  return out;
}

void save_corpus(const TextCorpus& corpus, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  for (const auto& e : corpus.entries) f << e << '\n';
  if (!f) throw DataError("write failed: " + path);
}

TextCorpus load_corpus(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  TextCorpus corpus;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) corpus.entries.push_back(line);
  }
  return corpus;
}

void save_pairs(const PairCorpus& pairs, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  for (const auto& [src, tgt] : pairs.pairs) f << src << '\t' << tgt << '\n';
  if (!f) throw DataError("write failed: " + path);
}

PairCorpus load_pairs(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  PairCorpus pairs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 'source<TAB>target'");
    pairs.pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return pairs;
}

}  // namespace tqs::ingest
