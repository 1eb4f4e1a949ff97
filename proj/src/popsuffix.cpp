#include "tqs/popsuffix.hpp"

#include <algorithm>
#include <fstream>

namespace tqs::popsuffix {

SuffixTable build_suffix_table(const ingest::TextCorpus& corpus, size_t max_len,
                               uint64_t min_count) {
  if (max_len < 1) throw ConfigError("build_suffix_table: max_len must be >= 1");
  if (corpus.entries.empty()) throw DataError("build_suffix_table: empty corpus");

  SuffixTable table;
  table.max_len = max_len;
  for (const auto& entry : corpus.entries) {
    auto words = ingest::split_words(entry);
    size_t k = words.size();
    std::string suffix;
    for (size_t j = 1; j <= std::min(max_len, k); ++j) {
      // Grow the suffix leftwards: w_{k-j+1} .. w_k.
      if (j == 1)
        suffix = words[k - 1];
      else
        suffix = words[k - j] + " " + suffix;
      ++table.counts[suffix];
    }
  }
  if (min_count > 1)
    std::erase_if(table.counts, [&](const auto& kv) { return kv.second < min_count; });
  if (table.counts.empty()) throw DataError("build_suffix_table: no suffix survived pruning");
  table.total = 0;
  for (const auto& [s, c] : table.counts) table.total += c;
  return table;
}

std::vector<SuggestionCandidate> suggest(const std::string& q0, const SuffixTable& table,
                                         size_t k, const SuggestOptions& options) {
  if (q0.empty()) throw DataError("suggest: empty initial query");
  if (k < 1) throw ConfigError("suggest: k must be >= 1");
  if (table.counts.empty() || table.total == 0) throw DataError("suggest: empty suffix table");

  auto q0_words = ingest::split_words(q0);
  const std::string& last_word = q0_words.back();

  std::vector<SuggestionCandidate> candidates;
  candidates.reserve(table.counts.size());
  for (const auto& [suffix, count] : table.counts) {
    if (options.skip_duplicate_last_word) {
      size_t space = suffix.find(' ');
      std::string_view first(suffix.data(), space == std::string::npos ? suffix.size() : space);
      if (first == last_word) continue;
    }
    candidates.push_back(SuggestionCandidate::from_prob(
        q0 + " " + suffix, Real(count) / Real(table.total), Flavor::QC));
  }
  std::sort(candidates.begin(), candidates.end(), candidate_order);
  if (candidates.size() > k) candidates.resize(k);
  return candidates;
}

void save_table(const SuffixTable& table, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << table.total << '\t' << table.max_len << '\n';
  for (const auto& [suffix, count] : table.counts) f << suffix << '\t' << count << '\n';
  if (!f) throw DataError("write failed: " + path);
}

SuffixTable load_table(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  SuffixTable table;
  std::string line;
  if (!std::getline(f, line)) throw DataError(path + ": missing suffix table header");
  size_t tab = line.find('\t');
  if (tab == std::string::npos) throw DataError(path + ": malformed header");
  try {
    table.total = std::stoull(line.substr(0, tab));
    table.max_len = std::stoul(line.substr(tab + 1));
  } catch (const std::exception&) {
    throw DataError(path + ": malformed header");
  }
  uint64_t sum = 0;
  size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 'suffix<TAB>count'");
    uint64_t count = 0;
    try {
      count = std::stoull(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad count");
    }
    table.counts[line.substr(0, tab)] = count;
    sum += count;
  }
  if (sum != table.total)
    throw DataError(path + ": header total " + std::to_string(table.total) +
                    " != sum of counts " + std::to_string(sum));
  return table;
}

}  // namespace tqs::popsuffix
