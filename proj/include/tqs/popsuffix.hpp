#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tqs/candidate.hpp"
#include "tqs/ingest.hpp"

namespace tqs::popsuffix {

// Word-suffix popularity statistics. A suffix is an end n-gram of 1..max_len
// words; pop(s) = counts[s] / total is a proper distribution over the table.
struct SuffixTable {
  std::map<std::string, uint64_t> counts;
  uint64_t total = 0;
  size_t max_len = 0;

  Real pop(const std::string& suffix) const {
    auto it = counts.find(suffix);
    return it == counts.end() ? Real(0) : Real(it->second) / Real(total);
  }
};

// Counts every end n-gram of length 1..min(max_len, words) per corpus entry.
// Suffixes below `min_count` are pruned afterwards and the total re-derived,
// so pop() still sums to one. Throws DataError on an empty corpus.
SuffixTable build_suffix_table(const ingest::TextCorpus& corpus, size_t max_len,
                               uint64_t min_count = 1);

struct SuggestOptions {
  // Skips suffixes whose first word repeats q0's last word ("pancake
  // pancake"); disable for raw popularity-only behavior.
  bool skip_duplicate_last_word = true;
};

// Top-k completions q0 + " " + s ranked by pop(s) descending, ties broken
// lexicographically by suggestion text. All results are QC by construction.
std::vector<SuggestionCandidate> suggest(const std::string& q0, const SuffixTable& table,
                                         size_t k, const SuggestOptions& options = {});

// Header "total<TAB>max_len", then "suffix<TAB>count" lines in suffix order.
void save_table(const SuffixTable& table, const std::string& path);
SuffixTable load_table(const std::string& path);

}  // namespace tqs::popsuffix
