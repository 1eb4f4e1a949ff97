#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tqs/candidate.hpp"

namespace tqs::pooleval {

// One run-file line: "query_id<TAB>flavor<TAB>rank<TAB>score<TAB>config_id
// <TAB>suggestion text". Scores are natural-log likelihoods.
struct RunEntry {
  std::string query_id;
  Flavor flavor = Flavor::QC;
  int rank = 0;
  Real log_score = 0;
  std::string config_id;
  std::string text;
};

void save_run(const std::vector<RunEntry>& entries, const std::string& path);
std::vector<RunEntry> load_run(const std::string& path);

// Per (query, config): ranks must be exactly 1..n with non-increasing
// scores. Throws DataError otherwise.
void validate_run(const std::vector<RunEntry>& entries);

// Strict majority is relevant; exact ties are conservatively non-relevant.
bool majority_vote(const std::vector<bool>& votes);

// Relevance labels keyed by (query_id, normalized suggestion text). Unjudged
// pairs are treated as non-relevant at scoring time.
class Qrels {
 public:
  void add_votes(const std::string& query_id, const std::string& text,
                 const std::vector<bool>& votes);
  void add_label(const std::string& query_id, const std::string& text, bool relevant);

  bool relevant(const std::string& query_id, const std::string& text) const;
  bool judged(const std::string& query_id, const std::string& text) const;
  size_t size() const { return labels_.size(); }

  // Lines are either "query_id<TAB>text<TAB>vote1,vote2,..." (raw votes) or
  // "query_id<TAB>text<TAB>label" (pre-aggregated); vote/label tokens are
  // rel|nonrel|1|0.
  static Qrels load(const std::string& path);

 private:
  std::map<std::pair<std::string, std::string>, bool> labels_;
};

// Union of each config's top-depth candidates, split by flavor, deduplicated
// by normalized text with config provenance.
struct PoolItem {
  std::string text;
  std::vector<std::string> configs;
};

struct Pool {
  size_t depth = 0;
  // (query_id, flavor) -> items ordered by (text).
  std::map<std::pair<std::string, Flavor>, std::vector<PoolItem>> cells;
};

Pool build_pool(const std::vector<RunEntry>& entries, size_t depth);
// "query_id<TAB>flavor<TAB>text<TAB>config1,config2,..." lines.
void save_pool(const Pool& pool, const std::string& path);

// (# relevant among the first k)/k; rankings shorter than k count the
// missing tail as non-relevant.
Real precision_at_k(const std::vector<std::string>& ranking, const Qrels& qrels,
                    const std::string& query_id, size_t k);

// |retrieved ∩ base| / |base|; 0 when the base is empty (callers flag it).
Real recall(const std::set<std::string>& retrieved, const std::set<std::string>& base);

// Line i is the recall of the union of retrieved sets 1..i against the base;
// monotone non-decreasing.
std::vector<Real> cumulative_recall(const std::vector<std::set<std::string>>& retrieved_per_config,
                                    const std::set<std::string>& base);

struct ConfigMetrics {
  std::string config_id;
  Real qc_p10 = 0, qc_p20 = 0;
  Real qc_recall = 0, qc_cum_recall = 0;
  std::optional<Real> qr_p10, qr_p20;  // absent when the config emitted no QR
};

struct Report {
  size_t depth = 0;
  std::vector<ConfigMetrics> rows;  // in the given run order
  std::vector<std::string> flags;
};

// Metrics per config, macro-averaged over queries. Cumulative recall follows
// the order of the `runs` list. All runs must cover the same query set.
// `recall_full_ranking` computes recall over whole rankings instead of the
// pool depth.
Report report(const std::vector<std::vector<RunEntry>>& runs, const Qrels& qrels, size_t depth,
              bool recall_full_ranking = false);

// Tab-separated, one row per config, "-" for absent QR cells; flags appended
// as trailing "# flag" lines.
void save_report(const Report& report, const std::string& path);
std::string format_report(const Report& report);

}  // namespace tqs::pooleval
