#include "tqs/pool_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tqs/ingest.hpp"

namespace tqs::pooleval {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string fmt_score(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", double(v));
  return buf;
}

std::string fmt_metric(Real v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", double(v));
  return buf;
}

bool parse_vote(const std::string& token, const std::string& where) {
  if (token == "rel" || token == "1") return true;
  if (token == "nonrel" || token == "0") return false;
  throw DataError(where + ": unknown label '" + token + "' (expected rel|nonrel|1|0)");
}

}  // namespace

// ---- run files ----

void save_run(const std::vector<RunEntry>& entries, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  for (const auto& e : entries)
    f << e.query_id << '\t' << flavor_name(e.flavor) << '\t' << e.rank << '\t'
      << fmt_score(e.log_score) << '\t' << e.config_id << '\t' << e.text << '\n';
  if (!f) throw DataError("write failed: " + path);
}

std::vector<RunEntry> load_run(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  std::vector<RunEntry> entries;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 6)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 6 tab-separated fields");
    RunEntry e;
    e.query_id = fields[0];
    e.flavor = parse_flavor(fields[1]);
    try {
      e.rank = std::stoi(fields[2]);
      e.log_score = std::stod(fields[3]);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad rank or score");
    }
    e.config_id = fields[4];
    e.text = fields[5];
    entries.push_back(std::move(e));
  }
  validate_run(entries);
  return entries;
}

void validate_run(const std::vector<RunEntry>& entries) {
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<int, Real>>> groups;
  for (const auto& e : entries)
    groups[{e.query_id, e.config_id}].emplace_back(e.rank, e.log_score);
  for (auto& [key, items] : groups) {
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t i = 0; i < items.size(); ++i) {
      if (items[i].first != int(i) + 1)
        throw DataError("run validation: query " + key.first + " config " + key.second +
                        ": ranks are not contiguous 1..n");
      if (i > 0 && items[i].second > items[i - 1].second)
        throw DataError("run validation: query " + key.first + " config " + key.second +
                        ": scores increase at rank " + std::to_string(i + 1));
    }
  }
}

// ---- qrels ----

bool majority_vote(const std::vector<bool>& votes) {
  if (votes.empty()) throw DataError("majority_vote: no votes");
  size_t rel = size_t(std::count(votes.begin(), votes.end(), true));
  return rel * 2 > votes.size();
}

void Qrels::add_votes(const std::string& query_id, const std::string& text,
                      const std::vector<bool>& votes) {
  add_label(query_id, text, majority_vote(votes));
}

void Qrels::add_label(const std::string& query_id, const std::string& text, bool relevant) {
  labels_[{query_id, ingest::normalize_text(text)}] = relevant;
}

bool Qrels::relevant(const std::string& query_id, const std::string& text) const {
  auto it = labels_.find({query_id, ingest::normalize_text(text)});
  return it != labels_.end() && it->second;
}

bool Qrels::judged(const std::string& query_id, const std::string& text) const {
  return labels_.count({query_id, ingest::normalize_text(text)}) > 0;
}

Qrels Qrels::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  Qrels q;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 3 tab-separated fields");
    const std::string where = path + ":" + std::to_string(lineno);
    std::vector<bool> votes;
    std::stringstream ss(fields[2]);
    std::string token;
    while (std::getline(ss, token, ',')) votes.push_back(parse_vote(token, where));
    if (votes.empty()) throw DataError(where + ": no votes");
    q.add_votes(fields[0], fields[1], votes);
  }
  return q;
}

// ---- pooling ----

Pool build_pool(const std::vector<RunEntry>& entries, size_t depth) {
  if (depth < 1) throw ConfigError("pool depth must be >= 1");
  validate_run(entries);

  // Per (query, config, flavor): texts in rank order.
  std::map<std::tuple<std::string, std::string, Flavor>, std::vector<std::pair<int, std::string>>>
      ranked;
  for (const auto& e : entries)
    ranked[{e.query_id, e.config_id, e.flavor}].emplace_back(e.rank,
                                                             ingest::normalize_text(e.text));

  Pool pool;
  pool.depth = depth;
  std::map<std::pair<std::string, Flavor>, std::map<std::string, std::vector<std::string>>> cells;
  for (auto& [key, items] : ranked) {
    const auto& [query, config, flavor] = key;
    std::sort(items.begin(), items.end());
    size_t take = std::min(depth, items.size());  // "up to" the top-depth
    for (size_t i = 0; i < take; ++i) {
      auto& provenance = cells[{query, flavor}][items[i].second];
      if (std::find(provenance.begin(), provenance.end(), config) == provenance.end())
        provenance.push_back(config);
    }
  }
  for (auto& [cell_key, texts] : cells) {
    auto& items = pool.cells[cell_key];
    for (auto& [text, configs] : texts) items.push_back({text, configs});
  }
  return pool;
}

void save_pool(const Pool& pool, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  for (const auto& [key, items] : pool.cells) {
    for (const auto& item : items) {
      f << key.first << '\t' << flavor_name(key.second) << '\t' << item.text << '\t';
      for (size_t i = 0; i < item.configs.size(); ++i) {
        if (i) f << ',';
        f << item.configs[i];
      }
      f << '\n';
    }
  }
  if (!f) throw DataError("write failed: " + path);
}

// ---- metrics ----

Real precision_at_k(const std::vector<std::string>& ranking, const Qrels& qrels,
                    const std::string& query_id, size_t k) {
  if (k < 1) throw ConfigError("precision_at_k: k must be >= 1");
  size_t rel = 0;
  for (size_t i = 0; i < std::min(k, ranking.size()); ++i)
    if (qrels.relevant(query_id, ranking[i])) ++rel;
  return Real(rel) / Real(k);
}

Real recall(const std::set<std::string>& retrieved, const std::set<std::string>& base) {
  if (base.empty()) return 0;
  size_t hit = 0;
  for (const auto& t : retrieved)
    if (base.count(t)) ++hit;
  return Real(hit) / Real(base.size());
}

std::vector<Real> cumulative_recall(const std::vector<std::set<std::string>>& retrieved_per_config,
                                    const std::set<std::string>& base) {
  std::vector<Real> out;
  out.reserve(retrieved_per_config.size());
  std::set<std::string> seen;
  for (const auto& retrieved : retrieved_per_config) {
    for (const auto& t : retrieved)
      if (base.count(t)) seen.insert(t);
    out.push_back(base.empty() ? Real(0) : Real(seen.size()) / Real(base.size()));
  }
  return out;
}

// ---- report ----

Report report(const std::vector<std::vector<RunEntry>>& runs, const Qrels& qrels, size_t depth,
              bool recall_full_ranking) {
  if (depth < 1) throw ConfigError("report: depth must be >= 1");

  // Query sets must agree across runs.
  std::vector<std::set<std::string>> run_queries(runs.size());
  for (size_t r = 0; r < runs.size(); ++r) {
    validate_run(runs[r]);
    for (const auto& e : runs[r]) run_queries[r].insert(e.query_id);
  }
  for (size_t r = 1; r < runs.size(); ++r) {
    if (run_queries[r] == run_queries[0]) continue;
    std::string offenders;
    std::set<std::string> diff;
    std::set_symmetric_difference(run_queries[0].begin(), run_queries[0].end(),
                                  run_queries[r].begin(), run_queries[r].end(),
                                  std::inserter(diff, diff.begin()));
    for (const auto& q : diff) offenders += (offenders.empty() ? "" : ", ") + q;
    throw DataError("report: query sets differ between runs (offending: " + offenders + ")");
  }

  std::vector<std::string> config_order;
  std::map<std::string, std::map<std::pair<std::string, Flavor>,
                                 std::vector<std::pair<int, std::string>>>>
      rankings;
  for (const auto& run : runs) {
    for (const auto& e : run) {
      if (std::find(config_order.begin(), config_order.end(), e.config_id) == config_order.end())
        config_order.push_back(e.config_id);
      rankings[e.config_id][{e.query_id, e.flavor}].emplace_back(
          e.rank, ingest::normalize_text(e.text));
    }
  }
  for (auto& [config, cells] : rankings)
    for (auto& [key, items] : cells) std::sort(items.begin(), items.end());

  std::vector<std::string> queries;
  if (!run_queries.empty()) queries.assign(run_queries[0].begin(), run_queries[0].end());

  auto ranking_texts = [&](const std::string& config, const std::string& query,
                           Flavor flavor) -> std::vector<std::string> {
    auto cit = rankings.find(config);
    if (cit == rankings.end()) return {};
    auto it = cit->second.find({query, flavor});
    if (it == cit->second.end()) return {};
    std::vector<std::string> texts;
    texts.reserve(it->second.size());
    for (const auto& [rank, text] : it->second) texts.push_back(text);
    return texts;
  };

  // Retrieved-relevant sets at depth (or over the whole ranking) per
  // (config, query), and the per-query recall base pooled over all configs.
  std::map<std::pair<std::string, std::string>, std::set<std::string>> retrieved_rel;
  std::map<std::string, std::set<std::string>> base;
  for (const auto& config : config_order) {
    for (const auto& query : queries) {
      auto texts = ranking_texts(config, query, Flavor::QC);
      size_t take = recall_full_ranking ? texts.size() : std::min(depth, texts.size());
      auto& rel_set = retrieved_rel[{config, query}];
      for (size_t i = 0; i < take; ++i)
        if (qrels.relevant(query, texts[i])) rel_set.insert(texts[i]);
      base[query].insert(rel_set.begin(), rel_set.end());
    }
  }

  Report rep;
  rep.depth = depth;
  std::set<std::string> empty_base_queries;
  for (const auto& query : queries)
    if (base[query].empty()) empty_base_queries.insert(query);

  // Per-query cumulative recall, then macro-averaged per line.
  std::map<std::string, std::vector<Real>> cum_per_query;
  for (const auto& query : queries) {
    std::vector<std::set<std::string>> per_config;
    for (const auto& config : config_order) per_config.push_back(retrieved_rel[{config, query}]);
    cum_per_query[query] = cumulative_recall(per_config, base[query]);
  }

  const Real nq = queries.empty() ? Real(1) : Real(queries.size());
  for (size_t ci = 0; ci < config_order.size(); ++ci) {
    const auto& config = config_order[ci];
    ConfigMetrics row;
    row.config_id = config;
    bool has_qr = false;
    Real qr10 = 0, qr20 = 0;
    for (const auto& query : queries) {
      auto qc = ranking_texts(config, query, Flavor::QC);
      row.qc_p10 += precision_at_k(qc, qrels, query, 10);
      row.qc_p20 += precision_at_k(qc, qrels, query, 20);
      row.qc_recall += recall(retrieved_rel[{config, query}], base[query]);
      row.qc_cum_recall += cum_per_query[query][ci];
      auto qr = ranking_texts(config, query, Flavor::QR);
      if (!qr.empty()) has_qr = true;
      qr10 += precision_at_k(qr, qrels, query, 10);
      qr20 += precision_at_k(qr, qrels, query, 20);
    }
    row.qc_p10 /= nq;
    row.qc_p20 /= nq;
    row.qc_recall /= nq;
    row.qc_cum_recall /= nq;
    if (has_qr) {
      row.qr_p10 = qr10 / nq;
      row.qr_p20 = qr20 / nq;
    }
    rep.rows.push_back(std::move(row));
  }

  bool any_relevant = false;
  for (const auto& query : queries)
    if (!base[query].empty()) any_relevant = true;
  if (!any_relevant && !queries.empty()) rep.flags.push_back("no_relevant_suggestions");
  for (const auto& q : empty_base_queries) rep.flags.push_back("empty_recall_base:" + q);
  return rep;
}

std::string format_report(const Report& report) {
  std::string out = "config\tqc_p10\tqc_p20\tqc_r\tqc_cr\tqr_p10\tqr_p20\n";
  for (const auto& row : report.rows) {
    out += row.config_id;
    out += '\t';
    out += fmt_metric(row.qc_p10);
    out += '\t';
    out += fmt_metric(row.qc_p20);
    out += '\t';
    out += fmt_metric(row.qc_recall);
    out += '\t';
    out += fmt_metric(row.qc_cum_recall);
    out += '\t';
    out += row.qr_p10 ? fmt_metric(*row.qr_p10) : "-";
    out += '\t';
    out += row.qr_p20 ? fmt_metric(*row.qr_p20) : "-";
    out += '\n';
  }
  for (const auto& flag : report.flags) out += "# " + flag + "\n";
  return out;
}

void save_report(const Report& report, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << format_report(report);
  if (!f) throw DataError("write failed: " + path);
}

}  // namespace tqs::pooleval
