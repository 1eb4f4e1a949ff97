#include "tqs/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include <json.hpp>

namespace tqs::pipeline {

namespace fs = std::filesystem;

SourceKind parse_source_kind(const std::string& name) {
  if (name == "aol" || name == "log") return SourceKind::Aol;
  if (name == "knowhow") return SourceKind::Knowhow;
  if (name == "wikianswers") return SourceKind::Wikianswers;
  throw ConfigError("unknown source kind '" + name + "' (aol|knowhow|wikianswers)");
}

Method parse_method(const std::string& name) {
  if (name == "popsuffix") return Method::PopSuffix;
  if (name == "char-nlm" || name == "nlm") return Method::CharNlm;
  if (name == "seq2seq") return Method::Seq2Seq;
  throw ConfigError("unknown method '" + name + "' (popsuffix|char-nlm|seq2seq)");
}

std::string source_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::Aol: return "aol";
    case SourceKind::Knowhow: return "knowhow";
    case SourceKind::Wikianswers: return "wikianswers";
  }
  return "?";
}

std::string method_name(Method method) {
  switch (method) {
    case Method::PopSuffix: return "popsuffix";
    case Method::CharNlm: return "char-nlm";
    case Method::Seq2Seq: return "seq2seq";
  }
  return "?";
}

bool source_provides_pairs(SourceKind kind) { return kind != SourceKind::Wikianswers; }

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  return f;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << j.dump(2) << '\n';
  if (!f) throw DataError("write failed: " + path);
}

}  // namespace

IngestStats cmd_ingest(const IngestOptions& options) {
  if (options.input_path.empty()) throw ConfigError("ingest: missing input path");
  if (options.out_dir.empty()) throw ConfigError("ingest: missing output directory");
  if (options.method && *options.method == Method::Seq2Seq &&
      !source_provides_pairs(options.source))
    throw ConfigError("ingest: source '" + source_name(options.source) +
                      "' does not provide pairs for seq2seq");

  fs::create_directories(options.out_dir);
  const std::string corpus_path = (fs::path(options.out_dir) / "corpus.txt").string();
  const std::string pairs_path = (fs::path(options.out_dir) / "pairs.txt").string();
  const std::string stats_path = (fs::path(options.out_dir) / "stats.json").string();

  IngestStats stats;
  nlohmann::json extra;
  ingest::TextCorpus corpus;
  ingest::PairCorpus pairs;
  bool have_pairs = false;

  switch (options.source) {
    case SourceKind::Aol: {
      auto in = open_input(options.input_path);
      auto parsed = ingest::parse_query_log(in, options.log_format);
      stats.skipped = parsed.skipped;
      for (const auto& r : parsed.records) corpus.entries.push_back(r.query);
      auto sessions = ingest::segment_sessions(std::move(parsed.records),
                                               options.session_gap_seconds);
      stats.sessions = sessions.size();
      pairs = ingest::session_pairs(sessions, options.pairing);
      size_t session_pair_count = pairs.pairs.size();
      for (const auto& q : corpus.entries)
        for (auto& p : ingest::prefix_pairs(q)) pairs.pairs.push_back(std::move(p));
      extra["session_pairs"] = session_pair_count;
      extra["prefix_pairs"] = pairs.pairs.size() - session_pair_count;
      have_pairs = true;
      break;
    }
    case SourceKind::Knowhow: {
      auto in = open_input(options.input_path);
      auto result = ingest::load_knowhow(in);
      corpus = std::move(result.corpus);
      pairs = std::move(result.pairs);
      stats.skipped = result.skipped;
      have_pairs = true;
      break;
    }
    case SourceKind::Wikianswers: {
      auto in = open_input(options.input_path);
      auto result = ingest::load_wikianswers(in);
      corpus = std::move(result.corpus);
      stats.skipped = result.dropped;
      break;
    }
  }

  stats.entries = corpus.entries.size();
  stats.pairs = pairs.pairs.size();
  ingest::save_corpus(corpus, corpus_path);
  if (have_pairs) ingest::save_pairs(pairs, pairs_path);

  nlohmann::json j;
  j["source"] = source_name(options.source);
  j["input"] = options.input_path;
  j["entries"] = stats.entries;
  j["pairs"] = have_pairs ? nlohmann::json(stats.pairs) : nlohmann::json();
  j["skipped"] = stats.skipped;
  if (options.source == SourceKind::Aol) j["sessions"] = stats.sessions;
  for (auto& [k, v] : extra.items()) j[k] = v;
  write_json(j, stats_path);
  return stats;
}

namespace {

void train_popsuffix(const TrainOptions& options) {
  if (options.corpus_path.empty()) throw ConfigError("train: popsuffix needs --corpus");
  auto corpus = ingest::load_corpus(options.corpus_path);
  auto table =
      popsuffix::build_suffix_table(corpus, options.suffix_max_len, options.suffix_min_count);
  popsuffix::save_table(table, options.out_path);
  nlohmann::json log;
  log["method"] = "popsuffix";
  log["suffixes"] = table.counts.size();
  log["total"] = table.total;
  log["max_len"] = table.max_len;
  log["min_count"] = options.suffix_min_count;
  write_json(log, options.log_path);
}

void train_char_nlm_cmd(const TrainOptions& options) {
  if (options.corpus_path.empty()) throw ConfigError("train: char-nlm needs --corpus");
  auto corpus = ingest::load_corpus(options.corpus_path);
  std::optional<nlm::CharLmTrainer> trainer;
  if (!options.resume_path.empty()) {
    auto ckpt = nn::load_checkpoint(options.resume_path);
    trainer.emplace(std::move(corpus), options.char_config, ckpt);
  } else {
    trainer.emplace(std::move(corpus), options.char_config);
  }
  while (trainer->epochs_done() < options.char_config.epochs) trainer->run_epoch();
  trainer->save(options.out_path);
  nlohmann::json log;
  log["method"] = "char-nlm";
  log["seed"] = options.char_config.seed;
  log["epoch_loss"] = trainer->losses();
  log["final_loss"] = trainer->losses().empty() ? trainer->eval_loss() : trainer->losses().back();
  write_json(log, options.log_path);
}

void train_seq2seq_cmd(const TrainOptions& options) {
  if (options.pairs_path.empty()) throw ConfigError("train: seq2seq needs --pairs");
  auto pairs = ingest::load_pairs(options.pairs_path);
  std::optional<seq2seq::Seq2SeqTrainer> trainer;
  if (!options.resume_path.empty()) {
    auto ckpt = nn::load_checkpoint(options.resume_path);
    trainer.emplace(std::move(pairs), options.seq_config, ckpt);
  } else {
    trainer.emplace(std::move(pairs), options.seq_config);
  }
  while (trainer->epochs_done() < options.seq_config.epochs) trainer->run_epoch();
  trainer->save(options.out_path);
  nlohmann::json log;
  log["method"] = "seq2seq";
  log["seed"] = options.seq_config.seed;
  log["epoch_loss"] = trainer->losses();
  log["final_loss"] = trainer->losses().empty() ? trainer->eval_loss() : trainer->losses().back();
  write_json(log, options.log_path);
}

}  // namespace

void cmd_train(const TrainOptions& options_in) {
  TrainOptions options = options_in;
  if (options.out_path.empty()) throw ConfigError("train: missing --out");
  if (options.log_path.empty()) options.log_path = options.out_path + ".log.json";
  switch (options.method) {
    case Method::PopSuffix: train_popsuffix(options); break;
    case Method::CharNlm: train_char_nlm_cmd(options); break;
    case Method::Seq2Seq: train_seq2seq_cmd(options); break;
  }
}

QueryFile load_queries(const std::string& path) {
  auto f = open_input(path);
  QueryFile out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      ++out.skipped;
      continue;
    }
    std::string id, text;
    size_t tab = line.find('\t');
    if (tab != std::string::npos) {
      id = line.substr(0, tab);
      text = ingest::normalize_text(line.substr(tab + 1));
    } else {
      id = "q" + std::to_string(lineno);
      text = ingest::normalize_text(line);
    }
    if (id.empty() || text.empty()) {
      ++out.skipped;
      continue;
    }
    out.queries.emplace_back(std::move(id), std::move(text));
  }
  return out;
}

SuggestStats cmd_suggest(const SuggestOptions& options) {
  if (options.model_path.empty()) throw ConfigError("suggest: missing --model");
  if (options.queries_path.empty()) throw ConfigError("suggest: missing --queries");
  if (options.out_path.empty()) throw ConfigError("suggest: missing --out");
  if (options.config_id.empty()) throw ConfigError("suggest: missing --config-id");
  if (options.k < 1) throw ConfigError("suggest: k must be >= 1");

  auto query_file = load_queries(options.queries_path);
  if (query_file.queries.empty()) throw DataError("suggest: no usable queries");
  SuggestStats stats;
  stats.skipped_queries = query_file.skipped;
  if (stats.skipped_queries > 0)
    std::cerr << "warning: skipped " << stats.skipped_queries << " empty query line(s)\n";

  // Per-query candidate lists, top-k per flavor, jointly ranked per query.
  std::vector<pooleval::RunEntry> entries;
  auto emit = [&](const std::string& qid, std::vector<SuggestionCandidate> qc,
                  std::vector<SuggestionCandidate> qr) {
    if (qc.size() > options.k) qc.resize(options.k);
    if (qr.size() > options.k) qr.resize(options.k);
    std::vector<SuggestionCandidate> all = std::move(qc);
    all.insert(all.end(), std::make_move_iterator(qr.begin()),
               std::make_move_iterator(qr.end()));
    std::sort(all.begin(), all.end(), candidate_order);
    int rank = 1;
    for (auto& cand : all) {
      pooleval::RunEntry e;
      e.query_id = qid;
      e.flavor = cand.flavor;
      e.rank = rank++;
      e.log_score = cand.log_score;
      e.config_id = options.config_id;
      e.text = cand.text;
      entries.push_back(std::move(e));
    }
    stats.candidates += all.size();
  };

  switch (options.method) {
    case Method::PopSuffix: {
      auto table = popsuffix::load_table(options.model_path);
      for (const auto& [qid, text] : query_file.queries) {
        ++stats.queries;
        emit(qid, popsuffix::suggest(text, table, options.k), {});
      }
      break;
    }
    case Method::CharNlm: {
      auto model = nlm::load_char_nlm(nn::load_checkpoint(options.model_path));
      nlm::NlmSuggestOptions so;
      so.beam_width = options.beam_width ? options.beam_width : 30;
      so.k = options.k;
      so.max_chars = options.max_chars;
      so.append_space = options.append_space;
      so.length_normalize = options.length_normalize;
      for (const auto& [qid, text] : query_file.queries) {
        ++stats.queries;
        emit(qid, nlm::suggest_nlm(model, text, so), {});
      }
      break;
    }
    case Method::Seq2Seq: {
      auto model = seq2seq::load_seq2seq(nn::load_checkpoint(options.model_path));
      seq2seq::Seq2SeqSuggestOptions so;
      so.beam_width = options.beam_width ? options.beam_width : 100;
      so.k = std::numeric_limits<size_t>::max();  // split per flavor below
      so.max_words = options.max_words;
      so.length_normalize = options.length_normalize;
      for (const auto& [qid, text] : query_file.queries) {
        ++stats.queries;
        auto result = seq2seq::suggest_seq2seq(model, text, so);
        if (result.unreliable) {
          ++stats.unreliable_queries;
          std::cerr << "warning: query " << qid
                    << " is out of vocabulary; suggestions may be unreliable\n";
        }
        std::vector<SuggestionCandidate> qc, qr;
        for (auto& cand : result.candidates)
          (cand.flavor == Flavor::QC ? qc : qr).push_back(std::move(cand));
        emit(qid, std::move(qc), std::move(qr));
      }
      break;
    }
  }

  pooleval::save_run(entries, options.out_path);
  return stats;
}

void cmd_pool(const PoolOptions& options) {
  if (options.run_paths.empty()) throw ConfigError("pool: no run files given");
  if (options.out_path.empty()) throw ConfigError("pool: missing --out");
  std::vector<pooleval::RunEntry> merged;
  for (const auto& path : options.run_paths) {
    auto entries = pooleval::load_run(path);
    merged.insert(merged.end(), std::make_move_iterator(entries.begin()),
                  std::make_move_iterator(entries.end()));
  }
  auto pool = pooleval::build_pool(merged, options.depth);
  pooleval::save_pool(pool, options.out_path);
}

void cmd_eval(const EvalOptions& options) {
  if (options.run_paths.empty()) throw ConfigError("eval: no run files given");
  if (options.qrels_path.empty()) throw ConfigError("eval: missing --qrels");
  if (options.out_path.empty()) throw ConfigError("eval: missing --out");
  std::vector<std::vector<pooleval::RunEntry>> runs;
  for (const auto& path : options.run_paths) runs.push_back(pooleval::load_run(path));
  auto qrels = pooleval::Qrels::load(options.qrels_path);
  auto rep = pooleval::report(runs, qrels, options.depth, options.recall_full_ranking);
  pooleval::save_report(rep, options.out_path);
}

}  // namespace tqs::pipeline
