#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tqs/char_nlm.hpp"
#include "tqs/ingest.hpp"
#include "tqs/pool_eval.hpp"
#include "tqs/popsuffix.hpp"
#include "tqs/seq2seq.hpp"

namespace tqs::pipeline {

enum class SourceKind { Aol, Knowhow, Wikianswers };
enum class Method { PopSuffix, CharNlm, Seq2Seq };

SourceKind parse_source_kind(const std::string& name);
Method parse_method(const std::string& name);
std::string source_name(SourceKind kind);
std::string method_name(Method method);
bool source_provides_pairs(SourceKind kind);  // WikiAnswers has no pairs

struct IngestOptions {
  SourceKind source = SourceKind::Aol;
  std::optional<Method> method;  // validated against the source when present
  std::string input_path;
  std::string out_dir;
  int64_t session_gap_seconds = 30 * 60;
  ingest::PairingMode pairing = ingest::PairingMode::AllOrdered;
  ingest::LogFormat log_format;
};

struct IngestStats {
  size_t entries = 0;
  size_t pairs = 0;
  size_t skipped = 0;
  size_t sessions = 0;
};

// Writes corpus.txt (always), pairs.txt (when the source provides pairs),
// and stats.json under out_dir.
IngestStats cmd_ingest(const IngestOptions& options);

struct TrainOptions {
  Method method = Method::PopSuffix;
  std::string corpus_path;  // popsuffix / char-nlm input
  std::string pairs_path;   // seq2seq input
  std::string out_path;     // suffix table or checkpoint
  std::string log_path;     // defaults to out_path + ".log.json"
  std::string resume_path;  // optional checkpoint to continue from

  size_t suffix_max_len = 3;
  uint64_t suffix_min_count = 2;
  nlm::CharLmConfig char_config;
  seq2seq::Seq2SeqConfig seq_config;
};

void cmd_train(const TrainOptions& options);

struct SuggestOptions {
  Method method = Method::PopSuffix;
  std::string model_path;
  std::string queries_path;
  std::string out_path;
  std::string config_id;  // "<Source>-<Method>" label carried into the run
  size_t k = 20;          // per flavor
  size_t beam_width = 0;  // 0 -> per-method default (30 char, 100 seq2seq)
  size_t max_chars = 60;
  size_t max_words = 12;
  bool append_space = true;
  bool length_normalize = false;
};

struct SuggestStats {
  size_t queries = 0;
  size_t skipped_queries = 0;
  size_t candidates = 0;
  size_t unreliable_queries = 0;  // seq2seq q0 fully UNK
};

SuggestStats cmd_suggest(const SuggestOptions& options);

struct PoolOptions {
  std::vector<std::string> run_paths;
  size_t depth = 20;
  std::string out_path;
};

void cmd_pool(const PoolOptions& options);

struct EvalOptions {
  std::vector<std::string> run_paths;  // order defines cumulative-recall lines
  std::string qrels_path;
  size_t depth = 20;
  std::string out_path;
  bool recall_full_ranking = false;
};

void cmd_eval(const EvalOptions& options);

// Queries are "id<TAB>text" lines, or bare text (ids become q1, q2, ...).
// Texts are normalized; empty ones are skipped and counted.
struct QueryFile {
  std::vector<std::pair<std::string, std::string>> queries;
  size_t skipped = 0;
};
QueryFile load_queries(const std::string& path);

}  // namespace tqs::pipeline
