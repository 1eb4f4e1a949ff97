#include <functional>
#include <iostream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tqs/nn/kernels.hpp"
#include "tqs/pipeline.hpp"

namespace {

using tqs::pipeline::Method;
using tqs::pipeline::SourceKind;

// JSON config-file values act as defaults; flags given on the command line
// win. One section per subcommand: {"train": {"epochs": 50, ...}, ...}.
class ConfigBinder {
 public:
  template <typename T>
  void bind(CLI::Option* opt, const std::string& key, T& var) {
    binds_.emplace_back(opt, key, [&var](const nlohmann::json& v) { var = v.get<T>(); });
  }

  void apply(const nlohmann::json& section) const {
    for (const auto& [opt, key, set] : binds_)
      if (opt->count() == 0 && section.contains(key)) set(section.at(key));
  }

 private:
  std::vector<std::tuple<CLI::Option*, std::string, std::function<void(const nlohmann::json&)>>>
      binds_;
};

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw tqs::ConfigError("cannot read config file " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw tqs::ConfigError(path + ": invalid JSON: " + e.what());
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tasksuggest: generate and evaluate task-based query suggestions"};
  app.require_subcommand(1);

  std::string config_path;
  bool serial_kernels = false;
  app.add_option("--config", config_path, "JSON config file; flags override its values");
  app.add_flag("--serial-kernels", serial_kernels, "force the serial linear-algebra kernels");

  // ---- ingest ----
  auto* ingest = app.add_subcommand("ingest", "parse a raw source into corpus/pair files");
  ConfigBinder ingest_cfg;
  std::string in_source = "aol", in_method, in_input, in_out;
  int64_t in_gap_minutes = 30;
  std::string in_pairing = "all";
  tqs::ingest::LogFormat in_fmt;
  ingest_cfg.bind(ingest->add_option("--source", in_source, "aol|knowhow|wikianswers"),
                  "source", in_source);
  ingest_cfg.bind(ingest->add_option("--method", in_method,
                                     "intended method; validates the combination"),
                  "method", in_method);
  ingest_cfg.bind(ingest->add_option("--input", in_input, "raw source file"), "input", in_input);
  ingest_cfg.bind(ingest->add_option("--out", in_out, "output directory"), "out", in_out);
  ingest_cfg.bind(ingest->add_option("--gap-minutes", in_gap_minutes, "session gap (minutes)"),
                  "gap_minutes", in_gap_minutes);
  ingest_cfg.bind(ingest->add_option("--pairing", in_pairing, "all|consecutive"), "pairing",
                  in_pairing);
  ingest_cfg.bind(ingest->add_option("--user-col", in_fmt.user_col, "log column of the user id"),
                  "user_col", in_fmt.user_col);
  ingest_cfg.bind(ingest->add_option("--query-col", in_fmt.query_col, "log column of the query"),
                  "query_col", in_fmt.query_col);
  ingest_cfg.bind(ingest->add_option("--time-col", in_fmt.time_col, "log column of the timestamp"),
                  "time_col", in_fmt.time_col);

  // ---- train ----
  auto* train = app.add_subcommand("train", "build a suffix table or train a neural model");
  ConfigBinder train_cfg;
  std::string tr_method = "popsuffix", tr_corpus, tr_pairs, tr_out, tr_log, tr_resume;
  size_t tr_suffix_max_len = 3;
  uint64_t tr_suffix_min_count = 2;
  size_t tr_epochs = 100, tr_batch = 0, tr_hidden = 64, tr_embed = 32, tr_enc = 32, tr_dec = 64;
  double tr_lr = 0, tr_dropout = -1, tr_clip = 5.0;
  uint64_t tr_seed = 1, tr_vocab_min = 2;
  train_cfg.bind(train->add_option("--method", tr_method, "popsuffix|char-nlm|seq2seq"), "method",
                 tr_method);
  train_cfg.bind(train->add_option("--corpus", tr_corpus, "corpus file (popsuffix, char-nlm)"),
                 "corpus", tr_corpus);
  train_cfg.bind(train->add_option("--pairs", tr_pairs, "pair file (seq2seq)"), "pairs", tr_pairs);
  train_cfg.bind(train->add_option("--out", tr_out, "output table/checkpoint"), "out", tr_out);
  train_cfg.bind(train->add_option("--log", tr_log, "training log (default <out>.log.json)"),
                 "log", tr_log);
  train_cfg.bind(train->add_option("--resume", tr_resume, "checkpoint to continue from"),
                 "resume", tr_resume);
  train_cfg.bind(train->add_option("--suffix-max-len", tr_suffix_max_len, "suffix word limit"),
                 "suffix_max_len", tr_suffix_max_len);
  train_cfg.bind(
      train->add_option("--suffix-min-count", tr_suffix_min_count, "prune rarer suffixes"),
      "suffix_min_count", tr_suffix_min_count);
  train_cfg.bind(train->add_option("--epochs", tr_epochs, "training epochs"), "epochs", tr_epochs);
  train_cfg.bind(train->add_option("--batch-size", tr_batch, "sequences per update"),
                 "batch_size", tr_batch);
  train_cfg.bind(train->add_option("--lr", tr_lr, "learning rate (default 1e-3 char, 1e-4 seq)"),
                 "lr", tr_lr);
  train_cfg.bind(train->add_option("--dropout", tr_dropout, "dropout rate (default 0 char, 0.5 seq)"),
                 "dropout", tr_dropout);
  train_cfg.bind(train->add_option("--clip-norm", tr_clip, "gradient clipping norm"), "clip_norm",
                 tr_clip);
  train_cfg.bind(train->add_option("--hidden-dim", tr_hidden, "char-nlm hidden units"),
                 "hidden_dim", tr_hidden);
  train_cfg.bind(train->add_option("--embed-dim", tr_embed, "embedding dimension"), "embed_dim",
                 tr_embed);
  train_cfg.bind(train->add_option("--encoder-dim", tr_enc, "seq2seq per-direction encoder size"),
                 "encoder_dim", tr_enc);
  train_cfg.bind(train->add_option("--decoder-dim", tr_dec, "seq2seq decoder size"), "decoder_dim",
                 tr_dec);
  train_cfg.bind(train->add_option("--seed", tr_seed, "training seed"), "seed", tr_seed);
  train_cfg.bind(train->add_option("--vocab-min-count", tr_vocab_min, "seq2seq word count cutoff"),
                 "vocab_min_count", tr_vocab_min);

  // ---- suggest ----
  auto* suggest = app.add_subcommand("suggest", "generate a run file for a query list");
  ConfigBinder suggest_cfg;
  std::string sg_method = "popsuffix", sg_model, sg_queries, sg_out, sg_config_id;
  size_t sg_k = 20, sg_beam = 0, sg_max_chars = 60, sg_max_words = 12;
  bool sg_no_append_space = false, sg_length_norm = false;
  suggest_cfg.bind(suggest->add_option("--method", sg_method, "popsuffix|char-nlm|seq2seq"),
                   "method", sg_method);
  suggest_cfg.bind(suggest->add_option("--model", sg_model, "suffix table or checkpoint"),
                   "model", sg_model);
  suggest_cfg.bind(suggest->add_option("--queries", sg_queries, "query file (id<TAB>text or text)"),
                   "queries", sg_queries);
  suggest_cfg.bind(suggest->add_option("--out", sg_out, "run file to write"), "out", sg_out);
  suggest_cfg.bind(
      suggest->add_option("--config-id", sg_config_id, "configuration label, e.g. AOL-Seq2Seq"),
      "config_id", sg_config_id);
  suggest_cfg.bind(suggest->add_option("--k", sg_k, "suggestions per flavor"), "k", sg_k);
  suggest_cfg.bind(suggest->add_option("--beam", sg_beam, "beam width (0 = method default)"),
                   "beam", sg_beam);
  suggest_cfg.bind(suggest->add_option("--max-chars", sg_max_chars, "char-nlm generation cap"),
                   "max_chars", sg_max_chars);
  suggest_cfg.bind(suggest->add_option("--max-words", sg_max_words, "seq2seq generation cap"),
                   "max_words", sg_max_words);
  suggest_cfg.bind(suggest->add_flag("--no-append-space", sg_no_append_space,
                                     "char-nlm: continue mid-word instead of word-wise"),
                   "no_append_space", sg_no_append_space);
  suggest_cfg.bind(suggest->add_flag("--length-normalize", sg_length_norm,
                                     "normalize log scores by generated length"),
                   "length_normalize", sg_length_norm);

  // ---- pool ----
  auto* pool = app.add_subcommand("pool", "merge run files into QC/QR assessment pools");
  ConfigBinder pool_cfg;
  std::vector<std::string> pl_runs;
  std::string pl_out;
  size_t pl_depth = 20;
  pool_cfg.bind(pool->add_option("--runs", pl_runs, "run files"), "runs", pl_runs);
  pool_cfg.bind(pool->add_option("--out", pl_out, "pool file to write"), "out", pl_out);
  pool_cfg.bind(pool->add_option("--depth", pl_depth, "pool depth"), "depth", pl_depth);

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "score run files against qrels");
  ConfigBinder eval_cfg;
  std::vector<std::string> ev_runs;
  std::string ev_qrels, ev_out;
  size_t ev_depth = 20;
  bool ev_full = false;
  eval_cfg.bind(eval->add_option("--runs", ev_runs, "run files, in cumulative-recall order"),
                "runs", ev_runs);
  eval_cfg.bind(eval->add_option("--qrels", ev_qrels, "relevance labels"), "qrels", ev_qrels);
  eval_cfg.bind(eval->add_option("--out", ev_out, "report file to write"), "out", ev_out);
  eval_cfg.bind(eval->add_option("--depth", ev_depth, "pool depth for recall"), "depth", ev_depth);
  eval_cfg.bind(eval->add_flag("--recall-full-ranking", ev_full,
                               "compute recall over whole rankings, not the pool depth"),
                "recall_full_ranking", ev_full);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    nlohmann::json config = nlohmann::json::object();
    if (!config_path.empty()) config = load_config_file(config_path);
    auto section = [&](const char* name) {
      return config.contains(name) ? config.at(name) : nlohmann::json::object();
    };
    if (serial_kernels) tqs::nn::set_exec_mode(tqs::nn::ExecMode::Serial);

    if (app.got_subcommand(ingest)) {
      ingest_cfg.apply(section("ingest"));
      tqs::pipeline::IngestOptions o;
      o.source = tqs::pipeline::parse_source_kind(in_source);
      if (!in_method.empty()) o.method = tqs::pipeline::parse_method(in_method);
      o.input_path = in_input;
      o.out_dir = in_out;
      if (in_gap_minutes < 0) throw tqs::ConfigError("ingest: gap must be non-negative");
      o.session_gap_seconds = in_gap_minutes * 60;
      if (in_pairing == "all")
        o.pairing = tqs::ingest::PairingMode::AllOrdered;
      else if (in_pairing == "consecutive")
        o.pairing = tqs::ingest::PairingMode::ConsecutiveOnly;
      else
        throw tqs::ConfigError("ingest: pairing must be all|consecutive");
      o.log_format = in_fmt;
      auto stats = tqs::pipeline::cmd_ingest(o);
      std::cout << "entries=" << stats.entries << " pairs=" << stats.pairs
                << " skipped=" << stats.skipped << "\n";
    } else if (app.got_subcommand(train)) {
      train_cfg.apply(section("train"));
      tqs::pipeline::TrainOptions o;
      o.method = tqs::pipeline::parse_method(tr_method);
      o.corpus_path = tr_corpus;
      o.pairs_path = tr_pairs;
      o.out_path = tr_out;
      o.log_path = tr_log;
      o.resume_path = tr_resume;
      o.suffix_max_len = tr_suffix_max_len;
      o.suffix_min_count = tr_suffix_min_count;
      o.char_config.hidden_dim = tr_hidden;
      o.char_config.embed_dim = tr_embed;
      o.char_config.epochs = tr_epochs;
      o.char_config.batch_size = tr_batch ? tr_batch : 8;
      o.char_config.lr = tr_lr > 0 ? tr_lr : 1e-3;
      o.char_config.dropout = tr_dropout >= 0 ? tr_dropout : 0.0;
      o.char_config.clip_norm = tr_clip;
      o.char_config.seed = tr_seed;
      o.seq_config.encoder_dim = tr_enc;
      o.seq_config.decoder_dim = tr_dec;
      o.seq_config.embed_dim = tr_embed;
      o.seq_config.epochs = tr_epochs;
      o.seq_config.batch_size = tr_batch ? tr_batch : 16;
      o.seq_config.lr = tr_lr > 0 ? tr_lr : 1e-4;
      o.seq_config.dropout = tr_dropout >= 0 ? tr_dropout : 0.5;
      o.seq_config.clip_norm = tr_clip;
      o.seq_config.seed = tr_seed;
      o.seq_config.vocab_min_count = tr_vocab_min;
      if (tr_lr < 0) throw tqs::ConfigError("train: learning rate must be positive");
      tqs::pipeline::cmd_train(o);
      std::cout << "wrote " << o.out_path << "\n";
    } else if (app.got_subcommand(suggest)) {
      suggest_cfg.apply(section("suggest"));
      tqs::pipeline::SuggestOptions o;
      o.method = tqs::pipeline::parse_method(sg_method);
      o.model_path = sg_model;
      o.queries_path = sg_queries;
      o.out_path = sg_out;
      o.config_id = sg_config_id;
      o.k = sg_k;
      o.beam_width = sg_beam;
      o.max_chars = sg_max_chars;
      o.max_words = sg_max_words;
      o.append_space = !sg_no_append_space;
      o.length_normalize = sg_length_norm;
      auto stats = tqs::pipeline::cmd_suggest(o);
      std::cout << "queries=" << stats.queries << " candidates=" << stats.candidates << "\n";
    } else if (app.got_subcommand(pool)) {
      pool_cfg.apply(section("pool"));
      tqs::pipeline::PoolOptions o;
      o.run_paths = pl_runs;
      o.depth = pl_depth;
      o.out_path = pl_out;
      tqs::pipeline::cmd_pool(o);
      std::cout << "wrote " << o.out_path << "\n";
    } else if (app.got_subcommand(eval)) {
      eval_cfg.apply(section("eval"));
      tqs::pipeline::EvalOptions o;
      o.run_paths = ev_runs;
      o.qrels_path = ev_qrels;
      o.depth = ev_depth;
      o.out_path = ev_out;
      o.recall_full_ranking = ev_full;
      tqs::pipeline::cmd_eval(o);
      std::cout << "wrote " << o.out_path << "\n";
    }
  } catch (const tqs::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
