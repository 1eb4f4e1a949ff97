#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tqs/candidate.hpp"
#include "tqs/ingest.hpp"
#include "tqs/nn/adam.hpp"
#include "tqs/nn/cells.hpp"
#include "tqs/nn/checkpoint.hpp"
#include "tqs/rng.hpp"
#include "tqs/train_log.hpp"

namespace tqs::seq2seq {

// Word inventory built from both sides of the pair corpus. Words below the
// min-count cutoff are absent and map to UNK.
class WordVocab {
 public:
  static constexpr int kBos = 0, kEos = 1, kUnk = 2, kReserved = 3;

  WordVocab() = default;
  static WordVocab build(const ingest::PairCorpus& pairs, uint64_t min_count = 2);

  size_t size() const { return words_.size() + kReserved; }
  int id_of(const std::string& word) const;
  const std::string& word_of(int id) const;

  std::vector<int> encode(std::string_view normalized) const;
  std::string decode(std::span<const int> ids) const;  // space-joined, reserved skipped

  nlohmann::json to_json() const;
  static WordVocab from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> words_;  // lexicographic, ids stable
  std::unordered_map<std::string, int> to_id_;
};

struct Seq2SeqConfig {
  size_t encoder_dim = 32;  // per-direction GRU size; 100 at paper scale
  size_t decoder_dim = 64;  // 200 at paper scale
  size_t embed_dim = 32;
  size_t epochs = 100;
  size_t batch_size = 16;
  Real lr = 1e-4;
  Real dropout = 0.5;
  Real clip_norm = 5.0;
  uint64_t seed = 1;
  uint64_t vocab_min_count = 2;
};

// Word-level encoder-decoder. The encoder runs a GRU in each direction and
// concatenates the two final states into the context c (dimension 2E); the
// decoder GRU consumes [embed(prev word); c] every step, and the output
// classifier reads [state; embed(prev word); c]. One embedding table serves
// encoder and decoder.
class Seq2SeqModel {
 public:
  Seq2SeqModel() = default;
  Seq2SeqModel(WordVocab vocab, size_t encoder_dim, size_t decoder_dim, size_t embed_dim,
               Rng& rng);

  const WordVocab& vocab() const { return vocab_; }
  size_t encoder_dim() const { return enc_fwd_.hidden_dim; }
  size_t decoder_dim() const { return dec_.hidden_dim; }
  size_t embed_dim() const { return embed_.dim(); }
  size_t context_dim() const { return 2 * encoder_dim(); }
  std::vector<nn::ParamRef> params();

  // Context vector for the source words; throws DataError when empty.
  std::vector<Real> encode(std::span<const int> src_ids) const;
  // h'_0 = tanh(W c + b).
  std::vector<Real> initial_decoder_state(std::span<const Real> context) const;

  // One decoder step: next state from (previous state, previous word,
  // context) plus the distribution over the vocabulary.
  std::pair<std::vector<Real>, std::vector<Real>> decode_step(std::span<const Real> h_prev,
                                                              int prev_word,
                                                              std::span<const Real> context) const;
  std::vector<Real> decode_log_probs(std::span<const Real> h_prev, int prev_word,
                                     std::span<const Real> context,
                                     std::vector<Real>* h_out = nullptr) const;
  // Recurrence only (no output distribution).
  std::vector<Real> decoder_state_step(std::span<const Real> h_prev, int prev_word,
                                       std::span<const Real> context) const;

  // Teacher-forced CE of `tgt` given `src`, scaled by `scale`; accumulates
  // all parameter gradients.
  Real pair_loss_grad(std::span<const int> src, std::span<const int> tgt, Real scale,
                      Real dropout_rate, Rng* rng);
  Real pair_loss(std::span<const int> src, std::span<const int> tgt) const;

 private:
  WordVocab vocab_;
  nn::Embedding embed_;
  nn::GruCell enc_fwd_, enc_bwd_;
  nn::Linear init_proj_;  // context -> pre-tanh decoder init
  nn::GruCell dec_;
  nn::Linear out_;
};

struct Seq2SeqTrainResult {
  Seq2SeqModel model;
  TrainLog log;
};

class Seq2SeqTrainer {
 public:
  Seq2SeqTrainer(ingest::PairCorpus pairs, const Seq2SeqConfig& config);
  Seq2SeqTrainer(ingest::PairCorpus pairs, const Seq2SeqConfig& config,
                 const nn::LoadedCheckpoint& checkpoint);

  Real run_epoch();
  Real eval_loss() const;

  size_t epochs_done() const { return epochs_done_; }
  const std::vector<Real>& losses() const { return losses_; }
  Seq2SeqModel& model() { return model_; }
  const Seq2SeqModel& model() const { return model_; }
  const Seq2SeqConfig& config() const { return config_; }

  void save(const std::string& path) const;

 private:
  void encode_pairs();
  ingest::PairCorpus pairs_;
  Seq2SeqConfig config_;
  Seq2SeqModel model_;
  nn::AdamState adam_;
  Rng rng_;
  std::vector<std::pair<std::vector<int>, std::vector<int>>> encoded_;
  std::vector<Real> losses_;
  size_t epochs_done_ = 0;
};

Seq2SeqTrainResult train_seq2seq(const ingest::PairCorpus& pairs, const Seq2SeqConfig& config);

struct Seq2SeqSuggestOptions {
  size_t beam_width = 100;
  size_t k = 20;
  size_t max_words = 12;
  bool length_normalize = false;
};

struct Seq2SeqSuggestResult {
  std::vector<SuggestionCandidate> candidates;
  // Set when q0 mapped entirely to UNK; suggestions are still produced but
  // their quality is unreliable.
  bool unreliable = false;
};

// Beam-search decode from scratch; each candidate is classified QC or QR by
// the word-prefix test against q0.
Seq2SeqSuggestResult suggest_seq2seq(const Seq2SeqModel& model, const std::string& q0,
                                     const Seq2SeqSuggestOptions& options = {});

inline constexpr const char* kSeq2SeqKind = "seq2seq";

void save_seq2seq(const std::string& path, const Seq2SeqModel& model,
                  const nlohmann::json& manifest_extra = nlohmann::json::object(),
                  const nlohmann::json& extra = nlohmann::json::object());
Seq2SeqModel load_seq2seq(const nn::LoadedCheckpoint& checkpoint);

}  // namespace tqs::seq2seq
