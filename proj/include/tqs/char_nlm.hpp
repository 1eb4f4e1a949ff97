#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tqs/candidate.hpp"
#include "tqs/ingest.hpp"
#include "tqs/nn/adam.hpp"
#include "tqs/nn/cells.hpp"
#include "tqs/nn/checkpoint.hpp"
#include "tqs/rng.hpp"
#include "tqs/train_log.hpp"

namespace tqs::nlm {

// Byte-level character inventory observed in the training corpus, plus
// reserved begin/end/unknown symbols at fixed low indices.
class CharVocab {
 public:
  static constexpr int kBos = 0, kEos = 1, kUnk = 2, kReserved = 3;

  CharVocab() { to_id_.fill(kUnk); }
  static CharVocab build(const ingest::TextCorpus& corpus);

  size_t size() const { return chars_.size() + kReserved; }
  int id_of(unsigned char c) const { return to_id_[c]; }
  unsigned char char_of(int id) const;

  std::vector<int> encode(std::string_view text) const;
  std::string decode(std::span<const int> ids) const;  // reserved ids skipped

  nlohmann::json to_json() const;
  static CharVocab from_json(const nlohmann::json& j);

 private:
  std::vector<unsigned char> chars_;  // ascending byte order
  std::array<int, 256> to_id_{};
};

struct CharLmConfig {
  size_t hidden_dim = 64;  // 512 at paper scale
  size_t embed_dim = 32;
  size_t epochs = 100;
  size_t batch_size = 8;
  Real lr = 1e-3;
  Real dropout = 0.0;
  Real clip_norm = 5.0;
  uint64_t seed = 1;
};

// Character-level LSTM language model: embedding, one recurrent layer, and a
// projection onto character logits.
class CharLmModel {
 public:
  CharLmModel() = default;
  CharLmModel(CharVocab vocab, size_t hidden_dim, size_t embed_dim, Rng& rng);

  const CharVocab& vocab() const { return vocab_; }
  size_t hidden_dim() const { return cell_.hidden_dim; }
  size_t embed_dim() const { return embed_.dim(); }
  std::vector<nn::ParamRef> params();

  struct State {
    std::vector<Real> h, c;
  };
  State initial_state() const;
  State advance(const State& state, int symbol) const;
  std::vector<Real> next_log_probs(const State& state) const;

  // State after consuming BOS plus the context characters (unknowns -> UNK).
  State context_state(std::string_view context) const;
  // P(next char | context) as a probability vector over the vocabulary.
  std::vector<Real> next_char_dist(std::string_view context) const;

  // Teacher-forced CE over BOS + ids + EOS, scaled by `scale`. Accumulates
  // parameter gradients; dropout masks are drawn from `rng` when rate > 0.
  Real sequence_loss_grad(std::span<const int> ids, Real scale, Real dropout_rate, Rng* rng);
  // Eval-mode summed CE for the same sequence (no gradients, no dropout).
  Real sequence_loss(std::span<const int> ids) const;

 private:
  CharVocab vocab_;
  nn::Embedding embed_;
  nn::LstmCell cell_;
  nn::Linear out_;
};

struct CharLmTrainResult {
  CharLmModel model;
  TrainLog log;
};

// Incremental trainer; owns the optimizer and RNG so a run can checkpoint
// and resume exactly.
class CharLmTrainer {
 public:
  CharLmTrainer(ingest::TextCorpus corpus, const CharLmConfig& config);
  CharLmTrainer(ingest::TextCorpus corpus, const CharLmConfig& config,
                const nn::LoadedCheckpoint& checkpoint);

  // One pass over the corpus; returns (and records) the post-epoch eval loss
  // in mean nats per predicted character. Throws DivergenceError on NaN.
  Real run_epoch();
  Real eval_loss() const;

  size_t epochs_done() const { return epochs_done_; }
  const std::vector<Real>& losses() const { return losses_; }
  CharLmModel& model() { return model_; }
  const CharLmModel& model() const { return model_; }
  const CharLmConfig& config() const { return config_; }

  void save(const std::string& path) const;

 private:
  ingest::TextCorpus corpus_;
  CharLmConfig config_;
  CharLmModel model_;
  nn::AdamState adam_;
  Rng rng_;
  std::vector<std::vector<int>> sequences_;
  std::vector<Real> losses_;
  size_t epochs_done_ = 0;
};

// Fresh training run for config.epochs epochs.
CharLmTrainResult train_char_nlm(const ingest::TextCorpus& corpus, const CharLmConfig& config);

struct NlmSuggestOptions {
  size_t beam_width = 30;
  size_t k = 20;
  size_t max_chars = 60;
  // Continue from q0 with an implicitly appended space so suggestions extend
  // by whole words.
  bool append_space = true;
  // Default off: the likelihood is the raw product of character
  // probabilities. When on, log scores are divided by the generated length.
  bool length_normalize = false;
};

// Beam-search completions of q0. Every candidate has q0 as a character-level
// prefix (QC); EOS-terminated scores include the end-of-sequence factor,
// length-capped candidates keep their partial product and are flagged.
std::vector<SuggestionCandidate> suggest_nlm(const CharLmModel& model, const std::string& q0,
                                             const NlmSuggestOptions& options = {});

inline constexpr const char* kCharNlmKind = "char_nlm";

void save_char_nlm(const std::string& path, const CharLmModel& model,
                   const nlohmann::json& manifest_extra = nlohmann::json::object(),
                   const nlohmann::json& extra = nlohmann::json::object());
CharLmModel load_char_nlm(const nn::LoadedCheckpoint& checkpoint);

}  // namespace tqs::nlm
