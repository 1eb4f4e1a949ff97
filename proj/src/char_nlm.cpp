#include "tqs/char_nlm.hpp"

#include <algorithm>
#include <cmath>

#include "tqs/nn/batch.hpp"
#include "tqs/nn/beam.hpp"
#include "tqs/nn/kernels.hpp"
#include "tqs/nn/ops.hpp"

namespace tqs::nlm {

// ---- CharVocab ----

CharVocab CharVocab::build(const ingest::TextCorpus& corpus) {
  bool seen[256] = {};
  for (const auto& entry : corpus.entries)
    for (unsigned char c : entry) seen[c] = true;
  CharVocab v;
  for (int c = 0; c < 256; ++c)
    if (seen[c]) v.chars_.push_back(static_cast<unsigned char>(c));
  for (size_t i = 0; i < v.chars_.size(); ++i) v.to_id_[v.chars_[i]] = int(i) + kReserved;
  return v;
}

unsigned char CharVocab::char_of(int id) const {
  if (id < kReserved || size_t(id) >= size())
    throw ShapeError("CharVocab::char_of: id " + std::to_string(id) + " is reserved or out of range");
  return chars_[size_t(id) - kReserved];
}

std::vector<int> CharVocab::encode(std::string_view text) const {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (unsigned char c : text) ids.push_back(to_id_[c]);
  return ids;
}

std::string CharVocab::decode(std::span<const int> ids) const {
  std::string out;
  out.reserve(ids.size());
  for (int id : ids)
    if (id >= kReserved) out.push_back(char(char_of(id)));
  return out;
}

nlohmann::json CharVocab::to_json() const {
  // Bytes as integers: observed characters need not be valid UTF-8.
  return nlohmann::json{{"chars", std::vector<int>(chars_.begin(), chars_.end())}};
}

CharVocab CharVocab::from_json(const nlohmann::json& j) {
  CharVocab v;
  for (int c : j.at("chars").get<std::vector<int>>()) {
    if (c < 0 || c > 255) throw DataError("CharVocab: byte value out of range");
    v.chars_.push_back(static_cast<unsigned char>(c));
  }
  for (size_t i = 0; i < v.chars_.size(); ++i) v.to_id_[v.chars_[i]] = int(i) + kReserved;
  return v;
}

// ---- CharLmModel ----

CharLmModel::CharLmModel(CharVocab vocab, size_t hidden_dim, size_t embed_dim, Rng& rng)
    : vocab_(std::move(vocab)),
      embed_(vocab_.size(), embed_dim, rng),
      cell_(embed_dim, hidden_dim, rng),
      out_(vocab_.size(), hidden_dim, rng) {}

std::vector<nn::ParamRef> CharLmModel::params() {
  std::vector<nn::ParamRef> refs = embed_.params("embed");
  for (auto& r : cell_.params("lstm")) refs.push_back(r);
  for (auto& r : out_.params("out")) refs.push_back(r);
  return refs;
}

CharLmModel::State CharLmModel::initial_state() const {
  return {std::vector<Real>(hidden_dim(), Real(0)), std::vector<Real>(hidden_dim(), Real(0))};
}

CharLmModel::State CharLmModel::advance(const State& state, int symbol) const {
  State next{std::vector<Real>(hidden_dim()), std::vector<Real>(hidden_dim())};
  cell_.forward(embed_.lookup(size_t(symbol)), state.h, state.c, next.h, next.c);
  return next;
}

std::vector<Real> CharLmModel::next_log_probs(const State& state) const {
  std::vector<Real> logits(vocab_.size());
  out_.forward(state.h, logits);
  Real mx = *std::max_element(logits.begin(), logits.end());
  Real sum = 0;
  for (Real l : logits) sum += std::exp(l - mx);
  Real lse = mx + std::log(sum);
  for (Real& l : logits) l -= lse;
  return logits;
}

CharLmModel::State CharLmModel::context_state(std::string_view context) const {
  State s = initial_state();
  s = advance(s, CharVocab::kBos);
  for (int id : vocab_.encode(context)) s = advance(s, id);
  return s;
}

std::vector<Real> CharLmModel::next_char_dist(std::string_view context) const {
  State s = context_state(context);
  std::vector<Real> logits(vocab_.size());
  out_.forward(s.h, logits);
  nn::softmax_inplace(logits);
  return logits;
}

Real CharLmModel::sequence_loss_grad(std::span<const int> ids, Real scale, Real dropout_rate,
                                     Rng* rng) {
  const size_t H = hidden_dim();
  const size_t V = vocab_.size();
  // BOS + chars predict chars + EOS: T = ids.size() + 1 steps.
  const size_t T = ids.size() + 1;
  std::vector<int> inputs(T), targets(T);
  inputs[0] = CharVocab::kBos;
  for (size_t t = 0; t < ids.size(); ++t) {
    inputs[t + 1] = ids[t];
    targets[t] = ids[t];
  }
  targets[T - 1] = CharVocab::kEos;

  const bool use_dropout = dropout_rate > 0 && rng != nullptr;
  std::vector<nn::LstmCell::Cache> caches(T);
  std::vector<std::vector<Real>> x_masks(T), h_masks(T), xs(T);
  nn::Matrix h_rows(T, H);  // post-dropout, fed to the projection
  std::vector<Real> h(H, Real(0)), c(H, Real(0)), h_next(H), c_next(H);

  for (size_t t = 0; t < T; ++t) {
    auto e = embed_.lookup(size_t(inputs[t]));
    xs[t].assign(e.begin(), e.end());
    if (use_dropout) {
      x_masks[t] = nn::dropout_mask(embed_.dim(), dropout_rate, *rng);
      for (size_t j = 0; j < xs[t].size(); ++j) xs[t][j] *= x_masks[t][j];
    }
    cell_.forward(xs[t], h, c, h_next, c_next, &caches[t]);
    h = h_next;
    c = c_next;
    auto row = h_rows.row(t);
    if (use_dropout) {
      h_masks[t] = nn::dropout_mask(H, dropout_rate, *rng);
      for (size_t j = 0; j < H; ++j) row[j] = h[j] * h_masks[t][j];
    } else {
      std::copy(h.begin(), h.end(), row.begin());
    }
  }

  nn::Matrix logits(T, V);
  out_.forward_rows(h_rows, logits);

  Real loss = 0;
  nn::Matrix dlogits(T, V);
  for (size_t t = 0; t < T; ++t) {
    auto row = logits.row(t);
    nn::softmax_inplace(row);
    loss += nn::cross_entropy(row, size_t(targets[t])) * scale;
    nn::softmax_ce_backward(row, size_t(targets[t]), scale, dlogits.row(t));
  }

  nn::Matrix dh_rows(T, H);
  out_.backward_rows(h_rows, dlogits, dh_rows);

  // BPTT, newest step first.
  std::vector<Real> dh(H, Real(0)), dc(H, Real(0)), dh_prev(H), dc_prev(H),
      dx(embed_.dim());
  for (size_t t = T; t-- > 0;) {
    auto drow = dh_rows.row(t);
    for (size_t j = 0; j < H; ++j)
      dh[j] += use_dropout ? drow[j] * h_masks[t][j] : drow[j];
    std::fill(dh_prev.begin(), dh_prev.end(), Real(0));
    std::fill(dc_prev.begin(), dc_prev.end(), Real(0));
    std::fill(dx.begin(), dx.end(), Real(0));
    cell_.backward(caches[t], dh, dc, dx, dh_prev, dc_prev);
    if (use_dropout)
      for (size_t j = 0; j < dx.size(); ++j) dx[j] *= x_masks[t][j];
    embed_.acc_grad(size_t(inputs[t]), dx);
    dh = dh_prev;
    dc = dc_prev;
  }
  return loss;
}

Real CharLmModel::sequence_loss(std::span<const int> ids) const {
  State s = initial_state();
  s = advance(s, CharVocab::kBos);
  Real loss = 0;
  std::vector<Real> logits(vocab_.size());
  for (size_t t = 0; t <= ids.size(); ++t) {
    out_.forward(s.h, logits);
    nn::softmax_inplace(logits);
    int target = t < ids.size() ? ids[t] : CharVocab::kEos;
    loss += nn::cross_entropy(logits, size_t(target));
    if (t < ids.size()) s = advance(s, ids[t]);
  }
  return loss;
}

// ---- training ----

namespace {

std::vector<std::vector<int>> encode_corpus(const ingest::TextCorpus& corpus,
                                            const CharVocab& vocab) {
  std::vector<std::vector<int>> seqs;
  seqs.reserve(corpus.entries.size());
  for (const auto& e : corpus.entries) seqs.push_back(vocab.encode(e));
  return seqs;
}

nlohmann::json config_manifest(const CharLmConfig& c) {
  return nlohmann::json{{"hidden_dim", c.hidden_dim}, {"embed_dim", c.embed_dim},
                        {"epochs", c.epochs},         {"batch_size", c.batch_size},
                        {"lr", c.lr},                 {"dropout", c.dropout},
                        {"clip_norm", c.clip_norm},   {"seed", c.seed}};
}

}  // namespace

CharLmTrainer::CharLmTrainer(ingest::TextCorpus corpus, const CharLmConfig& config)
    : corpus_(std::move(corpus)), config_(config), rng_(config.seed) {
  if (corpus_.entries.empty()) throw DataError("train_char_nlm: empty corpus");
  if (config_.lr <= 0) throw ConfigError("train_char_nlm: learning rate must be positive");
  if (config_.batch_size < 1) throw ConfigError("train_char_nlm: batch_size must be >= 1");
  Rng init = rng_.split(0x1d);
  model_ = CharLmModel(CharVocab::build(corpus_), config_.hidden_dim, config_.embed_dim, init);
  adam_ = nn::AdamState({config_.lr});
  sequences_ = encode_corpus(corpus_, model_.vocab());
}

CharLmTrainer::CharLmTrainer(ingest::TextCorpus corpus, const CharLmConfig& config,
                             const nn::LoadedCheckpoint& ckpt)
    : corpus_(std::move(corpus)), config_(config), rng_(config.seed) {
  if (corpus_.entries.empty()) throw DataError("train_char_nlm: empty corpus");
  if (ckpt.kind != kCharNlmKind)
    throw DataError("checkpoint kind '" + ckpt.kind + "' is not " + kCharNlmKind);
  model_ = load_char_nlm(ckpt);
  adam_ = nn::AdamState({config_.lr});
  if (ckpt.extra.contains("optimizer")) nn::adam_from_json(ckpt.extra.at("optimizer"), adam_);
  if (ckpt.extra.contains("rng_state")) rng_.set_state(ckpt.extra.at("rng_state").get<std::string>());
  if (ckpt.extra.contains("epochs_done")) epochs_done_ = ckpt.extra.at("epochs_done").get<size_t>();
  if (ckpt.extra.contains("epoch_loss"))
    losses_ = ckpt.extra.at("epoch_loss").get<std::vector<Real>>();
  sequences_ = encode_corpus(corpus_, model_.vocab());
}

Real CharLmTrainer::run_epoch() {
  std::vector<size_t> order(sequences_.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng_.shuffle(order);

  auto refs = model_.params();
  for (size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
    size_t end = std::min(begin + config_.batch_size, order.size());
    size_t n = end - begin;
    size_t total_preds = 0;
    for (size_t i = begin; i < end; ++i) total_preds += sequences_[order[i]].size() + 1;
    Real scale = Real(1) / Real(total_preds);

    std::vector<uint64_t> seeds(n);
    for (auto& s : seeds) s = rng_.next_u64();

    nn::zero_grads(refs);
    Real dropout = config_.dropout;
    Real loss = nn::batch_gradients(
        model_, n, seeds, [&, begin](CharLmModel& m, size_t i, uint64_t seed) {
          Rng elem_rng(seed);
          return m.sequence_loss_grad(sequences_[order[begin + i]], scale, dropout, &elem_rng);
        });
    if (!std::isfinite(loss))
      throw DivergenceError("char_nlm training diverged (non-finite batch loss)");
    nn::clip_grads(refs, config_.clip_norm);
    adam_.step(refs);
  }

  Real loss = eval_loss();
  if (!std::isfinite(loss)) throw DivergenceError("char_nlm training diverged (non-finite loss)");
  losses_.push_back(loss);
  ++epochs_done_;
  return loss;
}

Real CharLmTrainer::eval_loss() const {
  Real total = 0;
  size_t preds = 0;
  for (const auto& seq : sequences_) {
    total += model_.sequence_loss(seq);
    preds += seq.size() + 1;
  }
  return total / Real(preds);
}

void CharLmTrainer::save(const std::string& path) const {
  nlohmann::json manifest = config_manifest(config_);
  manifest["vocab"] = model_.vocab().to_json();
  nlohmann::json extra;
  extra["optimizer"] = nn::adam_to_json(adam_);
  extra["rng_state"] = rng_.state();
  extra["epochs_done"] = epochs_done_;
  extra["epoch_loss"] = losses_;
  if (!losses_.empty()) extra["last_loss"] = losses_.back();
  auto refs = const_cast<CharLmModel&>(model_).params();
  nn::save_checkpoint(path, kCharNlmKind, manifest, refs, extra);
}

CharLmTrainResult train_char_nlm(const ingest::TextCorpus& corpus, const CharLmConfig& config) {
  CharLmTrainer trainer(corpus, config);
  for (size_t e = 0; e < config.epochs; ++e) trainer.run_epoch();
  TrainLog log;
  log.seed = config.seed;
  log.epoch_loss = trainer.losses();
  log.final_loss = log.epoch_loss.empty() ? trainer.eval_loss() : log.epoch_loss.back();
  return {std::move(trainer.model()), std::move(log)};
}

// ---- suggestion ----

namespace {

struct CharBeamDecoder {
  using State = CharLmModel::State;
  const CharLmModel* model;
  State start_state;

  State start() const { return start_state; }
  size_t vocab_size() const { return model->vocab().size(); }
  int eos_id() const { return CharVocab::kEos; }
  bool can_generate(int symbol) const {
    return symbol != CharVocab::kBos && symbol != CharVocab::kUnk;
  }
  void log_probs(const State& s, std::span<Real> out) const {
    auto lp = model->next_log_probs(s);
    std::copy(lp.begin(), lp.end(), out.begin());
  }
  State advance(const State& s, int symbol) const { return model->advance(s, symbol); }
};

}  // namespace

std::vector<SuggestionCandidate> suggest_nlm(const CharLmModel& model, const std::string& q0,
                                             const NlmSuggestOptions& options) {
  if (q0.empty()) throw DataError("suggest_nlm: empty initial query");
  std::string context = q0;
  if (options.append_space && context.back() != ' ') context += ' ';

  CharBeamDecoder dec{&model, model.context_state(context)};
  auto hyps = nn::beam_search(dec, options.beam_width, options.max_chars);

  std::vector<SuggestionCandidate> candidates;
  candidates.reserve(hyps.size());
  for (const auto& hyp : hyps) {
    Real log_score = hyp.log_prob;
    if (options.length_normalize)
      log_score /= Real(hyp.symbols.size() + (hyp.eos_terminated ? 1 : 0));
    auto cand = SuggestionCandidate::from_log(context + model.vocab().decode(hyp.symbols),
                                              log_score, Flavor::QC);
    cand.truncated = !hyp.eos_terminated;
    candidates.push_back(std::move(cand));
  }
  std::sort(candidates.begin(), candidates.end(), candidate_order);
  if (candidates.size() > options.k) candidates.resize(options.k);
  return candidates;
}

// ---- checkpoints ----

void save_char_nlm(const std::string& path, const CharLmModel& model,
                   const nlohmann::json& manifest_extra, const nlohmann::json& extra) {
  nlohmann::json manifest = manifest_extra;
  manifest["hidden_dim"] = model.hidden_dim();
  manifest["embed_dim"] = model.embed_dim();
  manifest["vocab"] = model.vocab().to_json();
  auto refs = const_cast<CharLmModel&>(model).params();
  nn::save_checkpoint(path, kCharNlmKind, manifest, refs, extra);
}

CharLmModel load_char_nlm(const nn::LoadedCheckpoint& ckpt) {
  if (ckpt.kind != kCharNlmKind)
    throw DataError("checkpoint kind '" + ckpt.kind + "' is not " + kCharNlmKind);
  CharVocab vocab = CharVocab::from_json(ckpt.manifest.at("vocab"));
  Rng dummy(0);
  CharLmModel model(std::move(vocab), ckpt.manifest.at("hidden_dim").get<size_t>(),
                    ckpt.manifest.at("embed_dim").get<size_t>(), dummy);
  nn::restore_params(ckpt, model.params());
  return model;
}

}  // namespace tqs::nlm
