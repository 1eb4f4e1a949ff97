#include "tqs/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tqs/nn/batch.hpp"
#include "tqs/nn/beam.hpp"
#include "tqs/nn/kernels.hpp"
#include "tqs/nn/ops.hpp"

namespace tqs::seq2seq {

// ---- WordVocab ----

WordVocab WordVocab::build(const ingest::PairCorpus& pairs, uint64_t min_count) {
  std::map<std::string, uint64_t> counts;
  for (const auto& [src, tgt] : pairs.pairs) {
    for (auto& w : ingest::split_words(src)) ++counts[w];
    for (auto& w : ingest::split_words(tgt)) ++counts[w];
  }
  WordVocab v;
  for (const auto& [word, count] : counts)
    if (count >= min_count) v.words_.push_back(word);
  for (size_t i = 0; i < v.words_.size(); ++i) v.to_id_[v.words_[i]] = int(i) + kReserved;
  return v;
}

int WordVocab::id_of(const std::string& word) const {
  auto it = to_id_.find(word);
  return it == to_id_.end() ? kUnk : it->second;
}

const std::string& WordVocab::word_of(int id) const {
  if (id < kReserved || size_t(id) >= size())
    throw ShapeError("WordVocab::word_of: id " + std::to_string(id) + " is reserved or out of range");
  return words_[size_t(id) - kReserved];
}

std::vector<int> WordVocab::encode(std::string_view normalized) const {
  std::vector<int> ids;
  for (auto& w : ingest::split_words(normalized)) ids.push_back(id_of(w));
  return ids;
}

std::string WordVocab::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id < kReserved) continue;
    if (!out.empty()) out += ' ';
    out += word_of(id);
  }
  return out;
}

nlohmann::json WordVocab::to_json() const { return nlohmann::json{{"words", words_}}; }

WordVocab WordVocab::from_json(const nlohmann::json& j) {
  WordVocab v;
  v.words_ = j.at("words").get<std::vector<std::string>>();
  for (size_t i = 0; i < v.words_.size(); ++i) v.to_id_[v.words_[i]] = int(i) + kReserved;
  return v;
}

// ---- Seq2SeqModel ----

Seq2SeqModel::Seq2SeqModel(WordVocab vocab, size_t encoder_dim, size_t decoder_dim,
                           size_t embed_dim, Rng& rng)
    : vocab_(std::move(vocab)),
      embed_(vocab_.size(), embed_dim, rng),
      enc_fwd_(embed_dim, encoder_dim, rng),
      enc_bwd_(embed_dim, encoder_dim, rng),
      init_proj_(decoder_dim, 2 * encoder_dim, rng),
      dec_(embed_dim + 2 * encoder_dim, decoder_dim, rng),
      out_(vocab_.size(), decoder_dim + embed_dim + 2 * encoder_dim, rng) {}

std::vector<nn::ParamRef> Seq2SeqModel::params() {
  std::vector<nn::ParamRef> refs = embed_.params("embed");
  for (auto& r : enc_fwd_.params("enc_fwd")) refs.push_back(r);
  for (auto& r : enc_bwd_.params("enc_bwd")) refs.push_back(r);
  for (auto& r : init_proj_.params("init_proj")) refs.push_back(r);
  for (auto& r : dec_.params("dec")) refs.push_back(r);
  for (auto& r : out_.params("out")) refs.push_back(r);
  return refs;
}

std::vector<Real> Seq2SeqModel::encode(std::span<const int> src_ids) const {
  if (src_ids.empty()) throw DataError("seq2seq encode: empty source");
  const size_t E = encoder_dim();
  std::vector<Real> hf(E, Real(0)), hb(E, Real(0)), next(E);
  for (size_t i = 0; i < src_ids.size(); ++i) {
    enc_fwd_.forward(embed_.lookup(size_t(src_ids[i])), hf, next);
    hf = next;
  }
  for (size_t i = src_ids.size(); i-- > 0;) {
    enc_bwd_.forward(embed_.lookup(size_t(src_ids[i])), hb, next);
    hb = next;
  }
  std::vector<Real> c(2 * E);
  std::copy(hf.begin(), hf.end(), c.begin());
  std::copy(hb.begin(), hb.end(), c.begin() + E);
  return c;
}

std::vector<Real> Seq2SeqModel::initial_decoder_state(std::span<const Real> context) const {
  std::vector<Real> h(decoder_dim());
  init_proj_.forward(context, h);
  for (Real& x : h) x = std::tanh(x);
  return h;
}

std::vector<Real> Seq2SeqModel::decoder_state_step(std::span<const Real> h_prev, int prev_word,
                                                   std::span<const Real> context) const {
  auto e = embed_.lookup(size_t(prev_word));
  std::vector<Real> u(e.size() + context.size());
  std::copy(e.begin(), e.end(), u.begin());
  std::copy(context.begin(), context.end(), u.begin() + e.size());
  std::vector<Real> h(decoder_dim());
  dec_.forward(u, h_prev, h);
  return h;
}

std::pair<std::vector<Real>, std::vector<Real>> Seq2SeqModel::decode_step(
    std::span<const Real> h_prev, int prev_word, std::span<const Real> context) const {
  std::vector<Real> h = decoder_state_step(h_prev, prev_word, context);
  auto e = embed_.lookup(size_t(prev_word));
  std::vector<Real> f(h.size() + e.size() + context.size());
  std::copy(h.begin(), h.end(), f.begin());
  std::copy(e.begin(), e.end(), f.begin() + h.size());
  std::copy(context.begin(), context.end(), f.begin() + h.size() + e.size());
  std::vector<Real> probs(vocab_.size());
  out_.forward(f, probs);
  nn::softmax_inplace(probs);
  return {std::move(probs), std::move(h)};
}

std::vector<Real> Seq2SeqModel::decode_log_probs(std::span<const Real> h_prev, int prev_word,
                                                 std::span<const Real> context,
                                                 std::vector<Real>* h_out) const {
  std::vector<Real> h = decoder_state_step(h_prev, prev_word, context);
  auto e = embed_.lookup(size_t(prev_word));
  std::vector<Real> f(h.size() + e.size() + context.size());
  std::copy(h.begin(), h.end(), f.begin());
  std::copy(e.begin(), e.end(), f.begin() + h.size());
  std::copy(context.begin(), context.end(), f.begin() + h.size() + e.size());
  std::vector<Real> logits(vocab_.size());
  out_.forward(f, logits);
  Real mx = *std::max_element(logits.begin(), logits.end());
  Real sum = 0;
  for (Real l : logits) sum += std::exp(l - mx);
  Real lse = mx + std::log(sum);
  for (Real& l : logits) l -= lse;
  if (h_out) *h_out = std::move(h);
  return logits;
}

Real Seq2SeqModel::pair_loss_grad(std::span<const int> src, std::span<const int> tgt, Real scale,
                                  Real dropout_rate, Rng* rng) {
  if (src.empty() || tgt.empty()) throw DataError("seq2seq: empty pair");
  const size_t n = src.size();
  const size_t E = encoder_dim();
  const size_t D = decoder_dim();
  const size_t M = embed_dim();
  const size_t C = 2 * E;
  const size_t V = vocab_.size();
  const bool use_dropout = dropout_rate > 0 && rng != nullptr;

  // Encoder. Both directions consume the same (masked) source embedding.
  std::vector<std::vector<Real>> xs(n), x_masks(n);
  for (size_t i = 0; i < n; ++i) {
    auto e = embed_.lookup(size_t(src[i]));
    xs[i].assign(e.begin(), e.end());
    if (use_dropout) {
      x_masks[i] = nn::dropout_mask(M, dropout_rate, *rng);
      for (size_t j = 0; j < M; ++j) xs[i][j] *= x_masks[i][j];
    }
  }
  std::vector<nn::GruCell::Cache> fwd_caches(n), bwd_caches(n);
  std::vector<Real> hf(E, Real(0)), hb(E, Real(0)), hnext(E);
  for (size_t i = 0; i < n; ++i) {
    enc_fwd_.forward(xs[i], hf, hnext, &fwd_caches[i]);
    hf = hnext;
  }
  for (size_t i = 0; i < n; ++i) {
    enc_bwd_.forward(xs[n - 1 - i], hb, hnext, &bwd_caches[i]);
    hb = hnext;
  }
  std::vector<Real> c(C);
  std::copy(hf.begin(), hf.end(), c.begin());
  std::copy(hb.begin(), hb.end(), c.begin() + E);

  std::vector<Real> h0(D);
  init_proj_.forward(c, h0);
  for (Real& x : h0) x = std::tanh(x);

  // Decoder: BOS + tgt predicts tgt + EOS.
  const size_t T = tgt.size() + 1;
  std::vector<int> prev(T), targets(T);
  prev[0] = WordVocab::kBos;
  for (size_t t = 0; t + 1 < T; ++t) {
    prev[t + 1] = tgt[t];
    targets[t] = tgt[t];
  }
  targets[T - 1] = WordVocab::kEos;

  const size_t F = D + M + C;
  std::vector<nn::GruCell::Cache> dec_caches(T);
  std::vector<std::vector<Real>> es(T), e_masks(T), f_masks(T), us(T);
  nn::Matrix feats(T, F);  // post-dropout classifier inputs
  std::vector<Real> h = h0;
  for (size_t t = 0; t < T; ++t) {
    auto e = embed_.lookup(size_t(prev[t]));
    es[t].assign(e.begin(), e.end());
    us[t].resize(M + C);
    if (use_dropout) {
      e_masks[t] = nn::dropout_mask(M, dropout_rate, *rng);
      for (size_t j = 0; j < M; ++j) us[t][j] = es[t][j] * e_masks[t][j];
    } else {
      std::copy(es[t].begin(), es[t].end(), us[t].begin());
    }
    std::copy(c.begin(), c.end(), us[t].begin() + M);
    std::vector<Real> h_new(D);
    dec_.forward(us[t], h, h_new, &dec_caches[t]);
    h = std::move(h_new);

    auto row = feats.row(t);
    std::copy(h.begin(), h.end(), row.begin());
    std::copy(es[t].begin(), es[t].end(), row.begin() + D);
    std::copy(c.begin(), c.end(), row.begin() + D + M);
    if (use_dropout) {
      f_masks[t] = nn::dropout_mask(F, dropout_rate, *rng);
      for (size_t j = 0; j < F; ++j) row[j] *= f_masks[t][j];
    }
  }

  nn::Matrix logits(T, V);
  out_.forward_rows(feats, logits);
  Real loss = 0;
  nn::Matrix dlogits(T, V);
  for (size_t t = 0; t < T; ++t) {
    auto row = logits.row(t);
    nn::softmax_inplace(row);
    loss += nn::cross_entropy(row, size_t(targets[t])) * scale;
    nn::softmax_ce_backward(row, size_t(targets[t]), scale, dlogits.row(t));
  }

  nn::Matrix dfeats(T, F);
  out_.backward_rows(feats, dlogits, dfeats);

  // Split classifier-input gradients, then run the decoder BPTT.
  std::vector<Real> dc(C, Real(0));
  std::vector<std::vector<Real>> dh_steps(T + 1, std::vector<Real>(D, Real(0)));
  std::vector<std::vector<Real>> de_out(T, std::vector<Real>(M, Real(0)));
  for (size_t t = 0; t < T; ++t) {
    auto row = dfeats.row(t);
    for (size_t j = 0; j < F; ++j) {
      Real g = use_dropout ? row[j] * f_masks[t][j] : row[j];
      if (j < D)
        dh_steps[t + 1][j] += g;
      else if (j < D + M)
        de_out[t][j - D] += g;
      else
        dc[j - D - M] += g;
    }
  }

  std::vector<Real> du(M + C), dh_prev(D);
  for (size_t t = T; t-- > 0;) {
    std::fill(du.begin(), du.end(), Real(0));
    std::fill(dh_prev.begin(), dh_prev.end(), Real(0));
    dec_.backward(dec_caches[t], dh_steps[t + 1], du, dh_prev);
    for (size_t j = 0; j < D; ++j) dh_steps[t][j] += dh_prev[j];
    // Embedding gradient: masked path into the cell, raw path into the
    // classifier features.
    for (size_t j = 0; j < M; ++j)
      de_out[t][j] += use_dropout ? du[j] * e_masks[t][j] : du[j];
    embed_.acc_grad(size_t(prev[t]), de_out[t]);
    for (size_t j = 0; j < C; ++j) dc[j] += du[M + j];
  }

  // Through the init projection into the context.
  std::vector<Real> da0(D);
  for (size_t j = 0; j < D; ++j) da0[j] = dh_steps[0][j] * (Real(1) - h0[j] * h0[j]);
  init_proj_.backward(c, da0, dc);

  // Encoder BPTT, both directions; input gradients accumulate per position.
  std::vector<std::vector<Real>> dxs(n, std::vector<Real>(M, Real(0)));
  std::vector<Real> dh_run(dc.begin(), dc.begin() + E);
  std::vector<Real> dh_tmp(E);
  for (size_t i = n; i-- > 0;) {
    std::fill(dh_tmp.begin(), dh_tmp.end(), Real(0));
    enc_fwd_.backward(fwd_caches[i], dh_run, dxs[i], dh_tmp);
    dh_run = dh_tmp;
  }
  std::vector<Real> dh_run_b(dc.begin() + E, dc.end());
  for (size_t i = n; i-- > 0;) {
    std::fill(dh_tmp.begin(), dh_tmp.end(), Real(0));
    enc_bwd_.backward(bwd_caches[i], dh_run_b, dxs[n - 1 - i], dh_tmp);
    dh_run_b = dh_tmp;
  }
  for (size_t i = 0; i < n; ++i) {
    if (use_dropout)
      for (size_t j = 0; j < M; ++j) dxs[i][j] *= x_masks[i][j];
    embed_.acc_grad(size_t(src[i]), dxs[i]);
  }
  return loss;
}

Real Seq2SeqModel::pair_loss(std::span<const int> src, std::span<const int> tgt) const {
  std::vector<Real> c = encode(src);
  std::vector<Real> h = initial_decoder_state(c);
  Real loss = 0;
  int prev = WordVocab::kBos;
  for (size_t t = 0; t <= tgt.size(); ++t) {
    auto [probs, h_new] = decode_step(h, prev, c);
    int target = t < tgt.size() ? tgt[t] : WordVocab::kEos;
    loss += nn::cross_entropy(probs, size_t(target));
    h = std::move(h_new);
    if (t < tgt.size()) prev = tgt[t];
  }
  return loss;
}

// ---- training ----

namespace {

nlohmann::json config_manifest(const Seq2SeqConfig& c) {
  return nlohmann::json{{"encoder_dim", c.encoder_dim},
                        {"decoder_dim", c.decoder_dim},
                        {"embed_dim", c.embed_dim},
                        {"epochs", c.epochs},
                        {"batch_size", c.batch_size},
                        {"lr", c.lr},
                        {"dropout", c.dropout},
                        {"clip_norm", c.clip_norm},
                        {"seed", c.seed},
                        {"vocab_min_count", c.vocab_min_count}};
}

}  // namespace

Seq2SeqTrainer::Seq2SeqTrainer(ingest::PairCorpus pairs, const Seq2SeqConfig& config)
    : pairs_(std::move(pairs)), config_(config), rng_(config.seed) {
  if (pairs_.pairs.empty()) throw DataError("train_seq2seq: empty pair corpus");
  if (config_.lr <= 0) throw ConfigError("train_seq2seq: learning rate must be positive");
  if (config_.batch_size < 1) throw ConfigError("train_seq2seq: batch_size must be >= 1");
  Rng init = rng_.split(0x2d);
  model_ = Seq2SeqModel(WordVocab::build(pairs_, config_.vocab_min_count), config_.encoder_dim,
                        config_.decoder_dim, config_.embed_dim, init);
  adam_ = nn::AdamState({config_.lr});
  encode_pairs();
}

Seq2SeqTrainer::Seq2SeqTrainer(ingest::PairCorpus pairs, const Seq2SeqConfig& config,
                               const nn::LoadedCheckpoint& ckpt)
    : pairs_(std::move(pairs)), config_(config), rng_(config.seed) {
  if (pairs_.pairs.empty()) throw DataError("train_seq2seq: empty pair corpus");
  model_ = load_seq2seq(ckpt);
  adam_ = nn::AdamState({config_.lr});
  if (ckpt.extra.contains("optimizer")) nn::adam_from_json(ckpt.extra.at("optimizer"), adam_);
  if (ckpt.extra.contains("rng_state")) rng_.set_state(ckpt.extra.at("rng_state").get<std::string>());
  if (ckpt.extra.contains("epochs_done")) epochs_done_ = ckpt.extra.at("epochs_done").get<size_t>();
  if (ckpt.extra.contains("epoch_loss"))
    losses_ = ckpt.extra.at("epoch_loss").get<std::vector<Real>>();
  encode_pairs();
}

void Seq2SeqTrainer::encode_pairs() {
  encoded_.clear();
  encoded_.reserve(pairs_.pairs.size());
  for (const auto& [src, tgt] : pairs_.pairs) {
    auto s = model_.vocab().encode(src);
    auto t = model_.vocab().encode(tgt);
    if (s.empty() || t.empty()) continue;
    encoded_.emplace_back(std::move(s), std::move(t));
  }
  if (encoded_.empty()) throw DataError("train_seq2seq: no usable pairs after encoding");
}

Real Seq2SeqTrainer::run_epoch() {
  std::vector<size_t> order(encoded_.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng_.shuffle(order);

  auto refs = model_.params();
  for (size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
    size_t end = std::min(begin + config_.batch_size, order.size());
    size_t n = end - begin;
    size_t total_preds = 0;
    for (size_t i = begin; i < end; ++i) total_preds += encoded_[order[i]].second.size() + 1;
    Real scale = Real(1) / Real(total_preds);

    std::vector<uint64_t> seeds(n);
    for (auto& s : seeds) s = rng_.next_u64();

    nn::zero_grads(refs);
    Real dropout = config_.dropout;
    Real loss = nn::batch_gradients(
        model_, n, seeds, [&, begin](Seq2SeqModel& m, size_t i, uint64_t seed) {
          Rng elem_rng(seed);
          const auto& [src, tgt] = encoded_[order[begin + i]];
          return m.pair_loss_grad(src, tgt, scale, dropout, &elem_rng);
        });
    if (!std::isfinite(loss))
      throw DivergenceError("seq2seq training diverged (non-finite batch loss)");
    nn::clip_grads(refs, config_.clip_norm);
    adam_.step(refs);
  }

  Real loss = eval_loss();
  if (!std::isfinite(loss)) throw DivergenceError("seq2seq training diverged (non-finite loss)");
  losses_.push_back(loss);
  ++epochs_done_;
  return loss;
}

Real Seq2SeqTrainer::eval_loss() const {
  Real total = 0;
  size_t preds = 0;
  for (const auto& [src, tgt] : encoded_) {
    total += model_.pair_loss(src, tgt);
    preds += tgt.size() + 1;
  }
  return total / Real(preds);
}

void Seq2SeqTrainer::save(const std::string& path) const {
  nlohmann::json manifest = config_manifest(config_);
  manifest["vocab"] = model_.vocab().to_json();
  nlohmann::json extra;
  extra["optimizer"] = nn::adam_to_json(adam_);
  extra["rng_state"] = rng_.state();
  extra["epochs_done"] = epochs_done_;
  extra["epoch_loss"] = losses_;
  if (!losses_.empty()) extra["last_loss"] = losses_.back();
  auto refs = const_cast<Seq2SeqModel&>(model_).params();
  nn::save_checkpoint(path, kSeq2SeqKind, manifest, refs, extra);
}

Seq2SeqTrainResult train_seq2seq(const ingest::PairCorpus& pairs, const Seq2SeqConfig& config) {
  Seq2SeqTrainer trainer(pairs, config);
  for (size_t e = 0; e < config.epochs; ++e) trainer.run_epoch();
  TrainLog log;
  log.seed = config.seed;
  log.epoch_loss = trainer.losses();
  log.final_loss = log.epoch_loss.empty() ? trainer.eval_loss() : log.epoch_loss.back();
  return {std::move(trainer.model()), std::move(log)};
}

// ---- suggestion ----

namespace {

struct WordBeamDecoder {
  struct State {
    std::vector<Real> h;
    int prev;
  };
  const Seq2SeqModel* model;
  const std::vector<Real>* context;
  State start_state;

  State start() const { return start_state; }
  size_t vocab_size() const { return model->vocab().size(); }
  int eos_id() const { return WordVocab::kEos; }
  bool can_generate(int symbol) const {
    return symbol != WordVocab::kBos && symbol != WordVocab::kUnk;
  }
  void log_probs(const State& s, std::span<Real> out) const {
    auto lp = model->decode_log_probs(s.h, s.prev, *context);
    std::copy(lp.begin(), lp.end(), out.begin());
  }
  State advance(const State& s, int symbol) const {
    return {model->decoder_state_step(s.h, s.prev, *context), symbol};
  }
};

}  // namespace

Seq2SeqSuggestResult suggest_seq2seq(const Seq2SeqModel& model, const std::string& q0,
                                     const Seq2SeqSuggestOptions& options) {
  if (q0.empty()) throw DataError("suggest_seq2seq: empty initial query");
  std::vector<int> src = model.vocab().encode(q0);
  if (src.empty()) throw DataError("suggest_seq2seq: q0 has no words");

  Seq2SeqSuggestResult result;
  result.unreliable =
      std::all_of(src.begin(), src.end(), [](int id) { return id == WordVocab::kUnk; });

  std::vector<Real> context = model.encode(src);
  WordBeamDecoder dec{&model, &context,
                      {model.initial_decoder_state(context), WordVocab::kBos}};
  auto hyps = nn::beam_search(dec, options.beam_width, options.max_words);

  result.candidates.reserve(hyps.size());
  for (const auto& hyp : hyps) {
    std::string text = model.vocab().decode(hyp.symbols);
    if (text.empty()) continue;
    Real log_score = hyp.log_prob;
    if (options.length_normalize)
      log_score /= Real(hyp.symbols.size() + (hyp.eos_terminated ? 1 : 0));
    auto cand =
        SuggestionCandidate::from_log(std::move(text), log_score, Flavor::QC);
    cand.flavor = classify_flavor(q0, cand.text);
    cand.truncated = !hyp.eos_terminated;
    result.candidates.push_back(std::move(cand));
  }
  std::sort(result.candidates.begin(), result.candidates.end(), candidate_order);
  if (result.candidates.size() > options.k) result.candidates.resize(options.k);
  return result;
}

// ---- checkpoints ----

void save_seq2seq(const std::string& path, const Seq2SeqModel& model,
                  const nlohmann::json& manifest_extra, const nlohmann::json& extra) {
  nlohmann::json manifest = manifest_extra;
  manifest["encoder_dim"] = model.encoder_dim();
  manifest["decoder_dim"] = model.decoder_dim();
  manifest["embed_dim"] = model.embed_dim();
  manifest["vocab"] = model.vocab().to_json();
  auto refs = const_cast<Seq2SeqModel&>(model).params();
  nn::save_checkpoint(path, kSeq2SeqKind, manifest, refs, extra);
}

Seq2SeqModel load_seq2seq(const nn::LoadedCheckpoint& ckpt) {
  if (ckpt.kind != kSeq2SeqKind)
    throw DataError("checkpoint kind '" + ckpt.kind + "' is not " + kSeq2SeqKind);
  WordVocab vocab = WordVocab::from_json(ckpt.manifest.at("vocab"));
  Rng dummy(0);
  Seq2SeqModel model(std::move(vocab), ckpt.manifest.at("encoder_dim").get<size_t>(),
                     ckpt.manifest.at("decoder_dim").get<size_t>(),
                     ckpt.manifest.at("embed_dim").get<size_t>(), dummy);
  nn::restore_params(ckpt, model.params());
  return model;
}

}  // namespace tqs::seq2seq
