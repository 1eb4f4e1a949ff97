#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "tqs/common.hpp"

namespace tqs::nn {

// One finished hypothesis: the generated symbols (end-of-sequence excluded)
// and the accumulated log probability. When the length cap was hit before
// end-of-sequence the score is a partial product and the hypothesis is
// flagged via eos_terminated = false.
struct BeamHyp {
  std::vector<int> symbols;
  Real log_prob = 0;
  bool eos_terminated = true;
};

// Breadth-limited best-first decoding. Decoder must provide:
//   State start() const;
//   size_t vocab_size() const;
//   int eos_id() const;
//   bool can_generate(int symbol) const;   // filters reserved symbols
//   void log_probs(const State&, std::span<Real>) const;
//   State advance(const State&, int symbol) const;
//
// Every live hypothesis contributes its end-of-sequence completion to the
// finished pool (uncapped); live extensions are pruned to `width` per step,
// ties broken by symbol sequence. Empty generations are never emitted. With
// width >= the number of max-length sequences nothing is ever pruned, so the
// result equals exhaustive enumeration.
template <typename Decoder>
std::vector<BeamHyp> beam_search(const Decoder& dec, size_t width, size_t max_len) {
  if (width < 1) throw ConfigError("beam width must be >= 1");
  if (max_len < 1) throw ConfigError("beam max length must be >= 1");

  struct Live {
    typename Decoder::State state;
    std::vector<int> symbols;
    Real log_prob;
  };
  std::vector<Live> live;
  live.push_back({dec.start(), {}, Real(0)});
  std::vector<BeamHyp> finished;
  std::vector<Real> lp(dec.vocab_size());

  for (size_t step = 0; step < max_len && !live.empty(); ++step) {
    struct Ext {
      size_t parent;
      int symbol;
      Real log_prob;
    };
    std::vector<Ext> exts;
    exts.reserve(live.size() * dec.vocab_size());
    for (size_t p = 0; p < live.size(); ++p) {
      dec.log_probs(live[p].state, lp);
      for (int s = 0; s < int(dec.vocab_size()); ++s) {
        Real nlp = live[p].log_prob + lp[size_t(s)];
        if (s == dec.eos_id()) {
          if (!live[p].symbols.empty()) finished.push_back({live[p].symbols, nlp, true});
        } else if (dec.can_generate(s)) {
          exts.push_back({p, s, nlp});
        }
      }
    }

    // All extensions this step share a length, so ties compare the parent
    // prefixes position by position, then the new symbol.
    auto ext_less = [&](const Ext& a, const Ext& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      const auto& pa = live[a.parent].symbols;
      const auto& pb = live[b.parent].symbols;
      for (size_t i = 0; i < pa.size(); ++i)
        if (pa[i] != pb[i]) return pa[i] < pb[i];
      return a.symbol < b.symbol;
    };
    size_t keep = std::min(width, exts.size());
    std::partial_sort(exts.begin(), exts.begin() + keep, exts.end(), ext_less);
    exts.resize(keep);

    std::vector<Live> next;
    next.reserve(keep);
    for (const auto& e : exts) {
      std::vector<int> symbols = live[e.parent].symbols;
      symbols.push_back(e.symbol);
      next.push_back({dec.advance(live[e.parent].state, e.symbol), std::move(symbols), e.log_prob});
    }
    live = std::move(next);

    if (step + 1 == max_len) {
      // Length cap reached: keep these, flagged, with their partial product.
      for (auto& l : live) finished.push_back({std::move(l.symbols), l.log_prob, false});
      live.clear();
    }
  }
  return finished;
}

}  // namespace tqs::nn
