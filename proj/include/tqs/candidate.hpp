#pragma once

#include <cmath>
#include <string>

#include "tqs/common.hpp"

namespace tqs {

// Query completion (QC) when the initial query is a word-boundary prefix of
// the suggestion; query refinement (QR) otherwise.
enum class Flavor { QC, QR };

inline const char* flavor_name(Flavor f) { return f == Flavor::QC ? "QC" : "QR"; }
Flavor parse_flavor(const std::string& s);

// QC iff words(q0) is a strict-or-equal word prefix of words(suggestion).
// Both arguments must already be normalized.
Flavor classify_flavor(const std::string& q0, const std::string& suggestion);

// The unit pooled and evaluated: a suggested query with its likelihood
// P(q|q0). `score` is the exact probability where one is available
// (PopSuffix); `log_score` is authoritative for the neural methods, whose
// likelihoods are accumulated in log space.
struct SuggestionCandidate {
  std::string query_id;
  std::string text;
  Real score = 0;
  Real log_score = 0;
  Flavor flavor = Flavor::QC;
  std::string config_id;
  bool truncated = false;  // hit the length cap without end-of-sequence

  static SuggestionCandidate from_prob(std::string text, Real p, Flavor flavor) {
    SuggestionCandidate c;
    c.text = std::move(text);
    c.score = p;
    c.log_score = std::log(p);
    c.flavor = flavor;
    return c;
  }

  static SuggestionCandidate from_log(std::string text, Real lp, Flavor flavor) {
    SuggestionCandidate c;
    c.text = std::move(text);
    c.log_score = lp;
    c.score = std::exp(lp);
    c.flavor = flavor;
    return c;
  }
};

// Ranking order: score descending, ties broken lexicographically by text.
inline bool candidate_order(const SuggestionCandidate& a, const SuggestionCandidate& b) {
  if (a.log_score != b.log_score) return a.log_score > b.log_score;
  return a.text < b.text;
}

}  // namespace tqs
