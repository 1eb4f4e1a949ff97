#include "tqs/candidate.hpp"

#include "tqs/ingest.hpp"

namespace tqs {

Flavor parse_flavor(const std::string& s) {
  if (s == "QC") return Flavor::QC;
  if (s == "QR") return Flavor::QR;
  throw DataError("unknown flavor '" + s + "'");
}

Flavor classify_flavor(const std::string& q0, const std::string& suggestion) {
  auto qw = ingest::split_words(q0);
  auto sw = ingest::split_words(suggestion);
  if (qw.size() > sw.size()) return Flavor::QR;
  for (size_t i = 0; i < qw.size(); ++i)
    if (qw[i] != sw[i]) return Flavor::QR;
  return Flavor::QC;
}

}  // namespace tqs
