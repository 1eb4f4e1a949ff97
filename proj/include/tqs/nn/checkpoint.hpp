#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tqs/nn/adam.hpp"
#include "tqs/nn/params.hpp"

namespace tqs::nn {

// Checkpoints are a single JSON document: a manifest (model kind, dimensions,
// vocabulary, hyperparameters, seed, format version) plus named parameter
// tensors with shapes. Values round-trip exactly (shortest-representation
// doubles), and the encoding is byte-order independent.
inline constexpr int kCheckpointVersion = 1;

struct LoadedCheckpoint {
  std::string kind;
  int format_version = 0;
  nlohmann::json manifest;
  std::map<std::string, Matrix> tensors;
  nlohmann::json extra;  // optimizer state, rng state, training progress
};

void save_checkpoint(const std::string& path, const std::string& kind,
                     const nlohmann::json& manifest, const std::vector<ParamRef>& refs,
                     const nlohmann::json& extra = nlohmann::json::object());

LoadedCheckpoint load_checkpoint(const std::string& path);

// Copies tensors into the refs, matching by name; throws DataError on a
// missing tensor or shape mismatch.
void restore_params(const LoadedCheckpoint& ckpt, const std::vector<ParamRef>& refs);

nlohmann::json adam_to_json(const AdamState& adam);
void adam_from_json(const nlohmann::json& j, AdamState& adam);

}  // namespace tqs::nn
