#include "tqs/nn/checkpoint.hpp"

#include <fstream>

namespace tqs::nn {

namespace {

nlohmann::json tensor_to_json(const Matrix& m) {
  nlohmann::json t;
  t["rows"] = m.rows();
  t["cols"] = m.cols();
  t["data"] = std::vector<Real>(m.data().begin(), m.data().end());
  return t;
}

Matrix tensor_from_json(const nlohmann::json& t) {
  return Matrix::from_data(t.at("rows").get<size_t>(), t.at("cols").get<size_t>(),
                           t.at("data").get<std::vector<Real>>());
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& kind,
                     const nlohmann::json& manifest, const std::vector<ParamRef>& refs,
                     const nlohmann::json& extra) {
  nlohmann::json j;
  j["kind"] = kind;
  j["format_version"] = kCheckpointVersion;
  j["manifest"] = manifest;
  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& r : refs) tensors[r.name] = tensor_to_json(*r.value);
  j["tensors"] = std::move(tensors);
  if (!extra.empty()) j["extra"] = extra;

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << j.dump() << '\n';
  if (!f) throw DataError("write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": invalid checkpoint JSON: " + e.what());
  }
  LoadedCheckpoint out;
  try {
    out.kind = j.at("kind").get<std::string>();
    out.format_version = j.at("format_version").get<int>();
    if (out.format_version != kCheckpointVersion)
      throw DataError(path + ": unsupported checkpoint version " +
                      std::to_string(out.format_version));
    out.manifest = j.at("manifest");
    for (const auto& [name, t] : j.at("tensors").items())
      out.tensors.emplace(name, tensor_from_json(t));
    if (j.contains("extra")) out.extra = j.at("extra");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed checkpoint: " + e.what());
  }
  return out;
}

void restore_params(const LoadedCheckpoint& ckpt, const std::vector<ParamRef>& refs) {
  for (const auto& r : refs) {
    auto it = ckpt.tensors.find(r.name);
    if (it == ckpt.tensors.end()) throw DataError("checkpoint missing tensor " + r.name);
    if (!it->second.same_shape(*r.value))
      throw DataError("checkpoint tensor " + r.name + " has shape " +
                      std::to_string(it->second.rows()) + "x" +
                      std::to_string(it->second.cols()) + ", expected " +
                      std::to_string(r.value->rows()) + "x" + std::to_string(r.value->cols()));
    *r.value = it->second;
  }
}

nlohmann::json adam_to_json(const AdamState& adam) {
  nlohmann::json j;
  j["t"] = adam.t();
  j["lr"] = adam.config().lr;
  j["beta1"] = adam.config().beta1;
  j["beta2"] = adam.config().beta2;
  j["eps"] = adam.config().eps;
  nlohmann::json m = nlohmann::json::array(), v = nlohmann::json::array();
  for (const auto& t : adam.first_moments()) m.push_back(tensor_to_json(t));
  for (const auto& t : adam.second_moments()) v.push_back(tensor_to_json(t));
  j["m"] = std::move(m);
  j["v"] = std::move(v);
  return j;
}

void adam_from_json(const nlohmann::json& j, AdamState& adam) {
  try {
    adam.config().lr = j.at("lr").get<Real>();
    adam.config().beta1 = j.at("beta1").get<Real>();
    adam.config().beta2 = j.at("beta2").get<Real>();
    adam.config().eps = j.at("eps").get<Real>();
    adam.set_t(j.at("t").get<uint64_t>());
    adam.first_moments().clear();
    adam.second_moments().clear();
    for (const auto& t : j.at("m")) adam.first_moments().push_back(tensor_from_json(t));
    for (const auto& t : j.at("v")) adam.second_moments().push_back(tensor_from_json(t));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed optimizer state: ") + e.what());
  }
}

}  // namespace tqs::nn
