#pragma once

// Versioned JSON checkpoints: model kind, config, vocabularies, and every
// named parameter tensor in registration order.

#include <fstream>
#include <string>

#include "json.hpp"

#include "acro/error.hpp"
#include "acro/nn/tensor.hpp"

namespace acro::nn {

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json parameters_to_json(const ParameterStore& store) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Parameter* p : store.all())
    arr.push_back({{"name", p->name}, {"shape", p->value.shape()}, {"data", p->value.data()}});
  return arr;
}

// Copies stored values into an already-built store; names and shapes must match.
inline void parameters_from_json(ParameterStore& store, const nlohmann::json& arr) {
  std::size_t seen = 0;
  try {
    for (const auto& item : arr) {
      const auto name = item.at("name").get<std::string>();
      Parameter* p = store.find(name);
      if (!p) throw DataError("checkpoint parameter '" + name + "' is not part of the model");
      auto shape = item.at("shape").get<std::vector<std::size_t>>();
      if (shape != p->value.shape())
        throw DataError("checkpoint parameter '" + name + "' has the wrong shape");
      auto data = item.at("data").get<std::vector<double>>();
      if (data.size() != p->value.size())
        throw DataError("checkpoint parameter '" + name + "' has the wrong size");
      p->value.data() = std::move(data);
      ++seen;
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint parameters: ") + e.what());
  }
  if (seen != store.size()) throw DataError("checkpoint is missing model parameters");
}

inline nlohmann::json make_checkpoint(const std::string& kind, nlohmann::json config,
                                      nlohmann::json vocab, const ParameterStore& store) {
  return {{"format", "acro-checkpoint"},
          {"version", kCheckpointVersion},
          {"kind", kind},
          {"config", std::move(config)},
          {"vocab", std::move(vocab)},
          {"params", parameters_to_json(store)}};
}

inline void check_checkpoint(const nlohmann::json& j, const std::string& kind) {
  if (!j.is_object() || j.value("format", "") != "acro-checkpoint")
    throw DataError("not an acro checkpoint");
  if (j.value("version", 0) != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(j.value("version", 0)));
  if (j.value("kind", "") != kind)
    throw DataError("checkpoint holds a '" + j.value("kind", "") + "' model, expected '" + kind + "'");
}

inline void save_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump() << '\n';
}

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
}

}  // namespace acro::nn
