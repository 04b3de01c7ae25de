#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "acro/error.hpp"

namespace acro {

// String <-> dense id. Id 0 is reserved for unknown entries.
class Vocabulary {
 public:
  static constexpr std::size_t kUnk = 0;

  Vocabulary() : items_{"<unk>"} { ids_.emplace("<unk>", 0); }

  std::size_t add(const std::string& s) {
    auto [it, inserted] = ids_.emplace(s, items_.size());
    if (inserted) items_.push_back(s);
    return it->second;
  }

  std::size_t id(const std::string& s) const {
    auto it = ids_.find(s);
    return it == ids_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& s) const { return ids_.count(s) != 0; }
  const std::string& item(std::size_t id) const { return items_.at(id); }
  std::size_t size() const { return items_.size(); }
  const std::vector<std::string>& items() const { return items_; }

  nlohmann::json to_json() const { return items_; }

  static Vocabulary from_json(const nlohmann::json& j) {
    Vocabulary v;
    auto items = j.get<std::vector<std::string>>();
    if (items.empty() || items[0] != "<unk>") throw DataError("vocabulary must start with <unk>");
    for (std::size_t i = 1; i < items.size(); ++i) v.add(items[i]);
    if (v.size() != items.size()) throw DataError("vocabulary has duplicate entries");
    return v;
  }

 private:
  std::vector<std::string> items_;
  std::map<std::string, std::size_t> ids_;
};

// Parses a config object over defaults, rejecting keys the type lacks.
template <class Config>
Config config_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
  const nlohmann::json known = Config{};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown " + what + " key '" + key + "'");
  try {
    return j.get<Config>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace acro
