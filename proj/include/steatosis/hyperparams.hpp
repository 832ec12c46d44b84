#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace steatosis {

// monostate encodes Python's None (e.g. RandomForest max_depth).
using HyperValue = std::variant<std::monostate, bool, std::int64_t, double, std::string, std::vector<int>>;
using Hyperparams = std::map<std::string, HyperValue>;

nlohmann::json to_json(const HyperValue& v);
HyperValue hyper_value_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Hyperparams& p);
Hyperparams hyperparams_from_json(const nlohmann::json& j);

// Renders a value the way the search tables write it: None, 0.1, 'rbf', (100, 50).
std::string table_notation(const HyperValue& v);

// Typed lookups with defaults; throw ConfigError on a type mismatch.
std::int64_t param_int(const Hyperparams& p, const std::string& key, std::int64_t fallback);
double param_double(const Hyperparams& p, const std::string& key, double fallback);
std::string param_string(const Hyperparams& p, const std::string& key, const std::string& fallback);
bool param_bool(const Hyperparams& p, const std::string& key, bool fallback);
std::vector<int> param_sizes(const Hyperparams& p, const std::string& key, const std::vector<int>& fallback);
// nullopt when the key holds None or is absent with a None default.
std::optional<std::int64_t> param_optional_int(const Hyperparams& p, const std::string& key,
                                               std::optional<std::int64_t> fallback);

}  // namespace steatosis
