#include "steatosis/hyperparams.hpp"

#include <cmath>
#include <sstream>

#include "steatosis/errors.hpp"

namespace steatosis {

nlohmann::json to_json(const HyperValue& v) {
    return std::visit(
        [](const auto& x) -> nlohmann::json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
            else return x;
        },
        v);
}

HyperValue hyper_value_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::monostate{};
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    if (j.is_array()) {
        std::vector<int> sizes;
        for (const auto& e : j) {
            if (!e.is_number_integer()) throw ConfigError("hyperparameter arrays must hold integers");
            sizes.push_back(e.get<int>());
        }
        return sizes;
    }
    throw ConfigError("unsupported hyperparameter value: " + j.dump());
}

nlohmann::json to_json(const Hyperparams& p) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : p) j[k] = to_json(v);
    return j;
}

Hyperparams hyperparams_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("hyperparameters must be a JSON object");
    Hyperparams p;
    for (auto it = j.begin(); it != j.end(); ++it) p[it.key()] = hyper_value_from_json(it.value());
    return p;
}

std::string table_notation(const HyperValue& v) {
    std::ostringstream os;
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                os << "None";
            } else if constexpr (std::is_same_v<T, bool>) {
                os << (x ? "True" : "False");
            } else if constexpr (std::is_same_v<T, std::string>) {
                os << '\'' << x << '\'';
            } else if constexpr (std::is_same_v<T, std::vector<int>>) {
                os << '(';
                for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
                if (x.size() == 1) os << ',';
                os << ')';
            } else if constexpr (std::is_same_v<T, double>) {
                os << nlohmann::json(x).dump();
            } else {
                os << x;
            }
        },
        v);
    return os.str();
}

namespace {

const HyperValue* find(const Hyperparams& p, const std::string& key) {
    auto it = p.find(key);
    return it == p.end() ? nullptr : &it->second;
}

[[noreturn]] void type_error(const std::string& key, const char* expected) {
    throw ConfigError("hyperparameter '" + key + "' must be " + expected);
}

}  // namespace

std::int64_t param_int(const Hyperparams& p, const std::string& key, std::int64_t fallback) {
    const auto* v = find(p, key);
    if (!v) return fallback;
    if (auto i = std::get_if<std::int64_t>(v)) return *i;
    if (auto d = std::get_if<double>(v); d && std::floor(*d) == *d) return static_cast<std::int64_t>(*d);
    type_error(key, "an integer");
}

double param_double(const Hyperparams& p, const std::string& key, double fallback) {
    const auto* v = find(p, key);
    if (!v) return fallback;
    if (auto d = std::get_if<double>(v)) return *d;
    if (auto i = std::get_if<std::int64_t>(v)) return static_cast<double>(*i);
    type_error(key, "a number");
}

std::string param_string(const Hyperparams& p, const std::string& key, const std::string& fallback) {
    const auto* v = find(p, key);
    if (!v) return fallback;
    if (auto s = std::get_if<std::string>(v)) return *s;
    type_error(key, "a string");
}

bool param_bool(const Hyperparams& p, const std::string& key, bool fallback) {
    const auto* v = find(p, key);
    if (!v) return fallback;
    if (auto b = std::get_if<bool>(v)) return *b;
    type_error(key, "a boolean");
}

std::vector<int> param_sizes(const Hyperparams& p, const std::string& key, const std::vector<int>& fallback) {
    const auto* v = find(p, key);
    if (!v) return fallback;
    if (auto s = std::get_if<std::vector<int>>(v)) return *s;
    if (auto i = std::get_if<std::int64_t>(v)) return {static_cast<int>(*i)};
    type_error(key, "a list of layer sizes");
}

std::optional<std::int64_t> param_optional_int(const Hyperparams& p, const std::string& key,
                                               std::optional<std::int64_t> fallback) {
    const auto* v = find(p, key);
    if (!v) return fallback;
    if (std::holds_alternative<std::monostate>(*v)) return std::nullopt;
    return param_int(p, key, 0);
}

}  // namespace steatosis
