#include "steatosis/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "steatosis/errors.hpp"
#include "steatosis/model_io.hpp"
#include "steatosis/random.hpp"

namespace steatosis {

RunConfig::RunConfig() : families(canonical_family_order().begin(), canonical_family_order().end()) {}

void validate(const RunConfig& c) {
    if (c.k < 2) throw ConfigError("k must be at least 2");
    if (!(c.threshold > 0.0 && c.threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
    if (c.layer1_budget < 1 || c.meta_budget < 1) throw ConfigError("search budgets must be at least 1");
    if (c.families.empty()) throw ConfigError("no candidate families");
    std::set<Family> seen(c.families.begin(), c.families.end());
    if (seen.size() != c.families.size()) throw ConfigError("candidate families repeat");
    for (const auto& [f, j] : c.search_spaces) space_with_overrides(default_space(f), j);
    space_with_overrides(default_space(Family::MLP), c.layer2_space);
    space_with_overrides(default_space(Family::MLP), c.layer3_space);
}

std::vector<Family> parse_families(const std::string& comma_list) {
    std::vector<Family> out;
    std::stringstream ss(comma_list);
    std::string name;
    while (std::getline(ss, name, ',')) {
        if (name.empty()) continue;
        auto f = family_from_name(name);
        if (!f) throw ConfigError("unknown family '" + name + "'");
        out.push_back(*f);
    }
    std::stable_sort(out.begin(), out.end(), [](Family a, Family b) { return canonical_rank(a) < canonical_rank(b); });
    return out;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    RunConfig c;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "data") c.data = v.get<std::string>();
            else if (key == "out") c.out = v.get<std::string>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "k") c.k = v.get<int>();
            else if (key == "threshold") c.threshold = v.get<double>();
            else if (key == "families") {
                std::string joined;
                for (const auto& f : v) joined += f.get<std::string>() + ",";
                c.families = parse_families(joined);
            } else if (key == "budget") {
                if (v.is_number_integer()) c.layer1_budget = c.meta_budget = v.get<int>();
                else {
                    c.layer1_budget = v.value("layer1", c.layer1_budget);
                    c.meta_budget = v.value("meta", c.meta_budget);
                }
            } else if (key == "search_spaces") {
                for (const auto& [name, space] : v.items()) {
                    auto f = family_from_name(name);
                    if (!f) throw ConfigError("search_spaces: unknown family '" + name + "'");
                    c.search_spaces[*f] = space;
                }
            } else if (key == "layer2_space") c.layer2_space = v;
            else if (key == "layer3_space") c.layer3_space = v;
            else if (key == "evaluate") c.evaluate = v.get<bool>();
            else throw ConfigError("unknown run config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
    validate(c);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    try {
        return run_config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
}

nlohmann::json to_json(const RunConfig& c) {
    auto families = nlohmann::json::array();
    for (Family f : c.families) families.push_back(std::string(family_name(f)));
    nlohmann::json spaces = nlohmann::json::object();
    for (const auto& [f, j] : c.search_spaces) spaces[std::string(family_name(f))] = j;
    return {{"seed", c.seed},
            {"k", c.k},
            {"threshold", c.threshold},
            {"families", families},
            {"budget", {{"layer1", c.layer1_budget}, {"meta", c.meta_budget}}},
            {"search_spaces", spaces},
            {"layer2_space", c.layer2_space},
            {"layer3_space", c.layer3_space},
            {"evaluate", c.evaluate}};
}

std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(to_json(c).dump())); }

CascadeOptions cascade_options(const RunConfig& c) {
    CascadeOptions o;
    o.k = c.k;
    o.seed = c.seed;
    o.threshold = c.threshold;
    o.families = c.families;
    o.layer1_budget = c.layer1_budget;
    o.meta_budget = c.meta_budget;
    for (const auto& [f, j] : c.search_spaces) o.layer1_spaces[f] = space_with_overrides(default_space(f), j);
    o.layer2_space = space_with_overrides(default_space(Family::MLP), c.layer2_space);
    o.layer3_space = space_with_overrides(default_space(Family::MLP), c.layer3_space);
    return o;
}

}  // namespace steatosis
