#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "steatosis/cascade.hpp"

namespace steatosis {

struct RunConfig {
    std::filesystem::path data;
    std::filesystem::path out = "out";
    std::uint64_t seed = 1;
    int k = 10;
    double threshold = 0.70;
    std::vector<Family> families;  // canonical order, all seven by default
    int layer1_budget = 60;
    int meta_budget = 60;
    std::map<Family, nlohmann::json> search_spaces;  // overrides of the default spaces
    nlohmann::json layer2_space = nlohmann::json::object();
    nlohmann::json layer3_space = nlohmann::json::object();
    bool evaluate = true;  // per-layer CV report after training

    RunConfig();
};

// Throws ConfigError on out-of-range values.
void validate(const RunConfig& config);

// Unlisted keys keep their defaults.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
// Training-relevant fields only; paths are left out so the hash and the
// container do not depend on where files live.
nlohmann::json to_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

std::vector<Family> parse_families(const std::string& comma_list);
CascadeOptions cascade_options(const RunConfig& config);

}  // namespace steatosis
