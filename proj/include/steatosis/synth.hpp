#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "steatosis/schema.hpp"

namespace steatosis {

struct FeatureDistribution {
    std::array<double, kClassCount> mean{};
    std::array<double, kClassCount> std{};
};

using TierGradeCounts = std::array<std::array<std::size_t, kClassCount>, 3>;

struct SynthConfig {
    std::size_t size = 0;
    std::uint64_t seed = 0;
    std::array<double, kClassCount> prevalence{};
    std::array<double, 3> tier_proportions{};
    // Largest-remainder counts instead of independent draws.
    bool exact_counts = true;
    // Exact per-tier grade counts; overrides size, prevalence and proportions.
    std::optional<TierGradeCounts> tier_grade_counts;
    // Per tier: whether the features it adds carry grade-dependent distributions.
    std::array<bool, 3> signal{true, true, true};
    // Continuous features; the Sex entry is ignored.
    std::array<FeatureDistribution, kFeatureCount> features{};
    std::array<double, kClassCount> sex_male_probability{};
    int decimals = 4;
};

// Throws ConfigError naming the first invalid field.
void validate(const SynthConfig& config);

// "incremental-signal" (tier-grade counts of the published cohort, weak tier-1
// signal growing with each tier), "null-signal" (balanced grades, no signal).
SynthConfig synth_preset(std::string_view name);
std::vector<std::string> synth_preset_names();

nlohmann::json to_json(const SynthConfig& config);
// Keys absent from the JSON keep the values of the named "preset"
// (default incremental-signal).
SynthConfig synth_config_from_json(const nlohmann::json& j);

std::vector<SubjectRecord> generate_cohort(const SynthConfig& config);

}  // namespace steatosis
