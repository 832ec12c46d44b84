#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "steatosis/cascade.hpp"
#include "steatosis/ingest.hpp"
#include "steatosis/synth.hpp"
#include "steatosis/tuning.hpp"

namespace steatosis::testing {

// Small incremental-signal cohort for fast end-to-end tests.
inline SynthConfig small_cohort_config(std::uint64_t seed = 11) {
    SynthConfig c = synth_preset("incremental-signal");
    c.seed = seed;
    c.tier_grade_counts = TierGradeCounts{{{60, 40, 40, 40}, {25, 25, 25, 25}, {25, 25, 25, 25}}};
    return c;
}

inline Partition small_partition(std::uint64_t seed = 11) {
    return partition_tiers(generate_cohort(small_cohort_config(seed)));
}

inline SearchSpace single_point(Family f, Hyperparams p) {
    SearchSpace s;
    s.family = f;
    s.fixed = std::move(p);
    return s;
}

inline SearchSpace quick_meta_space() {
    return single_point(Family::MLP, {{"hidden_layer_sizes", std::vector<int>{16}},
                                      {"activation", std::string("tanh")},
                                      {"solver", std::string("adam")},
                                      {"learning_rate_init", 0.01},
                                      {"max_epochs", std::int64_t{60}}});
}

inline CascadeOptions quick_options(std::uint64_t seed = 5) {
    CascadeOptions o;
    o.k = 5;
    o.seed = seed;
    o.threshold = 0.30;
    o.families = {Family::RandomForest, Family::KNN};
    o.layer1_budget = 1;
    o.meta_budget = 1;
    o.layer1_spaces[Family::KNN] = single_point(Family::KNN, {{"n_neighbors", std::int64_t{7}}});
    o.layer1_spaces[Family::RandomForest] =
        single_point(Family::RandomForest, {{"n_estimators", std::int64_t{20}}, {"max_depth", std::int64_t{6}}});
    o.layer2_space = quick_meta_space();
    o.layer3_space = quick_meta_space();
    return o;
}

// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("steatosis-test-" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace steatosis::testing
