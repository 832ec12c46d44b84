#include "steatosis/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "steatosis/errors.hpp"
#include "steatosis/random.hpp"

namespace steatosis {

namespace {

struct Baseline {
    std::string_view name;
    double mean;
    double std;
    double direction;  // sign of the per-grade shift
};

// Grade-0 distributions; Sex handled separately.
constexpr std::array<Baseline, kFeatureCount> kBaselines{{
    {"Age", 45, 12, +1},    {"Sex", 0, 1, 0},        {"FBS", 92, 12, +1},      {"AST", 24, 8, +1},
    {"ALT", 26, 10, +1},    {"BilT", 0.8, 0.3, +1},  {"BilD", 0.25, 0.1, +1},  {"TG", 130, 45, +1},
    {"Chol", 185, 35, +1},  {"LDL", 110, 30, +1},    {"HDL", 50, 12, -1},      {"ALB", 4.4, 0.35, -1},
    {"WBC", 6.5, 1.6, +1},  {"HB", 14, 1.4, +1},     {"PLT", 240, 55, -1},     {"FIB4", 0.9, 0.35, +1},
    {"Height", 168, 9, -1}, {"Weight", 72, 12, +1},  {"BMI", 25.5, 3.5, +1},   {"Waist", 88, 10, +1},
    {"Hip", 100, 8, +1},    {"WHRatio", 0.88, 0.06, +1},
}};

int feature_tier(std::size_t j) {
    if (j < feature_set(Tier::one).size()) return 1;
    if (j < feature_set(Tier::two).size()) return 2;
    return 3;
}

// Per-grade shift in units of the feature's std, by the tier that adds the feature.
constexpr std::array<double, 3> kIncrementalEffect{0.6, 0.83, 0.96};

constexpr TierGradeCounts kPublishedCounts{{{457, 149, 238, 121}, {145, 127, 112, 121}, {50, 58, 70, 164}}};

SynthConfig base_config(const std::array<double, 3>& effect) {
    SynthConfig c;
    c.seed = 1;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        const auto& b = kBaselines[j];
        const double step = effect[static_cast<std::size_t>(feature_tier(j) - 1)] * b.direction * b.std;
        for (int g = 0; g < kClassCount; ++g) {
            c.features[j].mean[static_cast<std::size_t>(g)] = b.mean + step * g;
            c.features[j].std[static_cast<std::size_t>(g)] = b.std;
        }
    }
    c.sex_male_probability = {0.40, 0.45, 0.50, 0.55};
    return c;
}

std::vector<std::size_t> largest_remainder(std::span<const double> p, std::size_t n) {
    std::vector<std::size_t> counts(p.size());
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double exact = p[i] * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[i];
        rem.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[rem[r % rem.size()].second];
    return counts;
}

std::size_t draw_categorical(std::span<const double> p, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    return p.size() - 1;
}

std::vector<int> expand(const std::vector<std::size_t>& counts) {
    std::vector<int> out;
    for (std::size_t i = 0; i < counts.size(); ++i) out.insert(out.end(), counts[i], static_cast<int>(i));
    return out;
}

template <std::size_t N>
std::array<double, N> read_array(const nlohmann::json& j, const char* name) {
    if (!j.is_array() || j.size() != N)
        throw ConfigError(std::string(name) + " must list " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<double>();
    return out;
}

}  // namespace

std::vector<std::string> synth_preset_names() { return {"incremental-signal", "null-signal"}; }

SynthConfig synth_preset(std::string_view name) {
    if (name == "incremental-signal") {
        SynthConfig c = base_config(kIncrementalEffect);
        c.tier_grade_counts = kPublishedCounts;
        c.size = 1812;
        c.prevalence = {652.0 / 1812, 334.0 / 1812, 420.0 / 1812, 406.0 / 1812};
        c.tier_proportions = {965.0 / 1812, 505.0 / 1812, 342.0 / 1812};
        return c;
    }
    if (name == "null-signal") {
        SynthConfig c = base_config(kIncrementalEffect);
        c.signal = {false, false, false};
        c.tier_grade_counts = TierGradeCounts{{{100, 100, 100, 100}, {50, 50, 50, 50}, {50, 50, 50, 50}}};
        c.size = 800;
        c.prevalence = {0.25, 0.25, 0.25, 0.25};
        c.tier_proportions = {0.5, 0.25, 0.25};
        return c;
    }
    throw ConfigError("unknown synth preset '" + std::string(name) + "'");
}

void validate(const SynthConfig& c) {
    std::size_t size = c.size;
    if (c.tier_grade_counts) {
        size = 0;
        for (const auto& t : *c.tier_grade_counts) size = std::accumulate(t.begin(), t.end(), size);
    } else {
        const double tp = std::accumulate(c.tier_proportions.begin(), c.tier_proportions.end(), 0.0);
        if (std::abs(tp - 1.0) > 1e-9) throw ConfigError("tier_proportions must sum to 1");
        const double pp = std::accumulate(c.prevalence.begin(), c.prevalence.end(), 0.0);
        if (std::abs(pp - 1.0) > 1e-9) throw ConfigError("prevalence must sum to 1");
        for (double p : c.tier_proportions)
            if (!(p >= 0.0)) throw ConfigError("tier_proportions must be non-negative");
        for (double p : c.prevalence)
            if (!(p >= 0.0)) throw ConfigError("prevalence must be non-negative");
    }
    if (size < 1) throw ConfigError("cohort size must be at least 1");
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        if (j == kSexIndex) continue;
        for (int g = 0; g < kClassCount; ++g) {
            const auto& f = c.features[j];
            if (!(f.std[static_cast<std::size_t>(g)] > 0.0) || !std::isfinite(f.std[static_cast<std::size_t>(g)]))
                throw ConfigError("std of " + std::string(feature_registry()[j].name) + " must be positive");
            if (!std::isfinite(f.mean[static_cast<std::size_t>(g)]))
                throw ConfigError("mean of " + std::string(feature_registry()[j].name) + " must be finite");
        }
    }
    for (double p : c.sex_male_probability)
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("sex_male_probability must lie in [0, 1]");
    if (c.decimals < 0 || c.decimals > 12) throw ConfigError("decimals must lie in [0, 12]");
}

nlohmann::json to_json(const SynthConfig& c) {
    nlohmann::json features = nlohmann::json::object();
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        if (j == kSexIndex) continue;
        features[std::string(feature_registry()[j].name)] = {{"mean", c.features[j].mean}, {"std", c.features[j].std}};
    }
    nlohmann::json j{{"size", c.size},
                     {"seed", c.seed},
                     {"prevalence", c.prevalence},
                     {"tier_proportions", c.tier_proportions},
                     {"exact_counts", c.exact_counts},
                     {"signal", {{"tier1", c.signal[0]}, {"tier2", c.signal[1]}, {"tier3", c.signal[2]}}},
                     {"features", features},
                     {"sex_male_probability", c.sex_male_probability},
                     {"decimals", c.decimals}};
    j["tier_grade_counts"] = c.tier_grade_counts ? nlohmann::json(*c.tier_grade_counts) : nlohmann::json(nullptr);
    return j;
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("synth config must be a JSON object");
    try {
        SynthConfig c = synth_preset(j.value("preset", std::string("incremental-signal")));
        for (const auto& [key, v] : j.items()) {
            if (key == "preset") continue;
            else if (key == "size") {
                if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("size must be a non-negative integer");
                c.size = v.get<std::size_t>();
                c.tier_grade_counts.reset();
            } else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "prevalence") c.prevalence = read_array<kClassCount>(v, "prevalence");
            else if (key == "tier_proportions") c.tier_proportions = read_array<3>(v, "tier_proportions");
            else if (key == "exact_counts") c.exact_counts = v.get<bool>();
            else if (key == "tier_grade_counts") {
                if (v.is_null()) c.tier_grade_counts.reset();
                else c.tier_grade_counts = v.get<TierGradeCounts>();
            } else if (key == "signal") {
                for (int t = 0; t < 3; ++t) {
                    const std::string name = "tier" + std::to_string(t + 1);
                    if (v.contains(name)) c.signal[static_cast<std::size_t>(t)] = v[name].get<bool>();
                }
            } else if (key == "features") {
                for (const auto& [name, dist] : v.items()) {
                    auto idx = feature_index(name);
                    if (!idx || *idx == kSexIndex) throw ConfigError("unknown continuous feature '" + name + "'");
                    if (dist.contains("mean")) c.features[*idx].mean = read_array<kClassCount>(dist["mean"], "mean");
                    if (dist.contains("std")) c.features[*idx].std = read_array<kClassCount>(dist["std"], "std");
                }
            } else if (key == "sex_male_probability")
                c.sex_male_probability = read_array<kClassCount>(v, "sex_male_probability");
            else if (key == "decimals") c.decimals = v.get<int>();
            else throw ConfigError("unknown synth config key '" + key + "'");
        }
        // An explicit size without explicit counts drops the preset's template.
        if (j.contains("size") && j.contains("tier_grade_counts") && !j["tier_grade_counts"].is_null())
            c.tier_grade_counts = j["tier_grade_counts"].get<TierGradeCounts>();
        validate(c);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("synth config: ") + e.what());
    }
}

std::vector<SubjectRecord> generate_cohort(const SynthConfig& c) {
    validate(c);
    std::vector<int> grades, tiers;
    if (c.tier_grade_counts) {
        for (int t = 0; t < 3; ++t)
            for (int g = 0; g < kClassCount; ++g)
                for (std::size_t n = 0; n < (*c.tier_grade_counts)[static_cast<std::size_t>(t)][static_cast<std::size_t>(g)]; ++n) {
                    tiers.push_back(t);
                    grades.push_back(g);
                }
        std::vector<std::size_t> order(grades.size());
        std::iota(order.begin(), order.end(), 0);
        Rng rng = make_rng(c.seed, "synth-order");
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<int> g2(order.size()), t2(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            g2[i] = grades[order[i]];
            t2[i] = tiers[order[i]];
        }
        grades = std::move(g2);
        tiers = std::move(t2);
    } else if (c.exact_counts) {
        grades = expand(largest_remainder(c.prevalence, c.size));
        tiers = expand(largest_remainder(c.tier_proportions, c.size));
        Rng rg = make_rng(c.seed, "synth-grades");
        std::shuffle(grades.begin(), grades.end(), rg);
        Rng rt = make_rng(c.seed, "synth-tiers");
        std::shuffle(tiers.begin(), tiers.end(), rt);
    } else {
        Rng rng = make_rng(c.seed, "synth-assign");
        for (std::size_t i = 0; i < c.size; ++i) {
            grades.push_back(static_cast<int>(draw_categorical(c.prevalence, rng)));
            tiers.push_back(static_cast<int>(draw_categorical(c.tier_proportions, rng)));
        }
    }

    const double scale = std::pow(10.0, c.decimals);
    const std::size_t width = std::to_string(grades.size()).size();
    std::vector<SubjectRecord> out(grades.size());
    for (std::size_t i = 0; i < grades.size(); ++i) {
        auto& r = out[i];
        std::string num = std::to_string(i + 1);
        r.id = "S" + std::string(width - num.size(), '0') + num;
        r.label = grades[i];
        Rng rng = make_rng(c.seed, "synth-subject", i);
        const std::size_t keep = feature_set(*tier_from_int(tiers[i] + 1)).size();
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            const bool signal = c.signal[static_cast<std::size_t>(feature_tier(j) - 1)];
            const auto g = static_cast<std::size_t>(signal ? grades[i] : 0);
            double v;
            if (j == kSexIndex) v = uniform01(rng) < c.sex_male_probability[g] ? 1.0 : 0.0;
            else v = std::round((c.features[j].mean[g] + c.features[j].std[g] * standard_normal(rng)) * scale) / scale;
            if (j < keep) r.values[j] = v;
        }
    }
    return out;
}

}  // namespace steatosis
