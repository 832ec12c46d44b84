#include <doctest.h>

#include <cmath>
#include <sstream>

#include "steatosis/errors.hpp"
#include "steatosis/ingest.hpp"
#include "steatosis/synth.hpp"

using namespace steatosis;

namespace {

std::string csv(const std::vector<SubjectRecord>& records) {
    std::ostringstream out;
    write_cohort_csv(out, records);
    return out.str();
}

}  // namespace

TEST_SUITE("synth") {
    TEST_CASE("incremental preset reproduces the published tier and grade counts") {
        const auto p = partition_tiers(generate_cohort(synth_preset("incremental-signal")));
        CHECK(p[Tier::one].size() == 965);
        CHECK(p[Tier::two].size() == 505);
        CHECK(p[Tier::three].size() == 342);
        const std::array<std::size_t, 4> t1{457, 149, 238, 121};
        CHECK(p.report.tier_grade_counts[0] == t1);
        CHECK(p.report.unassigned.empty());
    }

    TEST_CASE("exact-count mode hits proportions of the published cohort") {
        SynthConfig c = synth_preset("incremental-signal");
        c.tier_grade_counts.reset();
        c.size = 1812;
        c.tier_proportions = {965.0 / 1812, 505.0 / 1812, 342.0 / 1812};
        c.exact_counts = true;
        const auto p = partition_tiers(generate_cohort(c));
        CHECK(p[Tier::one].size() == 965);
        CHECK(p[Tier::two].size() == 505);
        CHECK(p[Tier::three].size() == 342);
    }

    TEST_CASE("records carry exactly the features of their tier") {
        const auto records = generate_cohort(synth_preset("incremental-signal"));
        for (const auto& r : records) {
            const auto t = availability_tier(r);
            REQUIRE(t);
            const std::size_t width = feature_set(*t).size();
            for (std::size_t j = 0; j < kFeatureCount; ++j) CHECK(r.has(j) == (j < width));
            REQUIRE(r.label);
            CHECK(valid_grade(*r.label));
            CHECK((r.values[kSexIndex] == 0.0 || r.values[kSexIndex] == 1.0));
        }
    }

    TEST_CASE("same seed gives identical CSV; other seeds differ") {
        const auto c = synth_preset("incremental-signal");
        CHECK(csv(generate_cohort(c)) == csv(generate_cohort(c)));
        auto d = c;
        d.seed = c.seed + 1;
        CHECK(csv(generate_cohort(c)) != csv(generate_cohort(d)));
    }

    TEST_CASE("CSV header matches the ingest contract") {
        const auto text = csv(generate_cohort(synth_preset("null-signal")));
        std::string header = text.substr(0, text.find('\n'));
        std::string expected;
        for (const auto& h : cohort_csv_header()) expected += (expected.empty() ? "" : ",") + h;
        CHECK(header == expected);
    }

    TEST_CASE("sample means converge to the configured means") {
        SynthConfig c = synth_preset("incremental-signal");
        c.tier_grade_counts.reset();
        c.size = 20000;
        c.tier_proportions = {0.0, 0.0, 1.0};
        c.decimals = 12;
        const auto records = generate_cohort(c);
        for (const char* name : {"AST", "FIB4", "BMI"}) {
            const std::size_t j = *feature_index(name);
            for (int g = 0; g < 4; ++g) {
                double sum = 0;
                std::size_t n = 0;
                for (const auto& r : records)
                    if (*r.label == g) {
                        sum += *r.values[j];
                        ++n;
                    }
                REQUIRE(n > 100);
                const auto& f = c.features[j];
                const double tol = 5 * f.std[static_cast<std::size_t>(g)] / std::sqrt(static_cast<double>(n));
                CAPTURE(name);
                CAPTURE(g);
                CHECK(std::abs(sum / static_cast<double>(n) - f.mean[static_cast<std::size_t>(g)]) < tol);
            }
        }
    }

    TEST_CASE("null preset carries no grade signal") {
        const auto c = synth_preset("null-signal");
        CHECK_FALSE(c.signal[0]);
        CHECK_FALSE(c.signal[1]);
        CHECK_FALSE(c.signal[2]);
        const auto p = partition_tiers(generate_cohort(c));
        for (Tier t : kTiers) {
            std::array<std::size_t, 4> counts{};
            for (int y : p[t].y) ++counts[static_cast<std::size_t>(y)];
            CHECK(counts[0] == counts[3]);
            CHECK(p[t].size() % 40 == 0);
        }
    }

    TEST_CASE("incremental preset separates grades more in later tiers") {
        const auto c = synth_preset("incremental-signal");
        auto shift = [&](std::size_t j) {
            const auto& f = c.features[j];
            return std::abs(f.mean[3] - f.mean[0]) / f.std[0];
        };
        CHECK(shift(*feature_index("PLT")) > shift(*feature_index("AST")));
        CHECK(shift(*feature_index("Waist")) > shift(*feature_index("PLT")));
    }

    TEST_CASE("config JSON round trip and overrides") {
        for (const auto& name : synth_preset_names()) {
            const auto c = synth_preset(name);
            const auto back = synth_config_from_json(to_json(c));
            CHECK(to_json(back) == to_json(c));
            CHECK(csv(generate_cohort(back)) == csv(generate_cohort(c)));
        }
        auto j = nlohmann::json::parse(R"({"preset": "incremental-signal", "size": 40, "seed": 3})");
        auto c = synth_config_from_json(j);
        CHECK(c.size == 40);
        CHECK_FALSE(c.tier_grade_counts);
        CHECK(generate_cohort(c).size() == 40);
    }

    TEST_CASE("invalid configurations") {
        auto c = synth_preset("incremental-signal");
        c.tier_grade_counts.reset();
        c.size = 0;
        CHECK_THROWS_AS(validate(c), ConfigError);
        CHECK_THROWS_AS(generate_cohort(c), ConfigError);
        c.size = 10;
        c.prevalence = {0.5, 0.5, 0.5, 0.0};
        CHECK_THROWS_AS(validate(c), ConfigError);
        CHECK_THROWS_AS(synth_preset("nope"), ConfigError);
        CHECK_THROWS_AS(synth_config_from_json(nlohmann::json::parse(R"({"colour": 1})")), ConfigError);
        CHECK_THROWS_AS(synth_config_from_json(nlohmann::json::parse(R"({"size": -1})")), ConfigError);
    }
}
