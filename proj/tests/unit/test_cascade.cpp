#include <doctest.h>

#include <numeric>
#include <set>

#include "steatosis/cascade.hpp"
#include "steatosis/errors.hpp"
#include "support.hpp"

using namespace steatosis;

namespace {

struct Fixture {
    Partition data = testing::small_partition();
    std::vector<SubjectRecord> records = generate_cohort(testing::small_cohort_config());
    CascadeTraining trained = train_cascade(data, testing::quick_options());
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

SubjectRecord truncated(const SubjectRecord& r, std::size_t keep) {
    SubjectRecord out = r;
    for (std::size_t j = keep; j < kFeatureCount; ++j) out.values[j].reset();
    return out;
}

const SubjectRecord& full_record() {
    for (const auto& r : fixture().records)
        if (availability_tier(r) == Tier::three) return r;
    throw std::logic_error("no tier-3 record");
}

std::vector<double> raw_values(const SubjectRecord& r, Tier t) {
    std::vector<double> v(feature_set(t).size());
    tier_values(r, t, v);
    return v;
}

}  // namespace

TEST_SUITE("cascade") {
    TEST_CASE("aggregation examples") {
        const std::vector<ProbabilityVector> tie{{1, 0, 0, 0}, {0, 1, 0, 0}};
        auto p = aggregate_layer1(tie);
        CHECK(p.probabilities == ProbabilityVector{0.5, 0.5, 0, 0});
        CHECK(p.label == 0);
        CHECK(p.nash_probability == 0.5);
        CHECK(p.layer_used == 1);

        const ProbabilityVector v{0.1, 0.2, 0.3, 0.4};
        CHECK(aggregate_layer1(std::vector<ProbabilityVector>{v}).probabilities == v);
        auto three = aggregate_layer1(std::vector<ProbabilityVector>{v, v, v}).probabilities;
        for (std::size_t c = 0; c < 4; ++c) CHECK(three[c] == doctest::Approx(v[c]).epsilon(1e-15));
    }

    TEST_CASE("meta input widths follow the member count") {
        const auto& m = fixture().trained.model;
        const std::size_t members = m.layer1().members.size();
        REQUIRE(members >= 1);
        CHECK(m.layer1().output_width() == 4 * members);
        CHECK(m.layer2().input_width == 16 + 4 * members);
        CHECK(m.layer2().network.feature_count() == static_cast<int>(16 + 4 * members));
        CHECK(m.layer3().input_width == 26);
        CHECK(m.layer3().network.feature_count() == 26);
        CHECK(m.layer2().network.spec().family == Family::MLP);

        const auto& r = full_record();
        CHECK(layer1_outputs(m.layer1(), r).size() == members);
        CHECK(layer2_input(m.layer1(), m.layer2().exclusive_scaler, raw_values(r, Tier::two)).size() == 16 + 4 * members);
        CHECK(layer3_input(m.layer1(), m.layer2(), m.layer3().exclusive_scaler, raw_values(r, Tier::three)).size() == 26);
    }

    TEST_CASE("members are in canonical order") {
        const auto& members = fixture().trained.model.layer1().members;
        for (std::size_t i = 1; i < members.size(); ++i)
            CHECK(canonical_rank(members[i - 1].spec().family) < canonical_rank(members[i].spec().family));
        CHECK(fixture().trained.selection.selected.size() == members.size());
    }

    TEST_CASE("routing picks the deepest available layer") {
        const auto& m = fixture().trained.model;
        const auto& r = full_record();
        CHECK(m.predict(r).layer_used == 3);
        CHECK(m.predict(truncated(r, 16)).layer_used == 2);
        CHECK(m.predict(truncated(r, 12)).layer_used == 1);

        SubjectRecord no_hip = r;
        no_hip.values[*feature_index("Hip")].reset();
        CHECK(m.predict(no_hip).layer_used == 2);

        SubjectRecord no_fbs = r;
        no_fbs.values[*feature_index("FBS")].reset();
        CHECK_THROWS_WITH_AS(m.predict(no_fbs), doctest::Contains("insufficient features"), DataError);
    }

    TEST_CASE("predictions are distributions with NASH = 1 - p0") {
        const auto& m = fixture().trained.model;
        for (const auto& r : fixture().records) {
            auto p = m.predict(r);
            CHECK(std::accumulate(p.probabilities.begin(), p.probabilities.end(), 0.0) ==
                  doctest::Approx(1.0).epsilon(1e-12));
            CHECK(p.nash_probability == 1.0 - p.probabilities[0]);
            CHECK(p.label == argmax_label(p.probabilities));
        }
    }

    TEST_CASE("layer 1 prediction is the member mean") {
        const auto& m = fixture().trained.model;
        const auto& r = full_record();
        auto direct = aggregate_layer1(layer1_outputs(m.layer1(), r));
        auto routed = m.predict(truncated(r, 12));
        CHECK(direct.probabilities == routed.probabilities);
        CHECK(m.predict_layer(1, raw_values(r, Tier::three)).probabilities == direct.probabilities);
    }

    TEST_CASE("layer 3 consumes the frozen layer-2 output") {
        const auto& m = fixture().trained.model;
        const auto& r = full_record();
        auto l2 = m.predict_layer(2, raw_values(r, Tier::two));
        auto in3 = layer3_input(m.layer1(), m.layer2(), m.layer3().exclusive_scaler, raw_values(r, Tier::three));
        for (std::size_t c = 0; c < 4; ++c) CHECK(in3[22 + c] == l2.probabilities[c]);
        CHECK(m.predict(truncated(r, 16)).probabilities == l2.probabilities);
    }

    TEST_CASE("meta designs mark only the exclusive block for fold scaling") {
        const auto& m = fixture().trained.model;
        auto d2 = layer2_design(m.layer1(), fixture().data[Tier::two]);
        CHECK(d2.exclusive_begin == 12);
        CHECK(d2.exclusive_end == 16);
        for (std::size_t j = 0; j < d2.scale_mask.size(); ++j) CHECK(d2.scale_mask[j] == (j >= 12 && j < 16));
        auto d3 = layer3_design(m.layer1(), m.layer2(), fixture().data[Tier::three]);
        CHECK(d3.X.cols() == 26);
        CHECK(d3.exclusive_begin == 16);
        CHECK(d3.exclusive_end == 22);
    }

    TEST_CASE("training is deterministic") {
        auto again = train_cascade(fixture().data, testing::quick_options());
        CHECK(again.model.to_json().dump() == fixture().trained.model.to_json().dump());
        auto other = train_cascade(fixture().data, testing::quick_options(6));
        CHECK(other.model.to_json().dump() != fixture().trained.model.to_json().dump());
    }

    TEST_CASE("JSON round trip preserves predictions") {
        const auto& m = fixture().trained.model;
        auto back = CascadeModel::from_json(nlohmann::json::parse(m.to_json().dump()));
        for (const auto& r : fixture().records) CHECK(back.predict(r).probabilities == m.predict(r).probabilities);
        CHECK(back.provenance().fingerprints == m.provenance().fingerprints);
    }

    TEST_CASE("provenance fingerprints are disjoint") {
        const auto& f = fixture().trained.model.provenance().fingerprints;
        CHECK(f[0].size() == fixture().data[Tier::one].size());
        std::set<std::uint64_t> all;
        std::size_t total = 0;
        for (const auto& v : f) {
            all.insert(v.begin(), v.end());
            total += v.size();
        }
        CHECK(all.size() == total);
    }

    TEST_CASE("empty tiers are reported by number") {
        Partition p = fixture().data;
        p.tiers[2] = TierDataset{Tier::three, Matrix(0, 22), {}, {}, {}};
        CHECK_THROWS_WITH_AS(train_cascade(p, testing::quick_options()), doctest::Contains("empty tier 3"), DataError);
        p = fixture().data;
        p.tiers[1] = TierDataset{Tier::two, Matrix(0, 16), {}, {}, {}};
        CHECK_THROWS_WITH_AS(train_cascade(p, testing::quick_options()), doctest::Contains("empty tier 2"), DataError);
    }

    TEST_CASE("layer 1 errors") {
        const auto& d1 = fixture().data[Tier::one];
        std::vector<ClassifierSpec> specs{{Family::KNN, {{"n_neighbors", std::int64_t{5}}}}};
        LayerOptions o;
        o.k = 5;
        o.threshold = 1.0;
        CHECK_THROWS_WITH_AS(train_layer1(d1, specs, o), doctest::Contains("no classifier exceeded threshold"),
                             TrainingError);

        TierDataset two_grades;
        two_grades.tier = Tier::one;
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < d1.size(); ++i)
            if (d1.y[i] <= 1) rows.push_back(i);
        two_grades.X = d1.X.select_rows(rows);
        for (auto i : rows) two_grades.y.push_back(d1.y[i]);
        o.threshold = 0.0;
        CHECK_THROWS_AS(train_layer1(two_grades, specs, o), TrainingError);
    }

    TEST_CASE("overlapping tiers are refused") {
        const auto& m = fixture().trained.model;
        const auto& d2 = fixture().data[Tier::two];
        LayerOptions o;
        o.k = 5;
        o.budget = 1;
        CHECK_THROWS_AS(train_layer2(m.layer1(), d2.fingerprints, d2, testing::quick_meta_space(), o), TrainingError);
    }

    TEST_CASE("layer 2 requires a network") {
        const auto& m = fixture().trained.model;
        LayerOptions o;
        o.k = 5;
        o.budget = 1;
        auto knn = testing::single_point(Family::KNN, {{"n_neighbors", std::int64_t{3}}});
        CHECK_THROWS(train_layer2(m.layer1(), fixture().data[Tier::one].fingerprints, fixture().data[Tier::two], knn, o));
    }
}
