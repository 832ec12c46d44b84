#include <doctest.h>

#include <set>

#include <json.hpp>

#include "steatosis/schema.hpp"

using namespace steatosis;

namespace {

std::vector<std::string> names(Tier t) {
    std::vector<std::string> out;
    const auto& fs = feature_set(t);
    for (std::size_t i = 0; i < fs.size(); ++i) out.emplace_back(fs.name(i));
    return out;
}

SubjectRecord full_record() {
    SubjectRecord r;
    r.id = "x";
    for (std::size_t j = 0; j < kFeatureCount; ++j) r.values[j] = 1.0;
    return r;
}

}  // namespace

TEST_SUITE("schema") {
    TEST_CASE("tier 1 lists the twelve base features ending with ALB") {
        const std::vector<std::string> expected{"Age", "Sex", "FBS", "AST", "ALT", "BilT",
                                                "BilD", "TG", "Chol", "LDL", "HDL", "ALB"};
        CHECK(names(Tier::one) == expected);
    }

    TEST_CASE("tier 2 and tier 3 extend the previous tier") {
        const auto t1 = names(Tier::one), t2 = names(Tier::two), t3 = names(Tier::three);
        CHECK(t2.size() == 16);
        CHECK(t3.size() == 22);
        CHECK(std::vector<std::string>(t3.begin(), t3.begin() + 16) == t2);
        CHECK(std::vector<std::string>(t2.begin(), t2.begin() + 12) == t1);
        CHECK(std::vector<std::string>(t2.begin() + 12, t2.end()) == std::vector<std::string>{"WBC", "HB", "PLT", "FIB4"});
        CHECK(std::vector<std::string>(t3.begin() + 16, t3.end()) ==
              std::vector<std::string>{"Height", "Weight", "BMI", "Waist", "Hip", "WHRatio"});
        for (const auto& n : t1) CHECK(feature_set(Tier::two).contains(n));
        CHECK(feature_set(Tier::two).exclusive_begin() == 12);
        CHECK(feature_set(Tier::three).exclusive_begin() == 16);
    }

    TEST_CASE("registry has unique names and one categorical feature") {
        std::set<std::string_view> seen;
        int categorical = 0;
        for (const auto& f : feature_registry()) {
            CHECK(seen.insert(f.name).second);
            if (f.kind == FeatureKind::categorical) {
                ++categorical;
                CHECK(f.name == "Sex");
            }
        }
        CHECK(categorical == 1);
        CHECK(feature_index("BMI") == 18u);
        CHECK_FALSE(feature_index("bmi"));
    }

    TEST_CASE("feature lists serialize identically twice") {
        CHECK(nlohmann::json(names(Tier::three)).dump() == nlohmann::json(names(Tier::three)).dump());
        CHECK(&feature_set(Tier::two) == &feature_set(Tier::two));
    }

    TEST_CASE("availability tier is the largest complete tier") {
        SubjectRecord r = full_record();
        CHECK(availability_tier(r) == Tier::three);

        SubjectRecord t1;
        for (std::size_t j = 0; j < 12; ++j) t1.values[j] = 2.0;
        CHECK(availability_tier(t1) == Tier::one);

        SubjectRecord no_alt = full_record();
        no_alt.values[*feature_index("ALT")].reset();
        CHECK_FALSE(availability_tier(no_alt));

        SubjectRecord no_hip = full_record();
        no_hip.values[*feature_index("Hip")].reset();
        CHECK(availability_tier(no_hip) == Tier::two);

        // A tier-3 feature without the tier-2 block does not lift the tier.
        SubjectRecord gap = full_record();
        gap.values[*feature_index("PLT")].reset();
        CHECK(availability_tier(gap) == Tier::one);
    }

    TEST_CASE("sex encoding") {
        CHECK(encode_sex("F") == 0.0);
        CHECK(encode_sex("M") == 1.0);
        CHECK_FALSE(encode_sex("X"));
        CHECK(decode_sex(1.0) == "M");
        CHECK(decode_sex(0.0) == "F");
    }

    TEST_CASE("grade projection") {
        CHECK_FALSE(is_nash(0));
        CHECK(is_nash(1));
        CHECK(is_nash(3));
        CHECK_FALSE(valid_grade(4));
        CHECK_FALSE(valid_grade(-1));
    }

    TEST_CASE("record fingerprints depend on id and values") {
        SubjectRecord a = full_record(), b = full_record();
        CHECK(record_fingerprint(a) == record_fingerprint(b));
        b.values[3] = 1.5;
        CHECK(record_fingerprint(a) != record_fingerprint(b));
        b = a;
        b.id = "y";
        CHECK(record_fingerprint(a) != record_fingerprint(b));
        b = a;
        b.values[20].reset();
        CHECK(record_fingerprint(a) != record_fingerprint(b));
    }
}
