#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "steatosis/errors.hpp"
#include "steatosis/ingest.hpp"
#include "support.hpp"

using namespace steatosis;

namespace {

const char* kHeader =
    "id,Age,Sex,WBC,HB,PLT,FIB4,FBS,AST,ALT,BilT,BilD,TG,Chol,LDL,HDL,ALB,Height,Weight,BMI,Waist,Hip,WHRatio,Grade\n";

std::string row(const std::string& id, const std::string& grade, const std::string& waist = "90") {
    return id + ",50,M,6,14,250,1.1,95,22,25,0.7,0.2,120,180,100,45,4.2,170,75,26," + waist + ",100,0.9," + grade +
           "\n";
}

ParsedCohort parse(const std::string& text) {
    std::istringstream in(text);
    return parse_cohort(in);
}

// Independent mean / population std.
std::pair<double, double> moments(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}

Matrix column(const std::vector<double>& v) {
    Matrix M(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) M(i, 0) = v[i];
    return M;
}

}  // namespace

TEST_SUITE("ingest") {
    TEST_CASE("header plus one complete row") {
        auto c = parse(std::string(kHeader) + row("a", "2"));
        REQUIRE(c.records.size() == 1);
        CHECK(c.report.rejected.empty());
        CHECK(c.report.accepted == 1);
        CHECK(c.report.total_rows == 1);
        CHECK(c.records[0].label == 2);
        CHECK(c.records[0].values[kSexIndex] == 1.0);
        CHECK(c.records[0].values[*feature_index("Waist")] == 90.0);
    }

    TEST_CASE("grade outside 0..3 is rejected with a reason") {
        auto c = parse(std::string(kHeader) + row("a", "5") + row("b", "1"));
        CHECK(c.records.size() == 1);
        REQUIRE(c.report.rejected.size() == 1);
        CHECK(c.report.rejected[0].row == 0);
        CHECK(c.report.rejected[0].reason == "label out of range");
        CHECK(c.report.accepted + c.report.rejected.size() == c.report.total_rows);
    }

    TEST_CASE("empty cell is a missing value, not an error") {
        auto c = parse(std::string(kHeader) + row("a", "0", ""));
        REQUIRE(c.records.size() == 1);
        CHECK_FALSE(c.records[0].values[*feature_index("Waist")].has_value());
        CHECK(availability_tier(c.records[0]) == Tier::two);
    }

    TEST_CASE("row-level problems never abort the parse") {
        std::string text = kHeader;
        text += row("a", "x");                                   // non-numeric grade
        text += "b,50,Q," + row("", "1").substr(6);               // invalid sex token
        text += "c,abc,M,6,14,250,1.1,95,22,25,0.7,0.2,120,180,100,45,4.2,170,75,26,90,100,0.9,1\n";
        text += "d,1,2,3\n";                                     // wrong cell count
        text += row("e", "");                                    // unlabeled is fine
        auto c = parse(text);
        CHECK(c.records.size() == 1);
        CHECK(c.report.rejected.size() == 4);
        CHECK(c.report.rejected[0].reason == "non-numeric Grade");
        CHECK(c.report.rejected[1].reason.find("invalid Sex") == 0);
        CHECK(c.report.rejected[2].reason == "non-numeric value in column Age");
        CHECK(c.report.rejected[3].reason.find("wrong number of cells") == 0);
        CHECK_FALSE(c.records[0].label);
    }

    TEST_CASE("unknown columns reject rows that fill them") {
        std::string text = "id,Age,Extra,Grade\n1,40,,1\n2,41,7,1\n";
        auto c = parse(text);
        CHECK(c.records.size() == 1);
        REQUIRE(c.report.rejected.size() == 1);
        CHECK(c.report.rejected[0].reason == "unknown column Extra");
    }

    TEST_CASE("missing or malformed header is fatal") {
        CHECK_THROWS_AS(parse(""), DataError);
        CHECK_THROWS_AS(parse("id,Age,Age\n"), DataError);
        CHECK_THROWS_AS(parse_cohort_file("/nonexistent/file.csv"), IoError);
    }

    TEST_CASE("record order equals row order") {
        auto c = parse(std::string(kHeader) + row("z", "1") + row("a", "0") + row("m", "3"));
        REQUIRE(c.records.size() == 3);
        CHECK(c.records[0].id == "z");
        CHECK(c.records[1].id == "a");
        CHECK(c.records[2].id == "m");
    }

    TEST_CASE("partition of an all-complete cohort lands in tier 3") {
        std::string text = kHeader;
        for (int i = 0; i < 7; ++i) text += row("s" + std::to_string(i), std::to_string(i % 4));
        auto c = parse(text);
        auto p = partition_tiers(c.records, c.report, c.source_rows);
        CHECK(p[Tier::one].size() == 0);
        CHECK(p[Tier::two].size() == 0);
        CHECK(p[Tier::three].size() == 7);
        CHECK(p[Tier::three].X.cols() == 22);
        CHECK(p.report.tier_counts[2] == 7);
    }

    TEST_CASE("record missing only Hip goes to tier 2") {
        // Hip is the 22nd column: blank it.
        auto c = parse(std::string(kHeader) + "h,50,M,6,14,250,1.1,95,22,25,0.7,0.2,120,180,100,45,4.2,170,75,26,90,,0.9,1\n");
        auto p = partition_tiers(c.records);
        CHECK(p[Tier::two].size() == 1);
        CHECK(p[Tier::two].X.cols() == 16);
        CHECK(p[Tier::two].ids[0] == "h");
    }

    TEST_CASE("unlabeled and tier-less records are reported, not assigned") {
        auto c = parse(std::string(kHeader) + row("u", "") +
                       "n,50,M,6,14,250,1.1,95,22,,0.7,0.2,120,180,100,45,4.2,170,75,26,90,100,0.9,1\n");
        auto p = partition_tiers(c.records, c.report, c.source_rows);
        CHECK(p.report.unassigned.size() == 2);
        CHECK(p.report.unassigned[0].reason == "missing label");
        CHECK(p.report.unassigned[1].reason == "insufficient features for tier 1");
        CHECK(p.report.unassigned[1].row == 1);
        for (Tier t : kTiers) CHECK(p[t].size() == 0);
    }

    TEST_CASE("partition is a disjoint cover of labeled records") {
        auto records = generate_cohort(testing::small_cohort_config());
        auto p = partition_tiers(records);
        std::set<std::string> ids;
        std::size_t total = 0;
        for (Tier t : kTiers) {
            total += p[t].size();
            CHECK(p[t].X.rows() == p[t].y.size());
            CHECK(p[t].ids.size() == p[t].y.size());
            for (const auto& id : p[t].ids) CHECK(ids.insert(id).second);
        }
        CHECK(total == records.size());
    }

    TEST_CASE("scaler on [2, 4, 6]") {
        const std::vector<double> v{2, 4, 6};
        const auto [m, s] = moments(v);
        Scaler sc = fit_scaler(column(v));
        CHECK(sc.mean[0] == doctest::Approx(m).epsilon(1e-15));
        CHECK(sc.stddev[0] == doctest::Approx(s).epsilon(1e-15));
        CHECK(sc.stddev[0] == doctest::Approx(1.63299).epsilon(1e-5));
        Matrix z = apply_scaler(sc, column(v));
        for (std::size_t i = 0; i < 3; ++i) CHECK(z(i, 0) == doctest::Approx((v[i] - m) / s).epsilon(1e-12));
        CHECK(z(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
        CHECK(z(1, 0) == doctest::Approx(0.0));
        CHECK(z(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(z(i, 0) * sc.stddev[0] + sc.mean[0] - v[i]) < 1e-9);
    }

    TEST_CASE("constant column is degenerate and maps to zero") {
        Scaler sc = fit_scaler(column({5, 5, 5}));
        CHECK(sc.mean[0] == 5.0);
        CHECK(sc.stddev[0] == 0.0);
        CHECK(sc.degenerate(0));
        Matrix z = apply_scaler(sc, column({5, 7, -1}));
        for (std::size_t i = 0; i < 3; ++i) CHECK(z(i, 0) == 0.0);
    }

    TEST_CASE("scaling standardizes every column") {
        auto p = partition_tiers(generate_cohort(testing::small_cohort_config()));
        const Matrix& X = p[Tier::three].X;
        Matrix z = apply_scaler(fit_scaler(X), X);
        Scaler again = fit_scaler(z);
        for (std::size_t j = 0; j < X.cols(); ++j) {
            CHECK(std::abs(again.mean[j]) < 1e-9);
            CHECK(again.stddev[j] == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("scaler errors") {
        CHECK_THROWS_AS(fit_scaler(Matrix()), DataError);
        Scaler sc = fit_scaler(column({1, 2}));
        CHECK_THROWS_AS(apply_scaler(sc, Matrix(2, 3)), DataError);
    }

    TEST_CASE("fit on a subset of rows") {
        Matrix M = column({1, 2, 100});
        const std::vector<std::size_t> rows{0, 1};
        Scaler sc = fit_scaler(M, rows);
        CHECK(sc.mean[0] == 1.5);
        CHECK(sc.stddev[0] == 0.5);
    }

    TEST_CASE("scaler JSON round trip") {
        Scaler sc = fit_scaler(column({0.1, 0.7, 1.3}));
        CHECK(scaler_from_json(to_json(sc)) == sc);
    }

    TEST_CASE("report JSON carries counts") {
        auto c = parse(std::string(kHeader) + row("a", "2") + row("b", "9"));
        auto p = partition_tiers(c.records, c.report, c.source_rows);
        auto j = to_json(p.report);
        CHECK(j["accepted"] == 1);
        CHECK(j["rejected"].size() == 1);
        CHECK(j["tiers"]["tier3"]["subjects"] == 1);
        CHECK(j["tiers"]["tier3"]["grades"]["Grade 2"] == 1);
    }

    TEST_CASE("CSV writer round trips") {
        auto records = generate_cohort(testing::small_cohort_config());
        std::ostringstream a;
        write_cohort_csv(a, records);
        std::istringstream in(a.str());
        auto back = parse_cohort(in);
        CHECK(back.report.rejected.empty());
        std::ostringstream b;
        write_cohort_csv(b, back.records);
        CHECK(a.str() == b.str());
    }
}
