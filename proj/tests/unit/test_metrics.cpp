#include <doctest.h>

#include <cmath>
#include <random>

#include "steatosis/errors.hpp"
#include "steatosis/metrics.hpp"

using namespace steatosis;

namespace {

// Fraction of (positive, negative) pairs ranked correctly, ties count half.
double pair_count_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
    double good = 0, pairs = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (std::size_t j = 0; j < labels.size(); ++j)
            if (labels[i] == 1 && labels[j] == 0) {
                pairs += 1;
                good += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
            }
    return good / pairs;
}

std::pair<std::vector<int>, std::vector<double>> random_instance(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> size(2, 50);
    const int n = size(rng);
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::vector<double> scores(labels.size());
    std::bernoulli_distribution coin(0.5);
    std::uniform_int_distribution<int> level(0, 6);  // coarse scores force ties
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = coin(rng);
        scores[i] = level(rng) / 6.0;
    }
    labels[0] = 0;
    labels[1] = 1;
    return {labels, scores};
}

}  // namespace

TEST_SUITE("metrics") {
    TEST_CASE("worked confusion example") {
        const std::vector<int> t{0, 0, 1, 2}, p{0, 1, 1, 2};
        auto cm = confusion(t, p, 4);
        CHECK(cm.counts[0][0] == 1);
        CHECK(cm.counts[1][1] == 1);
        CHECK(cm.counts[2][2] == 1);
        CHECK(cm.counts[0][1] == 1);
        CHECK(cm.total() == 4);

        auto s = summarize(cm);
        CHECK(s.accuracy == 0.75);
        CHECK(*s.sensitivity[0] == 0.5);
        CHECK(*s.sensitivity[1] == 1.0);
        CHECK(*s.sensitivity[2] == 1.0);
        CHECK_FALSE(s.sensitivity[3]);
        CHECK(*s.specificity[1] == doctest::Approx(2.0 / 3));
        CHECK(*s.specificity[0] == 1.0);
        CHECK(*s.specificity[2] == 1.0);
        // F1: class 0 = 2/3, class 1 = 2/3, class 2 = 1.
        CHECK(*s.f1[0] == doctest::Approx(2.0 / 3));
        CHECK(*s.f1[1] == doctest::Approx(2.0 / 3));
        CHECK(s.macro_sensitivity == doctest::Approx((0.5 + 1 + 1) / 3));
        CHECK(s.macro_specificity == doctest::Approx((1 + 2.0 / 3 + 1) / 3));
        CHECK(s.macro_f1 == doctest::Approx((2.0 / 3 + 2.0 / 3 + 1) / 3));
    }

    TEST_CASE("perfect and empty inputs") {
        const std::vector<int> t{0, 1, 2, 3, 1};
        auto cm = confusion(t, t, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (i != j) CHECK(cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == 0);
        auto s = summarize(cm);
        CHECK(s.accuracy == 1.0);
        CHECK(s.macro_sensitivity == 1.0);
        CHECK(s.macro_specificity == 1.0);
        CHECK(s.macro_f1 == 1.0);

        auto empty = confusion(std::vector<int>{}, std::vector<int>{}, 4);
        CHECK(empty.total() == 0);
        CHECK_THROWS_AS(confusion(std::vector<int>{0}, std::vector<int>{0, 1}, 4), DataError);
        CHECK_THROWS_AS(confusion(std::vector<int>{5}, std::vector<int>{0}, 4), DataError);
    }

    TEST_CASE("report vocabulary") {
        auto s = summarize(confusion(std::vector<int>{0, 0, 1, 2}, std::vector<int>{0, 1, 1, 2}, 4));
        auto j = report_json(s);
        CHECK(j["Acc"] == 75.0);
        CHECK(j["M-avg Sens"] == 83.3);
        CHECK(j["M-avg Spec"] == 88.9);
        CHECK(j.contains("M F1-Score"));
        CHECK(j["Grade 0"]["Sens"] == 50.0);
        CHECK(j["Samples"] == 4);
        CHECK(percent1(0.12345) == 12.3);
    }

    TEST_CASE("binary NASH projection") {
        const std::vector<int> grades{0, 3};
        const std::vector<std::vector<double>> probs{{0.9, 0.1, 0, 0}, {0.2, 0.1, 0.1, 0.6}};
        auto b = binary_nash(grades, probs);
        CHECK(b.labels == std::vector<int>{0, 1});
        CHECK(b.scores[0] == doctest::Approx(0.1));
        CHECK(b.scores[1] == doctest::Approx(0.8));
        auto zeros = binary_nash(std::vector<int>{0, 0}, std::vector<std::vector<double>>{{1, 0, 0, 0}, {0.5, 0.5, 0, 0}});
        CHECK(zeros.labels == std::vector<int>{0, 0});
    }

    TEST_CASE("AUC examples") {
        const std::vector<int> l{0, 0, 1, 1};
        auto c = roc_auc(l, std::vector<double>{0.1, 0.4, 0.35, 0.8});
        CHECK(c.auc == doctest::Approx(0.75));
        CHECK(rank_auc(l, std::vector<double>{0, 0, 1, 1}) == 1.0);
        CHECK(rank_auc(l, std::vector<double>{0.3, 0.3, 0.3, 0.3}) == 0.5);
        CHECK_THROWS_AS(rank_auc(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2}), DataError);
        CHECK_THROWS_WITH(roc_auc(std::vector<int>{0, 0}, std::vector<double>{0.1, 0.2}),
                          doctest::Contains("AUC undefined"));
    }

    TEST_CASE("ROC curve endpoints and monotonicity") {
        const std::vector<int> l{0, 1, 0, 1, 1};
        auto c = roc_auc(l, std::vector<double>{0.2, 0.9, 0.5, 0.5, 0.7});
        REQUIRE(c.points.size() >= 2);
        CHECK(c.points.front().fpr == 0.0);
        CHECK(c.points.front().tpr == 0.0);
        CHECK(std::isinf(c.points.front().threshold));
        CHECK(c.points.back().fpr == 1.0);
        CHECK(c.points.back().tpr == 1.0);
        for (std::size_t i = 1; i < c.points.size(); ++i) {
            CHECK(c.points[i].fpr >= c.points[i - 1].fpr);
            CHECK(c.points[i].tpr >= c.points[i - 1].tpr);
            CHECK(c.points[i].threshold < c.points[i - 1].threshold);
        }
        const auto csv = roc_csv(c);
        CHECK(csv.rfind("fpr,tpr,threshold\n", 0) == 0);
        CHECK(csv.find("inf") != std::string::npos);
    }

    TEST_CASE("rank, trapezoid and pair-count AUC agree on random instances") {
        std::mt19937_64 rng(2024);
        for (int trial = 0; trial < 100; ++trial) {
            auto [labels, scores] = random_instance(rng);
            const double oracle = pair_count_auc(labels, scores);
            CHECK(rank_auc(labels, scores) == doctest::Approx(oracle).epsilon(1e-12));
            CHECK(std::abs(trapezoid_area(roc_auc(labels, scores)) - oracle) < 1e-9);
        }
    }

    TEST_CASE("macro one-vs-rest AUC") {
        const std::vector<int> y{0, 1, 2, 3};
        std::vector<std::vector<double>> confident{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
        CHECK(macro_ovr_auc(y, confident) == 1.0);
        std::vector<std::vector<double>> uniform(4, std::vector<double>(4, 0.25));
        CHECK(macro_ovr_auc(y, uniform) == 0.5);
        for (const auto& [cls, curve] : ovr_curves(y, uniform)) CHECK(curve.auc == 0.5);

        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0, 1);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<int> labels;
            std::vector<std::vector<double>> probs;
            std::vector<double> p1;
            for (int i = 0; i < 15; ++i) {
                labels.push_back(i % 2 == 0 ? 0 : 1);
                const double a = std::round(u(rng) * 10) / 10;
                probs.push_back({1 - a, a});
                p1.push_back(a);
            }
            CHECK(macro_ovr_auc(labels, probs) == doctest::Approx(rank_auc(labels, p1)).epsilon(1e-12));
        }
    }
}
