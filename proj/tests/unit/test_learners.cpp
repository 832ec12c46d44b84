#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "steatosis/errors.hpp"
#include "steatosis/kernels.hpp"
#include "steatosis/learners/classifier.hpp"
#include "steatosis/learners/forest.hpp"
#include "steatosis/learners/gbdt.hpp"
#include "steatosis/learners/knn.hpp"
#include "steatosis/learners/mlp.hpp"
#include "steatosis/learners/svm.hpp"
#include "steatosis/learners/tree.hpp"
#include "support.hpp"

using namespace steatosis;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix M(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
    return M;
}

// Scaled tier-1 data from the small synthetic cohort.
struct Toy {
    Matrix X;
    std::vector<int> y;
};

Toy toy(std::size_t limit = 200) {
    const auto p = testing::small_partition();
    const auto& d = p[Tier::one];
    Toy t;
    std::vector<std::size_t> rows(std::min(limit, d.size()));
    std::iota(rows.begin(), rows.end(), 0);
    t.X = apply_scaler(fit_scaler(d.X), d.X.select_rows(rows));
    t.y.assign(d.y.begin(), d.y.begin() + static_cast<long>(rows.size()));
    return t;
}

double gini(const std::array<double, 4>& c) {
    double n = c[0] + c[1] + c[2] + c[3];
    if (n == 0) return 0;
    double s = 1;
    for (double v : c) s -= (v / n) * (v / n);
    return s;
}

// Brute-force minimum weighted child Gini over all single-feature midpoint splits.
double best_stump_impurity(const Matrix& X, std::span<const int> y) {
    double best = 1e300;
    for (std::size_t f = 0; f < X.cols(); ++f) {
        std::vector<double> vals;
        for (std::size_t i = 0; i < X.rows(); ++i) vals.push_back(X(i, f));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t v = 0; v + 1 < vals.size(); ++v) {
            const double thr = 0.5 * (vals[v] + vals[v + 1]);
            std::array<double, 4> l{}, r{};
            for (std::size_t i = 0; i < X.rows(); ++i) (X(i, f) <= thr ? l : r)[static_cast<std::size_t>(y[i])] += 1;
            const double nl = l[0] + l[1] + l[2] + l[3], nr = r[0] + r[1] + r[2] + r[3];
            best = std::min(best, nl * gini(l) + nr * gini(r));
        }
    }
    return best;
}

std::vector<double> all_probabilities(const TrainedClassifier& c, const Matrix& X) {
    std::vector<double> out;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        auto p = c.predict_proba(X.row(i));
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

std::vector<ClassifierSpec> one_of_each() {
    return {
        {Family::KNN, {{"n_neighbors", std::int64_t{5}}}},
        {Family::SVM, {{"C", 1.0}, {"kernel", std::string("rbf")}}},
        {Family::RandomForest, {{"n_estimators", std::int64_t{15}}, {"max_depth", std::int64_t{5}}}},
        {Family::AdaBoost, {{"n_estimators", std::int64_t{10}}, {"Base_estimator_max_depth", std::int64_t{2}}}},
        {Family::GBLeafwise,
         {{"n_estimators", std::int64_t{10}}, {"num_leaves", std::int64_t{8}}, {"min_child_samples", std::int64_t{5}},
          {"subsample", 0.8}, {"colsample_bytree", 0.8}}},
        {Family::GBRegularized,
         {{"n_estimators", std::int64_t{10}}, {"max_depth", std::int64_t{3}}, {"subsample", 0.8}}},
        {Family::MLP, {{"hidden_layer_sizes", std::vector<int>{8}}, {"max_epochs", std::int64_t{20}}}},
    };
}

}  // namespace

TEST_SUITE("learners") {
    TEST_CASE("family names and canonical order") {
        for (Family f : canonical_family_order()) CHECK(family_from_name(family_name(f)) == f);
        CHECK_FALSE(family_from_name("svm"));
        CHECK(canonical_family_order().front() == Family::SVM);
        CHECK(canonical_family_order().back() == Family::MLP);
    }

    TEST_CASE("argmax ties go to the lowest index") {
        const std::vector<double> p{0.3, 0.3, 0.2, 0.2};
        CHECK(argmax_label(p) == 0);
        const std::vector<double> q{0.1, 0.4, 0.1, 0.4};
        CHECK(argmax_label(q) == 1);
    }

    TEST_CASE("KNN with k = 1 returns the nearest label") {
        Matrix X = from_rows({{0, 0}, {10, 0}, {0, 10}, {10, 10}});
        std::vector<int> y{0, 1, 2, 3};
        KnnModel m(X, y, 1, 4);
        std::vector<double> out(4);
        for (std::size_t i = 0; i < 4; ++i) {
            m.predict_proba(X.row(i), out);
            for (int c = 0; c < 4; ++c) CHECK(out[static_cast<std::size_t>(c)] == (c == y[i] ? 1.0 : 0.0));
        }
        const std::vector<double> q{9, 1};
        m.predict_proba(q, out);
        CHECK(out[1] == 1.0);
    }

    TEST_CASE("KNN with k = 3 votes uniformly") {
        Matrix X = from_rows({{0.0}, {1.0}, {2.0}, {50.0}});
        std::vector<int> y{0, 1, 1, 2};
        KnnModel m(X, y, 3, 4);
        std::vector<double> out(4);
        const std::vector<double> q{0.9};
        m.predict_proba(q, out);
        CHECK(out[0] == doctest::Approx(1.0 / 3));
        CHECK(out[1] == doctest::Approx(2.0 / 3));
        CHECK(out[2] == 0.0);
        CHECK(out[3] == 0.0);
    }

    TEST_CASE("KNN breaks distance ties by training order") {
        Matrix X = from_rows({{1.0}, {-1.0}});
        KnnModel m(X, std::vector<int>{2, 1}, 1, 4);
        std::vector<double> out(4);
        const std::vector<double> q{0.0};
        m.predict_proba(q, out);
        CHECK(out[2] == 1.0);
    }

    TEST_CASE("KNN batch equals per-query prediction") {
        auto t = toy(120);
        KnnModel m(t.X, t.y, 5, 4);
        Matrix batch = m.predict_proba_batch(t.X, Exec::serial);
        std::vector<double> out(4);
        for (std::size_t i = 0; i < t.X.rows(); ++i) {
            m.predict_proba(t.X.row(i), out);
            for (std::size_t c = 0; c < 4; ++c) CHECK(batch(i, c) == out[c]);
        }
    }

    TEST_CASE("forest of unanimous trees is certain") {
        Matrix X = from_rows({{0}, {1}, {2}, {3}, {10}, {11}, {12}, {13}});
        std::vector<int> y{0, 0, 0, 0, 3, 3, 3, 3};
        auto m = ForestModel::fit({{"n_estimators", std::int64_t{10}}, {"bootstrap", false}}, X, y, 4, 7);
        std::vector<double> out(4);
        const std::vector<double> q{1.5};
        m->predict_proba(q, out);
        CHECK(out[0] == 1.0);
    }

    TEST_CASE("XOR needs depth two") {
        Matrix X = from_rows({{0, 0}, {1, 1}, {0, 1}, {1, 0}});
        std::vector<int> y{0, 0, 1, 1};
        Rng rng(1);
        TreeParams p1;
        p1.max_depth = 1;
        auto stump = DecisionTree::fit(X, y, {}, 2, p1, rng);
        int right = 0;
        for (std::size_t i = 0; i < 4; ++i) right += stump.predict_label(X.row(i)) == y[i];
        // Every axis split leaves each child half and half.
        CHECK(best_stump_impurity(X, y) == doctest::Approx(2.0));
        CHECK(right == 2);

        TreeParams p2;
        p2.max_depth = 2;
        auto tree = DecisionTree::fit(X, y, {}, 2, p2, rng);
        for (std::size_t i = 0; i < 4; ++i) CHECK(tree.predict_label(X.row(i)) == y[i]);
        CHECK(tree.depth() == 2);
    }

    TEST_CASE("stump split matches brute-force Gini minimum") {
        auto t = toy(150);
        Rng rng(3);
        TreeParams p;
        p.max_depth = 1;
        auto stump = DecisionTree::fit(t.X, t.y, {}, 4, p, rng);
        std::map<const double*, std::array<double, 4>> leaves;
        for (std::size_t i = 0; i < t.X.rows(); ++i)
            leaves[stump.leaf_distribution(t.X.row(i)).data()][static_cast<std::size_t>(t.y[i])] += 1;
        REQUIRE(leaves.size() == 2);
        double impurity = 0;
        for (const auto& [leaf, c] : leaves) impurity += (c[0] + c[1] + c[2] + c[3]) * gini(c);
        CHECK(impurity == doctest::Approx(best_stump_impurity(t.X, t.y)).epsilon(1e-12));
    }

    TEST_CASE("unlimited tree fits distinct points exactly") {
        auto t = toy(100);
        Rng rng(5);
        auto tree = DecisionTree::fit(t.X, t.y, {}, 4, TreeParams{}, rng);
        for (std::size_t i = 0; i < t.X.rows(); ++i) CHECK(tree.predict_label(t.X.row(i)) == t.y[i]);
    }

    TEST_CASE("one-tree forest without bootstrap equals a single tree") {
        auto t = toy(150);
        const Hyperparams hp{{"n_estimators", std::int64_t{1}}, {"bootstrap", false},
                             {"max_features", std::string("all")}, {"max_depth", std::int64_t{4}}};
        auto forest = ForestModel::fit(hp, t.X, t.y, 4, 99);
        Rng rng = make_rng(99, "forest-tree", 0);
        TreeParams tp;
        tp.max_depth = 4;
        auto tree = DecisionTree::fit(t.X, t.y, {}, 4, tp, rng);
        const auto* fm = dynamic_cast<const ForestModel*>(forest.get());
        REQUIRE(fm);
        CHECK(fm->trees().front() == tree);
    }

    TEST_CASE("SAMME rounds are better than chance with positive weight") {
        auto t = toy(200);
        auto m = AdaBoostModel::fit({{"n_estimators", std::int64_t{15}}, {"Base_estimator_max_depth", std::int64_t{1}},
                                     {"learning_rate", 0.5}},
                                    t.X, t.y, 4, 1);
        const auto* ada = dynamic_cast<const AdaBoostModel*>(m.get());
        REQUIRE(ada);
        REQUIRE(ada->size() >= 1);
        for (const auto& r : ada->rounds()) {
            CHECK(r.error < 0.75);
            CHECK(r.raw_weight == doctest::Approx(std::log((1 - r.error) / r.error) + std::log(3.0)));
            CHECK(r.raw_weight > 0);
        }
    }

    TEST_CASE("AdaBoost stops after a perfect round") {
        Matrix X = from_rows({{0}, {1}, {5}, {6}});
        std::vector<int> y{0, 0, 1, 1};
        auto m = AdaBoostModel::fit({{"n_estimators", std::int64_t{50}}, {"Base_estimator_max_depth", std::int64_t{1}}},
                                    X, y, 2, 1);
        const auto* ada = dynamic_cast<const AdaBoostModel*>(m.get());
        CHECK(ada->size() == 1);
        std::vector<double> out(2);
        m->predict_proba(X.row(3), out);
        CHECK(out[1] > out[0]);
    }

    TEST_CASE("boosting training loss is non-increasing") {
        auto t = toy(200);
        for (Growth g : {Growth::depthwise, Growth::leafwise}) {
            BoostParams p;
            p.growth = g;
            p.n_estimators = 25;
            p.learning_rate = 0.1;
            p.max_depth = 3;
            p.num_leaves = 8;
            auto fit = fit_boosting(p, t.X, t.y, 4, 1, true);
            REQUIRE(fit.train_loss.size() == 26);
            CHECK(fit.train_loss.front() == doctest::Approx(-std::log(0.25)).epsilon(0.2));
            for (std::size_t r = 1; r < fit.train_loss.size(); ++r)
                CHECK(fit.train_loss[r] <= fit.train_loss[r - 1] + 1e-12);
            CHECK(fit.train_loss.back() < fit.train_loss.front());
        }
    }

    TEST_CASE("SMO solution satisfies the KKT conditions") {
        auto t = toy(120);
        std::vector<int> labels(t.y.size());
        for (std::size_t i = 0; i < t.y.size(); ++i) labels[i] = t.y[i] == 0 ? 1 : -1;
        KernelParams k;
        k.gamma = 1.0 / static_cast<double>(t.X.cols());
        Matrix gram = gram_matrix_reference(t.X, k);
        const double C = 2.0;
        auto res = solve_smo(gram, labels, C, 1e-6, 1000000);
        CHECK(res.converged);
        CHECK(kkt_violation(gram, labels, res.alpha, C) < 1e-6);
        double balance = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            CHECK(res.alpha[i] >= 0);
            CHECK(res.alpha[i] <= C);
            balance += res.alpha[i] * labels[i];
        }
        CHECK(std::abs(balance) < 1e-9);
    }

    TEST_CASE("SVM separates well-separated clusters") {
        Matrix X = from_rows({{0, 0}, {0.2, 0.1}, {5, 5}, {5.1, 4.9}, {0, 5}, {0.1, 5.2}});
        std::vector<int> y{0, 0, 1, 1, 2, 2};
        auto m = SvmModel::fit({{"kernel", std::string("linear")}, {"C", 10.0}}, X, y, 4);
        std::vector<double> out(4);
        for (std::size_t i = 0; i < X.rows(); ++i) {
            m->predict_proba(X.row(i), out);
            CHECK(argmax_label(out) == y[i]);
            CHECK(out[3] == 0.0);
        }
    }

    TEST_CASE("parallel Gram equals the reference") {
        auto t = toy(80);
        for (KernelType type : {KernelType::linear, KernelType::poly, KernelType::rbf, KernelType::sigmoid}) {
            KernelParams k{type, 0.1, 0.5, 3};
            CHECK(gram_matrix(t.X, k, Exec::parallel) == gram_matrix_reference(t.X, k));
            CHECK(gram_matrix(t.X, k, Exec::serial) == gram_matrix_reference(t.X, k));
        }
    }

    TEST_CASE("MLP gradient matches finite differences") {
        auto t = toy(30);
        for (Activation a : {Activation::tanh, Activation::logistic, Activation::relu}) {
            MlpNetwork net({static_cast<int>(t.X.cols()), 5, 4, 4}, a);
            Rng rng(11);
            net.initialize(rng);
            std::vector<std::size_t> rows(t.X.rows());
            std::iota(rows.begin(), rows.end(), 0);
            std::vector<double> grad(net.params().size());
            net.loss_and_gradient(t.X, t.y, rows, 0.01, grad);
            const double h = 1e-6;
            for (std::size_t i = 0; i < grad.size(); i += 7) {
                const double orig = net.params()[i];
                net.params()[i] = orig + h;
                const double up = net.loss(t.X, t.y, rows, 0.01);
                net.params()[i] = orig - h;
                const double down = net.loss(t.X, t.y, rows, 0.01);
                net.params()[i] = orig;
                CHECK(grad[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-4).scale(1e-6));
            }
        }
    }

    TEST_CASE("MLP outputs a distribution and learns a separable problem") {
        Matrix X = from_rows({{-2, -2}, {-2.2, -1.8}, {2, 2}, {1.8, 2.1}, {-2, 2}, {-1.9, 2.2}, {2, -2}, {2.1, -1.9}});
        std::vector<int> y{0, 0, 1, 1, 2, 2, 3, 3};
        MlpTrainParams p;
        p.hidden = {8};
        p.solver = "adam";
        p.learning_rate_init = 0.05;
        p.batch_size = 8;
        p.max_epochs = 400;
        p.validation_fraction = 0.0;
        auto fit = fit_mlp(p, X, y, 4, 3);
        std::vector<double> out(4);
        for (std::size_t i = 0; i < X.rows(); ++i) {
            fit.network.forward(X.row(i), out);
            CHECK(std::accumulate(out.begin(), out.end(), 0.0) == doctest::Approx(1.0));
            CHECK(argmax_label(out) == y[i]);
        }
    }

    TEST_CASE("every family is deterministic and round-trips through JSON") {
        auto t = toy(160);
        for (const auto& spec : one_of_each()) {
            CAPTURE(spec.describe());
            auto a = fit_classifier(spec, t.X, t.y, 42, 4);
            auto b = fit_classifier(spec, t.X, t.y, 42, 4);
            CHECK(a.to_json() == b.to_json());
            const auto pa = all_probabilities(a, t.X);
            CHECK(pa == all_probabilities(b, t.X));
            auto back = TrainedClassifier::from_json(nlohmann::json::parse(a.to_json().dump()));
            CHECK(all_probabilities(back, t.X) == pa);
            for (std::size_t i = 0; i < pa.size(); i += 4) {
                double s = pa[i] + pa[i + 1] + pa[i + 2] + pa[i + 3];
                CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("spec validation") {
        CHECK_THROWS_AS(validate_spec({Family::KNN, {{"k", std::int64_t{3}}}}), ConfigError);
        CHECK_THROWS_AS(validate_spec({Family::KNN, {{"n_neighbors", std::int64_t{0}}}}), ConfigError);
        CHECK_THROWS_AS(validate_spec({Family::SVM, {{"kernel", std::string("cubic")}}}), ConfigError);
        CHECK_THROWS_AS(validate_spec({Family::GBLeafwise, {{"subsample", 1.5}}}), ConfigError);
        CHECK_THROWS_AS(validate_spec({Family::MLP, {{"activation", std::string("gelu")}}}), ConfigError);
        CHECK_NOTHROW(validate_spec({Family::RandomForest, {{"max_depth", std::monostate{}}}}));
        ClassifierSpec s{Family::SVM, {{"C", 0.1}, {"kernel", std::string("rbf")}}};
        CHECK(s.describe() == "SVM {'C': 0.1, 'kernel': 'rbf'}");
        CHECK(ClassifierSpec::from_json(s.to_json()) == s);
        CHECK(s.hash() == ClassifierSpec::from_json(s.to_json()).hash());
    }

    TEST_CASE("degenerate training input is a TrainingError") {
        const ClassifierSpec knn{Family::KNN, {{"n_neighbors", std::int64_t{1}}}};
        Matrix X = from_rows({{0}, {1}, {2}});
        CHECK_THROWS_AS(fit_classifier(knn, X, std::vector<int>{1, 1, 1}, 1, 4), TrainingError);
        CHECK_THROWS_AS(fit_classifier(knn, X, std::vector<int>{0, 1}, 1, 4), TrainingError);
        CHECK_THROWS_AS(fit_classifier(knn, X, std::vector<int>{0, 1, 7}, 1, 4), TrainingError);
        CHECK_THROWS_AS(fit_classifier(knn, Matrix(), std::vector<int>{}, 1, 4), TrainingError);
        Matrix bad = from_rows({{0}, {std::nan("")}, {2}});
        CHECK_THROWS_AS(fit_classifier(knn, bad, std::vector<int>{0, 1, 0}, 1, 4), TrainingError);
    }

    TEST_CASE("predicting with the wrong width is a DataError") {
        auto t = toy(60);
        auto c = fit_classifier({Family::KNN, {{"n_neighbors", std::int64_t{3}}}}, t.X, t.y, 1, 4);
        const std::vector<double> short_row(5, 0.0);
        CHECK_THROWS_AS(c.predict_proba(short_row), DataError);
    }
}
