#include "steatosis/learners/forest.hpp"

#include <cmath>
#include <limits>

#include "steatosis/errors.hpp"

namespace steatosis {

AdaBoostModel::AdaBoostModel(std::vector<DecisionTree> trees, std::vector<double> weights, std::vector<Round> rounds,
                             int class_count)
    : trees_(std::move(trees)), weights_(std::move(weights)), rounds_(std::move(rounds)), class_count_(class_count) {}

void AdaBoostModel::predict_proba(std::span<const double> x, std::span<double> out) const {
    const auto K = static_cast<std::size_t>(class_count_);
    std::vector<double> decision(K, 0.0);
    double total = 0.0;
    for (std::size_t m = 0; m < trees_.size(); ++m) {
        decision[static_cast<std::size_t>(trees_[m].predict_label(x))] += weights_[m];
        total += weights_[m];
    }
    // softmax(decision / (K - 1)) over the normalized vote
    const double scale = K > 1 ? 1.0 / (static_cast<double>(K) - 1.0) : 1.0;
    double mx = -std::numeric_limits<double>::infinity();
    for (auto& d : decision) {
        d = d / total * scale;
        mx = std::max(mx, d);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < K; ++c) sum += out[c] = std::exp(decision[c] - mx);
    for (auto& v : out) v /= sum;
}

nlohmann::json AdaBoostModel::state() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    std::vector<double> errors, raw;
    for (const auto& r : rounds_) {
        errors.push_back(r.error);
        raw.push_back(r.raw_weight);
    }
    return {{"classes", class_count_}, {"trees", trees}, {"weights", weights_}, {"errors", errors}, {"raw_weights", raw}};
}

std::shared_ptr<const Model> AdaBoostModel::fit(const Hyperparams& p, const Matrix& X, std::span<const int> y,
                                                int class_count, std::uint64_t seed) {
    const auto n_rounds = param_int(p, "n_estimators", 50);
    const double lr = param_double(p, "learning_rate", 1.0);
    TreeParams tp;
    tp.max_depth = static_cast<int>(param_int(p, "Base_estimator_max_depth", 1));

    const std::size_t n = X.rows();
    const double K = class_count;
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<DecisionTree> trees;
    std::vector<double> weights;
    std::vector<Round> rounds;

    for (std::int64_t m = 0; m < n_rounds; ++m) {
        Rng rng = make_rng(seed, "adaboost-round", static_cast<std::uint64_t>(m));
        DecisionTree tree = DecisionTree::fit(X, y, w, class_count, tp, rng);
        std::vector<char> miss(n);
        double err = 0.0, wsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            miss[i] = tree.predict_label(X.row(i)) != y[i];
            if (miss[i]) err += w[i];
            wsum += w[i];
        }
        err /= wsum;

        if (err <= 0.0) {
            // Perfect fit: keep it with unit weight and stop.
            trees.push_back(std::move(tree));
            weights.push_back(1.0);
            rounds.push_back({0.0, std::numeric_limits<double>::infinity()});
            break;
        }
        if (err >= 1.0 - 1.0 / K) {
            if (trees.empty())
                throw TrainingError("AdaBoost: base estimator is no better than chance (error " + std::to_string(err) + ")");
            break;
        }
        const double raw = std::log((1.0 - err) / err) + std::log(K - 1.0);
        const double alpha = lr * raw;
        rounds.push_back({err, raw});
        trees.push_back(std::move(tree));
        weights.push_back(alpha);
        if (m + 1 == n_rounds) break;

        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (miss[i]) w[i] *= std::exp(alpha);
            norm += w[i];
        }
        for (auto& v : w) v /= norm;
    }
    return std::make_shared<AdaBoostModel>(std::move(trees), std::move(weights), std::move(rounds), class_count);
}

std::shared_ptr<const Model> AdaBoostModel::load(const nlohmann::json& j) {
    std::vector<DecisionTree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(DecisionTree::from_json(t));
    auto weights = j.at("weights").get<std::vector<double>>();
    auto errors = j.at("errors").get<std::vector<double>>();
    auto raw = j.at("raw_weights").get<std::vector<nlohmann::json>>();
    if (trees.empty() || weights.size() != trees.size() || errors.size() != trees.size() || raw.size() != trees.size())
        throw std::invalid_argument("adaboost: inconsistent state");
    std::vector<Round> rounds;
    for (std::size_t i = 0; i < errors.size(); ++i)
        rounds.push_back({errors[i], raw[i].is_null() ? std::numeric_limits<double>::infinity() : raw[i].get<double>()});
    return std::make_shared<AdaBoostModel>(std::move(trees), std::move(weights), std::move(rounds),
                                           j.at("classes").get<int>());
}

}  // namespace steatosis
