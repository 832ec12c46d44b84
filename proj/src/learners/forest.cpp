#include "steatosis/learners/forest.hpp"

#include <cmath>

#include "steatosis/errors.hpp"

namespace steatosis {

int resolve_max_features(const Hyperparams& p, std::size_t feature_count) {
    const auto F = static_cast<double>(feature_count);
    auto it = p.find("max_features");
    if (it == p.end()) return std::max(1, static_cast<int>(std::sqrt(F)));
    if (auto s = std::get_if<std::string>(&it->second)) {
        // 'auto' is the classifier alias for 'sqrt'
        if (*s == "auto" || *s == "sqrt") return std::max(1, static_cast<int>(std::sqrt(F)));
        if (*s == "log2") return std::max(1, static_cast<int>(std::log2(F)));
        if (*s == "all") return static_cast<int>(feature_count);
        throw ConfigError("max_features: unknown option '" + *s + "'");
    }
    if (std::holds_alternative<std::monostate>(it->second)) return static_cast<int>(feature_count);
    return static_cast<int>(std::min<std::int64_t>(param_int(p, "max_features", 1), static_cast<std::int64_t>(feature_count)));
}

ForestModel::ForestModel(std::vector<DecisionTree> trees, int class_count)
    : trees_(std::move(trees)), class_count_(class_count) {}

void ForestModel::predict_proba(std::span<const double> x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& t : trees_) {
        auto d = t.leaf_distribution(x);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += d[c];
    }
    for (auto& v : out) v /= static_cast<double>(trees_.size());
}

nlohmann::json ForestModel::state() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    return {{"classes", class_count_}, {"trees", trees}};
}

std::shared_ptr<const Model> ForestModel::fit(const Hyperparams& p, const Matrix& X, std::span<const int> y,
                                              int class_count, std::uint64_t seed, Exec exec) {
    const auto n_trees = static_cast<std::size_t>(param_int(p, "n_estimators", 100));
    TreeParams tp;
    if (auto d = param_optional_int(p, "max_depth", std::nullopt)) tp.max_depth = static_cast<int>(*d);
    tp.min_samples_split = static_cast<int>(param_int(p, "min_samples_split", 2));
    tp.min_samples_leaf = static_cast<int>(param_int(p, "min_samples_leaf", 1));
    tp.max_features = resolve_max_features(p, X.cols());
    const bool bootstrap = param_bool(p, "bootstrap", true);

    std::vector<DecisionTree> trees(n_trees);
    parallel_for(n_trees, exec, [&](std::size_t t) {
        Rng rng = make_rng(seed, "forest-tree", t);
        std::vector<std::size_t> rows;
        if (bootstrap) {
            rows.resize(X.rows());
            std::uniform_int_distribution<std::size_t> pick(0, X.rows() - 1);
            for (auto& r : rows) r = pick(rng);
        }
        trees[t] = DecisionTree::fit(X, y, {}, class_count, tp, rng, rows);
    });
    return std::make_shared<ForestModel>(std::move(trees), class_count);
}

std::shared_ptr<const Model> ForestModel::load(const nlohmann::json& j) {
    std::vector<DecisionTree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(DecisionTree::from_json(t));
    if (trees.empty()) throw std::invalid_argument("forest: no trees");
    return std::make_shared<ForestModel>(std::move(trees), j.at("classes").get<int>());
}

}  // namespace steatosis
