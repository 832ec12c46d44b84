#include "steatosis/learners/tree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace steatosis {

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    std::size_t left_count = 0;  // entries of the sorted order that go left
    double score = 0.0;          // weighted Gini of both children, lower is better
};

struct Task {
    int node;
    std::vector<std::size_t> rows;
    int depth;
};

double gini_mass(std::span<const double> class_weight, double total) {
    if (total <= 0.0) return 0.0;
    double sq = 0.0;
    for (double w : class_weight) sq += w * w;
    return total - sq / total;
}

}  // namespace

DecisionTree DecisionTree::fit(const Matrix& X, std::span<const int> y, std::span<const double> weights,
                               int class_count, const TreeParams& params, Rng& rng,
                               std::span<const std::size_t> rows) {
    if (X.rows() != y.size()) throw std::invalid_argument("tree: X/y size mismatch");
    if (!weights.empty() && weights.size() != X.rows()) throw std::invalid_argument("tree: weight size mismatch");
    const std::size_t F = X.cols();
    const auto K = static_cast<std::size_t>(class_count);
    auto weight = [&](std::size_t r) { return weights.empty() ? 1.0 : weights[r]; };

    DecisionTree tree;
    tree.class_count_ = class_count;

    std::vector<std::size_t> root_rows;
    if (rows.empty()) {
        root_rows.resize(X.rows());
        std::iota(root_rows.begin(), root_rows.end(), std::size_t{0});
    } else {
        root_rows.assign(rows.begin(), rows.end());
    }
    if (root_rows.empty()) throw std::invalid_argument("tree: no training rows");

    const std::size_t feature_budget =
        params.max_features <= 0 ? F : std::min<std::size_t>(F, static_cast<std::size_t>(params.max_features));
    std::vector<std::size_t> feature_pool(F);
    std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});

    std::vector<Task> stack;
    tree.nodes_.push_back({});
    stack.push_back({0, std::move(root_rows), 0});

    std::vector<std::pair<double, std::size_t>> sorted;
    std::vector<double> node_w(K), left_w(K), right_w(K);

    while (!stack.empty()) {
        Task task = std::move(stack.back());
        stack.pop_back();
        const auto& R = task.rows;
        const std::size_t n = R.size();

        std::fill(node_w.begin(), node_w.end(), 0.0);
        for (auto r : R) node_w[static_cast<std::size_t>(y[r])] += weight(r);
        const double total = std::accumulate(node_w.begin(), node_w.end(), 0.0);
        const std::size_t nonzero =
            static_cast<std::size_t>(std::count_if(node_w.begin(), node_w.end(), [](double w) { return w > 0.0; }));

        auto make_leaf = [&] {
            Node& node = tree.nodes_[static_cast<std::size_t>(task.node)];
            node.feature = -1;
            node.left = static_cast<int>(tree.values_.size());
            for (std::size_t c = 0; c < K; ++c) tree.values_.push_back(total > 0.0 ? node_w[c] / total : 1.0 / K);
        };

        const auto msl = static_cast<std::size_t>(std::max(1, params.min_samples_leaf));
        if ((params.max_depth && task.depth >= *params.max_depth) ||
            n < static_cast<std::size_t>(std::max(2, params.min_samples_split)) || n < 2 * msl || nonzero <= 1) {
            make_leaf();
            continue;
        }

        // Feature subset for this node, visited in ascending index order.
        std::vector<std::size_t> features;
        if (feature_budget < F) {
            for (std::size_t i = 0; i < feature_budget; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, F - 1);
                std::swap(feature_pool[i], feature_pool[pick(rng)]);
            }
            features.assign(feature_pool.begin(), feature_pool.begin() + static_cast<std::ptrdiff_t>(feature_budget));
            std::sort(features.begin(), features.end());
        } else {
            features = feature_pool;
        }

        Split best;
        double best_score = std::numeric_limits<double>::infinity();
        const double tie_eps = 1e-12 * std::max(1.0, total);
        std::vector<std::size_t> best_order;
        for (auto f : features) {
            sorted.clear();
            for (std::size_t i = 0; i < n; ++i) sorted.emplace_back(X(R[i], f), i);
            std::sort(sorted.begin(), sorted.end());
            if (sorted.front().first == sorted.back().first) continue;

            std::fill(left_w.begin(), left_w.end(), 0.0);
            double left_total = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const auto r = R[sorted[i].second];
                left_w[static_cast<std::size_t>(y[r])] += weight(r);
                left_total += weight(r);
                if (sorted[i].first == sorted[i + 1].first) continue;
                const std::size_t nl = i + 1;
                if (nl < msl || n - nl < msl) continue;
                for (std::size_t c = 0; c < K; ++c) right_w[c] = node_w[c] - left_w[c];
                const double score = gini_mass(left_w, left_total) + gini_mass(right_w, total - left_total);
                if (score < best_score - tie_eps) {
                    best_score = score;
                    double thr = 0.5 * (sorted[i].first + sorted[i + 1].first);
                    if (!(thr < sorted[i + 1].first)) thr = sorted[i].first;
                    best = {static_cast<int>(f), thr, nl, score};
                    best_order.resize(n);
                    for (std::size_t k = 0; k < n; ++k) best_order[k] = sorted[k].second;
                }
            }
        }
        if (best.feature < 0) {
            make_leaf();
            continue;
        }

        std::vector<std::size_t> left_rows, right_rows;
        left_rows.reserve(best.left_count);
        right_rows.reserve(n - best.left_count);
        // Keep the parent's row order inside each child.
        std::vector<char> goes_left(n, 0);
        for (std::size_t k = 0; k < best.left_count; ++k) goes_left[best_order[k]] = 1;
        for (std::size_t i = 0; i < n; ++i) (goes_left[i] ? left_rows : right_rows).push_back(R[i]);

        const int left_id = static_cast<int>(tree.nodes_.size());
        tree.nodes_.push_back({});
        const int right_id = static_cast<int>(tree.nodes_.size());
        tree.nodes_.push_back({});
        Node& node = tree.nodes_[static_cast<std::size_t>(task.node)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = left_id;
        node.right = right_id;
        // Right first so the left subtree is expanded next (depth-first, left to right).
        stack.push_back({right_id, std::move(right_rows), task.depth + 1});
        stack.push_back({left_id, std::move(left_rows), task.depth + 1});
    }
    return tree;
}

std::span<const double> DecisionTree::leaf_distribution(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
        const auto& node = nodes_[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
    }
    return {values_.data() + nodes_[i].left, static_cast<std::size_t>(class_count_)};
}

int DecisionTree::predict_label(std::span<const double> x) const {
    auto d = leaf_distribution(x);
    return static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
}

int DecisionTree::depth() const {
    std::vector<int> depth(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, depth[i]);
        if (nodes_[i].feature >= 0) {
            depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
            depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
        }
    }
    return deepest;
}

nlohmann::json DecisionTree::to_json() const {
    std::vector<int> feature, left, right;
    std::vector<double> threshold;
    for (const auto& n : nodes_) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
    }
    return {{"classes", class_count_}, {"feature", feature}, {"threshold", threshold},
            {"left", left},           {"right", right},     {"values", values_}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
    DecisionTree t;
    t.class_count_ = j.at("classes").get<int>();
    auto feature = j.at("feature").get<std::vector<int>>();
    auto threshold = j.at("threshold").get<std::vector<double>>();
    auto left = j.at("left").get<std::vector<int>>();
    auto right = j.at("right").get<std::vector<int>>();
    t.values_ = j.at("values").get<std::vector<double>>();
    if (feature.empty() || threshold.size() != feature.size() || left.size() != feature.size() ||
        right.size() != feature.size())
        throw std::invalid_argument("tree: inconsistent node arrays");
    const auto n = static_cast<int>(feature.size());
    for (std::size_t i = 0; i < feature.size(); ++i) {
        Node node{feature[i], threshold[i], left[i], right[i]};
        if (node.feature >= 0) {
            if (node.left <= static_cast<int>(i) || node.left >= n || node.right <= static_cast<int>(i) || node.right >= n)
                throw std::invalid_argument("tree: bad child index");
        } else if (node.left < 0 || static_cast<std::size_t>(node.left + t.class_count_) > t.values_.size()) {
            throw std::invalid_argument("tree: bad leaf offset");
        }
        t.nodes_.push_back(node);
    }
    return t;
}

}  // namespace steatosis
