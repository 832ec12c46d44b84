#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "steatosis/matrix.hpp"
#include "steatosis/random.hpp"

namespace steatosis {

struct TreeParams {
    std::optional<int> max_depth;  // nullopt: grow until pure
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    int max_features = 0;  // 0: all features
};

// CART classification tree with weighted Gini impurity. Thresholds are the
// midpoints between consecutive distinct sorted values; x <= threshold goes left.
class DecisionTree {
public:
    // rows selects (and may repeat) training rows; empty means all rows.
    // weights is indexed by row of X; empty means unit weights.
    static DecisionTree fit(const Matrix& X, std::span<const int> y, std::span<const double> weights, int class_count,
                            const TreeParams& params, Rng& rng, std::span<const std::size_t> rows = {});

    std::span<const double> leaf_distribution(std::span<const double> x) const;
    int predict_label(std::span<const double> x) const;

    std::size_t node_count() const { return nodes_.size(); }
    int depth() const;
    int class_count() const { return class_count_; }

    nlohmann::json to_json() const;
    static DecisionTree from_json(const nlohmann::json& j);

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;     // leaf: offset into values_
        int right = -1;
        friend bool operator==(const Node&, const Node&) = default;
    };

    std::vector<Node> nodes_;
    std::vector<double> values_;
    int class_count_ = 0;
};

}  // namespace steatosis
