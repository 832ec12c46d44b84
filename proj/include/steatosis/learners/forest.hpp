#pragma once

#include <memory>
#include <span>
#include <vector>

#include "steatosis/hyperparams.hpp"
#include "steatosis/kernels.hpp"
#include "steatosis/learners/classifier.hpp"
#include "steatosis/learners/tree.hpp"

namespace steatosis {

// Bagged CART trees with per-node feature subsampling; probabilities are the
// mean of the trees' leaf class distributions.
class ForestModel final : public Model {
public:
    explicit ForestModel(std::vector<DecisionTree> trees, int class_count);

    void predict_proba(std::span<const double> x, std::span<double> out) const override;
    nlohmann::json state() const override;

    const std::vector<DecisionTree>& trees() const { return trees_; }

    static std::shared_ptr<const Model> fit(const Hyperparams& p, const Matrix& X, std::span<const int> y,
                                            int class_count, std::uint64_t seed, Exec exec = default_exec());
    static std::shared_ptr<const Model> load(const nlohmann::json& j);

private:
    std::vector<DecisionTree> trees_;
    int class_count_;
};

// Resolves max_features ('auto', 'sqrt', 'log2', 'all' or an integer) for F columns.
int resolve_max_features(const Hyperparams& p, std::size_t feature_count);

// SAMME multiclass AdaBoost over depth-limited CART trees.
class AdaBoostModel final : public Model {
public:
    struct Round {
        double error;       // weighted training error of the round's tree
        double raw_weight;  // ln((1 - err) / err) + ln(K - 1), before shrinkage
    };

    AdaBoostModel(std::vector<DecisionTree> trees, std::vector<double> weights, std::vector<Round> rounds,
                  int class_count);

    void predict_proba(std::span<const double> x, std::span<double> out) const override;
    nlohmann::json state() const override;

    const std::vector<Round>& rounds() const { return rounds_; }
    std::size_t size() const { return trees_.size(); }

    static std::shared_ptr<const Model> fit(const Hyperparams& p, const Matrix& X, std::span<const int> y,
                                            int class_count, std::uint64_t seed);
    static std::shared_ptr<const Model> load(const nlohmann::json& j);

private:
    std::vector<DecisionTree> trees_;
    std::vector<double> weights_;
    std::vector<Round> rounds_;
    int class_count_;
};

}  // namespace steatosis
