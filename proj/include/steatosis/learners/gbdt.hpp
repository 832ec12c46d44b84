#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "steatosis/hyperparams.hpp"
#include "steatosis/learners/classifier.hpp"

namespace steatosis {

enum class Growth { depthwise, leafwise };

struct BoostParams {
    Growth growth = Growth::depthwise;
    int n_estimators = 100;
    double learning_rate = 0.1;
    int max_depth = 6;    // depthwise only
    int num_leaves = 31;  // leafwise only
    int min_child_samples = 1;
    double min_child_weight = 1.0;  // minimum hessian sum per child
    double subsample = 1.0;
    double colsample_bytree = 1.0;
    double gamma = 0.0;  // minimum split gain
    double reg_alpha = 0.0;
    double reg_lambda = 1.0;
    int max_bins = 64;
};

BoostParams boost_params(Family family, const Hyperparams& p);

// Regression tree over raw feature values; leaves hold shrunk Newton steps.
struct BoostTree {
    std::vector<int> feature;  // -1 for leaves
    std::vector<double> threshold;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<double> value;

    double predict(std::span<const double> x) const;
    std::size_t leaf_count() const;
};

// Multiclass softmax gradient boosting: one tree per class per round.
class BoostModel final : public Model {
public:
    BoostModel(std::vector<double> init, std::vector<BoostTree> trees, int class_count);

    void predict_proba(std::span<const double> x, std::span<double> out) const override;
    void raw_scores(std::span<const double> x, std::span<double> out) const;
    nlohmann::json state() const override;

    std::size_t rounds() const { return trees_.size() / init_.size(); }
    const std::vector<BoostTree>& trees() const { return trees_; }

    static std::shared_ptr<const Model> load(const nlohmann::json& j);

private:
    std::vector<double> init_;
    std::vector<BoostTree> trees_;  // round-major: trees_[round * K + class]
};

struct BoostFit {
    std::shared_ptr<const BoostModel> model;
    std::vector<double> train_loss;  // mean log-loss before round 1 and after each round
};

BoostFit fit_boosting(const BoostParams& params, const Matrix& X, std::span<const int> y, int class_count,
                      std::uint64_t seed, bool record_loss = false);

}  // namespace steatosis
