#pragma once

#include <memory>
#include <span>

#include "steatosis/hyperparams.hpp"
#include "steatosis/kernels.hpp"
#include "steatosis/learners/classifier.hpp"

namespace steatosis {

// Brute-force k nearest neighbours under Euclidean distance with uniform
// votes. Equal distances are ordered by training row index.
class KnnModel final : public Model {
public:
    KnnModel(Matrix X, std::vector<int> y, int k, int class_count);

    void predict_proba(std::span<const double> x, std::span<double> out) const override;
    // Batch prediction over many queries; one row of probabilities per query.
    Matrix predict_proba_batch(const Matrix& queries, Exec exec = default_exec()) const;
    nlohmann::json state() const override;

    static std::shared_ptr<const Model> fit(const Hyperparams& p, const Matrix& X, std::span<const int> y,
                                            int class_count);
    static std::shared_ptr<const Model> load(const nlohmann::json& j);

private:
    void vote(std::span<const double> distances, std::span<double> out) const;

    Matrix X_;
    std::vector<int> y_;
    int k_;
    int class_count_;
};

}  // namespace steatosis
