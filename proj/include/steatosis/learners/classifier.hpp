#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "steatosis/hyperparams.hpp"
#include "steatosis/matrix.hpp"

namespace steatosis {

enum class Family { KNN, SVM, RandomForest, AdaBoost, GBLeafwise, GBRegularized, MLP };

std::string_view family_name(Family f);
std::optional<Family> family_from_name(std::string_view name);

// Order used for layer-1 members, and hence for the layer-2 input layout.
const std::array<Family, 7>& canonical_family_order();
int canonical_rank(Family f);

struct ClassifierSpec {
    Family family = Family::KNN;
    Hyperparams params;

    nlohmann::json to_json() const;
    static ClassifierSpec from_json(const nlohmann::json& j);
    std::uint64_t hash() const;
    // "SVM {'C': 0.1, 'kernel': 'rbf'}"
    std::string describe() const;

    friend bool operator==(const ClassifierSpec&, const ClassifierSpec&) = default;
};

// Throws ConfigError for unknown keys or values outside the family's domain.
void validate_spec(const ClassifierSpec& spec);

using ProbabilityVector = std::vector<double>;

// Fitted, family-specific state. Implementations are immutable after fit.
class Model {
public:
    virtual ~Model() = default;
    virtual void predict_proba(std::span<const double> x, std::span<double> out) const = 0;
    virtual nlohmann::json state() const = 0;
};

class TrainedClassifier {
public:
    TrainedClassifier(ClassifierSpec spec, std::shared_ptr<const Model> model, int class_count, int feature_count);

    const ClassifierSpec& spec() const { return spec_; }
    int class_count() const { return class_count_; }
    int feature_count() const { return feature_count_; }

    ProbabilityVector predict_proba(std::span<const double> x) const;
    void predict_proba(std::span<const double> x, std::span<double> out) const;
    int predict_label(std::span<const double> x) const;

    template <class M>
    const M* model_as() const { return dynamic_cast<const M*>(model_.get()); }

    nlohmann::json to_json() const;
    static TrainedClassifier from_json(const nlohmann::json& j);

private:
    ClassifierSpec spec_;
    std::shared_ptr<const Model> model_;
    int class_count_;
    int feature_count_;
};

// Lowest index among the maximal entries.
int argmax_label(std::span<const double> p);

// Normalizes in place so the entries sum to one; clamps tiny negatives.
void normalize_probabilities(std::span<double> p);

// class_count == 0 means max(y) + 1. Throws TrainingError on degenerate input.
TrainedClassifier fit_classifier(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y,
                                 std::uint64_t seed, int class_count = 0);

}  // namespace steatosis
