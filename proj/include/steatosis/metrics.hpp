#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace steatosis {

// counts[i][j]: true class i predicted as j.
struct ConfusionMatrix {
    int classes = 0;
    std::vector<std::vector<std::size_t>> counts;

    std::size_t total() const;
    std::size_t row_total(int c) const;
    std::size_t col_total(int c) const;
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, int classes);

// Per-class entries are nullopt when the class is absent from y_true
// (sensitivity, F1) or when every sample belongs to it (specificity).
struct MetricsSummary {
    double accuracy = 0.0;
    std::vector<std::optional<double>> sensitivity;
    std::vector<std::optional<double>> specificity;
    std::vector<std::optional<double>> f1;
    std::vector<bool> present;
    double macro_sensitivity = 0.0;
    double macro_specificity = 0.0;
    double macro_f1 = 0.0;
    std::size_t samples = 0;
};

MetricsSummary summarize(const ConfusionMatrix& cm);

// Machine-readable fractions.
nlohmann::json to_json(const MetricsSummary& s);
// Percentages with one decimal under the report vocabulary (Acc, M-avg Sens, ...).
nlohmann::json report_json(const MetricsSummary& s);
double percent1(double fraction);

struct BinaryScores {
    std::vector<int> labels;
    std::vector<double> scores;
};

// NASH = grade >= 1; score = 1 - p0.
BinaryScores binary_nash(std::span<const int> grades, std::span<const std::vector<double>> probabilities);

struct RocPoint {
    double fpr;
    double tpr;
    double threshold;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

// Rank-statistic AUC with half credit for ties. Throws DataError on single-class input.
double rank_auc(std::span<const int> labels, std::span<const double> scores);
// Threshold sweep over distinct scores, starting at (0, 0, +inf).
RocCurve roc_auc(std::span<const int> labels, std::span<const double> scores);
double trapezoid_area(const RocCurve& curve);

double macro_ovr_auc(std::span<const int> y_true, std::span<const std::vector<double>> probabilities);
// One curve per class present in y_true.
std::vector<std::pair<int, RocCurve>> ovr_curves(std::span<const int> y_true,
                                                 std::span<const std::vector<double>> probabilities);

std::string roc_csv(const RocCurve& curve);

}  // namespace steatosis
