#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "steatosis/ingest.hpp"
#include "steatosis/kernels.hpp"
#include "steatosis/learners/classifier.hpp"
#include "steatosis/metrics.hpp"
#include "steatosis/random.hpp"

namespace steatosis {

struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;  // fold index per row

    std::vector<std::size_t> train_rows(int fold) const;
    std::vector<std::size_t> test_rows(int fold) const;
};

// Per-class shuffled rows dealt round-robin over the folds, fold labels permuted.
FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population convention
};

struct CVResult {
    int k = 0;
    std::vector<MetricsSummary> folds;
    MeanStd accuracy, macro_sensitivity, macro_specificity, macro_f1;
    // Means over the folds where the class value is defined.
    std::vector<std::optional<double>> sensitivity, specificity;
    // Pooled out-of-fold predictions, one row per input row.
    std::vector<std::vector<double>> oof_probabilities;
    std::vector<int> oof_labels;
    MetricsSummary pooled;
};

nlohmann::json to_json(const CVResult& r);
// Table-4 layout of the fold means, percentages with one decimal.
nlohmann::json report_json(const CVResult& r);

struct CvOptions {
    int k = 10;
    std::uint64_t seed = 0;
    // Columns z-scored with statistics of the training folds; empty = all.
    std::vector<bool> scale_columns;
    int class_count = kClassCount;
    Exec exec = default_exec();
    // Reuses an existing plan instead of deriving one from the seed.
    const FoldPlan* plan = nullptr;
    // Called once per fold with the rows used for fitting and for scoring.
    std::function<void(int fold, std::span<const std::size_t> train, std::span<const std::size_t> test)> observer;
};

// Fits every spec on the training folds; held-out predictions are the soft
// vote (mean probability vector) of the fitted specs.
CVResult cross_validate(std::span<const ClassifierSpec> specs, const Matrix& X, std::span<const int> y,
                        const CvOptions& options);
CVResult cross_validate(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y, const CvOptions& options);
CVResult cross_validate(const ClassifierSpec& spec, const TierDataset& data, int k, std::uint64_t seed);

// Derived seeds shared by every caller of the fold machinery.
std::uint64_t fold_seed(std::uint64_t seed);
std::uint64_t fold_fit_seed(std::uint64_t seed, int fold);

struct Domain {
    enum class Kind { list, int_range, uniform };
    Kind kind = Kind::list;
    std::vector<HyperValue> values;      // list
    std::int64_t lo = 0, hi = 0;         // int_range: [lo, hi)
    double low = 0.0, high = 0.0;        // uniform: [low, high)

    static Domain list(std::vector<HyperValue> v);
    static Domain randint(std::int64_t lo, std::int64_t hi);
    static Domain uniform(double loc, double scale);

    bool empty() const;
    bool contains(const HyperValue& v) const;
    HyperValue sample(Rng& rng) const;
};

struct SearchSpace {
    Family family = Family::KNN;
    std::map<std::string, Domain> dims;
    // Applied to every sampled spec after the search dimensions.
    Hyperparams fixed;

    bool empty() const;
    ClassifierSpec sample(Rng& rng) const;
};

// Search spaces of the published tuning table; KNN uses k in {3, 5, 7, 9, 11}.
SearchSpace default_space(Family family);

// {"C": [0.1, 1], "num_leaves": {"randint": [6, 50]}, "subsample": {"uniform": [0.2, 0.8]},
//  "fixed": {"max_epochs": 100}}. Listed dimensions replace the defaults; others are kept.
SearchSpace space_with_overrides(SearchSpace base, const nlohmann::json& overrides);
nlohmann::json to_json(const SearchSpace& space);

struct SearchCandidate {
    ClassifierSpec spec;
    std::optional<double> mean_accuracy;
    std::string error;
};

struct SearchResult {
    ClassifierSpec best;
    CVResult best_cv;
    std::size_t best_index = 0;
    std::vector<SearchCandidate> candidates;
};

// Candidate i draws from make_rng(seed, "search-candidate", i); every candidate
// shares one fold plan. Ties go to the lower index. Throws ConfigError on an
// empty space and TrainingError when every candidate fails.
SearchResult random_search(const SearchSpace& space, int n_iter, const Matrix& X, std::span<const int> y,
                           const CvOptions& options);
SearchResult random_search(const SearchSpace& space, int n_iter, const TierDataset& data, int k,
                           std::uint64_t seed);

struct ScreenOutcome {
    ClassifierSpec spec;
    std::optional<double> mean_accuracy;
    bool kept = false;
    std::string error;
};

struct Selection {
    std::vector<ClassifierSpec> selected;  // canonical family order
    std::vector<ScreenOutcome> screened;   // input order
};

// Keeps specs whose mean CV accuracy is strictly above the threshold.
Selection select_base_classifiers(std::span<const ClassifierSpec> candidates, const Matrix& X,
                                  std::span<const int> y, const CvOptions& options, double threshold = 0.70);

// Stable sort into canonical family order.
void sort_canonical(std::vector<ClassifierSpec>& specs);

}  // namespace steatosis
