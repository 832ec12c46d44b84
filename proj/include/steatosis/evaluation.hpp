#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "steatosis/cascade.hpp"
#include "steatosis/metrics.hpp"
#include "steatosis/tuning.hpp"

namespace steatosis {

struct LayerEvaluation {
    std::string name;
    int tier = 1;
    CVResult cv;
    std::optional<RocCurve> nash_roc;
    std::optional<double> macro_auc;
    std::vector<std::pair<int, RocCurve>> ovr;
};

struct CascadeEvaluation {
    std::string protocol;
    std::vector<LayerEvaluation> base;  // one per layer-1 member
    std::optional<LayerEvaluation> layer1, layer2, layer3;
};

std::string protocol_description(int k);

// k-fold CV inside each layer's own tier dataset with upstream layers frozen.
// Folds derive from substream "eval-folds" so they differ from tuning folds.
CascadeEvaluation evaluate_cascade_cv(const CascadeModel& model, const Partition& data, int k, std::uint64_t seed,
                                      bool include_base = true, Exec exec = default_exec());

nlohmann::json to_json(const LayerEvaluation& e);
nlohmann::json to_json(const CascadeEvaluation& e);

struct RoutedEvaluation {
    std::map<int, MetricsSummary> strata;  // keyed by layer_used
    MetricsSummary overall;
    std::optional<RocCurve> nash_roc;
    std::optional<double> macro_auc;
    std::vector<std::pair<int, RocCurve>> ovr;
    std::size_t scored = 0;
    std::size_t skipped = 0;  // unlabeled or insufficient features
};

// Routes every labeled record through the cascade.
RoutedEvaluation evaluate_routed(const CascadeModel& model, std::span<const SubjectRecord> records);
nlohmann::json to_json(const RoutedEvaluation& e);

}  // namespace steatosis
