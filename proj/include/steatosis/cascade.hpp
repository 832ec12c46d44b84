#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "steatosis/ingest.hpp"
#include "steatosis/learners/classifier.hpp"
#include "steatosis/schema.hpp"
#include "steatosis/tuning.hpp"

namespace steatosis {

inline constexpr std::size_t kTier1Width = 12;
inline constexpr std::size_t kTier2Width = 16;
inline constexpr std::size_t kTier3Width = 22;

struct Layer1Ensemble {
    std::vector<TrainedClassifier> members;  // canonical family order
    Scaler scaler;                           // tier-1 features, fitted on D1

    // Concatenated member probability width.
    std::size_t output_width() const { return members.size() * kClassCount; }
    // raw: the 12 unscaled tier-1 values.
    std::vector<ProbabilityVector> outputs(std::span<const double> raw) const;
};

struct MetaNetwork {
    Tier tier = Tier::two;
    TrainedClassifier network;
    Scaler exclusive_scaler;  // features added by this tier, fitted on its training rows
    std::size_t input_width = 0;
};

struct CascadePrediction {
    ProbabilityVector probabilities;
    int label = 0;
    double nash_probability = 0.0;
    int layer_used = 1;
};

struct Provenance {
    std::uint64_t seed = 0;
    std::string config_hash;
    // Sorted record fingerprints of D1, D2, D3.
    std::array<std::vector<std::uint64_t>, 3> fingerprints;
};

class CascadeModel {
public:
    CascadeModel(Layer1Ensemble layer1, MetaNetwork layer2, MetaNetwork layer3, Provenance provenance);

    const Layer1Ensemble& layer1() const { return layer1_; }
    const MetaNetwork& layer2() const { return layer2_; }
    const MetaNetwork& layer3() const { return layer3_; }
    const Provenance& provenance() const { return provenance_; }
    Provenance& provenance() { return provenance_; }

    // Throws DataError("insufficient features") when tier-1 features are missing.
    CascadePrediction predict(const SubjectRecord& record) const;
    // Forces a layer; raw holds at least that layer's tier features.
    CascadePrediction predict_layer(int layer, std::span<const double> raw) const;

    nlohmann::json to_json() const;
    static CascadeModel from_json(const nlohmann::json& j);

private:
    Layer1Ensemble layer1_;
    MetaNetwork layer2_;
    MetaNetwork layer3_;
    Provenance provenance_;
};

// Mean of member vectors; label by lowest-index argmax.
CascadePrediction aggregate_layer1(std::span<const ProbabilityVector> outputs);
// Restricts the record to tier-1 features; throws DataError when one is missing.
std::vector<ProbabilityVector> layer1_outputs(const Layer1Ensemble& ensemble, const SubjectRecord& record);

// Meta inputs from raw (unscaled) tier features, in canonical layout.
std::vector<double> layer2_input(const Layer1Ensemble& l1, const Scaler& tier2_exclusive, std::span<const double> raw16);
std::vector<double> layer3_input(const Layer1Ensemble& l1, const MetaNetwork& l2, const Scaler& tier3_exclusive,
                                 std::span<const double> raw22);

// Meta training matrices with the layer's exclusive block left unscaled.
// The returned mask marks those columns for per-fold z-scoring.
struct MetaDesign {
    Matrix X;
    std::vector<bool> scale_mask;
    std::size_t exclusive_begin = 0, exclusive_end = 0;
};
MetaDesign layer2_design(const Layer1Ensemble& l1, const TierDataset& d2);
MetaDesign layer3_design(const Layer1Ensemble& l1, const MetaNetwork& l2, const TierDataset& d3);

struct LayerOptions {
    int k = 10;
    std::uint64_t seed = 0;
    double threshold = 0.70;
    int budget = 60;
    Exec exec = default_exec();
};

struct Layer1Training {
    Layer1Ensemble ensemble;
    Selection selection;
};

// Screens the candidates on D1 and refits the kept ones on all of D1.
// Throws TrainingError("no classifier exceeded threshold") on an empty selection.
Layer1Training train_layer1(const TierDataset& d1, std::span<const ClassifierSpec> candidates, const LayerOptions& options);

struct MetaTraining {
    MetaNetwork network;
    SearchResult search;
};

MetaTraining train_layer2(const Layer1Ensemble& l1, std::span<const std::uint64_t> d1_fingerprints,
                          const TierDataset& d2, const SearchSpace& space, const LayerOptions& options);
MetaTraining train_layer3(const Layer1Ensemble& l1, const MetaNetwork& l2,
                          std::span<const std::uint64_t> upstream_fingerprints, const TierDataset& d3,
                          const SearchSpace& space, const LayerOptions& options);

struct CascadeOptions {
    int k = 10;
    std::uint64_t seed = 0;
    double threshold = 0.70;
    std::vector<Family> families;  // empty = all seven
    int layer1_budget = 60;
    int meta_budget = 60;
    std::map<Family, SearchSpace> layer1_spaces;  // missing families use default_space
    std::optional<SearchSpace> layer2_space, layer3_space;
    Exec exec = default_exec();
};

struct CascadeTraining {
    CascadeModel model;
    std::vector<SearchResult> layer1_searches;  // one per screened family
    Selection selection;
    SearchResult layer2_search;
    SearchResult layer3_search;
};

// Throws DataError("empty tier N") when a tier dataset is empty.
CascadeTraining train_cascade(const Partition& data, const CascadeOptions& options);

}  // namespace steatosis
