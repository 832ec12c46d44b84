#include "steatosis/evaluation.hpp"

#include <algorithm>
#include <set>

#include "steatosis/errors.hpp"
#include "steatosis/random.hpp"

namespace steatosis {

std::string protocol_description(int k) {
    return "stratified " + std::to_string(k) +
           "-fold cross-validation within each layer's own tier dataset; upstream layers frozen; "
           "z-score statistics fitted on training folds only; first-layer aggregate is the soft vote of its members";
}

namespace {

void attach_curves(LayerEvaluation& e, std::span<const int> y) {
    const auto& probs = e.cv.oof_probabilities;
    const auto nash = binary_nash(y, probs);
    const bool pos = std::count(nash.labels.begin(), nash.labels.end(), 1) > 0;
    const bool neg = std::count(nash.labels.begin(), nash.labels.end(), 0) > 0;
    if (pos && neg) e.nash_roc = roc_auc(nash.labels, nash.scores);
    std::set<int> present(y.begin(), y.end());
    if (present.size() >= 2) {
        e.ovr = ovr_curves(y, probs);
        e.macro_auc = macro_ovr_auc(y, probs);
    }
}

LayerEvaluation run(std::string name, int tier, std::span<const ClassifierSpec> specs, const Matrix& X,
                    std::span<const int> y, std::vector<bool> mask, int k, std::uint64_t seed, Exec exec) {
    CvOptions o;
    o.k = k;
    o.seed = seed;
    o.exec = exec;
    o.scale_columns = std::move(mask);
    LayerEvaluation e{std::move(name), tier, cross_validate(specs, X, y, o), std::nullopt, std::nullopt, {}};
    attach_curves(e, y);
    return e;
}

}  // namespace

CascadeEvaluation evaluate_cascade_cv(const CascadeModel& model, const Partition& data, int k, std::uint64_t seed,
                                      bool include_base, Exec exec) {
    CascadeEvaluation out;
    out.protocol = protocol_description(k);
    const std::uint64_t s = substream_seed(seed, "eval-folds");

    const TierDataset& d1 = data[Tier::one];
    std::vector<ClassifierSpec> member_specs;
    for (const auto& m : model.layer1().members) member_specs.push_back(m.spec());
    if (d1.size() > 0) {
        if (include_base)
            for (const auto& spec : member_specs)
                out.base.push_back(run(std::string(family_name(spec.family)), 1, std::span(&spec, 1), d1.X, d1.y, {},
                                       k, s, exec));
        out.layer1 = run("First-layer Classifier", 1, member_specs, d1.X, d1.y, {}, k, s, exec);
    }
    if (data[Tier::two].size() > 0) {
        const auto design = layer2_design(model.layer1(), data[Tier::two]);
        const auto spec = model.layer2().network.spec();
        out.layer2 = run("Second-layer Classifier", 2, std::span(&spec, 1), design.X, data[Tier::two].y,
                         design.scale_mask, k, s, exec);
    }
    if (data[Tier::three].size() > 0) {
        const auto design = layer3_design(model.layer1(), model.layer2(), data[Tier::three]);
        const auto spec = model.layer3().network.spec();
        out.layer3 = run("Third-layer Classifier", 3, std::span(&spec, 1), design.X, data[Tier::three].y,
                         design.scale_mask, k, s, exec);
    }
    return out;
}

nlohmann::json to_json(const LayerEvaluation& e) {
    nlohmann::json j{{"model", e.name}, {"tier", e.tier}, {"table", report_json(e.cv)}, {"cv", to_json(e.cv)}};
    j["nash_auc"] = e.nash_roc ? nlohmann::json(e.nash_roc->auc) : nlohmann::json(nullptr);
    j["macro_ovr_auc"] = e.macro_auc ? nlohmann::json(*e.macro_auc) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const CascadeEvaluation& e) {
    nlohmann::json j{{"protocol", e.protocol}};
    auto base = nlohmann::json::array();
    for (const auto& b : e.base) base.push_back(to_json(b));
    j["base_learners"] = base;
    j["layer1"] = e.layer1 ? to_json(*e.layer1) : nlohmann::json(nullptr);
    j["layer2"] = e.layer2 ? to_json(*e.layer2) : nlohmann::json(nullptr);
    j["layer3"] = e.layer3 ? to_json(*e.layer3) : nlohmann::json(nullptr);
    return j;
}

RoutedEvaluation evaluate_routed(const CascadeModel& model, std::span<const SubjectRecord> records) {
    RoutedEvaluation out;
    std::map<int, std::pair<std::vector<int>, std::vector<int>>> by_layer;
    std::vector<int> y_all, pred_all;
    std::vector<std::vector<double>> probs;
    for (const auto& r : records) {
        if (!r.label || !availability_tier(r)) {
            ++out.skipped;
            continue;
        }
        const auto p = model.predict(r);
        auto& [yt, yp] = by_layer[p.layer_used];
        yt.push_back(*r.label);
        yp.push_back(p.label);
        y_all.push_back(*r.label);
        pred_all.push_back(p.label);
        probs.push_back(p.probabilities);
    }
    out.scored = y_all.size();
    if (out.scored == 0) throw DataError("no labeled records to evaluate");
    for (const auto& [layer, pair] : by_layer) out.strata[layer] = summarize(confusion(pair.first, pair.second, kClassCount));
    out.overall = summarize(confusion(y_all, pred_all, kClassCount));
    const auto nash = binary_nash(y_all, probs);
    if (std::count(nash.labels.begin(), nash.labels.end(), 1) > 0 &&
        std::count(nash.labels.begin(), nash.labels.end(), 0) > 0)
        out.nash_roc = roc_auc(nash.labels, nash.scores);
    std::set<int> present(y_all.begin(), y_all.end());
    if (present.size() >= 2) {
        out.ovr = ovr_curves(y_all, probs);
        out.macro_auc = macro_ovr_auc(y_all, probs);
    }
    return out;
}

nlohmann::json to_json(const RoutedEvaluation& e) {
    nlohmann::json strata = nlohmann::json::object();
    for (const auto& [layer, s] : e.strata) {
        auto j = report_json(s);
        j["metrics"] = to_json(s);
        strata["layer" + std::to_string(layer)] = j;
    }
    auto overall = report_json(e.overall);
    overall["metrics"] = to_json(e.overall);
    return {{"scored", e.scored},
            {"skipped", e.skipped},
            {"strata", strata},
            {"overall", overall},
            {"nash_auc", e.nash_roc ? nlohmann::json(e.nash_roc->auc) : nlohmann::json(nullptr)},
            {"macro_ovr_auc", e.macro_auc ? nlohmann::json(*e.macro_auc) : nlohmann::json(nullptr)}};
}

}  // namespace steatosis
