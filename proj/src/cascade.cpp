#include "steatosis/cascade.hpp"

#include <algorithm>
#include <set>

#include "steatosis/errors.hpp"
#include "steatosis/random.hpp"

namespace steatosis {

namespace {

void scale_block(const Scaler& s, std::span<const double> in, std::span<double> out) { s.transform(in, out); }

Scaler block_scaler(const Matrix& X, std::size_t begin, std::size_t end) { return fit_scaler(X.select_cols(begin, end - begin)); }

void apply_block(const Scaler& s, Matrix& X, std::size_t begin) {
    for (std::size_t r = 0; r < X.rows(); ++r) {
        auto row = X.row(r).subspan(begin, s.size());
        s.transform_inplace(row);
    }
}

std::vector<std::uint64_t> sorted(std::span<const std::uint64_t> v) {
    std::vector<std::uint64_t> out(v.begin(), v.end());
    std::sort(out.begin(), out.end());
    return out;
}

void require_disjoint(std::span<const std::uint64_t> upstream, std::span<const std::uint64_t> current, int tier) {
    const auto a = sorted(upstream);
    for (auto f : current)
        if (std::binary_search(a.begin(), a.end(), f))
            throw TrainingError("tier " + std::to_string(tier) + " data overlaps the data of an upstream layer");
}

void require_nonempty(const TierDataset& d, int tier) {
    if (d.size() == 0) throw DataError("empty tier " + std::to_string(tier));
}

ProbabilityVector layer_probabilities(const TrainedClassifier& net, std::span<const double> input, std::size_t width) {
    if (input.size() != width) throw DataError("meta input width mismatch");
    return net.predict_proba(input);
}

CascadePrediction make_prediction(ProbabilityVector p, int layer) {
    CascadePrediction out;
    out.label = argmax_label(p);
    out.nash_probability = 1.0 - p[0];
    out.probabilities = std::move(p);
    out.layer_used = layer;
    return out;
}

}  // namespace

std::vector<ProbabilityVector> Layer1Ensemble::outputs(std::span<const double> raw) const {
    if (raw.size() < kTier1Width) throw DataError("layer 1 needs the 12 tier-1 features");
    std::array<double, kTier1Width> scaled{};
    scaler.transform(raw.first(kTier1Width), scaled);
    std::vector<ProbabilityVector> out;
    out.reserve(members.size());
    for (const auto& m : members) out.push_back(m.predict_proba(scaled));
    return out;
}

CascadePrediction aggregate_layer1(std::span<const ProbabilityVector> outputs) {
    if (outputs.empty()) throw DataError("aggregate_layer1: no member outputs");
    ProbabilityVector mean(outputs.front().size(), 0.0);
    for (const auto& v : outputs) {
        if (v.size() != mean.size()) throw DataError("aggregate_layer1: member widths differ");
        for (std::size_t c = 0; c < v.size(); ++c) mean[c] += v[c];
    }
    for (double& v : mean) v /= static_cast<double>(outputs.size());
    return make_prediction(std::move(mean), 1);
}

std::vector<ProbabilityVector> layer1_outputs(const Layer1Ensemble& ensemble, const SubjectRecord& record) {
    std::array<double, kTier1Width> raw{};
    for (std::size_t j = 0; j < kTier1Width; ++j) {
        if (!record.values[j]) throw DataError("missing tier-1 feature " + std::string(feature_registry()[j].name));
        raw[j] = *record.values[j];
    }
    return ensemble.outputs(raw);
}

std::vector<double> layer2_input(const Layer1Ensemble& l1, const Scaler& tier2_exclusive, std::span<const double> raw16) {
    if (raw16.size() < kTier2Width) throw DataError("layer 2 needs the 16 tier-2 features");
    std::vector<double> in(kTier2Width + l1.output_width());
    scale_block(l1.scaler, raw16.first(kTier1Width), std::span(in).first(kTier1Width));
    scale_block(tier2_exclusive, raw16.subspan(kTier1Width, kTier2Width - kTier1Width),
                std::span(in).subspan(kTier1Width, kTier2Width - kTier1Width));
    std::size_t pos = kTier2Width;
    for (const auto& p : l1.outputs(raw16))
        for (double v : p) in[pos++] = v;
    return in;
}

std::vector<double> layer3_input(const Layer1Ensemble& l1, const MetaNetwork& l2, const Scaler& tier3_exclusive,
                                 std::span<const double> raw22) {
    if (raw22.size() < kTier3Width) throw DataError("layer 3 needs the 22 tier-3 features");
    std::vector<double> in(kTier3Width + kClassCount);
    scale_block(l1.scaler, raw22.first(kTier1Width), std::span(in).first(kTier1Width));
    scale_block(l2.exclusive_scaler, raw22.subspan(kTier1Width, kTier2Width - kTier1Width),
                std::span(in).subspan(kTier1Width, kTier2Width - kTier1Width));
    scale_block(tier3_exclusive, raw22.subspan(kTier2Width, kTier3Width - kTier2Width),
                std::span(in).subspan(kTier2Width, kTier3Width - kTier2Width));
    const auto l2_in = layer2_input(l1, l2.exclusive_scaler, raw22.first(kTier2Width));
    const auto o2 = layer_probabilities(l2.network, l2_in, l2.input_width);
    std::copy(o2.begin(), o2.end(), in.begin() + kTier3Width);
    return in;
}

MetaDesign layer2_design(const Layer1Ensemble& l1, const TierDataset& d2) {
    if (d2.X.cols() != kTier2Width) throw DataError("layer 2 design needs tier-2 data");
    MetaDesign d;
    d.exclusive_begin = kTier1Width;
    d.exclusive_end = kTier2Width;
    const std::size_t width = kTier2Width + l1.output_width();
    d.X = Matrix(d2.size(), width);
    for (std::size_t r = 0; r < d2.size(); ++r) {
        auto raw = d2.X.row(r);
        auto row = d.X.row(r);
        l1.scaler.transform(raw.first(kTier1Width), row.first(kTier1Width));
        std::copy(raw.begin() + kTier1Width, raw.end(), row.begin() + kTier1Width);
        std::size_t pos = kTier2Width;
        for (const auto& p : l1.outputs(raw))
            for (double v : p) row[pos++] = v;
    }
    d.scale_mask.assign(width, false);
    for (std::size_t c = d.exclusive_begin; c < d.exclusive_end; ++c) d.scale_mask[c] = true;
    return d;
}

MetaDesign layer3_design(const Layer1Ensemble& l1, const MetaNetwork& l2, const TierDataset& d3) {
    if (d3.X.cols() != kTier3Width) throw DataError("layer 3 design needs tier-3 data");
    MetaDesign d;
    d.exclusive_begin = kTier2Width;
    d.exclusive_end = kTier3Width;
    const std::size_t width = kTier3Width + kClassCount;
    d.X = Matrix(d3.size(), width);
    for (std::size_t r = 0; r < d3.size(); ++r) {
        auto raw = d3.X.row(r);
        auto row = d.X.row(r);
        l1.scaler.transform(raw.first(kTier1Width), row.first(kTier1Width));
        l2.exclusive_scaler.transform(raw.subspan(kTier1Width, kTier2Width - kTier1Width),
                                      row.subspan(kTier1Width, kTier2Width - kTier1Width));
        std::copy(raw.begin() + kTier2Width, raw.end(), row.begin() + kTier2Width);
        const auto o2 = layer_probabilities(l2.network, layer2_input(l1, l2.exclusive_scaler, raw.first(kTier2Width)),
                                            l2.input_width);
        std::copy(o2.begin(), o2.end(), row.begin() + kTier3Width);
    }
    d.scale_mask.assign(width, false);
    for (std::size_t c = d.exclusive_begin; c < d.exclusive_end; ++c) d.scale_mask[c] = true;
    return d;
}

Layer1Training train_layer1(const TierDataset& d1, std::span<const ClassifierSpec> candidates, const LayerOptions& options) {
    require_nonempty(d1, 1);
    std::set<int> grades(d1.y.begin(), d1.y.end());
    if (grades.size() != static_cast<std::size_t>(kClassCount))
        throw TrainingError("tier 1 data must contain all " + std::to_string(kClassCount) + " grades");

    CvOptions cv;
    cv.k = options.k;
    cv.seed = substream_seed(options.seed, "layer1");
    cv.exec = options.exec;
    Selection sel = select_base_classifiers(candidates, d1.X, d1.y, cv, options.threshold);
    if (sel.selected.empty()) throw TrainingError("no classifier exceeded threshold");

    Layer1Ensemble ens{{}, fit_scaler(d1.X)};
    const Matrix scaled = apply_scaler(ens.scaler, d1.X);
    std::vector<std::optional<TrainedClassifier>> fitted(sel.selected.size());
    parallel_for(sel.selected.size(), options.exec, [&](std::size_t i) {
        fitted[i] = fit_classifier(sel.selected[i], scaled, d1.y, substream_seed(options.seed, "layer1-member", i),
                                   kClassCount);
    });
    for (auto& f : fitted) ens.members.push_back(std::move(*f));
    return {std::move(ens), std::move(sel)};
}

namespace {

MetaTraining fit_meta(Tier tier, MetaDesign design, const TierDataset& data, const SearchSpace& space,
                      const LayerOptions& options, std::string_view stream) {
    if (space.family != Family::MLP) throw ConfigError("meta-learners are MLP networks");
    CvOptions cv;
    cv.k = options.k;
    cv.seed = substream_seed(options.seed, stream);
    cv.exec = options.exec;
    cv.scale_columns = design.scale_mask;
    SearchResult search = random_search(space, options.budget, design.X, data.y, cv);

    Scaler ex = block_scaler(design.X, design.exclusive_begin, design.exclusive_end);
    apply_block(ex, design.X, design.exclusive_begin);
    const std::string final_stream = std::string(stream) + "-final";
    TrainedClassifier net = fit_classifier(search.best, design.X, data.y, substream_seed(options.seed, final_stream),
                                           kClassCount);
    const std::size_t width = design.X.cols();
    return {MetaNetwork{tier, std::move(net), std::move(ex), width}, std::move(search)};
}

}  // namespace

MetaTraining train_layer2(const Layer1Ensemble& l1, std::span<const std::uint64_t> d1_fingerprints,
                          const TierDataset& d2, const SearchSpace& space, const LayerOptions& options) {
    require_nonempty(d2, 2);
    require_disjoint(d1_fingerprints, d2.fingerprints, 2);
    return fit_meta(Tier::two, layer2_design(l1, d2), d2, space, options, "layer2");
}

MetaTraining train_layer3(const Layer1Ensemble& l1, const MetaNetwork& l2,
                          std::span<const std::uint64_t> upstream_fingerprints, const TierDataset& d3,
                          const SearchSpace& space, const LayerOptions& options) {
    require_nonempty(d3, 3);
    require_disjoint(upstream_fingerprints, d3.fingerprints, 3);
    return fit_meta(Tier::three, layer3_design(l1, l2, d3), d3, space, options, "layer3");
}

CascadeModel::CascadeModel(Layer1Ensemble layer1, MetaNetwork layer2, MetaNetwork layer3, Provenance provenance)
    : layer1_(std::move(layer1)), layer2_(std::move(layer2)), layer3_(std::move(layer3)),
      provenance_(std::move(provenance)) {
    if (layer1_.members.empty()) throw TrainingError("layer 1 has no members");
    if (layer2_.input_width != kTier2Width + layer1_.output_width())
        throw TrainingError("layer 2 width differs from 16 + 4 x members");
    if (layer3_.input_width != kTier3Width + kClassCount) throw TrainingError("layer 3 width differs from 26");
}

CascadePrediction CascadeModel::predict_layer(int layer, std::span<const double> raw) const {
    switch (layer) {
        case 1: {
            const auto outs = layer1_.outputs(raw);
            return aggregate_layer1(outs);
        }
        case 2: {
            const auto in = layer2_input(layer1_, layer2_.exclusive_scaler, raw);
            return make_prediction(layer_probabilities(layer2_.network, in, layer2_.input_width), 2);
        }
        case 3: {
            const auto in = layer3_input(layer1_, layer2_, layer3_.exclusive_scaler, raw);
            return make_prediction(layer_probabilities(layer3_.network, in, layer3_.input_width), 3);
        }
        default: throw DataError("layer must be 1, 2 or 3");
    }
}

CascadePrediction CascadeModel::predict(const SubjectRecord& record) const {
    const auto tier = availability_tier(record);
    if (!tier) throw DataError("insufficient features");
    std::array<double, kFeatureCount> raw{};
    const std::size_t n = feature_set(*tier).size();
    tier_values(record, *tier, std::span(raw).first(n));
    return predict_layer(tier_number(*tier), std::span<const double>(raw).first(n));
}

namespace {

nlohmann::json meta_to_json(const MetaNetwork& m) {
    return {{"tier", tier_number(m.tier)},
            {"input_width", m.input_width},
            {"exclusive_scaler", to_json(m.exclusive_scaler)},
            {"network", m.network.to_json()}};
}

MetaNetwork meta_from_json(const nlohmann::json& j, Tier expected) {
    auto tier = tier_from_int(j.at("tier").get<int>());
    if (tier != expected) throw ContainerError("meta network stored under the wrong tier");
    MetaNetwork m{expected, TrainedClassifier::from_json(j.at("network")), scaler_from_json(j.at("exclusive_scaler")),
                  j.at("input_width").get<std::size_t>()};
    if (m.network.spec().family != Family::MLP) throw ContainerError("meta network is not an MLP");
    if (static_cast<std::size_t>(m.network.feature_count()) != m.input_width)
        throw ContainerError("meta network width disagrees with its recorded input width");
    return m;
}

}  // namespace

nlohmann::json CascadeModel::to_json() const {
    auto members = nlohmann::json::array();
    for (const auto& m : layer1_.members) members.push_back(m.to_json());
    nlohmann::json fps;
    for (Tier t : kTiers) fps["tier" + std::to_string(tier_number(t))] = provenance_.fingerprints[tier_index(t)];
    return {{"layer1", {{"scaler", steatosis::to_json(layer1_.scaler)}, {"members", members}}},
            {"layer2", meta_to_json(layer2_)},
            {"layer3", meta_to_json(layer3_)},
            {"provenance", {{"seed", provenance_.seed}, {"config_hash", provenance_.config_hash}, {"fingerprints", fps}}}};
}

CascadeModel CascadeModel::from_json(const nlohmann::json& j) {
    Layer1Ensemble l1{{}, scaler_from_json(j.at("layer1").at("scaler"))};
    if (l1.scaler.size() != kTier1Width) throw ContainerError("tier-1 scaler has the wrong width");
    for (const auto& m : j.at("layer1").at("members")) {
        l1.members.push_back(TrainedClassifier::from_json(m));
        if (l1.members.back().feature_count() != static_cast<int>(kTier1Width) ||
            l1.members.back().class_count() != kClassCount)
            throw ContainerError("layer-1 member has the wrong shape");
    }
    Provenance prov;
    const auto& p = j.at("provenance");
    prov.seed = p.at("seed").get<std::uint64_t>();
    prov.config_hash = p.at("config_hash").get<std::string>();
    for (Tier t : kTiers)
        prov.fingerprints[tier_index(t)] =
            p.at("fingerprints").at("tier" + std::to_string(tier_number(t))).get<std::vector<std::uint64_t>>();
    try {
        return CascadeModel(std::move(l1), meta_from_json(j.at("layer2"), Tier::two),
                            meta_from_json(j.at("layer3"), Tier::three), std::move(prov));
    } catch (const TrainingError& e) {
        throw ContainerError(e.what());
    }
}

CascadeTraining train_cascade(const Partition& data, const CascadeOptions& options) {
    for (Tier t : kTiers) require_nonempty(data[t], tier_number(t));
    std::vector<Family> families = options.families;
    if (families.empty()) families.assign(canonical_family_order().begin(), canonical_family_order().end());

    const TierDataset& d1 = data[Tier::one];
    CvOptions cv;
    cv.k = options.k;
    cv.seed = substream_seed(options.seed, "layer1");
    cv.exec = options.exec;

    std::vector<SearchResult> searches;
    std::vector<ClassifierSpec> tuned;
    for (Family f : families) {
        auto it = options.layer1_spaces.find(f);
        const SearchSpace space = it != options.layer1_spaces.end() ? it->second : default_space(f);
        searches.push_back(random_search(space, options.layer1_budget, d1.X, d1.y, cv));
        tuned.push_back(searches.back().best);
    }

    LayerOptions lo{options.k, options.seed, options.threshold, options.layer1_budget, options.exec};
    Layer1Training l1 = train_layer1(d1, tuned, lo);

    lo.budget = options.meta_budget;
    const SearchSpace space2 = options.layer2_space ? *options.layer2_space : default_space(Family::MLP);
    const SearchSpace space3 = options.layer3_space ? *options.layer3_space : default_space(Family::MLP);
    MetaTraining l2 = train_layer2(l1.ensemble, d1.fingerprints, data[Tier::two], space2, lo);

    std::vector<std::uint64_t> upstream(d1.fingerprints);
    upstream.insert(upstream.end(), data[Tier::two].fingerprints.begin(), data[Tier::two].fingerprints.end());
    MetaTraining l3 = train_layer3(l1.ensemble, l2.network, upstream, data[Tier::three], space3, lo);

    Provenance prov;
    prov.seed = options.seed;
    for (Tier t : kTiers) prov.fingerprints[tier_index(t)] = sorted(data[t].fingerprints);

    return {CascadeModel(std::move(l1.ensemble), std::move(l2.network), std::move(l3.network), std::move(prov)),
            std::move(searches), std::move(l1.selection), std::move(l2.search), std::move(l3.search)};
}

}  // namespace steatosis
