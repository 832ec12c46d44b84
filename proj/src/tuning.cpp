#include "steatosis/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "steatosis/errors.hpp"
#include "steatosis/random.hpp"

namespace steatosis {

std::vector<std::size_t> FoldPlan::train_rows(int fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) rows.push_back(i);
    return rows;
}

std::vector<std::size_t> FoldPlan::test_rows(int fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) rows.push_back(i);
    return rows;
}

FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("k must be at least 2");
    if (static_cast<std::size_t>(k) > labels.size())
        throw DataError("k = " + std::to_string(k) + " exceeds the number of samples (" +
                        std::to_string(labels.size()) + ")");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    Rng rng = make_rng(seed, "stratified-kfold");
    std::vector<std::size_t> order;
    order.reserve(labels.size());
    for (auto& [label, rows] : by_class) {
        std::shuffle(rows.begin(), rows.end(), rng);
        order.insert(order.end(), rows.begin(), rows.end());
    }
    std::vector<int> relabel(static_cast<std::size_t>(k));
    std::iota(relabel.begin(), relabel.end(), 0);
    std::shuffle(relabel.begin(), relabel.end(), rng);

    FoldPlan plan{k, std::vector<int>(labels.size(), 0)};
    for (std::size_t p = 0; p < order.size(); ++p)
        plan.assignments[order[p]] = relabel[p % static_cast<std::size_t>(k)];
    return plan;
}

std::uint64_t fold_seed(std::uint64_t seed) { return substream_seed(seed, "cv-folds"); }
std::uint64_t fold_fit_seed(std::uint64_t seed, int fold) {
    return substream_seed(seed, "cv-fit", static_cast<std::uint64_t>(fold));
}

namespace {

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd r;
    if (v.empty()) return r;
    r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(v.size()));
    return r;
}

std::vector<std::optional<double>> per_class_mean(const std::vector<MetricsSummary>& folds,
                                                  std::vector<std::optional<double>> MetricsSummary::*field,
                                                  std::size_t K) {
    std::vector<std::optional<double>> out(K);
    for (std::size_t c = 0; c < K; ++c) {
        double sum = 0.0;
        int n = 0;
        for (const auto& f : folds)
            if ((f.*field)[c]) {
                sum += *(f.*field)[c];
                ++n;
            }
        if (n) out[c] = sum / n;
    }
    return out;
}

template <class E>
[[noreturn]] void rethrow_annotated(const E& e, int fold) {
    throw E("fold " + std::to_string(fold) + ": " + e.what());
}

nlohmann::json optional_list(const std::vector<std::optional<double>>& v, bool percent) {
    auto out = nlohmann::json::array();
    for (const auto& x : v)
        out.push_back(x ? nlohmann::json(percent ? percent1(*x) : *x) : nlohmann::json(nullptr));
    return out;
}

}  // namespace

nlohmann::json to_json(const CVResult& r) {
    auto ms = [](const MeanStd& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.std}}; };
    auto folds = nlohmann::json::array();
    for (const auto& f : r.folds) folds.push_back(to_json(f));
    return {{"k", r.k},
            {"accuracy", ms(r.accuracy)},
            {"macro_sensitivity", ms(r.macro_sensitivity)},
            {"macro_specificity", ms(r.macro_specificity)},
            {"macro_f1", ms(r.macro_f1)},
            {"sensitivity", optional_list(r.sensitivity, false)},
            {"specificity", optional_list(r.specificity, false)},
            {"folds", folds},
            {"pooled", to_json(r.pooled)}};
}

nlohmann::json report_json(const CVResult& r) {
    nlohmann::json j;
    for (std::size_t c = 0; c < r.sensitivity.size(); ++c) {
        const std::string grade = "Grade " + std::to_string(c);
        j[grade]["Sens"] = r.sensitivity[c] ? nlohmann::json(percent1(*r.sensitivity[c])) : nlohmann::json(nullptr);
        j[grade]["Spec"] = r.specificity[c] ? nlohmann::json(percent1(*r.specificity[c])) : nlohmann::json(nullptr);
    }
    j["M F1-Score"] = percent1(r.macro_f1.mean);
    j["Acc"] = percent1(r.accuracy.mean);
    j["M-avg Sens"] = percent1(r.macro_sensitivity.mean);
    j["M-avg Spec"] = percent1(r.macro_specificity.mean);
    j["Acc std"] = percent1(r.accuracy.std);
    return j;
}

CVResult cross_validate(std::span<const ClassifierSpec> specs, const Matrix& X, std::span<const int> y,
                        const CvOptions& options) {
    if (specs.empty()) throw ConfigError("cross_validate: no classifier spec");
    if (X.rows() != y.size()) throw DataError("cross_validate: X and y row counts differ");
    if (!options.scale_columns.empty() && options.scale_columns.size() != X.cols())
        throw ConfigError("cross_validate: scale mask width differs from X");
    for (const auto& s : specs) validate_spec(s);

    const FoldPlan plan = options.plan ? *options.plan : stratified_kfold(y, options.k, fold_seed(options.seed));
    if (plan.assignments.size() != y.size()) throw ConfigError("cross_validate: fold plan size differs from data");
    const int K = options.class_count > 0 ? options.class_count : *std::max_element(y.begin(), y.end()) + 1;
    const auto Ku = static_cast<std::size_t>(K);

    std::vector<std::vector<std::size_t>> train(static_cast<std::size_t>(plan.k)), test(train.size());
    for (int f = 0; f < plan.k; ++f) {
        train[static_cast<std::size_t>(f)] = plan.train_rows(f);
        test[static_cast<std::size_t>(f)] = plan.test_rows(f);
        if (options.observer) options.observer(f, train[static_cast<std::size_t>(f)], test[static_cast<std::size_t>(f)]);
    }

    CVResult result;
    result.k = plan.k;
    result.folds.resize(static_cast<std::size_t>(plan.k));
    result.oof_probabilities.assign(y.size(), std::vector<double>(Ku, 0.0));
    result.oof_labels.assign(y.size(), 0);

    parallel_for(static_cast<std::size_t>(plan.k), options.exec, [&](std::size_t fu) {
        const int f = static_cast<int>(fu);
        const auto& tr = train[fu];
        const auto& te = test[fu];
        Matrix Xtr = X.select_rows(tr);
        Matrix Xte = X.select_rows(te);
        const Scaler sc = fit_scaler(Xtr);
        auto scale = [&](Matrix& M) {
            for (std::size_t r = 0; r < M.rows(); ++r) {
                auto row = M.row(r);
                for (std::size_t c = 0; c < M.cols(); ++c) {
                    if (!options.scale_columns.empty() && !options.scale_columns[c]) continue;
                    row[c] = sc.degenerate(c) ? 0.0 : (row[c] - sc.mean[c]) / sc.stddev[c];
                }
            }
        };
        scale(Xtr);
        scale(Xte);
        std::vector<int> ytr(tr.size());
        for (std::size_t i = 0; i < tr.size(); ++i) ytr[i] = y[tr[i]];

        std::vector<TrainedClassifier> models;
        try {
            for (const auto& s : specs) models.push_back(fit_classifier(s, Xtr, ytr, fold_fit_seed(options.seed, f), K));
        } catch (const TrainingError& e) {
            rethrow_annotated(e, f);
        } catch (const ConfigError& e) {
            rethrow_annotated(e, f);
        } catch (const DataError& e) {
            rethrow_annotated(e, f);
        }

        std::vector<int> yte(te.size()), pred(te.size());
        std::vector<double> p(Ku);
        for (std::size_t i = 0; i < te.size(); ++i) {
            auto& out = result.oof_probabilities[te[i]];
            for (const auto& m : models) {
                m.predict_proba(Xte.row(i), p);
                for (std::size_t c = 0; c < Ku; ++c) out[c] += p[c];
            }
            for (double& v : out) v /= static_cast<double>(models.size());
            pred[i] = argmax_label(out);
            result.oof_labels[te[i]] = pred[i];
            yte[i] = y[te[i]];
        }
        result.folds[fu] = summarize(confusion(yte, pred, K));
    });

    std::vector<double> acc, sens, spec, f1;
    for (const auto& f : result.folds) {
        acc.push_back(f.accuracy);
        sens.push_back(f.macro_sensitivity);
        spec.push_back(f.macro_specificity);
        f1.push_back(f.macro_f1);
    }
    result.accuracy = mean_std(acc);
    result.macro_sensitivity = mean_std(sens);
    result.macro_specificity = mean_std(spec);
    result.macro_f1 = mean_std(f1);
    result.sensitivity = per_class_mean(result.folds, &MetricsSummary::sensitivity, Ku);
    result.specificity = per_class_mean(result.folds, &MetricsSummary::specificity, Ku);
    result.pooled = summarize(confusion(y, result.oof_labels, K));
    return result;
}

CVResult cross_validate(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y, const CvOptions& options) {
    return cross_validate(std::span<const ClassifierSpec>(&spec, 1), X, y, options);
}

CVResult cross_validate(const ClassifierSpec& spec, const TierDataset& data, int k, std::uint64_t seed) {
    CvOptions o;
    o.k = k;
    o.seed = seed;
    return cross_validate(spec, data.X, data.y, o);
}

Domain Domain::list(std::vector<HyperValue> v) {
    Domain d;
    d.kind = Kind::list;
    d.values = std::move(v);
    return d;
}

Domain Domain::randint(std::int64_t lo, std::int64_t hi) {
    Domain d;
    d.kind = Kind::int_range;
    d.lo = lo;
    d.hi = hi;
    return d;
}

Domain Domain::uniform(double loc, double scale) {
    Domain d;
    d.kind = Kind::uniform;
    d.low = loc;
    d.high = loc + scale;
    return d;
}

bool Domain::empty() const {
    switch (kind) {
        case Kind::list: return values.empty();
        case Kind::int_range: return hi <= lo;
        case Kind::uniform: return !(high >= low) || !std::isfinite(low) || !std::isfinite(high);
    }
    return true;
}

bool Domain::contains(const HyperValue& v) const {
    switch (kind) {
        case Kind::list: return std::find(values.begin(), values.end(), v) != values.end();
        case Kind::int_range: {
            auto i = std::get_if<std::int64_t>(&v);
            return i && *i >= lo && *i < hi;
        }
        case Kind::uniform: {
            auto d = std::get_if<double>(&v);
            return d && *d >= low && *d <= high;
        }
    }
    return false;
}

HyperValue Domain::sample(Rng& rng) const {
    const double u = uniform01(rng);
    switch (kind) {
        case Kind::list: {
            auto i = static_cast<std::size_t>(u * static_cast<double>(values.size()));
            return values[std::min(i, values.size() - 1)];
        }
        case Kind::int_range: {
            auto span = static_cast<double>(hi - lo);
            return std::min(hi - 1, lo + static_cast<std::int64_t>(u * span));
        }
        case Kind::uniform: return low + u * (high - low);
    }
    return std::monostate{};
}

bool SearchSpace::empty() const {
    return std::any_of(dims.begin(), dims.end(), [](const auto& kv) { return kv.second.empty(); });
}

ClassifierSpec SearchSpace::sample(Rng& rng) const {
    ClassifierSpec spec{family, {}};
    for (const auto& [name, dom] : dims) spec.params[name] = dom.sample(rng);
    for (const auto& [name, v] : fixed) spec.params[name] = v;
    return spec;
}

namespace {

std::vector<HyperValue> ints(std::initializer_list<std::int64_t> v) { return {v.begin(), v.end()}; }
std::vector<HyperValue> reals(std::initializer_list<double> v) { return {v.begin(), v.end()}; }
std::vector<HyperValue> strings(std::initializer_list<const char*> v) {
    std::vector<HyperValue> out;
    for (auto s : v) out.emplace_back(std::string(s));
    return out;
}

const std::initializer_list<std::int64_t> kBoostRounds{10, 20, 40, 50, 100, 500, 1000, 2000, 5000};

}  // namespace

SearchSpace default_space(Family family) {
    SearchSpace s;
    s.family = family;
    auto& d = s.dims;
    switch (family) {
        case Family::KNN: d["n_neighbors"] = Domain::list(ints({3, 5, 7, 9, 11})); break;
        case Family::SVM:
            d["C"] = Domain::list(reals({0.001, 0.01, 0.1, 1, 10, 100}));
            d["kernel"] = Domain::list(strings({"linear", "poly", "rbf", "sigmoid"}));
            break;
        case Family::RandomForest:
            d["n_estimators"] = Domain::list(ints({100, 200, 300, 400, 500}));
            d["max_depth"] = Domain::list({std::monostate{}, std::int64_t{10}, std::int64_t{20}, std::int64_t{30},
                                           std::int64_t{40}, std::int64_t{50}});
            d["min_samples_split"] = Domain::list(ints({2, 5, 10, 15, 20}));
            d["min_samples_leaf"] = Domain::list(ints({1, 2, 4, 6, 8}));
            d["max_features"] = Domain::list(strings({"auto", "sqrt", "log2"}));
            break;
        case Family::GBLeafwise:
            d["n_estimators"] = Domain::list(ints(kBoostRounds));
            d["num_leaves"] = Domain::randint(6, 50);
            d["learning_rate"] = Domain::list(reals({0.0001, 0.001, 0.01, 0.1, 1}));
            d["min_child_samples"] = Domain::randint(100, 500);
            d["min_child_weight"] = Domain::list(reals({1e-5, 1e-3, 1e-2, 1e-1, 1, 1e1, 1e2, 1e3, 1e4}));
            d["subsample"] = Domain::uniform(0.2, 0.8);
            d["colsample_bytree"] = Domain::uniform(0.4, 0.6);
            d["reg_alpha"] = Domain::list(reals({0, 1e-1, 1, 2, 5, 7, 10, 50, 100}));
            d["reg_lambda"] = Domain::list(reals({0, 1e-1, 1, 5, 10, 20, 50, 100}));
            break;
        case Family::AdaBoost:
            d["n_estimators"] = Domain::list(ints(kBoostRounds));
            d["learning_rate"] = Domain::list(reals({0.001, 0.01, 0.1, 0.5, 1}));
            d["Base_estimator_max_depth"] = Domain::list(ints({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
            break;
        case Family::GBRegularized:
            d["n_estimators"] = Domain::list(ints(kBoostRounds));
            d["learning_rate"] = Domain::list(reals({0.001, 0.01, 0.1, 0.3, 0.5, 1}));
            d["max_depth"] = Domain::list(ints({3, 4, 5, 6, 7, 8, 9, 10}));
            d["subsample"] = Domain::list(reals({0.6, 0.7, 0.8, 0.9, 1.0}));
            d["colsample_bytree"] = Domain::list(reals({0.6, 0.7, 0.8, 0.9, 1.0}));
            d["gamma"] = Domain::list(reals({0, 0.1, 0.2, 0.3, 0.4, 0.5}));
            break;
        case Family::MLP:
            d["hidden_layer_sizes"] = Domain::list({std::vector<int>{50}, std::vector<int>{100},
                                                    std::vector<int>{50, 50}, std::vector<int>{100, 100},
                                                    std::vector<int>{100, 50}, std::vector<int>{100, 50, 100},
                                                    std::vector<int>{100, 100, 50}});
            d["activation"] = Domain::list(strings({"tanh", "relu", "logistic"}));
            d["solver"] = Domain::list(strings({"sgd", "adam"}));
            d["alpha"] = Domain::list(reals({0.0001, 0.001, 0.01, 0.1}));
            d["learning_rate"] = Domain::list(strings({"constant", "invscaling", "adaptive"}));
            d["learning_rate_init"] = Domain::list(reals({0.001, 0.01, 0.1}));
            d["batch_size"] = Domain::list(ints({32, 64, 128}));
            d["momentum"] = Domain::list(reals({0.9, 0.95, 0.99}));
            break;
    }
    return s;
}

namespace {

Domain domain_from_json(const std::string& name, const nlohmann::json& j) {
    if (j.is_array()) {
        std::vector<HyperValue> values;
        for (const auto& v : j) values.push_back(hyper_value_from_json(v));
        return Domain::list(std::move(values));
    }
    if (j.is_object() && j.size() == 1 && j.contains("randint") && j["randint"].size() == 2)
        return Domain::randint(j["randint"][0].get<std::int64_t>(), j["randint"][1].get<std::int64_t>());
    if (j.is_object() && j.size() == 1 && j.contains("uniform") && j["uniform"].size() == 2)
        return Domain::uniform(j["uniform"][0].get<double>(), j["uniform"][1].get<double>());
    throw ConfigError("search space: cannot read domain of '" + name + "'");
}

}  // namespace

SearchSpace space_with_overrides(SearchSpace base, const nlohmann::json& overrides) {
    if (!overrides.is_object()) throw ConfigError("search space override must be an object");
    try {
        for (const auto& [name, value] : overrides.items()) {
            if (name == "fixed") {
                for (const auto& [k, v] : value.items()) base.fixed[k] = hyper_value_from_json(v);
                continue;
            }
            base.dims[name] = domain_from_json(name, value);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("search space: ") + e.what());
    }
    // A fixed value wins over a search dimension of the same name.
    for (const auto& [k, v] : base.fixed) base.dims.erase(k);
    if (!base.empty()) {
        Rng rng(0);
        ClassifierSpec probe = base.sample(rng);
        validate_spec(probe);
        for (const auto& [name, d] : base.dims)
            if (d.kind == Domain::Kind::list) {
                ClassifierSpec each = probe;
                for (const auto& v : d.values) {
                    each.params[name] = v;
                    validate_spec(each);
                }
            }
    }
    return base;
}

nlohmann::json to_json(const SearchSpace& space) {
    nlohmann::json dims = nlohmann::json::object();
    for (const auto& [name, d] : space.dims) {
        switch (d.kind) {
            case Domain::Kind::list: {
                auto arr = nlohmann::json::array();
                for (const auto& v : d.values) arr.push_back(to_json(v));
                dims[name] = arr;
                break;
            }
            case Domain::Kind::int_range: dims[name] = {{"randint", {d.lo, d.hi}}}; break;
            case Domain::Kind::uniform: dims[name] = {{"uniform", {d.low, d.high - d.low}}}; break;
        }
    }
    if (!space.fixed.empty()) dims["fixed"] = to_json(space.fixed);
    return {{"family", family_name(space.family)}, {"dimensions", dims}};
}

SearchResult random_search(const SearchSpace& space, int n_iter, const Matrix& X, std::span<const int> y,
                           const CvOptions& options) {
    if (n_iter < 1) throw ConfigError("random search needs n_iter >= 1");
    if (space.empty()) throw ConfigError(std::string("empty search space for ") + std::string(family_name(space.family)));

    const FoldPlan plan = options.plan ? *options.plan : stratified_kfold(y, options.k, fold_seed(options.seed));
    SearchResult result;
    const auto n = static_cast<std::size_t>(n_iter);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = make_rng(options.seed, "search-candidate", i);
        result.candidates.push_back({space.sample(rng), std::nullopt, {}});
    }
    // Identical specs share one evaluation.
    std::vector<std::size_t> first(n);
    std::unordered_map<std::string, std::size_t> seen;
    std::vector<std::size_t> unique;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = seen.emplace(result.candidates[i].spec.to_json().dump(), i);
        first[i] = it->second;
        if (inserted) unique.push_back(i);
    }

    std::vector<std::optional<CVResult>> cv(n);
    CvOptions inner = options;
    inner.plan = &plan;
    inner.exec = Exec::serial;
    inner.observer = nullptr;
    parallel_for(unique.size(), options.exec, [&](std::size_t u) {
        const std::size_t i = unique[u];
        try {
            cv[i] = cross_validate(result.candidates[i].spec, X, y, inner);
        } catch (const Error& e) {
            result.candidates[i].error = e.what();
        }
    });

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& src = cv[first[i]];
        if (!src) {
            result.candidates[i].error = result.candidates[first[i]].error;
            continue;
        }
        result.candidates[i].mean_accuracy = src->accuracy.mean;
        if (!best || src->accuracy.mean > *result.candidates[*best].mean_accuracy) best = i;
    }
    if (!best)
        throw TrainingError(std::string("random search: every candidate failed for ") +
                            std::string(family_name(space.family)) + " (" + result.candidates.front().error + ")");
    result.best_index = *best;
    result.best = result.candidates[*best].spec;
    result.best_cv = *cv[first[*best]];
    return result;
}

SearchResult random_search(const SearchSpace& space, int n_iter, const TierDataset& data, int k, std::uint64_t seed) {
    CvOptions o;
    o.k = k;
    o.seed = seed;
    return random_search(space, n_iter, data.X, data.y, o);
}

void sort_canonical(std::vector<ClassifierSpec>& specs) {
    std::stable_sort(specs.begin(), specs.end(), [](const ClassifierSpec& a, const ClassifierSpec& b) {
        return canonical_rank(a.family) < canonical_rank(b.family);
    });
}

Selection select_base_classifiers(std::span<const ClassifierSpec> candidates, const Matrix& X,
                                  std::span<const int> y, const CvOptions& options, double threshold) {
    if (candidates.empty()) throw ConfigError("selection needs at least one candidate");
    const FoldPlan plan = options.plan ? *options.plan : stratified_kfold(y, options.k, fold_seed(options.seed));
    CvOptions inner = options;
    inner.plan = &plan;
    inner.exec = Exec::serial;
    inner.observer = nullptr;

    Selection sel;
    for (const auto& c : candidates) sel.screened.push_back({c, std::nullopt, false, {}});
    parallel_for(candidates.size(), options.exec, [&](std::size_t i) {
        try {
            sel.screened[i].mean_accuracy = cross_validate(candidates[i], X, y, inner).accuracy.mean;
        } catch (const Error& e) {
            sel.screened[i].error = e.what();
        }
    });
    for (auto& s : sel.screened) {
        s.kept = s.mean_accuracy && *s.mean_accuracy > threshold;
        if (s.kept) sel.selected.push_back(s.spec);
    }
    sort_canonical(sel.selected);
    return sel;
}

}  // namespace steatosis
