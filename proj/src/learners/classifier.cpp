#include "steatosis/learners/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "steatosis/errors.hpp"
#include "steatosis/learners/forest.hpp"
#include "steatosis/learners/gbdt.hpp"
#include "steatosis/learners/knn.hpp"
#include "steatosis/learners/mlp.hpp"
#include "steatosis/learners/svm.hpp"
#include "steatosis/random.hpp"

namespace steatosis {

namespace {

constexpr std::array<std::pair<Family, std::string_view>, 7> kNames{{
    {Family::KNN, "KNN"},
    {Family::SVM, "SVM"},
    {Family::RandomForest, "RandomForest"},
    {Family::AdaBoost, "AdaBoost"},
    {Family::GBLeafwise, "GBLeafwise"},
    {Family::GBRegularized, "GBRegularized"},
    {Family::MLP, "MLP"},
}};

// Legal keys per family, with a domain check on the (already typed) value.
using Check = std::function<bool(const HyperValue&)>;

bool is_number(const HyperValue& v) {
    return std::holds_alternative<double>(v) || std::holds_alternative<std::int64_t>(v);
}

double as_number(const HyperValue& v) {
    if (auto d = std::get_if<double>(&v)) return *d;
    return static_cast<double>(std::get<std::int64_t>(v));
}

bool is_integer(const HyperValue& v) {
    if (std::holds_alternative<std::int64_t>(v)) return true;
    auto d = std::get_if<double>(&v);
    return d && std::floor(*d) == *d;
}

Check int_at_least(std::int64_t lo) {
    return [lo](const HyperValue& v) { return is_integer(v) && as_number(v) >= static_cast<double>(lo); };
}
Check number_in(double lo, double hi, bool lo_open, bool hi_open) {
    return [=](const HyperValue& v) {
        if (!is_number(v)) return false;
        const double x = as_number(v);
        return std::isfinite(x) && (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
    };
}
Check one_of(std::set<std::string> options) {
    return [options = std::move(options)](const HyperValue& v) {
        auto s = std::get_if<std::string>(&v);
        return s && options.count(*s) > 0;
    };
}
Check boolean() {
    return [](const HyperValue& v) { return std::holds_alternative<bool>(v); };
}

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::map<std::string, Check>& rules(Family f) {
    static const std::map<Family, std::map<std::string, Check>> table = [] {
        std::map<Family, std::map<std::string, Check>> t;
        t[Family::KNN] = {{"n_neighbors", int_at_least(1)}};
        t[Family::SVM] = {
            {"C", number_in(0, kInf, true, true)},
            {"kernel", one_of({"linear", "poly", "rbf", "sigmoid"})},
            {"degree", int_at_least(1)},
            {"gamma",
             [](const HyperValue& v) {
                 if (auto s = std::get_if<std::string>(&v)) return *s == "scale" || *s == "auto";
                 return is_number(v) && as_number(v) > 0;
             }},
            {"coef0", number_in(-kInf, kInf, true, true)},
            {"tol", number_in(0, kInf, true, true)},
            {"max_iter", int_at_least(1)},
        };
        t[Family::RandomForest] = {
            {"n_estimators", int_at_least(1)},
            {"max_depth",
             [](const HyperValue& v) {
                 return std::holds_alternative<std::monostate>(v) || (is_integer(v) && as_number(v) >= 1);
             }},
            {"min_samples_split", int_at_least(2)},
            {"min_samples_leaf", int_at_least(1)},
            {"max_features",
             [](const HyperValue& v) {
                 if (auto s = std::get_if<std::string>(&v)) return *s == "auto" || *s == "sqrt" || *s == "log2" || *s == "all";
                 return std::holds_alternative<std::monostate>(v) || (is_integer(v) && as_number(v) >= 1);
             }},
            {"bootstrap", boolean()},
        };
        t[Family::AdaBoost] = {
            {"n_estimators", int_at_least(1)},
            {"learning_rate", number_in(0, kInf, true, true)},
            {"Base_estimator_max_depth", int_at_least(1)},
        };
        t[Family::GBLeafwise] = {
            {"n_estimators", int_at_least(1)},
            {"num_leaves", int_at_least(2)},
            {"learning_rate", number_in(0, kInf, true, true)},
            {"min_child_samples", int_at_least(1)},
            {"min_child_weight", number_in(0, kInf, false, true)},
            {"subsample", number_in(0, 1, true, false)},
            {"colsample_bytree", number_in(0, 1, true, false)},
            {"reg_alpha", number_in(0, kInf, false, true)},
            {"reg_lambda", number_in(0, kInf, false, true)},
            {"max_bins", int_at_least(2)},
        };
        t[Family::GBRegularized] = {
            {"n_estimators", int_at_least(1)},
            {"learning_rate", number_in(0, kInf, true, true)},
            {"max_depth", int_at_least(1)},
            {"subsample", number_in(0, 1, true, false)},
            {"colsample_bytree", number_in(0, 1, true, false)},
            {"gamma", number_in(0, kInf, false, true)},
            {"min_child_weight", number_in(0, kInf, false, true)},
            {"reg_alpha", number_in(0, kInf, false, true)},
            {"reg_lambda", number_in(0, kInf, false, true)},
            {"max_bins", int_at_least(2)},
        };
        t[Family::MLP] = {
            {"hidden_layer_sizes",
             [](const HyperValue& v) {
                 auto s = std::get_if<std::vector<int>>(&v);
                 return s && !s->empty() && std::all_of(s->begin(), s->end(), [](int x) { return x > 0; });
             }},
            {"activation", one_of({"tanh", "relu", "logistic"})},
            {"solver", one_of({"sgd", "adam"})},
            {"alpha", number_in(0, kInf, false, true)},
            {"learning_rate", one_of({"constant", "invscaling", "adaptive"})},
            {"learning_rate_init", number_in(0, kInf, true, true)},
            {"batch_size", int_at_least(1)},
            {"momentum", number_in(0, 1, false, true)},
            {"max_epochs", int_at_least(1)},
            {"patience", int_at_least(1)},
            {"validation_fraction", number_in(0, 0.5, false, true)},
        };
        return t;
    }();
    return table.at(f);
}

}  // namespace

std::string_view family_name(Family f) {
    for (const auto& [fam, name] : kNames)
        if (fam == f) return name;
    return "?";
}

std::optional<Family> family_from_name(std::string_view name) {
    for (const auto& [fam, n] : kNames)
        if (n == name) return fam;
    return std::nullopt;
}

const std::array<Family, 7>& canonical_family_order() {
    static constexpr std::array<Family, 7> order{Family::SVM,      Family::RandomForest, Family::GBRegularized,
                                                 Family::GBLeafwise, Family::AdaBoost,   Family::KNN,
                                                 Family::MLP};
    return order;
}

int canonical_rank(Family f) {
    const auto& order = canonical_family_order();
    return static_cast<int>(std::find(order.begin(), order.end(), f) - order.begin());
}

nlohmann::json ClassifierSpec::to_json() const {
    return {{"family", family_name(family)}, {"params", steatosis::to_json(params)}};
}

ClassifierSpec ClassifierSpec::from_json(const nlohmann::json& j) {
    auto fam = family_from_name(j.at("family").get<std::string>());
    if (!fam) throw ConfigError("unknown classifier family " + j.at("family").dump());
    ClassifierSpec s{*fam, j.contains("params") ? hyperparams_from_json(j.at("params")) : Hyperparams{}};
    return s;
}

std::uint64_t ClassifierSpec::hash() const { return fnv1a64(to_json().dump()); }

std::string ClassifierSpec::describe() const {
    std::string out(family_name(family));
    out += " {";
    bool first = true;
    for (const auto& [k, v] : params) {
        out += first ? "" : ", ";
        out += "'" + k + "': " + table_notation(v);
        first = false;
    }
    return out + "}";
}

void validate_spec(const ClassifierSpec& spec) {
    const auto& legal = rules(spec.family);
    for (const auto& [key, value] : spec.params) {
        auto it = legal.find(key);
        if (it == legal.end())
            throw ConfigError(std::string(family_name(spec.family)) + ": unknown hyperparameter '" + key + "'");
        if (!it->second(value))
            throw ConfigError(std::string(family_name(spec.family)) + ": value " + table_notation(value) +
                              " outside the domain of '" + key + "'");
    }
}

TrainedClassifier::TrainedClassifier(ClassifierSpec spec, std::shared_ptr<const Model> model, int class_count,
                                     int feature_count)
    : spec_(std::move(spec)), model_(std::move(model)), class_count_(class_count), feature_count_(feature_count) {}

void TrainedClassifier::predict_proba(std::span<const double> x, std::span<double> out) const {
    if (x.size() != static_cast<std::size_t>(feature_count_))
        throw DataError("predict: expected " + std::to_string(feature_count_) + " features, got " +
                        std::to_string(x.size()));
    if (out.size() != static_cast<std::size_t>(class_count_)) throw std::invalid_argument("predict: output width");
    model_->predict_proba(x, out);
    normalize_probabilities(out);
}

ProbabilityVector TrainedClassifier::predict_proba(std::span<const double> x) const {
    ProbabilityVector p(static_cast<std::size_t>(class_count_));
    predict_proba(x, p);
    return p;
}

int TrainedClassifier::predict_label(std::span<const double> x) const { return argmax_label(predict_proba(x)); }

nlohmann::json TrainedClassifier::to_json() const {
    return {{"spec", spec_.to_json()}, {"classes", class_count_}, {"features", feature_count_},
            {"state", model_->state()}};
}

TrainedClassifier TrainedClassifier::from_json(const nlohmann::json& j) {
    auto spec = ClassifierSpec::from_json(j.at("spec"));
    const auto& state = j.at("state");
    std::shared_ptr<const Model> model;
    switch (spec.family) {
        case Family::KNN: model = KnnModel::load(state); break;
        case Family::SVM: model = SvmModel::load(state); break;
        case Family::RandomForest: model = ForestModel::load(state); break;
        case Family::AdaBoost: model = AdaBoostModel::load(state); break;
        case Family::GBLeafwise:
        case Family::GBRegularized: model = BoostModel::load(state); break;
        case Family::MLP: model = MlpModel::load(state); break;
    }
    return TrainedClassifier(std::move(spec), std::move(model), j.at("classes").get<int>(), j.at("features").get<int>());
}

int argmax_label(std::span<const double> p) {
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

void normalize_probabilities(std::span<double> p) {
    double sum = 0.0;
    for (auto& v : p) {
        if (!(v > 0.0)) v = 0.0;
        sum += v;
    }
    if (sum <= 0.0) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
        return;
    }
    for (auto& v : p) v /= sum;
}

TrainedClassifier fit_classifier(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y,
                                 std::uint64_t seed, int class_count) {
    validate_spec(spec);
    if (X.rows() != y.size()) throw TrainingError("fit: X has " + std::to_string(X.rows()) + " rows but y has " +
                                                  std::to_string(y.size()) + " labels");
    if (X.rows() == 0 || X.cols() == 0) throw TrainingError("fit: empty training data");
    for (double v : X.data())
        if (!std::isfinite(v)) throw TrainingError("fit: non-finite feature value");
    const int max_label = *std::max_element(y.begin(), y.end());
    if (class_count == 0) class_count = max_label + 1;
    if (*std::min_element(y.begin(), y.end()) < 0 || max_label >= class_count)
        throw TrainingError("fit: label outside [0, " + std::to_string(class_count) + ")");
    if (X.rows() < static_cast<std::size_t>(class_count))
        throw TrainingError("fit: fewer rows than classes");
    std::set<int> present(y.begin(), y.end());
    if (present.size() < 2) throw TrainingError("fit: degenerate input, only one class present");

    const std::uint64_t s = substream_seed(seed, family_name(spec.family));
    std::shared_ptr<const Model> model;
    switch (spec.family) {
        case Family::KNN: model = KnnModel::fit(spec.params, X, y, class_count); break;
        case Family::SVM: model = SvmModel::fit(spec.params, X, y, class_count); break;
        case Family::RandomForest: model = ForestModel::fit(spec.params, X, y, class_count, s); break;
        case Family::AdaBoost: model = AdaBoostModel::fit(spec.params, X, y, class_count, s); break;
        case Family::GBLeafwise:
        case Family::GBRegularized:
            model = fit_boosting(boost_params(spec.family, spec.params), X, y, class_count, s).model;
            break;
        case Family::MLP: model = std::make_shared<MlpModel>(fit_mlp(mlp_params(spec.params), X, y, class_count, s).network); break;
    }
    return TrainedClassifier(spec, std::move(model), class_count, static_cast<int>(X.cols()));
}

}  // namespace steatosis
