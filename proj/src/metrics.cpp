#include "steatosis/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "steatosis/errors.hpp"

namespace steatosis {

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
    return t;
}

std::size_t ConfusionMatrix::row_total(int c) const {
    const auto& row = counts[static_cast<std::size_t>(c)];
    return std::accumulate(row.begin(), row.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::col_total(int c) const {
    std::size_t t = 0;
    for (const auto& row : counts) t += row[static_cast<std::size_t>(c)];
    return t;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, int classes) {
    if (y_true.size() != y_pred.size()) throw DataError("confusion: length mismatch");
    if (classes < 1) throw DataError("confusion: class count must be positive");
    ConfusionMatrix cm{classes, std::vector<std::vector<std::size_t>>(static_cast<std::size_t>(classes),
                                                                      std::vector<std::size_t>(static_cast<std::size_t>(classes), 0))};
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || y_true[i] >= classes || y_pred[i] < 0 || y_pred[i] >= classes)
            throw DataError("confusion: label out of range at position " + std::to_string(i));
        ++cm.counts[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
    }
    return cm;
}

MetricsSummary summarize(const ConfusionMatrix& cm) {
    const auto K = static_cast<std::size_t>(cm.classes);
    MetricsSummary s;
    s.samples = cm.total();
    s.sensitivity.assign(K, std::nullopt);
    s.specificity.assign(K, std::nullopt);
    s.f1.assign(K, std::nullopt);
    s.present.assign(K, false);
    if (s.samples == 0) return s;

    std::size_t trace = 0;
    for (std::size_t c = 0; c < K; ++c) trace += cm.counts[c][c];
    s.accuracy = static_cast<double>(trace) / static_cast<double>(s.samples);

    double sens_sum = 0, spec_sum = 0, f1_sum = 0;
    int sens_n = 0, spec_n = 0;
    for (std::size_t c = 0; c < K; ++c) {
        const auto tp = static_cast<double>(cm.counts[c][c]);
        const auto actual = static_cast<double>(cm.row_total(static_cast<int>(c)));
        const auto predicted = static_cast<double>(cm.col_total(static_cast<int>(c)));
        const double fn = actual - tp;
        const double fp = predicted - tp;
        const double tn = static_cast<double>(s.samples) - tp - fn - fp;
        s.present[c] = actual > 0;
        if (actual > 0) {
            const double sens = tp / actual;
            const double denom = 2 * tp + fp + fn;
            s.sensitivity[c] = sens;
            s.f1[c] = denom > 0 ? 2 * tp / denom : 0.0;
            sens_sum += sens;
            f1_sum += *s.f1[c];
            ++sens_n;
        }
        if (tn + fp > 0) {
            s.specificity[c] = tn / (tn + fp);
            if (actual > 0) {
                spec_sum += *s.specificity[c];
                ++spec_n;
            }
        }
    }
    s.macro_sensitivity = sens_n ? sens_sum / sens_n : 0.0;
    s.macro_f1 = sens_n ? f1_sum / sens_n : 0.0;
    s.macro_specificity = spec_n ? spec_sum / spec_n : 0.0;
    return s;
}

namespace {

nlohmann::json optional_list(const std::vector<std::optional<double>>& v) {
    auto out = nlohmann::json::array();
    for (const auto& x : v) out.push_back(x ? nlohmann::json(*x) : nlohmann::json(nullptr));
    return out;
}

}  // namespace

nlohmann::json to_json(const MetricsSummary& s) {
    return {{"samples", s.samples},
            {"accuracy", s.accuracy},
            {"sensitivity", optional_list(s.sensitivity)},
            {"specificity", optional_list(s.specificity)},
            {"f1", optional_list(s.f1)},
            {"class_present", s.present},
            {"macro_sensitivity", s.macro_sensitivity},
            {"macro_specificity", s.macro_specificity},
            {"macro_f1", s.macro_f1}};
}

double percent1(double fraction) { return std::round(fraction * 1000.0) / 10.0; }

nlohmann::json report_json(const MetricsSummary& s) {
    nlohmann::json j;
    for (std::size_t c = 0; c < s.sensitivity.size(); ++c) {
        const std::string grade = "Grade " + std::to_string(c);
        j[grade]["Sens"] = s.sensitivity[c] ? nlohmann::json(percent1(*s.sensitivity[c])) : nlohmann::json(nullptr);
        j[grade]["Spec"] = s.specificity[c] ? nlohmann::json(percent1(*s.specificity[c])) : nlohmann::json(nullptr);
    }
    j["M F1-Score"] = percent1(s.macro_f1);
    j["Acc"] = percent1(s.accuracy);
    j["M-avg Sens"] = percent1(s.macro_sensitivity);
    j["M-avg Spec"] = percent1(s.macro_specificity);
    j["Samples"] = s.samples;
    return j;
}

BinaryScores binary_nash(std::span<const int> grades, std::span<const std::vector<double>> probabilities) {
    if (grades.size() != probabilities.size()) throw DataError("binary_nash: length mismatch");
    BinaryScores out;
    out.labels.reserve(grades.size());
    out.scores.reserve(grades.size());
    for (std::size_t i = 0; i < grades.size(); ++i) {
        if (probabilities[i].size() != 4) throw DataError("binary_nash: expected 4-class probability vectors");
        out.labels.push_back(grades[i] >= 1 ? 1 : 0);
        out.scores.push_back(1.0 - probabilities[i][0]);
    }
    return out;
}

namespace {

void check_binary(std::span<const int> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) throw DataError("AUC: length mismatch");
    bool pos = false, neg = false;
    for (int l : labels) {
        if (l == 1) pos = true;
        else if (l == 0) neg = true;
        else throw DataError("AUC: labels must be 0 or 1");
    }
    if (!pos || !neg) throw DataError("AUC undefined: single-class input");
}

}  // namespace

double rank_auc(std::span<const int> labels, std::span<const double> scores) {
    check_binary(labels, scores);
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Mann-Whitney U with midranks.
    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]] == 1) {
                pos_rank_sum += midrank;
                ++n_pos;
            }
        i = j;
    }
    const auto n_neg = labels.size() - n_pos;
    const double np = static_cast<double>(n_pos);
    return (pos_rank_sum - np * (np + 1) / 2.0) / (np * static_cast<double>(n_neg));
}

RocCurve roc_auc(std::span<const int> labels, std::span<const double> scores) {
    check_binary(labels, scores);
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const auto n_neg = static_cast<double>(labels.size()) - n_pos;

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double thr = scores[order[i]];
        while (i < order.size() && scores[order[i]] == thr) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        curve.points.push_back({static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos, thr});
    }
    curve.auc = rank_auc(labels, scores);
    return curve;
}

double trapezoid_area(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return area;
}

std::vector<std::pair<int, RocCurve>> ovr_curves(std::span<const int> y_true,
                                                 std::span<const std::vector<double>> probabilities) {
    if (y_true.size() != probabilities.size()) throw DataError("macro AUC: length mismatch");
    if (y_true.empty()) throw DataError("macro AUC: fewer than 2 classes present");
    const std::size_t K = probabilities.front().size();
    std::vector<bool> present(K, false);
    for (int y : y_true) {
        if (y < 0 || static_cast<std::size_t>(y) >= K) throw DataError("macro AUC: label out of range");
        present[static_cast<std::size_t>(y)] = true;
    }
    if (std::count(present.begin(), present.end(), true) < 2)
        throw DataError("macro AUC: fewer than 2 classes present");
    std::vector<std::pair<int, RocCurve>> out;
    std::vector<int> labels(y_true.size());
    std::vector<double> scores(y_true.size());
    for (std::size_t c = 0; c < K; ++c) {
        if (!present[c]) continue;
        for (std::size_t i = 0; i < y_true.size(); ++i) {
            labels[i] = static_cast<std::size_t>(y_true[i]) == c ? 1 : 0;
            scores[i] = probabilities[i][c];
        }
        out.emplace_back(static_cast<int>(c), roc_auc(labels, scores));
    }
    return out;
}

double macro_ovr_auc(std::span<const int> y_true, std::span<const std::vector<double>> probabilities) {
    const auto curves = ovr_curves(y_true, probabilities);
    double sum = 0.0;
    for (const auto& [c, curve] : curves) sum += curve.auc;
    return sum / static_cast<double>(curves.size());
}

namespace {

void append_number(std::string& out, double v) {
    if (std::isinf(v)) {
        out += v > 0 ? "inf" : "-inf";
        return;
    }
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

}  // namespace

std::string roc_csv(const RocCurve& curve) {
    std::string out = "fpr,tpr,threshold\n";
    for (const auto& p : curve.points) {
        append_number(out, p.fpr);
        out += ',';
        append_number(out, p.tpr);
        out += ',';
        append_number(out, p.threshold);
        out += '\n';
    }
    return out;
}

}  // namespace steatosis
