#include "steatosis/learners/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "steatosis/errors.hpp"

namespace steatosis {

namespace {

constexpr double kTau = 1e-12;

bool is_upper(double a, double C) { return a >= C; }
bool is_lower(double a) { return a <= 0.0; }

const char* kernel_name(KernelType t) {
    switch (t) {
        case KernelType::linear: return "linear";
        case KernelType::poly: return "poly";
        case KernelType::rbf: return "rbf";
        case KernelType::sigmoid: return "sigmoid";
    }
    return "?";
}

KernelType kernel_type(const std::string& s) {
    if (s == "linear") return KernelType::linear;
    if (s == "poly") return KernelType::poly;
    if (s == "rbf") return KernelType::rbf;
    if (s == "sigmoid") return KernelType::sigmoid;
    throw ConfigError("unknown kernel '" + s + "'");
}

}  // namespace

SmoResult solve_smo(const Matrix& gram, std::span<const int> y, double C, double tol, std::size_t max_iter) {
    const std::size_t n = y.size();
    SmoResult res;
    res.alpha.assign(n, 0.0);
    auto& a = res.alpha;
    std::vector<double> G(n, -1.0);  // gradient of 0.5 a'Qa - e'a

    auto Q = [&](std::size_t i, std::size_t j) { return static_cast<double>(y[i] * y[j]) * gram(i, j); };

    while (res.iterations < max_iter) {
        // i: maximal violator in I_up
        double gmax = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t gi = -1;
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] == 1) {
                if (!is_upper(a[t], C) && -G[t] >= gmax) gmax = -G[t], gi = static_cast<std::ptrdiff_t>(t);
            } else {
                if (!is_lower(a[t]) && G[t] >= gmax) gmax = G[t], gi = static_cast<std::ptrdiff_t>(t);
            }
        }
        // j: second-order choice in I_low
        double gmax2 = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t gj = -1;
        double best_obj = std::numeric_limits<double>::infinity();
        if (gi >= 0) {
            const auto i = static_cast<std::size_t>(gi);
            for (std::size_t t = 0; t < n; ++t) {
                if (y[t] == 1) {
                    if (is_lower(a[t])) continue;
                    const double diff = gmax + G[t];
                    gmax2 = std::max(gmax2, G[t]);
                    if (diff > 0) {
                        double quad = gram(i, i) + gram(t, t) - 2.0 * y[i] * Q(i, t);
                        const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
                        if (obj <= best_obj) best_obj = obj, gj = static_cast<std::ptrdiff_t>(t);
                    }
                } else {
                    if (is_upper(a[t], C)) continue;
                    const double diff = gmax - G[t];
                    gmax2 = std::max(gmax2, -G[t]);
                    if (diff > 0) {
                        double quad = gram(i, i) + gram(t, t) + 2.0 * y[i] * Q(i, t);
                        const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
                        if (obj <= best_obj) best_obj = obj, gj = static_cast<std::ptrdiff_t>(t);
                    }
                }
            }
        }
        if (gi < 0 || gj < 0 || gmax + gmax2 < tol) {
            res.converged = true;
            break;
        }
        ++res.iterations;

        const auto i = static_cast<std::size_t>(gi);
        const auto j = static_cast<std::size_t>(gj);
        const double old_ai = a[i], old_aj = a[j];
        if (y[i] != y[j]) {
            double quad = gram(i, i) + gram(j, j) + 2.0 * Q(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if (diff > 0) {
                if (a[j] < 0) a[j] = 0, a[i] = diff;
            } else {
                if (a[i] < 0) a[i] = 0, a[j] = -diff;
            }
            if (diff > 0) {
                if (a[i] > C) a[i] = C, a[j] = C - diff;
            } else {
                if (a[j] > C) a[j] = C, a[i] = C + diff;
            }
        } else {
            double quad = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if (sum > C) {
                if (a[i] > C) a[i] = C, a[j] = sum - C;
            } else {
                if (a[j] < 0) a[j] = 0, a[i] = sum;
            }
            if (sum > C) {
                if (a[j] > C) a[j] = C, a[i] = sum - C;
            } else {
                if (a[i] < 0) a[i] = 0, a[j] = sum;
            }
        }
        const double di = a[i] - old_ai, dj = a[j] - old_aj;
        // Gram is symmetric, so read rows i and j contiguously.
        const auto row_i = gram.row(i);
        const auto row_j = gram.row(j);
        const double yi_di = y[i] * di, yj_dj = y[j] * dj;
        for (std::size_t t = 0; t < n; ++t) G[t] += y[t] * (row_i[t] * yi_di + row_j[t] * yj_dj);
    }

    // rho: mean of y_i G_i over free vectors, else midpoint of the feasible range.
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yG = y[t] * G[t];
        if (is_upper(a[t], C)) {
            if (y[t] == -1) ub = std::min(ub, yG);
            else lb = std::max(lb, yG);
        } else if (is_lower(a[t])) {
            if (y[t] == 1) ub = std::min(ub, yG);
            else lb = std::max(lb, yG);
        } else {
            ++n_free;
            sum_free += yG;
        }
    }
    res.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
    if (!std::isfinite(res.rho)) res.rho = 0.0;
    return res;
}

double kkt_violation(const Matrix& gram, std::span<const int> y, std::span<const double> alpha, double C) {
    const std::size_t n = y.size();
    double up = -std::numeric_limits<double>::infinity();   // max over I_up of -y G
    double low = std::numeric_limits<double>::infinity();   // min over I_low of -y G
    for (std::size_t t = 0; t < n; ++t) {
        double g = -1.0;
        for (std::size_t s = 0; s < n; ++s) g += static_cast<double>(y[t] * y[s]) * gram(t, s) * alpha[s];
        const double v = -y[t] * g;
        const bool in_up = (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0);
        const bool in_low = (y[t] == 1 && alpha[t] > 0) || (y[t] == -1 && alpha[t] < C);
        if (in_up) up = std::max(up, v);
        if (in_low) low = std::min(low, v);
    }
    if (!std::isfinite(up) || !std::isfinite(low)) return 0.0;
    return std::max(0.0, up - low);
}

KernelParams kernel_from_params(const Hyperparams& p, const Matrix& X) {
    KernelParams k;
    k.type = kernel_type(param_string(p, "kernel", "rbf"));
    k.degree = static_cast<int>(param_int(p, "degree", 3));
    k.coef0 = param_double(p, "coef0", 0.0);
    auto it = p.find("gamma");
    if (it == p.end() || std::holds_alternative<std::string>(it->second)) {
        const std::string mode = it == p.end() ? "scale" : std::get<std::string>(it->second);
        if (mode == "scale") {
            // 1 / (n_features * Var(X)) over all entries
            const auto data = X.data();
            double mean = 0.0;
            for (double v : data) mean += v;
            mean /= static_cast<double>(data.size());
            double var = 0.0;
            for (double v : data) var += (v - mean) * (v - mean);
            var /= static_cast<double>(data.size());
            k.gamma = var > 0 ? 1.0 / (static_cast<double>(X.cols()) * var) : 1.0;
        } else if (mode == "auto") {
            k.gamma = 1.0 / static_cast<double>(X.cols());
        } else {
            throw ConfigError("gamma: unknown option '" + mode + "'");
        }
    } else {
        k.gamma = param_double(p, "gamma", 1.0);
    }
    return k;
}

SvmModel::SvmModel(KernelParams kernel, Matrix support, Matrix coef, std::vector<double> rho, std::vector<char> present)
    : kernel_(kernel), support_(std::move(support)), coef_(std::move(coef)), rho_(std::move(rho)),
      present_(std::move(present)) {}

std::vector<double> SvmModel::decision_values(std::span<const double> x) const {
    std::vector<double> k(support_.rows());
    for (std::size_t s = 0; s < support_.rows(); ++s) k[s] = kernel_value(kernel_, support_.row(s), x);
    std::vector<double> f(rho_.size());
    for (std::size_t c = 0; c < rho_.size(); ++c) {
        double v = -rho_[c];
        auto row = coef_.row(c);
        for (std::size_t s = 0; s < k.size(); ++s) v += row[s] * k[s];
        f[c] = v;
    }
    return f;
}

void SvmModel::predict_proba(std::span<const double> x, std::span<double> out) const {
    auto f = decision_values(x);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < f.size(); ++c)
        if (present_[c]) mx = std::max(mx, f[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < f.size(); ++c) sum += out[c] = present_[c] ? std::exp(f[c] - mx) : 0.0;
    for (auto& v : out) v /= sum;
}

nlohmann::json SvmModel::state() const {
    return {{"kernel", kernel_name(kernel_.type)},
            {"gamma", kernel_.gamma},
            {"coef0", kernel_.coef0},
            {"degree", kernel_.degree},
            {"cols", support_.cols()},
            {"support", std::vector<double>(support_.data().begin(), support_.data().end())},
            {"coef", std::vector<double>(coef_.data().begin(), coef_.data().end())},
            {"rho", rho_},
            {"present", std::vector<int>(present_.begin(), present_.end())},
            {"probability", "ovr_decision_softmax"}};
}

std::shared_ptr<const Model> SvmModel::fit(const Hyperparams& p, const Matrix& X, std::span<const int> y,
                                           int class_count, Exec exec) {
    const double C = param_double(p, "C", 1.0);
    const double tol = param_double(p, "tol", 1e-3);
    const auto max_iter = static_cast<std::size_t>(param_int(p, "max_iter", 1000000));
    const KernelParams kernel = kernel_from_params(p, X);
    const std::size_t n = X.rows();
    const auto K = static_cast<std::size_t>(class_count);

    const Matrix gram = gram_matrix(X, kernel, exec);

    std::vector<char> present(K, 0);
    for (int label : y) present[static_cast<std::size_t>(label)] = 1;

    std::vector<SmoResult> solutions(K);
    std::vector<std::vector<int>> signs(K);
    parallel_for(K, exec, [&](std::size_t c) {
        if (!present[c]) return;
        signs[c].resize(n);
        for (std::size_t i = 0; i < n; ++i) signs[c][i] = y[i] == static_cast<int>(c) ? 1 : -1;
        solutions[c] = solve_smo(gram, signs[c], C, tol, max_iter);
    });

    std::vector<std::size_t> support_rows;
    for (std::size_t i = 0; i < n; ++i) {
        bool used = false;
        for (std::size_t c = 0; c < K && !used; ++c) used = present[c] && solutions[c].alpha[i] > 0.0;
        if (used) support_rows.push_back(i);
    }
    Matrix support = X.select_rows(support_rows);
    Matrix coef(K, support_rows.size());
    std::vector<double> rho(K, 0.0);
    for (std::size_t c = 0; c < K; ++c) {
        if (!present[c]) continue;
        rho[c] = solutions[c].rho;
        for (std::size_t s = 0; s < support_rows.size(); ++s)
            coef(c, s) = solutions[c].alpha[support_rows[s]] * signs[c][support_rows[s]];
    }
    return std::make_shared<SvmModel>(kernel, std::move(support), std::move(coef), std::move(rho), std::move(present));
}

std::shared_ptr<const Model> SvmModel::load(const nlohmann::json& j) {
    KernelParams k;
    k.type = kernel_type(j.at("kernel").get<std::string>());
    k.gamma = j.at("gamma").get<double>();
    k.coef0 = j.at("coef0").get<double>();
    k.degree = j.at("degree").get<int>();
    const auto cols = j.at("cols").get<std::size_t>();
    auto sv = j.at("support").get<std::vector<double>>();
    auto coef = j.at("coef").get<std::vector<double>>();
    auto rho = j.at("rho").get<std::vector<double>>();
    auto present = j.at("present").get<std::vector<int>>();
    const std::size_t n_sv = cols ? sv.size() / cols : 0;
    if (cols == 0 || sv.size() != n_sv * cols || coef.size() != rho.size() * n_sv || present.size() != rho.size())
        throw std::invalid_argument("svm: inconsistent state");
    Matrix support(n_sv, cols), coefm(rho.size(), n_sv);
    std::copy(sv.begin(), sv.end(), support.data().begin());
    std::copy(coef.begin(), coef.end(), coefm.data().begin());
    return std::make_shared<SvmModel>(k, std::move(support), std::move(coefm), std::move(rho),
                                      std::vector<char>(present.begin(), present.end()));
}

}  // namespace steatosis
