#include "steatosis/learners/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "steatosis/errors.hpp"

namespace steatosis {

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "logistic") return Activation::logistic;
    throw ConfigError("unknown activation '" + name + "'");
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::logistic: return "logistic";
    }
    return "?";
}

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::tanh: return std::tanh(z);
        case Activation::logistic: return 1.0 / (1.0 + std::exp(-z));
    }
    return z;
}

// Derivative expressed through the unit's output.
double activate_grad(Activation a, double out) {
    switch (a) {
        case Activation::relu: return out > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: return 1.0 - out * out;
        case Activation::logistic: return out * (1.0 - out);
    }
    return 1.0;
}

void softmax(std::span<double> v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (auto& e : v) sum += e = std::exp(e - mx);
    for (auto& e : v) e /= sum;
}

}  // namespace

MlpNetwork::MlpNetwork(std::vector<int> layer_sizes, Activation activation)
    : sizes_(std::move(layer_sizes)), activation_(activation) {
    if (sizes_.size() < 2) throw std::invalid_argument("mlp: need input and output layers");
    for (int s : sizes_)
        if (s <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        offsets_.push_back(total);
        total += static_cast<std::size_t>(sizes_[l]) * static_cast<std::size_t>(sizes_[l + 1]) +
                 static_cast<std::size_t>(sizes_[l + 1]);
    }
    params_.assign(total, 0.0);
}

void MlpNetwork::initialize(Rng& rng) {
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const auto in = static_cast<std::size_t>(sizes_[l]), out = static_cast<std::size_t>(sizes_[l + 1]);
        const double factor = activation_ == Activation::logistic ? 2.0 : 6.0;
        const double bound = std::sqrt(factor / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        double* p = params_.data() + offsets_[l];
        for (std::size_t i = 0; i < in * out + out; ++i) p[i] = dist(rng);
    }
}

void MlpNetwork::run(std::span<const double> x, std::vector<std::vector<double>>& acts) const {
    const std::size_t L = sizes_.size() - 1;
    acts.resize(L + 1);
    acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < L; ++l) {
        const auto in = static_cast<std::size_t>(sizes_[l]), out = static_cast<std::size_t>(sizes_[l + 1]);
        const double* W = params_.data() + offsets_[l];
        const double* b = W + in * out;
        auto& next = acts[l + 1];
        next.resize(out);
        const auto& prev = acts[l];
        for (std::size_t o = 0; o < out; ++o) {
            const double* w = W + o * in;
            double z = b[o];
            for (std::size_t i = 0; i < in; ++i) z += w[i] * prev[i];
            next[o] = l + 1 < L ? activate(activation_, z) : z;
        }
        if (l + 1 == L) softmax(next);
    }
}

void MlpNetwork::forward(std::span<const double> x, std::span<double> out) const {
    if (x.size() != input_width()) throw std::invalid_argument("mlp: input width mismatch");
    thread_local std::vector<std::vector<double>> acts;
    run(x, acts);
    std::copy(acts.back().begin(), acts.back().end(), out.begin());
}

double MlpNetwork::loss_and_gradient(const Matrix& X, std::span<const int> y, std::span<const std::size_t> rows,
                                     double alpha, std::span<double> grad) const {
    std::fill(grad.begin(), grad.end(), 0.0);
    const std::size_t L = sizes_.size() - 1;
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    std::vector<std::vector<double>> acts;
    std::vector<double> delta, prev_delta;
    double loss = 0.0;

    for (auto r : rows) {
        run(X.row(r), acts);
        const auto label = static_cast<std::size_t>(y[r]);
        loss -= std::log(std::max(acts[L][label], 1e-300));
        delta = acts[L];
        delta[label] -= 1.0;
        for (std::size_t l = L; l-- > 0;) {
            const auto in = static_cast<std::size_t>(sizes_[l]), out = static_cast<std::size_t>(sizes_[l + 1]);
            const double* W = params_.data() + offsets_[l];
            double* gW = grad.data() + offsets_[l];
            double* gb = gW + in * out;
            const auto& a = acts[l];
            for (std::size_t o = 0; o < out; ++o) {
                const double d = delta[o];
                gb[o] += d;
                double* gw = gW + o * in;
                for (std::size_t i = 0; i < in; ++i) gw[i] += d * a[i];
            }
            if (l == 0) break;
            prev_delta.assign(in, 0.0);
            for (std::size_t o = 0; o < out; ++o) {
                const double d = delta[o];
                const double* w = W + o * in;
                for (std::size_t i = 0; i < in; ++i) prev_delta[i] += d * w[i];
            }
            for (std::size_t i = 0; i < in; ++i) prev_delta[i] *= activate_grad(activation_, a[i]);
            std::swap(delta, prev_delta);
        }
    }
    loss *= inv_n;
    for (auto& g : grad) g *= inv_n;

    double penalty = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        const auto n_w = static_cast<std::size_t>(sizes_[l]) * static_cast<std::size_t>(sizes_[l + 1]);
        const double* W = params_.data() + offsets_[l];
        double* gW = grad.data() + offsets_[l];
        for (std::size_t i = 0; i < n_w; ++i) {
            penalty += W[i] * W[i];
            gW[i] += alpha * inv_n * W[i];
        }
    }
    return loss + 0.5 * alpha * inv_n * penalty;
}

double MlpNetwork::loss(const Matrix& X, std::span<const int> y, std::span<const std::size_t> rows,
                        double alpha) const {
    const std::size_t L = sizes_.size() - 1;
    std::vector<std::vector<double>> acts;
    double loss = 0.0;
    for (auto r : rows) {
        run(X.row(r), acts);
        loss -= std::log(std::max(acts[L][static_cast<std::size_t>(y[r])], 1e-300));
    }
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    double penalty = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        const auto n_w = static_cast<std::size_t>(sizes_[l]) * static_cast<std::size_t>(sizes_[l + 1]);
        const double* W = params_.data() + offsets_[l];
        for (std::size_t i = 0; i < n_w; ++i) penalty += W[i] * W[i];
    }
    return loss * inv_n + 0.5 * alpha * inv_n * penalty;
}

nlohmann::json MlpNetwork::to_json() const {
    return {{"layers", sizes_}, {"activation", activation_name(activation_)}, {"params", params_}};
}

MlpNetwork MlpNetwork::from_json(const nlohmann::json& j) {
    MlpNetwork net(j.at("layers").get<std::vector<int>>(), activation_from_name(j.at("activation").get<std::string>()));
    auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != net.params_.size()) throw std::invalid_argument("mlp: parameter count mismatch");
    net.params_ = std::move(params);
    return net;
}

std::shared_ptr<const Model> MlpModel::load(const nlohmann::json& j) {
    return std::make_shared<MlpModel>(MlpNetwork::from_json(j));
}

MlpTrainParams mlp_params(const Hyperparams& p) {
    MlpTrainParams t;
    t.hidden = param_sizes(p, "hidden_layer_sizes", t.hidden);
    t.activation = activation_from_name(param_string(p, "activation", "relu"));
    t.solver = param_string(p, "solver", t.solver);
    t.alpha = param_double(p, "alpha", t.alpha);
    t.schedule = param_string(p, "learning_rate", t.schedule);
    t.learning_rate_init = param_double(p, "learning_rate_init", t.learning_rate_init);
    t.batch_size = static_cast<int>(param_int(p, "batch_size", t.batch_size));
    t.momentum = param_double(p, "momentum", t.momentum);
    t.max_epochs = static_cast<int>(param_int(p, "max_epochs", t.max_epochs));
    t.patience = static_cast<int>(param_int(p, "patience", t.patience));
    t.validation_fraction = param_double(p, "validation_fraction", t.validation_fraction);
    return t;
}

MlpFit fit_mlp(const MlpTrainParams& p, const Matrix& X, std::span<const int> y, int class_count, std::uint64_t seed) {
    std::vector<int> sizes{static_cast<int>(X.cols())};
    sizes.insert(sizes.end(), p.hidden.begin(), p.hidden.end());
    sizes.push_back(class_count);

    MlpFit fit;
    fit.network = MlpNetwork(sizes, p.activation);
    Rng init_rng = make_rng(seed, "mlp-init");
    fit.network.initialize(init_rng);

    const std::size_t n = X.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::size_t> train_rows, val_rows;
    const auto n_val = static_cast<std::size_t>(std::ceil(p.validation_fraction * static_cast<double>(n)));
    if (p.validation_fraction > 0.0 && n >= 20 && n_val >= 1) {
        Rng split_rng = make_rng(seed, "mlp-validation");
        std::shuffle(order.begin(), order.end(), split_rng);
        val_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
        train_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
        std::sort(val_rows.begin(), val_rows.end());
        std::sort(train_rows.begin(), train_rows.end());
    } else {
        train_rows = order;
    }
    const auto& monitor_rows = val_rows.empty() ? train_rows : val_rows;

    auto params = fit.network.params();
    const std::size_t P = params.size();
    std::vector<double> grad(P), velocity(P, 0.0), m1(P, 0.0), m2(P, 0.0);
    std::vector<double> best(params.begin(), params.end());
    double best_loss = std::numeric_limits<double>::infinity();
    double best_train = std::numeric_limits<double>::infinity();
    int stale = 0, train_stale = 0;
    double lr = p.learning_rate_init;
    const bool adam = p.solver == "adam";
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::size_t step = 0;
    const std::size_t batch = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, p.batch_size)), 1,
                                                      train_rows.size());
    Rng shuffle_rng = make_rng(seed, "mlp-shuffle");

    for (int epoch = 0; epoch < p.max_epochs; ++epoch) {
        std::shuffle(train_rows.begin(), train_rows.end(), shuffle_rng);
        if (!adam && p.schedule == "invscaling") lr = p.learning_rate_init / std::sqrt(static_cast<double>(epoch + 1));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < train_rows.size(); start += batch) {
            const std::size_t len = std::min(batch, train_rows.size() - start);
            std::span<const std::size_t> rows(train_rows.data() + start, len);
            epoch_loss += fit.network.loss_and_gradient(X, y, rows, p.alpha, grad) * static_cast<double>(len);
            ++step;
            if (adam) {
                const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                const double step_size = p.learning_rate_init * std::sqrt(c2) / c1;
                for (std::size_t i = 0; i < P; ++i) {
                    m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
                    m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
                    params[i] -= step_size * m1[i] / (std::sqrt(m2[i]) + eps);
                }
            } else {
                for (std::size_t i = 0; i < P; ++i) {
                    velocity[i] = p.momentum * velocity[i] - lr * grad[i];
                    params[i] += velocity[i];
                }
            }
        }
        epoch_loss /= static_cast<double>(train_rows.size());
        ++fit.epochs;

        if (!std::isfinite(epoch_loss)) break;  // diverged; keep the best snapshot

        // Adaptive schedule: two consecutive epochs without training-loss progress divide the rate by 5.
        if (epoch_loss < best_train - p.tol) {
            best_train = epoch_loss;
            train_stale = 0;
        } else if (++train_stale >= 2) {
            if (!adam && p.schedule == "adaptive") lr = std::max(lr / 5.0, 1e-6);
            train_stale = 0;
        }

        const double monitor = fit.network.loss(X, y, monitor_rows, 0.0);
        fit.monitor_loss.push_back(monitor);
        if (monitor < best_loss - p.tol) {
            best_loss = monitor;
            std::copy(params.begin(), params.end(), best.begin());
            stale = 0;
        } else if (++stale >= p.patience) {
            break;
        }
    }
    std::copy(best.begin(), best.end(), params.begin());
    return fit;
}

}  // namespace steatosis
