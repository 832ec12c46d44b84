#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "steatosis/hyperparams.hpp"
#include "steatosis/learners/classifier.hpp"
#include "steatosis/random.hpp"

namespace steatosis {

enum class Activation { relu, tanh, logistic };

Activation activation_from_name(const std::string& name);
const char* activation_name(Activation a);

// Dense feed-forward network with a softmax output. All weights and biases
// live in one flat parameter vector: per layer, W (out x in, row-major) then b.
class MlpNetwork {
public:
    MlpNetwork() = default;
    MlpNetwork(std::vector<int> layer_sizes, Activation activation);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    Activation activation() const { return activation_; }
    std::size_t input_width() const { return static_cast<std::size_t>(sizes_.front()); }
    std::size_t output_width() const { return static_cast<std::size_t>(sizes_.back()); }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }

    // Glorot-uniform initialization (scaled for logistic units).
    void initialize(Rng& rng);

    void forward(std::span<const double> x, std::span<double> out) const;

    // Mean cross-entropy over `rows` plus alpha / (2 |rows|) * ||W||^2 (biases
    // unpenalized). Writes d(loss)/d(params) into grad.
    double loss_and_gradient(const Matrix& X, std::span<const int> y, std::span<const std::size_t> rows, double alpha,
                             std::span<double> grad) const;
    // Same objective without the gradient.
    double loss(const Matrix& X, std::span<const int> y, std::span<const std::size_t> rows, double alpha) const;

    nlohmann::json to_json() const;
    static MlpNetwork from_json(const nlohmann::json& j);

    friend bool operator==(const MlpNetwork&, const MlpNetwork&) = default;

private:
    std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
    // Activations per layer for one input; acts[0] = x.
    void run(std::span<const double> x, std::vector<std::vector<double>>& acts) const;

    std::vector<int> sizes_;
    Activation activation_ = Activation::relu;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

struct MlpTrainParams {
    std::vector<int> hidden{100};
    Activation activation = Activation::relu;
    std::string solver = "adam";
    double alpha = 1e-4;
    std::string schedule = "constant";
    double learning_rate_init = 1e-3;
    int batch_size = 32;
    double momentum = 0.9;
    int max_epochs = 500;
    int patience = 20;
    double validation_fraction = 0.1;
    double tol = 1e-4;
};

MlpTrainParams mlp_params(const Hyperparams& p);

struct MlpFit {
    MlpNetwork network;
    int epochs = 0;
    std::vector<double> monitor_loss;  // validation (or training) loss per epoch
};

MlpFit fit_mlp(const MlpTrainParams& p, const Matrix& X, std::span<const int> y, int class_count, std::uint64_t seed);

class MlpModel final : public Model {
public:
    explicit MlpModel(MlpNetwork net) : net_(std::move(net)) {}

    void predict_proba(std::span<const double> x, std::span<double> out) const override { net_.forward(x, out); }
    nlohmann::json state() const override { return net_.to_json(); }
    const MlpNetwork& network() const { return net_; }

    static std::shared_ptr<const Model> load(const nlohmann::json& j);

private:
    MlpNetwork net_;
};

}  // namespace steatosis
