#include "steatosis/learners/knn.hpp"

#include <algorithm>
#include <numeric>

namespace steatosis {

KnnModel::KnnModel(Matrix X, std::vector<int> y, int k, int class_count)
    : X_(std::move(X)), y_(std::move(y)), k_(k), class_count_(class_count) {}

void KnnModel::vote(std::span<const double> distances, std::span<double> out) const {
    const std::size_t n = distances.size();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          return distances[a] < distances[b] || (distances[a] == distances[b] && a < b);
                      });
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < k; ++i) out[static_cast<std::size_t>(y_[order[i]])] += 1.0;
    for (auto& v : out) v /= static_cast<double>(k);
}

void KnnModel::predict_proba(std::span<const double> x, std::span<double> out) const {
    std::vector<double> d(X_.rows());
    for (std::size_t j = 0; j < X_.rows(); ++j) {
        auto r = X_.row(j);
        double s = 0.0;
        for (std::size_t c = 0; c < r.size(); ++c) {
            const double diff = x[c] - r[c];
            s += diff * diff;
        }
        d[j] = s;
    }
    vote(d, out);
}

Matrix KnnModel::predict_proba_batch(const Matrix& queries, Exec exec) const {
    Matrix dist = squared_distances(queries, X_, exec);
    Matrix out(queries.rows(), static_cast<std::size_t>(class_count_));
    parallel_for(queries.rows(), exec, [&](std::size_t i) { vote(dist.row(i), out.row(i)); });
    return out;
}

nlohmann::json KnnModel::state() const {
    return {{"k", k_}, {"classes", class_count_}, {"cols", X_.cols()},
            {"X", std::vector<double>(X_.data().begin(), X_.data().end())}, {"y", y_}};
}

std::shared_ptr<const Model> KnnModel::fit(const Hyperparams& p, const Matrix& X, std::span<const int> y,
                                           int class_count) {
    const auto k = static_cast<int>(param_int(p, "n_neighbors", 5));
    return std::make_shared<KnnModel>(X, std::vector<int>(y.begin(), y.end()), k, class_count);
}

std::shared_ptr<const Model> KnnModel::load(const nlohmann::json& j) {
    const auto cols = j.at("cols").get<std::size_t>();
    auto flat = j.at("X").get<std::vector<double>>();
    auto y = j.at("y").get<std::vector<int>>();
    if (cols == 0 || flat.size() != cols * y.size()) throw std::invalid_argument("knn: bad training matrix");
    Matrix X(y.size(), cols);
    std::copy(flat.begin(), flat.end(), X.data().begin());
    return std::make_shared<KnnModel>(std::move(X), std::move(y), j.at("k").get<int>(), j.at("classes").get<int>());
}

}  // namespace steatosis
