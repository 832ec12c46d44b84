#include "steatosis/kernels.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace steatosis {

namespace {
std::atomic<Exec> g_exec{Exec::parallel};

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}
}  // namespace

Exec default_exec() { return g_exec.load(); }
void set_default_exec(Exec exec) { g_exec.store(exec); }

double kernel_value(const KernelParams& k, std::span<const double> a, std::span<const double> b) {
    switch (k.type) {
        case KernelType::linear: return dot(a, b);
        case KernelType::poly: return std::pow(k.gamma * dot(a, b) + k.coef0, k.degree);
        case KernelType::rbf: return std::exp(-k.gamma * sq_dist(a, b));
        case KernelType::sigmoid: return std::tanh(k.gamma * dot(a, b) + k.coef0);
    }
    throw std::logic_error("unknown kernel");
}

Matrix gram_matrix(const Matrix& X, const KernelParams& k, Exec exec) {
    const std::size_t n = X.rows();
    Matrix G(n, n);
    parallel_for(n, exec, [&](std::size_t i) {
        for (std::size_t j = i; j < n; ++j) G(i, j) = kernel_value(k, X.row(i), X.row(j));
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) G(i, j) = G(j, i);
    return G;
}

Matrix gram_matrix_reference(const Matrix& X, const KernelParams& k) {
    const std::size_t n = X.rows();
    Matrix G(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) G(i, j) = kernel_value(k, X.row(i), X.row(j));
    return G;
}

Matrix squared_distances(const Matrix& queries, const Matrix& reference, Exec exec) {
    if (queries.cols() != reference.cols()) throw std::invalid_argument("squared_distances: width mismatch");
    Matrix out(queries.rows(), reference.rows());
    parallel_for(queries.rows(), exec, [&](std::size_t i) {
        auto q = queries.row(i);
        for (std::size_t j = 0; j < reference.rows(); ++j) out(i, j) = sq_dist(q, reference.row(j));
    });
    return out;
}

}  // namespace steatosis
