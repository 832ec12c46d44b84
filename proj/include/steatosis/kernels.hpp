#pragma once

#include <cstddef>
#include <exception>
#include <span>
#include <vector>

#include <omp.h>

#include "steatosis/matrix.hpp"

namespace steatosis {

// Execution policy for the data-parallel kernels. Both policies produce
// bit-identical results: every task writes its own output slot and
// reductions happen in index order afterwards.
enum class Exec { serial, parallel };

Exec default_exec();
void set_default_exec(Exec exec);

// Runs fn(i) for i in [0, n). Exceptions are collected per index and the one
// with the lowest index is rethrown once all tasks finish. Runs serially when
// already inside a parallel region.
template <class Fn>
void parallel_for(std::size_t n, Exec exec, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<long>(n);
    if (exec == Exec::parallel && n > 1 && !omp_in_parallel()) {
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < count; ++i) {
            try {
                fn(static_cast<std::size_t>(i));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    } else {
        for (long i = 0; i < count; ++i) {
            try {
                fn(static_cast<std::size_t>(i));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

enum class KernelType { linear, poly, rbf, sigmoid };

struct KernelParams {
    KernelType type = KernelType::rbf;
    double gamma = 1.0;
    double coef0 = 0.0;
    int degree = 3;
};

double kernel_value(const KernelParams& k, std::span<const double> a, std::span<const double> b);

// Full n x n Gram matrix. The parallel path fills the upper triangle row by
// row and mirrors it.
Matrix gram_matrix(const Matrix& X, const KernelParams& k, Exec exec = default_exec());
// Straightforward double loop kept as the reference for tests and benchmarks.
Matrix gram_matrix_reference(const Matrix& X, const KernelParams& k);

// out(i, j) = ||queries_i - reference_j||^2
Matrix squared_distances(const Matrix& queries, const Matrix& reference, Exec exec = default_exec());

}  // namespace steatosis
