#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "steatosis/hyperparams.hpp"
#include "steatosis/kernels.hpp"
#include "steatosis/learners/classifier.hpp"

namespace steatosis {

struct SmoResult {
    std::vector<double> alpha;
    double rho = 0.0;  // decision(x) = sum_i alpha_i y_i K(x_i, x) - rho
    std::size_t iterations = 0;
    bool converged = false;
};

// Solves the C-SVC dual with sequential minimal optimization, using
// second-order working-set selection. Labels are +1/-1.
SmoResult solve_smo(const Matrix& gram, std::span<const int> labels, double C, double tol, std::size_t max_iter);

// Maximal KKT violation m(alpha) - M(alpha) recomputed from scratch; the
// solver stops once this drops below its tolerance.
double kkt_violation(const Matrix& gram, std::span<const int> labels, std::span<const double> alpha, double C);

// One-vs-rest kernel SVM. Probabilities are the softmax of the per-class
// decision values; classes absent from training get probability 0.
class SvmModel final : public Model {
public:
    SvmModel(KernelParams kernel, Matrix support, Matrix coef, std::vector<double> rho, std::vector<char> present);

    void predict_proba(std::span<const double> x, std::span<double> out) const override;
    std::vector<double> decision_values(std::span<const double> x) const;
    nlohmann::json state() const override;

    static std::shared_ptr<const Model> fit(const Hyperparams& p, const Matrix& X, std::span<const int> y,
                                            int class_count, Exec exec = default_exec());
    static std::shared_ptr<const Model> load(const nlohmann::json& j);

private:
    KernelParams kernel_;
    Matrix support_;           // union of support vectors
    Matrix coef_;              // class x support: alpha_i * y_i
    std::vector<double> rho_;  // per class
    std::vector<char> present_;
};

KernelParams kernel_from_params(const Hyperparams& p, const Matrix& X);

}  // namespace steatosis
