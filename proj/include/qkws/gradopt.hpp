#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qkws/errors.hpp"

namespace qkws {

// Aligned index-for-index with a flattened parameter vector.
using GradientVector = std::vector<double>;

using LossFn = std::function<double(const std::vector<double>&)>;

// Central difference, component by component:
//   g_i = (L(p_i + eps) - L(p_i - eps)) / (2 eps)
// Costs exactly 2 * len(params) loss evaluations. Throws NumericError with
// the offending index if a probe returns a non-finite loss.
GradientVector finite_diff_grad(const LossFn& loss_at,
                                std::vector<double> params, double eps);

// Exact gradient for losses whose parameters enter only as Pauli-rotation
// angles: g_i = (L(p_i + pi/2) - L(p_i - pi/2)) / 2.
GradientVector parameter_shift_grad(const LossFn& loss_at,
                                    std::vector<double> params);

enum class OptKind { SGD, Adam };

struct OptimizerState {
    OptKind kind = OptKind::SGD;
    double learning_rate = 0.01;
    std::uint64_t step_count = 0;
    // Adam only
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon_hat = 1e-8;

    static OptimizerState sgd(double lr);
    static OptimizerState adam(double lr, std::size_t n_params);
};

// In-place parameter update. SGD: p -= lr * g. Adam: bias-corrected moment
// update with the constants above. Deterministic given (opt, params, grad).
void step(OptimizerState& opt, std::vector<double>& params,
          const GradientVector& grad);
void step(OptimizerState& opt, double* params, const double* grad,
          std::size_t n);

} // namespace qkws
