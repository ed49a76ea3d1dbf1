#include "qkws/gradopt.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qkws/simcore.hpp"

namespace qkws {

namespace {

GradientVector two_point_grad(const LossFn& loss_at, std::vector<double>& params,
                              double shift, double denom, const char* who) {
    GradientVector grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double original = params[i];
        params[i] = original + shift;
        const double plus = loss_at(params);
        params[i] = original - shift;
        const double minus = loss_at(params);
        params[i] = original;
        if (!std::isfinite(plus) || !std::isfinite(minus)) {
            throw NumericError(std::string(who) +
                                   ": non-finite loss probing parameter " +
                                   std::to_string(i),
                               i);
        }
        grad[i] = (plus - minus) / denom;
    }
    return grad;
}

} // namespace

GradientVector finite_diff_grad(const LossFn& loss_at,
                                std::vector<double> params, double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw std::invalid_argument("finite_diff_grad: eps must be positive");
    }
    return two_point_grad(loss_at, params, eps, 2.0 * eps, "finite_diff_grad");
}

GradientVector parameter_shift_grad(const LossFn& loss_at,
                                    std::vector<double> params) {
    return two_point_grad(loss_at, params, kPi / 2.0, 2.0,
                          "parameter_shift_grad");
}

OptimizerState OptimizerState::sgd(double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("sgd: learning rate must be positive");
    OptimizerState s;
    s.kind = OptKind::SGD;
    s.learning_rate = lr;
    return s;
}

OptimizerState OptimizerState::adam(double lr, std::size_t n_params) {
    if (!(lr > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
    OptimizerState s;
    s.kind = OptKind::Adam;
    s.learning_rate = lr;
    s.first_moment.assign(n_params, 0.0);
    s.second_moment.assign(n_params, 0.0);
    return s;
}

void step(OptimizerState& opt, double* params, const double* grad,
          std::size_t n) {
    opt.step_count += 1;
    if (opt.kind == OptKind::SGD) {
        for (std::size_t i = 0; i < n; ++i) params[i] -= opt.learning_rate * grad[i];
        return;
    }
    if (opt.first_moment.size() != n) {
        throw std::invalid_argument("step: Adam moment size does not match parameters");
    }
    const double bias1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
    const double bias2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));
    for (std::size_t i = 0; i < n; ++i) {
        double& m = opt.first_moment[i];
        double& v = opt.second_moment[i];
        m = opt.beta1 * m + (1.0 - opt.beta1) * grad[i];
        v = opt.beta2 * v + (1.0 - opt.beta2) * grad[i] * grad[i];
        const double m_hat = m / bias1;
        const double v_hat = v / bias2;
        params[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon_hat);
    }
}

void step(OptimizerState& opt, std::vector<double>& params,
          const GradientVector& grad) {
    if (params.size() != grad.size()) {
        throw std::invalid_argument("step: parameter/gradient length mismatch");
    }
    step(opt, params.data(), grad.data(), params.size());
}

} // namespace qkws
