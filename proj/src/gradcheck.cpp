#include "qkws/gradcheck.hpp"

#include <cmath>
#include <vector>

#include "qkws/classicalnn.hpp"
#include "qkws/gradopt.hpp"
#include "qkws/rng.hpp"
#include "qkws/vqc.hpp"

namespace qkws {

namespace {

constexpr double kClassicalEps = 1e-4;

double scaled_max_error(const std::vector<double>& candidate,
                        const std::vector<double>& reference) {
    double worst = 0.0;
    double scale = 1e-8;
    for (double r : reference) scale = std::max(scale, std::abs(r));
    for (std::size_t i = 0; i < reference.size(); ++i) {
        worst = std::max(worst, std::abs(candidate[i] - reference[i]) / scale);
    }
    return worst;
}

// Random circuit loss: a fixed random linear functional of the observation.
struct CircuitLoss {
    VqcConfig cfg;
    std::vector<double> features;
    std::vector<double> readout_weights;

    double operator()(const std::vector<double>& flat_angles) const {
        VqcParams params;
        params.n_wires = cfg.n_wires;
        params.n_layers = cfg.n_layers;
        params.angles = flat_angles;
        const Observation obs = qnn_forward(features, params, cfg);
        double loss = 0.0;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            loss += readout_weights[i] * obs[i];
        }
        return loss;
    }
};

void check_quantum(std::uint64_t seed, double eps, int trials,
                   GradCheckReport& report) {
    rng::Engine engine(seed);
    for (int trial = 0; trial < trials; ++trial) {
        CircuitLoss loss;
        loss.cfg.n_wires = 1 + static_cast<int>(rng::below(engine, 3));
        loss.cfg.n_layers = 1 + static_cast<int>(rng::below(engine, 2));
        loss.cfg.entangle = loss.cfg.n_wires >= 2;
        loss.features.resize(loss.cfg.n_wires);
        loss.readout_weights.resize(loss.cfg.n_wires);
        for (auto& x : loss.features) x = rng::uniform(engine, -0.9, 0.9);
        for (auto& w : loss.readout_weights) w = rng::uniform(engine, -1.0, 1.0);

        std::vector<double> angles(static_cast<std::size_t>(param_count(loss.cfg)));
        for (auto& a : angles) a = rng::uniform(engine, -1.5, 1.5);

        const GradientVector fd = finite_diff_grad(loss, angles, eps);
        const GradientVector ps = parameter_shift_grad(loss, angles);
        const double err = scaled_max_error(fd, ps);
        if (err > report.max_rel_error_quantum) {
            report.max_rel_error_quantum = err;
            report.worst_quantum_site =
                "circuit trial " + std::to_string(trial) + " (" +
                std::to_string(loss.cfg.n_wires) + " wires, " +
                std::to_string(loss.cfg.n_layers) + " layers)";
        }
    }
}

// Finite differences of a scalar loss with respect to one flat array,
// re-running `loss` around each component.
template <class Loss>
std::vector<double> fd_of_array(Loss&& loss, std::vector<double>& values,
                                double eps) {
    std::vector<double> grad(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double original = values[i];
        values[i] = original + eps;
        const double plus = loss();
        values[i] = original - eps;
        const double minus = loss();
        values[i] = original;
        grad[i] = (plus - minus) / (2.0 * eps);
    }
    return grad;
}

void note_classical(GradCheckReport& report, double err, const std::string& site) {
    if (err > report.max_rel_error_classical) {
        report.max_rel_error_classical = err;
        report.worst_classical_site = site;
    }
}

Tensor random_tensor(std::vector<std::size_t> shape, rng::Engine& engine) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.data) v = rng::uniform(engine, -1.0, 1.0);
    return t;
}

std::vector<double> random_weights(std::size_t n, rng::Engine& engine) {
    std::vector<double> w(n);
    for (auto& v : w) v = rng::uniform(engine, -1.0, 1.0);
    return w;
}

double weighted_sum(const Tensor& t, const std::vector<double>& weights) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.numel(); ++i) acc += weights[i] * t.data[i];
    return acc;
}

Tensor weights_as_grad(const std::vector<double>& weights,
                       const std::vector<std::size_t>& shape) {
    Tensor g = Tensor::zeros(shape);
    g.data = weights;
    return g;
}

// Each layer type is checked in isolation against finite differences of a
// random linear loss. ReLU and max-pool inputs get explicit margins away
// from their kinks so the probes never cross a non-differentiable point,
// which keeps the suite stable for any seed.
void check_classical(std::uint64_t seed, GradCheckReport& report) {
    rng::Engine engine(rng::derive(seed, 1));

    { // Conv1d: linear in input and parameters.
        Conv1d conv(2, 3, 3, 2);
        conv.init_uniform(engine);
        for (auto& b : conv.bias.value.data) b = rng::uniform(engine, -0.3, 0.3);
        Tensor x = random_tensor({2, 2, 11}, engine);
        Tensor probe = conv.forward(x);
        const auto weights = random_weights(probe.numel(), engine);
        auto loss = [&]() { return weighted_sum(conv.forward(x), weights); };

        loss();
        conv.weight.zero_grad();
        conv.bias.zero_grad();
        Tensor gx = conv.backward(weights_as_grad(weights, probe.shape));
        note_classical(report,
                       scaled_max_error(gx.data, fd_of_array(loss, x.data,
                                                             kClassicalEps)),
                       "conv input");
        note_classical(report,
                       scaled_max_error(conv.weight.grad.data,
                                        fd_of_array(loss, conv.weight.value.data,
                                                    kClassicalEps)),
                       "conv weight");
        note_classical(report,
                       scaled_max_error(conv.bias.grad.data,
                                        fd_of_array(loss, conv.bias.value.data,
                                                    kClassicalEps)),
                       "conv bias");
    }

    { // BatchNorm1d in train mode: smooth through the batch statistics.
        BatchNorm1d bn(3);
        for (auto& v : bn.gamma.value.data) v = rng::uniform(engine, 0.5, 1.5);
        for (auto& v : bn.beta.value.data) v = rng::uniform(engine, -0.5, 0.5);
        Tensor x = random_tensor({2, 3, 5}, engine);
        Tensor probe = bn.forward(x, Mode::Train, /*update_running=*/false);
        const auto weights = random_weights(probe.numel(), engine);
        auto loss = [&]() {
            return weighted_sum(bn.forward(x, Mode::Train, false), weights);
        };

        loss();
        bn.gamma.zero_grad();
        bn.beta.zero_grad();
        Tensor gx = bn.backward(weights_as_grad(weights, probe.shape));
        note_classical(report,
                       scaled_max_error(gx.data, fd_of_array(loss, x.data,
                                                             kClassicalEps)),
                       "batchnorm input");
        note_classical(report,
                       scaled_max_error(bn.gamma.grad.data,
                                        fd_of_array(loss, bn.gamma.value.data,
                                                    kClassicalEps)),
                       "batchnorm gamma");
        note_classical(report,
                       scaled_max_error(bn.beta.grad.data,
                                        fd_of_array(loss, bn.beta.value.data,
                                                    kClassicalEps)),
                       "batchnorm beta");
    }

    { // ReLU with inputs kept away from zero.
        ReLU relu;
        Tensor x = Tensor::zeros({2, 3, 4});
        for (auto& v : x.data) {
            const double sign = rng::uniform01(engine) < 0.5 ? -1.0 : 1.0;
            v = sign * rng::uniform(engine, 0.05, 1.0);
        }
        Tensor probe = relu.forward(x);
        const auto weights = random_weights(probe.numel(), engine);
        auto loss = [&]() { return weighted_sum(relu.forward(x), weights); };
        loss();
        Tensor gx = relu.backward(weights_as_grad(weights, probe.shape));
        note_classical(report,
                       scaled_max_error(gx.data, fd_of_array(loss, x.data,
                                                             kClassicalEps)),
                       "relu input");
    }

    { // MaxPool1d with a forced gap between the window's top two values.
        MaxPool1d pool(3);
        Tensor x = random_tensor({2, 2, 7}, engine);
        const std::size_t t_in = x.shape[2];
        for (std::size_t bc = 0; bc < 4; ++bc) {
            double* row = x.data.data() + bc * t_in;
            for (std::size_t start = 0; start < t_in; start += 3) {
                const std::size_t stop = std::min(start + 3, t_in);
                std::size_t best = start;
                for (std::size_t j = start + 1; j < stop; ++j) {
                    if (row[j] > row[best]) best = j;
                }
                row[best] += 0.1; // clear margin over the runner-up
            }
        }
        Tensor probe = pool.forward(x);
        const auto weights = random_weights(probe.numel(), engine);
        auto loss = [&]() { return weighted_sum(pool.forward(x), weights); };
        loss();
        Tensor gx = pool.backward(weights_as_grad(weights, probe.shape));
        note_classical(report,
                       scaled_max_error(gx.data, fd_of_array(loss, x.data,
                                                             kClassicalEps)),
                       "maxpool input");
    }

    { // Dense, linear.
        Dense layer(5, 4, Activation::None);
        layer.init_uniform(engine);
        for (auto& b : layer.bias.value.data) b = rng::uniform(engine, -0.3, 0.3);
        Tensor x = random_tensor({3, 5}, engine);
        Tensor probe = layer.forward(x);
        const auto weights = random_weights(probe.numel(), engine);
        auto loss = [&]() { return weighted_sum(layer.forward(x), weights); };
        loss();
        layer.weight.zero_grad();
        layer.bias.zero_grad();
        Tensor gx = layer.backward(weights_as_grad(weights, probe.shape));
        note_classical(report,
                       scaled_max_error(gx.data, fd_of_array(loss, x.data,
                                                             kClassicalEps)),
                       "dense input");
        note_classical(report,
                       scaled_max_error(layer.weight.grad.data,
                                        fd_of_array(loss, layer.weight.value.data,
                                                    kClassicalEps)),
                       "dense weight");
        note_classical(report,
                       scaled_max_error(layer.bias.grad.data,
                                        fd_of_array(loss, layer.bias.value.data,
                                                    kClassicalEps)),
                       "dense bias");
    }

    { // Softmax cross-entropy, smooth.
        std::vector<double> logits(7);
        for (auto& v : logits) v = rng::uniform(engine, -2.0, 2.0);
        const std::size_t label = rng::below(engine, logits.size());
        auto [loss_value, grad] = softmax_ce(logits, label);
        (void)loss_value;
        auto loss = [&]() { return softmax_ce(logits, label).first; };
        note_classical(report,
                       scaled_max_error(grad,
                                        fd_of_array(loss, logits, kClassicalEps)),
                       "softmax cross-entropy");
    }
}

} // namespace

GradCheckReport run_gradcheck(std::uint64_t seed, double eps, int trials) {
    GradCheckReport report;
    check_quantum(seed, eps, trials, report);
    check_classical(seed, report);
    return report;
}

} // namespace qkws
