#include "qkws/hybrid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "qkws/encoder.hpp"
#include "qkws/parallel.hpp"
#include "qkws/rng.hpp"

namespace qkws {

namespace {

constexpr std::size_t kEvalBatch = 64;
constexpr double kSquashLimit = 1.0 - 1e-12;

Observation qnn_observe(std::span<const double> encoding_angles,
                        const VqcParams& params, const VqcConfig& cfg,
                        const std::optional<NoiseSpec>& noise) {
    if (!noise) return qnn_forward_angles(encoding_angles, params, cfg);
    return noisy_qnn_forward_angles(encoding_angles, params, cfg, *noise);
}

double weighted_obs_delta(const Observation& plus, const Observation& minus,
                          std::span<const double> grad_obs, double denom) {
    double acc = 0.0;
    for (std::size_t j = 0; j < grad_obs.size(); ++j) {
        acc += grad_obs[j] * (plus[j] - minus[j]) / denom;
    }
    return acc;
}

} // namespace

const char* to_string(ModelKind kind) {
    return kind == ModelKind::CnnDnn ? "cnn_dnn" : "cnn_qnn";
}

const char* to_string(Regime regime) {
    switch (regime) {
    case Regime::BaselineCnnDnn: return "baseline_cnn_dnn";
    case Regime::CnnQnnScratch: return "cnn_qnn_scratch";
    case Regime::CnnQnn2: return "cnn_qnn_2";
    case Regime::CnnQnn3: return "cnn_qnn_3";
    }
    return "unknown";
}

HybridModel build_model(ModelKind kind, const ModelConfig& config,
                        std::uint64_t seed) {
    if (config.n_classes < 2) {
        throw std::invalid_argument("build_model: need at least 2 classes");
    }
    if (config.n_wires < 1 || config.n_layers < 1) {
        throw std::invalid_argument("build_model: wires and layers must be positive");
    }
    HybridModel model;
    model.kind = kind;
    model.config = config;
    model.seed = seed;

    rng::Engine engine(seed);
    model.cnn.init_uniform(engine);

    if (kind == ModelKind::CnnDnn) {
        DnnHead head;
        std::size_t in_dim = CnnExtractor::kFeatureDim;
        for (std::size_t i = 0; i < kDnnHiddenWidths.size(); ++i) {
            // ReLU on every hidden layer except the top one.
            const bool last_hidden = (i + 1 == kDnnHiddenWidths.size());
            head.layers.emplace_back(in_dim, kDnnHiddenWidths[i],
                                     last_hidden ? Activation::None
                                                 : Activation::ReLU);
            head.layers.back().init_uniform(engine);
            in_dim = kDnnHiddenWidths[i];
        }
        head.layers.emplace_back(in_dim, config.n_classes, Activation::None);
        head.layers.back().init_uniform(engine);
        model.dnn = std::move(head);
    } else {
        QnnHead head(config);
        head.compressor.init_uniform(engine);
        head.cfg = VqcConfig{config.n_wires, config.n_layers,
                             config.n_wires >= 2};
        head.params = VqcParams::random_init(head.cfg, engine());
        head.angle_grad.assign(head.params.angles.size(), 0.0);
        head.class_matrix = Tensor::zeros(
            {static_cast<std::size_t>(config.n_wires), config.n_classes});
        const double scale = 1.0 / std::sqrt(static_cast<double>(config.n_wires));
        for (auto& v : head.class_matrix.data) v = scale * rng::normal(engine);
        model.qnn = std::move(head);
    }
    return model;
}

Tensor forward(HybridModel& model, const Tensor& waveform_batch, Mode mode,
               const std::optional<NoiseSpec>& noise) {
    if (waveform_batch.rank() != 3 || waveform_batch.shape[0] == 0) {
        throw std::invalid_argument("forward: batch must be a non-empty [B, 1, T] tensor");
    }
    if (noise && model.kind == ModelKind::CnnDnn) {
        throw std::invalid_argument("forward: noise is only valid for CNN-QNN models");
    }

    Tensor features = model.cnn.forward(waveform_batch, mode);

    if (model.kind == ModelKind::CnnDnn) {
        Tensor h = features;
        for (auto& layer : model.dnn->layers) h = layer.forward(h);
        return h;
    }

    QnnHead& head = *model.qnn;
    const std::size_t batch = features.shape[0];
    const auto n_wires = static_cast<std::size_t>(head.cfg.n_wires);

    Tensor compressed = head.compressor.forward(features);
    Tensor squashed = Tensor::zeros(compressed.shape);
    for (std::size_t i = 0; i < compressed.numel(); ++i) {
        squashed.data[i] =
            std::clamp(std::tanh(compressed.data[i]), -kSquashLimit, kSquashLimit);
    }
    head.cached_squashed = squashed;

    Tensor observations = Tensor::zeros({batch, n_wires});
    parallel_for(batch, [&](std::size_t b) {
        FeatureVector x(squashed.data.data() + b * n_wires,
                        squashed.data.data() + (b + 1) * n_wires);
        const Observation z = noise
                                  ? noisy_qnn_forward(x, head.params, head.cfg, *noise)
                                  : qnn_forward(x, head.params, head.cfg);
        std::copy(z.begin(), z.end(),
                  observations.data.data() + b * n_wires);
    });

    const std::size_t k = model.config.n_classes;
    Tensor logits = Tensor::zeros({batch, k});
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t w = 0; w < n_wires; ++w) {
            const double z = observations.at(b, w);
            const double* row = head.class_matrix.data.data() + w * k;
            double* out = logits.data.data() + b * k;
            for (std::size_t c = 0; c < k; ++c) out[c] += z * row[c];
        }
    }
    return logits;
}

QnnSampleGrad qnn_sample_backward(std::span<const double> squashed,
                                  const VqcParams& params,
                                  const VqcConfig& cfg,
                                  std::span<const double> grad_obs,
                                  GradMethod method, double eps,
                                  bool want_feature_grad,
                                  const std::optional<NoiseSpec>& noise) {
    const std::size_t n_wires = squashed.size();
    std::vector<double> encoding_angles(n_wires);
    for (std::size_t i = 0; i < n_wires; ++i) {
        encoding_angles[i] = kPi * squashed[i];
    }

    const bool shift = (method == GradMethod::ParameterShift);
    const double delta = shift ? kPi / 2.0 : eps;
    const double denom = shift ? 2.0 : 2.0 * eps;

    QnnSampleGrad out;
    out.param_grad.assign(params.angles.size(), 0.0);

    VqcParams probe = params;
    for (std::size_t p = 0; p < probe.angles.size(); ++p) {
        const double original = probe.angles[p];
        probe.angles[p] = original + delta;
        const Observation plus = qnn_observe(encoding_angles, probe, cfg, noise);
        probe.angles[p] = original - delta;
        const Observation minus = qnn_observe(encoding_angles, probe, cfg, noise);
        probe.angles[p] = original;
        out.param_grad[p] = weighted_obs_delta(plus, minus, grad_obs, denom);
        if (!std::isfinite(out.param_grad[p])) {
            throw NumericError("qnn_sample_backward: non-finite gradient at angle " +
                                   std::to_string(p),
                               p);
        }
    }

    if (want_feature_grad) {
        out.feature_grad.assign(n_wires, 0.0);
        for (std::size_t i = 0; i < n_wires; ++i) {
            const double original = encoding_angles[i];
            encoding_angles[i] = original + delta;
            const Observation plus = qnn_observe(encoding_angles, params, cfg, noise);
            encoding_angles[i] = original - delta;
            const Observation minus = qnn_observe(encoding_angles, params, cfg, noise);
            encoding_angles[i] = original;
            // theta_i = pi * x_i, so d/dx_i = pi * d/dtheta_i.
            out.feature_grad[i] =
                kPi * weighted_obs_delta(plus, minus, grad_obs, denom);
        }
    }
    return out;
}

HybridModel transfer_cnn(const HybridModel& source, Regime regime,
                         const ModelConfig& config, std::uint64_t seed) {
    if (source.kind != ModelKind::CnnDnn) {
        throw std::invalid_argument("transfer_cnn: source must be a CNN-DNN model");
    }
    if (regime != Regime::CnnQnn2 && regime != Regime::CnnQnn3) {
        throw std::invalid_argument("transfer_cnn: regime must be cnn_qnn_2 or cnn_qnn_3");
    }
    if (config.n_classes != source.config.n_classes) {
        throw std::invalid_argument("transfer_cnn: class count mismatch with source");
    }

    HybridModel target = build_model(ModelKind::CnnQnn, config, seed);
    for (std::size_t i = 0; i < target.cnn.blocks.size(); ++i) {
        ConvBlock& dst = target.cnn.blocks[i];
        const ConvBlock& src = source.cnn.blocks[i];
        dst.conv.weight.value = src.conv.weight.value;
        dst.conv.bias.value = src.conv.bias.value;
        dst.bn.gamma.value = src.bn.gamma.value;
        dst.bn.beta.value = src.bn.beta.value;
        dst.bn.running_mean = src.bn.running_mean;
        dst.bn.running_var = src.bn.running_var;
    }

    if (regime == Regime::CnnQnn2) {
        target.cnn.set_trainable(false);
        target.qnn->compressor.weight.trainable = false;
        target.qnn->compressor.bias.trainable = false;
        target.qnn->vqc_trainable = true;
    }
    return target;
}

std::vector<TensorRef> tensor_refs(HybridModel& model) {
    std::vector<TensorRef> refs;
    auto add = [&](std::string name, Tensor& t, bool trainable,
                   bool is_parameter) {
        refs.push_back({std::move(name), t.shape, t.data.data(),
                        t.data.size(), trainable, is_parameter});
    };
    for (std::size_t i = 0; i < model.cnn.blocks.size(); ++i) {
        ConvBlock& block = model.cnn.blocks[i];
        const std::string prefix = "cnn.block" + std::to_string(i + 1);
        add(prefix + ".conv.weight", block.conv.weight.value,
            block.conv.weight.trainable, true);
        add(prefix + ".conv.bias", block.conv.bias.value,
            block.conv.bias.trainable, true);
        add(prefix + ".bn.gamma", block.bn.gamma.value,
            block.bn.gamma.trainable, true);
        add(prefix + ".bn.beta", block.bn.beta.value, block.bn.beta.trainable,
            true);
        add(prefix + ".bn.running_mean", block.bn.running_mean, false, false);
        add(prefix + ".bn.running_var", block.bn.running_var, false, false);
    }
    if (model.dnn) {
        for (std::size_t i = 0; i < model.dnn->layers.size(); ++i) {
            Dense& layer = model.dnn->layers[i];
            const std::string prefix = "head.dense" + std::to_string(i + 1);
            add(prefix + ".weight", layer.weight.value, layer.weight.trainable,
                true);
            add(prefix + ".bias", layer.bias.value, layer.bias.trainable, true);
        }
    }
    if (model.qnn) {
        QnnHead& head = *model.qnn;
        add("head.compressor.weight", head.compressor.weight.value,
            head.compressor.weight.trainable, true);
        add("head.compressor.bias", head.compressor.bias.value,
            head.compressor.bias.trainable, true);
        refs.push_back({"head.vqc.angles",
                        {static_cast<std::size_t>(head.params.n_layers),
                         static_cast<std::size_t>(head.params.n_wires), 3},
                        head.params.angles.data(), head.params.angles.size(),
                        head.vqc_trainable, true});
        add("head.class_matrix", head.class_matrix, false, true);
    }
    return refs;
}

std::size_t trainable_param_count(HybridModel& model) {
    std::size_t count = 0;
    for (const auto& ref : tensor_refs(model)) {
        if (ref.trainable) count += ref.n;
    }
    return count;
}

std::size_t total_param_count(HybridModel& model) {
    std::size_t count = 0;
    for (const auto& ref : tensor_refs(model)) {
        if (ref.is_parameter) count += ref.n;
    }
    return count;
}

EvalReport evaluate(HybridModel& model, const Dataset& data, SplitPart part,
                    const std::optional<NoiseSpec>& noise) {
    std::span<const std::size_t> indices;
    switch (part) {
    case SplitPart::Train: indices = data.split.train; break;
    case SplitPart::Validation: indices = data.split.validation; break;
    case SplitPart::Test: indices = data.split.test; break;
    }
    if (indices.empty()) {
        throw std::invalid_argument("evaluate: requested split is empty");
    }

    double ce_sum = 0.0;
    std::size_t correct = 0;
    const auto batches =
        make_batches(data, indices, kEvalBatch, /*seed=*/0, /*epoch=*/0,
                     /*shuffle=*/false);
    for (const auto& batch : batches) {
        Tensor logits = forward(model, batch.waveforms, Mode::Eval, noise);
        const std::size_t k = logits.shape[1];
        for (std::size_t b = 0; b < batch.labels.size(); ++b) {
            const double* row = logits.data.data() + b * k;
            auto [loss, grad] = softmax_ce(
                std::span<const double>(row, k),
                static_cast<std::size_t>(batch.labels[b]));
            ce_sum += loss;
            const std::size_t pred =
                std::max_element(row, row + k) - row;
            if (static_cast<int>(pred) == batch.labels[b]) ++correct;
        }
    }

    EvalReport report;
    report.sample_count = indices.size();
    report.cross_entropy = ce_sum / static_cast<double>(indices.size());
    report.accuracy =
        static_cast<double>(correct) / static_cast<double>(indices.size());
    report.trainable_param_count = trainable_param_count(model);
    return report;
}

namespace {

struct OptSlot {
    double* value;
    double* grad;
    std::size_t n;
    OptimizerState state;
};

std::vector<OptSlot> build_optimizers(HybridModel& model,
                                      const TrainConfig& cfg) {
    std::vector<OptSlot> slots;
    auto add = [&](double* value, double* grad, std::size_t n, double lr) {
        OptimizerState state = cfg.optimizer == OptKind::Adam
                                   ? OptimizerState::adam(lr, n)
                                   : OptimizerState::sgd(lr);
        slots.push_back({value, grad, n, std::move(state)});
    };
    auto add_param = [&](Param& p, double lr) {
        if (!p.trainable) return;
        add(p.value.data.data(), p.grad.data.data(), p.value.numel(), lr);
    };
    for (auto& block : model.cnn.blocks) {
        add_param(block.conv.weight, cfg.lr_classical);
        add_param(block.conv.bias, cfg.lr_classical);
        add_param(block.bn.gamma, cfg.lr_classical);
        add_param(block.bn.beta, cfg.lr_classical);
    }
    if (model.dnn) {
        for (auto& layer : model.dnn->layers) {
            add_param(layer.weight, cfg.lr_classical);
            add_param(layer.bias, cfg.lr_classical);
        }
    }
    if (model.qnn) {
        add_param(model.qnn->compressor.weight, cfg.lr_classical);
        add_param(model.qnn->compressor.bias, cfg.lr_classical);
        if (model.qnn->vqc_trainable) {
            add(model.qnn->params.angles.data(), model.qnn->angle_grad.data(),
                model.qnn->params.angles.size(), cfg.lr_quantum);
        }
    }
    return slots;
}

void zero_all_grads(HybridModel& model, std::vector<OptSlot>& slots) {
    for (auto& slot : slots) {
        std::fill(slot.grad, slot.grad + slot.n, 0.0);
    }
    if (model.qnn) {
        std::fill(model.qnn->angle_grad.begin(), model.qnn->angle_grad.end(),
                  0.0);
    }
}

// Backprop for one already-forwarded batch; grad accumulation only.
void backward_batch(HybridModel& model, const Tensor& grad_logits,
                    const TrainConfig& cfg) {
    if (model.kind == ModelKind::CnnDnn) {
        Tensor g = grad_logits;
        for (auto it = model.dnn->layers.rbegin();
             it != model.dnn->layers.rend(); ++it) {
            g = it->backward(g);
        }
        if (model.cnn.trainable()) model.cnn.backward(g);
        return;
    }

    QnnHead& head = *model.qnn;
    const std::size_t batch = grad_logits.shape[0];
    const std::size_t k = grad_logits.shape[1];
    const auto n_wires = static_cast<std::size_t>(head.cfg.n_wires);

    // d loss / d observations through the fixed class matrix.
    Tensor grad_obs = Tensor::zeros({batch, n_wires});
    for (std::size_t b = 0; b < batch; ++b) {
        const double* gl = grad_logits.data.data() + b * k;
        double* go = grad_obs.data.data() + b * n_wires;
        for (std::size_t w = 0; w < n_wires; ++w) {
            const double* row = head.class_matrix.data.data() + w * k;
            double acc = 0.0;
            for (std::size_t c = 0; c < k; ++c) acc += gl[c] * row[c];
            go[w] = acc;
        }
    }

    const bool want_feature_grad =
        head.compressor.weight.trainable || model.cnn.trainable();

    std::vector<QnnSampleGrad> per_sample(batch);
    parallel_for(batch, [&](std::size_t b) {
        per_sample[b] = qnn_sample_backward(
            std::span<const double>(
                head.cached_squashed.data.data() + b * n_wires, n_wires),
            head.params, head.cfg,
            std::span<const double>(grad_obs.data.data() + b * n_wires,
                                    n_wires),
            cfg.grad_method, cfg.eps, want_feature_grad, cfg.noise);
    });

    if (head.vqc_trainable) {
        for (const auto& sample : per_sample) {
            for (std::size_t p = 0; p < head.angle_grad.size(); ++p) {
                head.angle_grad[p] += sample.param_grad[p];
            }
        }
    }

    if (want_feature_grad) {
        Tensor grad_squashed = Tensor::zeros({batch, n_wires});
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t w = 0; w < n_wires; ++w) {
                // Chain through tanh: d tanh(u)/du = 1 - tanh(u)^2.
                const double s = head.cached_squashed.at(b, w);
                grad_squashed.at(b, w) =
                    per_sample[b].feature_grad[w] * (1.0 - s * s);
            }
        }
        Tensor grad_features = head.compressor.backward(grad_squashed);
        if (model.cnn.trainable()) model.cnn.backward(grad_features);
    }
}

} // namespace

TrainResult train(HybridModel model, const Dataset& data,
                  const TrainConfig& cfg) {
    if (data.split.train.empty() || data.split.validation.empty()) {
        throw std::invalid_argument("train: train and validation splits must be non-empty");
    }
    if (cfg.batch_size == 0) {
        throw std::invalid_argument("train: batch size must be positive");
    }

    std::vector<OptSlot> slots = build_optimizers(model, cfg);

    TrainResult result;
    result.best_val_ce = std::numeric_limits<double>::infinity();

    auto record_epoch = [&](std::size_t epoch, double train_ce,
                            double seconds) {
        const EvalReport val =
            evaluate(model, data, SplitPart::Validation, cfg.noise);
        result.epochs.push_back(
            {epoch, train_ce, val.cross_entropy, val.accuracy, seconds});
        if (val.cross_entropy < result.best_val_ce) {
            result.best_val_ce = val.cross_entropy;
            result.model = model;
        }
    };

    if (cfg.epochs == 0) {
        record_epoch(0, 0.0, 0.0);
        return result;
    }

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const auto batches = make_batches(data, data.split.train,
                                          cfg.batch_size, cfg.seed, epoch,
                                          /*shuffle=*/true);
        double ce_sum = 0.0;
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            zero_all_grads(model, slots);
            Tensor logits =
                forward(model, batches[bi].waveforms, Mode::Train, cfg.noise);
            auto [ce, grad_logits] =
                softmax_ce_batch(logits, batches[bi].labels);
            if (!std::isfinite(ce)) {
                throw NumericError("train: non-finite loss at epoch " +
                                   std::to_string(epoch) + " batch " +
                                   std::to_string(bi));
            }
            ce_sum += ce * static_cast<double>(batches[bi].labels.size());
            backward_batch(model, grad_logits, cfg);
            for (auto& slot : slots) {
                step(slot.state, slot.value, slot.grad, slot.n);
            }
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        record_epoch(epoch, ce_sum / static_cast<double>(data.split.train.size()),
                     seconds);
    }
    return result;
}

} // namespace qkws
