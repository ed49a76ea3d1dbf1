#include "qkws/classicalnn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qkws/parallel.hpp"

namespace qkws {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void require_cache(bool has_cache, const char* who) {
    if (!has_cache) {
        throw std::logic_error(std::string(who) +
                               ": backward called without a cached forward");
    }
}

} // namespace

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels,
               std::size_t kernel, std::size_t stride)
    : in_channels(in_channels), out_channels(out_channels), kernel(kernel),
      stride(stride) {
    require(in_channels >= 1 && out_channels >= 1 && kernel >= 1 && stride >= 1,
            "Conv1d: all dimensions must be positive");
    weight.init_shape({out_channels, in_channels, kernel});
    bias.init_shape({out_channels});
}

void Conv1d::init_uniform(rng::Engine& engine) {
    const double bound =
        1.0 / std::sqrt(static_cast<double>(in_channels * kernel));
    for (auto& w : weight.value.data) w = rng::uniform(engine, -bound, bound);
    bias.value.fill(0.0);
}

Tensor Conv1d::forward(const Tensor& x) {
    require(x.rank() == 3, "Conv1d: input must be [B, C, T]");
    require(x.shape[1] == in_channels, "Conv1d: channel count mismatch");
    const std::size_t batch = x.shape[0];
    const std::size_t t_in = x.shape[2];
    if (t_in < kernel) {
        throw std::invalid_argument("Conv1d: time length " +
                                    std::to_string(t_in) +
                                    " shorter than kernel " +
                                    std::to_string(kernel));
    }
    const std::size_t t_out = (t_in - kernel) / stride + 1;
    Tensor y = Tensor::zeros({batch, out_channels, t_out});

    const double* w = weight.value.data.data();
    const double* bs = bias.value.data.data();
    parallel_for(batch, [&](std::size_t b) {
        const double* xb = x.data.data() + b * in_channels * t_in;
        double* yb = y.data.data() + b * out_channels * t_out;
        for (std::size_t oc = 0; oc < out_channels; ++oc) {
            const double* woc = w + oc * in_channels * kernel;
            for (std::size_t t = 0; t < t_out; ++t) {
                double acc = bs[oc];
                const std::size_t base = t * stride;
                for (std::size_t ic = 0; ic < in_channels; ++ic) {
                    const double* xc = xb + ic * t_in + base;
                    const double* wc = woc + ic * kernel;
                    for (std::size_t k = 0; k < kernel; ++k) {
                        acc += wc[k] * xc[k];
                    }
                }
                yb[oc * t_out + t] = acc;
            }
        }
    });

    cached_input_ = x;
    has_cache_ = true;
    return y;
}

Tensor Conv1d::backward(const Tensor& grad_out) {
    require_cache(has_cache_, "Conv1d");
    const Tensor& x = cached_input_;
    const std::size_t batch = x.shape[0];
    const std::size_t t_in = x.shape[2];
    const std::size_t t_out = grad_out.shape[2];
    require(grad_out.rank() == 3 && grad_out.shape[0] == batch &&
                grad_out.shape[1] == out_channels,
            "Conv1d: grad shape mismatch");

    Tensor grad_in = Tensor::zeros(x.shape);
    const double* w = weight.value.data.data();

    parallel_for(batch, [&](std::size_t b) {
        const double* gb = grad_out.data.data() + b * out_channels * t_out;
        double* db = grad_in.data.data() + b * in_channels * t_in;
        for (std::size_t oc = 0; oc < out_channels; ++oc) {
            const double* woc = w + oc * in_channels * kernel;
            for (std::size_t t = 0; t < t_out; ++t) {
                const double g = gb[oc * t_out + t];
                if (g == 0.0) continue;
                const std::size_t base = t * stride;
                for (std::size_t ic = 0; ic < in_channels; ++ic) {
                    double* dc = db + ic * t_in + base;
                    const double* wc = woc + ic * kernel;
                    for (std::size_t k = 0; k < kernel; ++k) {
                        dc[k] += wc[k] * g;
                    }
                }
            }
        }
    });

    if (weight.trainable) {
        double* dw = weight.grad.data.data();
        double* dbias = bias.grad.data.data();
        parallel_for(out_channels, [&](std::size_t oc) {
            double* dwoc = dw + oc * in_channels * kernel;
            double bias_acc = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const double* xb = x.data.data() + b * in_channels * t_in;
                const double* gb =
                    grad_out.data.data() + b * out_channels * t_out;
                for (std::size_t t = 0; t < t_out; ++t) {
                    const double g = gb[oc * t_out + t];
                    bias_acc += g;
                    if (g == 0.0) continue;
                    const std::size_t base = t * stride;
                    for (std::size_t ic = 0; ic < in_channels; ++ic) {
                        const double* xc = xb + ic * t_in + base;
                        double* dwc = dwoc + ic * kernel;
                        for (std::size_t k = 0; k < kernel; ++k) {
                            dwc[k] += xc[k] * g;
                        }
                    }
                }
            }
            dbias[oc] += bias_acc;
        });
    }
    return grad_in;
}

// ------------------------------------------------------------ BatchNorm1d

BatchNorm1d::BatchNorm1d(std::size_t channels) : channels(channels) {
    gamma.init_shape({channels});
    gamma.value.fill(1.0);
    beta.init_shape({channels});
    running_mean = Tensor::zeros({channels});
    running_var = Tensor::zeros({channels});
    running_var.fill(1.0);
}

Tensor BatchNorm1d::forward(const Tensor& x, Mode mode, bool update_running) {
    require(x.rank() == 3 && x.shape[1] == channels,
            "BatchNorm1d: input must be [B, C, T] with matching channels");
    const std::size_t batch = x.shape[0];
    const std::size_t t_len = x.shape[2];
    const std::size_t n = batch * t_len;

    Tensor y = Tensor::zeros(x.shape);
    cached_xhat_ = Tensor::zeros(x.shape);
    cached_inv_std_.assign(channels, 0.0);
    cached_train_ = (mode == Mode::Train);
    has_cache_ = true;

    for (std::size_t c = 0; c < channels; ++c) {
        double mean, var;
        if (mode == Mode::Train) {
            double sum = 0.0, sq = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const double* xc = x.data.data() + (b * channels + c) * t_len;
                for (std::size_t t = 0; t < t_len; ++t) {
                    sum += xc[t];
                    sq += xc[t] * xc[t];
                }
            }
            mean = sum / static_cast<double>(n);
            var = sq / static_cast<double>(n) - mean * mean;
            if (var < 0.0) var = 0.0; // cancellation guard
            if (update_running) {
                running_mean.data[c] =
                    (1.0 - momentum) * running_mean.data[c] + momentum * mean;
                running_var.data[c] =
                    (1.0 - momentum) * running_var.data[c] + momentum * var;
            }
        } else {
            mean = running_mean.data[c];
            var = running_var.data[c];
        }
        const double inv_std = 1.0 / std::sqrt(var + eps);
        cached_inv_std_[c] = inv_std;
        const double g = gamma.value.data[c];
        const double bt = beta.value.data[c];
        for (std::size_t b = 0; b < batch; ++b) {
            const double* xc = x.data.data() + (b * channels + c) * t_len;
            double* hc = cached_xhat_.data.data() + (b * channels + c) * t_len;
            double* yc = y.data.data() + (b * channels + c) * t_len;
            for (std::size_t t = 0; t < t_len; ++t) {
                const double xhat = (xc[t] - mean) * inv_std;
                hc[t] = xhat;
                yc[t] = g * xhat + bt;
            }
        }
    }
    return y;
}

Tensor BatchNorm1d::backward(const Tensor& grad_out) {
    require_cache(has_cache_, "BatchNorm1d");
    require(grad_out.same_shape(cached_xhat_), "BatchNorm1d: grad shape mismatch");
    const std::size_t batch = grad_out.shape[0];
    const std::size_t t_len = grad_out.shape[2];
    const double n = static_cast<double>(batch * t_len);

    Tensor grad_in = Tensor::zeros(grad_out.shape);
    for (std::size_t c = 0; c < channels; ++c) {
        const double g = gamma.value.data[c];
        const double inv_std = cached_inv_std_[c];
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t off = (b * channels + c) * t_len;
            const double* gy = grad_out.data.data() + off;
            const double* xh = cached_xhat_.data.data() + off;
            for (std::size_t t = 0; t < t_len; ++t) {
                sum_gy += gy[t];
                sum_gy_xhat += gy[t] * xh[t];
            }
        }
        if (gamma.trainable) {
            gamma.grad.data[c] += sum_gy_xhat;
            beta.grad.data[c] += sum_gy;
        }
        for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t off = (b * channels + c) * t_len;
            const double* gy = grad_out.data.data() + off;
            const double* xh = cached_xhat_.data.data() + off;
            double* gx = grad_in.data.data() + off;
            if (cached_train_) {
                // Gradient through the batch statistics.
                for (std::size_t t = 0; t < t_len; ++t) {
                    gx[t] = g * inv_std / n *
                            (n * gy[t] - sum_gy - xh[t] * sum_gy_xhat);
                }
            } else {
                for (std::size_t t = 0; t < t_len; ++t) {
                    gx[t] = g * inv_std * gy[t];
                }
            }
        }
    }
    return grad_in;
}

// ------------------------------------------------------------------ ReLU

Tensor ReLU::forward(const Tensor& x) {
    Tensor y = x;
    mask_ = Tensor::zeros(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        if (x.data[i] > 0.0) {
            mask_.data[i] = 1.0;
        } else {
            y.data[i] = 0.0;
        }
    }
    has_cache_ = true;
    return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
    require_cache(has_cache_, "ReLU");
    require(grad_out.same_shape(mask_), "ReLU: grad shape mismatch");
    Tensor grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.numel(); ++i) {
        grad_in.data[i] *= mask_.data[i];
    }
    return grad_in;
}

// -------------------------------------------------------------- MaxPool1d

MaxPool1d::MaxPool1d(std::size_t width) : width(width) {
    require(width >= 1, "MaxPool1d: width must be positive");
}

Tensor MaxPool1d::forward(const Tensor& x) {
    require(x.rank() == 3, "MaxPool1d: input must be [B, C, T]");
    const std::size_t batch = x.shape[0];
    const std::size_t chans = x.shape[1];
    const std::size_t t_in = x.shape[2];
    require(t_in >= 1, "MaxPool1d: empty time axis");
    // Full windows only, remainder dropped; one partial window when the
    // input is shorter than the pool width.
    const std::size_t t_out = std::max<std::size_t>(1, t_in / width);

    Tensor y = Tensor::zeros({batch, chans, t_out});
    argmax_.assign(y.numel(), 0);
    in_shape_ = x.shape;
    has_cache_ = true;

    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < chans; ++c) {
            const double* xc = x.data.data() + (b * chans + c) * t_in;
            double* yc = y.data.data() + (b * chans + c) * t_out;
            std::size_t* am = argmax_.data() + (b * chans + c) * t_out;
            for (std::size_t t = 0; t < t_out; ++t) {
                const std::size_t start = t * width;
                const std::size_t stop = std::min(start + width, t_in);
                std::size_t best = start;
                double best_v = xc[start];
                for (std::size_t j = start + 1; j < stop; ++j) {
                    if (xc[j] > best_v) {
                        best_v = xc[j];
                        best = j;
                    }
                }
                yc[t] = best_v;
                am[t] = best;
            }
        }
    }
    return y;
}

Tensor MaxPool1d::backward(const Tensor& grad_out) {
    require_cache(has_cache_, "MaxPool1d");
    const std::size_t batch = in_shape_[0];
    const std::size_t chans = in_shape_[1];
    const std::size_t t_in = in_shape_[2];
    const std::size_t t_out = grad_out.shape[2];

    Tensor grad_in = Tensor::zeros(in_shape_);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < chans; ++c) {
            const double* gy = grad_out.data.data() + (b * chans + c) * t_out;
            const std::size_t* am = argmax_.data() + (b * chans + c) * t_out;
            double* gx = grad_in.data.data() + (b * chans + c) * t_in;
            for (std::size_t t = 0; t < t_out; ++t) {
                gx[am[t]] += gy[t];
            }
        }
    }
    return grad_in;
}

// ------------------------------------------------------------------ Dense

Dense::Dense(std::size_t in_features, std::size_t out_features,
             Activation activation)
    : in_features(in_features), out_features(out_features),
      activation(activation) {
    weight.init_shape({out_features, in_features});
    bias.init_shape({out_features});
}

void Dense::init_uniform(rng::Engine& engine) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
    for (auto& w : weight.value.data) w = rng::uniform(engine, -bound, bound);
    bias.value.fill(0.0);
}

Tensor Dense::forward(const Tensor& x) {
    require(x.rank() == 2 && x.shape[1] == in_features,
            "Dense: input must be [B, in_features]");
    const std::size_t batch = x.shape[0];
    Tensor y = Tensor::zeros({batch, out_features});
    const double* w = weight.value.data.data();
    const double* bs = bias.value.data.data();
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = x.data.data() + b * in_features;
        double* yb = y.data.data() + b * out_features;
        for (std::size_t o = 0; o < out_features; ++o) {
            const double* wo = w + o * in_features;
            double acc = bs[o];
            for (std::size_t i = 0; i < in_features; ++i) acc += wo[i] * xb[i];
            yb[o] = acc;
        }
    }
    cached_input_ = x;
    if (activation == Activation::ReLU) {
        cached_mask_ = Tensor::zeros(y.shape);
        for (std::size_t i = 0; i < y.numel(); ++i) {
            if (y.data[i] > 0.0) {
                cached_mask_.data[i] = 1.0;
            } else {
                y.data[i] = 0.0;
            }
        }
    }
    has_cache_ = true;
    return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
    require_cache(has_cache_, "Dense");
    require(grad_out.rank() == 2 && grad_out.shape[1] == out_features &&
                grad_out.shape[0] == cached_input_.shape[0],
            "Dense: grad shape mismatch");
    const std::size_t batch = grad_out.shape[0];

    Tensor gy = grad_out;
    if (activation == Activation::ReLU) {
        for (std::size_t i = 0; i < gy.numel(); ++i) {
            gy.data[i] *= cached_mask_.data[i];
        }
    }

    Tensor grad_in = Tensor::zeros(cached_input_.shape);
    const double* w = weight.value.data.data();
    for (std::size_t b = 0; b < batch; ++b) {
        const double* gb = gy.data.data() + b * out_features;
        const double* xb = cached_input_.data.data() + b * in_features;
        double* db = grad_in.data.data() + b * in_features;
        for (std::size_t o = 0; o < out_features; ++o) {
            const double g = gb[o];
            if (g == 0.0) continue;
            const double* wo = w + o * in_features;
            for (std::size_t i = 0; i < in_features; ++i) db[i] += wo[i] * g;
        }
        if (weight.trainable) {
            double* dw = weight.grad.data.data();
            double* dbias = bias.grad.data.data();
            for (std::size_t o = 0; o < out_features; ++o) {
                const double g = gb[o];
                dbias[o] += g;
                if (g == 0.0) continue;
                double* dwo = dw + o * in_features;
                for (std::size_t i = 0; i < in_features; ++i) {
                    dwo[i] += xb[i] * g;
                }
            }
        }
    }
    return grad_in;
}

// -------------------------------------------------------------- ConvBlock

ConvBlock::ConvBlock(const ConvBlockConfig& cfg)
    : config(cfg), conv(cfg.in_channels, cfg.out_channels, cfg.kernel,
                        cfg.stride),
      bn(cfg.out_channels), pool(cfg.pool) {
    require(cfg.pool >= 1 && cfg.stride >= 1,
            "ConvBlock: pool and stride must be positive");
}

Tensor ConvBlock::forward(const Tensor& x, Mode mode) {
    const bool frozen = !trainable();
    Tensor h = conv.forward(x);
    h = bn.forward(h, frozen ? Mode::Eval : mode,
                   /*update_running=*/!frozen && mode == Mode::Train);
    h = relu.forward(h);
    return pool.forward(h);
}

Tensor ConvBlock::backward(const Tensor& grad_out) {
    Tensor g = pool.backward(grad_out);
    g = relu.backward(g);
    g = bn.backward(g);
    return conv.backward(g);
}

void ConvBlock::set_trainable(bool trainable) {
    conv.weight.trainable = trainable;
    conv.bias.trainable = trainable;
    bn.gamma.trainable = trainable;
    bn.beta.trainable = trainable;
}

// ----------------------------------------------------------- CnnExtractor

std::array<ConvBlockConfig, 4> default_cnn_config() {
    return {{{1, 32, 80, 16, 4}, {32, 64, 3, 1, 4}, {64, 64, 3, 1, 4},
             {64, 64, 3, 1, 4}}};
}

CnnExtractor::CnnExtractor() {
    for (const auto& cfg : default_cnn_config()) blocks.emplace_back(cfg);
}

void CnnExtractor::init_uniform(rng::Engine& engine) {
    for (auto& block : blocks) block.init_uniform(engine);
}

void CnnExtractor::set_trainable(bool trainable) {
    for (auto& block : blocks) block.set_trainable(trainable);
}

Tensor CnnExtractor::forward(const Tensor& waveforms, Mode mode) {
    require(waveforms.rank() == 3 && waveforms.shape[1] == 1,
            "CnnExtractor: input must be [B, 1, T]");
    Tensor h = waveforms;
    for (auto& block : blocks) h = block.forward(h, mode);

    const std::size_t batch = h.shape[0];
    const std::size_t chans = h.shape[1];
    const std::size_t t_len = h.shape[2];
    cached_tail_len_ = t_len;
    has_cache_ = true;

    // Global average pooling over whatever time remains.
    Tensor features = Tensor::zeros({batch, chans});
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < chans; ++c) {
            const double* hc = h.data.data() + (b * chans + c) * t_len;
            double acc = 0.0;
            for (std::size_t t = 0; t < t_len; ++t) acc += hc[t];
            features.at(b, c) = acc / static_cast<double>(t_len);
        }
    }
    return features;
}

Tensor CnnExtractor::backward(const Tensor& grad_features) {
    require_cache(has_cache_, "CnnExtractor");
    const std::size_t batch = grad_features.shape[0];
    const std::size_t chans = grad_features.shape[1];
    const std::size_t t_len = cached_tail_len_;

    Tensor g = Tensor::zeros({batch, chans, t_len});
    const double scale = 1.0 / static_cast<double>(t_len);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < chans; ++c) {
            const double gf = grad_features.at(b, c) * scale;
            double* gc = g.data.data() + (b * chans + c) * t_len;
            for (std::size_t t = 0; t < t_len; ++t) gc[t] = gf;
        }
    }
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
        g = it->backward(g);
    }
    return g;
}

// -------------------------------------------------------------- softmax CE

std::pair<double, std::vector<double>> softmax_ce(std::span<const double> logits,
                                                  std::size_t label) {
    if (label >= logits.size()) {
        throw std::invalid_argument("softmax_ce: label " +
                                    std::to_string(label) +
                                    " out of range for " +
                                    std::to_string(logits.size()) + " classes");
    }
    double max_logit = logits[0];
    for (double v : logits) max_logit = std::max(max_logit, v);
    double sum_exp = 0.0;
    for (double v : logits) sum_exp += std::exp(v - max_logit);
    const double log_sum = max_logit + std::log(sum_exp);

    std::vector<double> grad(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        grad[i] = std::exp(logits[i] - log_sum);
    }
    grad[label] -= 1.0;
    return {log_sum - logits[label], std::move(grad)};
}

std::pair<double, Tensor> softmax_ce_batch(const Tensor& logits,
                                           std::span<const int> labels) {
    require(logits.rank() == 2, "softmax_ce_batch: logits must be [B, K]");
    const std::size_t batch = logits.shape[0];
    const std::size_t k = logits.shape[1];
    require(labels.size() == batch, "softmax_ce_batch: label count mismatch");

    Tensor grad = Tensor::zeros(logits.shape);
    double total = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        auto [loss, g] = softmax_ce(
            std::span<const double>(logits.data.data() + b * k, k),
            static_cast<std::size_t>(labels[b]));
        total += loss;
        for (std::size_t i = 0; i < k; ++i) {
            grad.at(b, i) = g[i] / static_cast<double>(batch);
        }
    }
    return {total / static_cast<double>(batch), std::move(grad)};
}

} // namespace qkws
