#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "qkws/rng.hpp"
#include "qkws/tensor.hpp"

namespace qkws {

enum class Mode { Train, Eval };

// A learnable tensor with its accumulated gradient. Layers skip writing
// grad when trainable is false but still propagate input gradients.
struct Param {
    Tensor value;
    Tensor grad;
    bool trainable = true;

    void init_shape(std::vector<std::size_t> shape) {
        value = Tensor::zeros(shape);
        grad = Tensor::zeros(std::move(shape));
    }
    void zero_grad() { grad.fill(0.0); }
};

// Valid (un-padded) 1D cross-correlation with stride. [B, Cin, T] -> [B, Cout, T']
// with T' = (T - kernel) / stride + 1.
class Conv1d {
  public:
    Conv1d(std::size_t in_channels, std::size_t out_channels,
           std::size_t kernel, std::size_t stride);

    Tensor forward(const Tensor& x);
    // Accumulates weight/bias grads (when trainable) and returns d loss / d x.
    Tensor backward(const Tensor& grad_out);

    void init_uniform(rng::Engine& engine); // U(+-1/sqrt(fan_in)), zero bias

    std::size_t in_channels, out_channels, kernel, stride;
    Param weight; // [Cout, Cin, K]
    Param bias;   // [Cout]

  private:
    Tensor cached_input_;
    bool has_cache_ = false;
};

// Per-channel batch normalization over [B, C, T]; statistics pool batch and
// time. Biased variance (divide by N) throughout.
class BatchNorm1d {
  public:
    explicit BatchNorm1d(std::size_t channels);

    Tensor forward(const Tensor& x, Mode mode, bool update_running = true);
    Tensor backward(const Tensor& grad_out);

    std::size_t channels;
    Param gamma, beta;
    Tensor running_mean, running_var;
    double eps = 1e-5;
    double momentum = 0.1;

  private:
    Tensor cached_xhat_;
    std::vector<double> cached_inv_std_;
    bool cached_train_ = false;
    bool has_cache_ = false;
};

class ReLU {
  public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

  private:
    Tensor mask_;
    bool has_cache_ = false;
};

// Non-overlapping max pool over time, remainder truncated. When the input is
// shorter than the window, a single partial window covers what exists so the
// pipeline never emits an empty tensor.
class MaxPool1d {
  public:
    explicit MaxPool1d(std::size_t width);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

    std::size_t width;

  private:
    std::vector<std::size_t> argmax_;
    std::vector<std::size_t> in_shape_;
    bool has_cache_ = false;
};

enum class Activation { None, ReLU };

// y = x W^T + b over [B, in] -> [B, out], optional ReLU.
class Dense {
  public:
    Dense(std::size_t in_features, std::size_t out_features,
          Activation activation = Activation::None);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& grad_out);

    void init_uniform(rng::Engine& engine);

    std::size_t in_features, out_features;
    Activation activation;
    Param weight; // [out, in]
    Param bias;   // [out]

  private:
    Tensor cached_input_;
    Tensor cached_mask_;
    bool has_cache_ = false;
};

struct ConvBlockConfig {
    std::size_t in_channels;
    std::size_t out_channels;
    std::size_t kernel;
    std::size_t stride;
    std::size_t pool;
};

// Conv1d -> BN -> ReLU -> MaxPool. A frozen block runs BN on running
// statistics even in train mode and never updates them, so every one of its
// tensors stays bit-identical under training.
class ConvBlock {
  public:
    explicit ConvBlock(const ConvBlockConfig& cfg);

    Tensor forward(const Tensor& x, Mode mode);
    Tensor backward(const Tensor& grad_out);

    void set_trainable(bool trainable);
    bool trainable() const { return conv.weight.trainable; }
    void init_uniform(rng::Engine& engine) { conv.init_uniform(engine); }

    ConvBlockConfig config;
    Conv1d conv;
    BatchNorm1d bn;
    ReLU relu;
    MaxPool1d pool;
};

// The raw-waveform feature extractor: kernel 80 / stride 16 front block,
// then three kernel-3 blocks, channels 1-32-64-64, pool 4 everywhere,
// global average pooling down to 64 features.
std::array<ConvBlockConfig, 4> default_cnn_config();

class CnnExtractor {
  public:
    CnnExtractor(); // default_cnn_config

    Tensor forward(const Tensor& waveforms, Mode mode); // [B,1,T] -> [B,64]
    Tensor backward(const Tensor& grad_features);       // [B,64] -> [B,1,T]

    void set_trainable(bool trainable);
    bool trainable() const { return blocks[0].trainable(); }
    void init_uniform(rng::Engine& engine);

    static constexpr std::size_t kFeatureDim = 64;
    std::vector<ConvBlock> blocks;

  private:
    std::size_t cached_tail_len_ = 0; // block-4 time length, for pool backward
    bool has_cache_ = false;
};

// Numerically stabilized cross-entropy for one sample.
// Returns (loss, d loss / d logits); the gradient is softmax - one_hot.
std::pair<double, std::vector<double>> softmax_ce(std::span<const double> logits,
                                                  std::size_t label);

// Mean cross-entropy over a batch of logits [B, K]; gradient scaled by 1/B.
std::pair<double, Tensor> softmax_ce_batch(const Tensor& logits,
                                           std::span<const int> labels);

} // namespace qkws
