#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qkws/audiodata.hpp"
#include "qkws/classicalnn.hpp"
#include "qkws/gradopt.hpp"
#include "qkws/noisesim.hpp"
#include "qkws/vqc.hpp"

namespace qkws {

enum class ModelKind { CnnDnn, CnnQnn };
enum class Regime { BaselineCnnDnn, CnnQnnScratch, CnnQnn2, CnnQnn3 };
enum class GradMethod { ParameterShift, FiniteDiff };

struct ModelConfig {
    std::size_t n_classes = 35;
    int n_wires = 8;
    int n_layers = 4;
};

// Hidden widths of the classification DNN; a final linear layer maps the
// last width onto the classes.
inline constexpr std::array<std::size_t, 4> kDnnHiddenWidths = {64, 128, 256,
                                                                512};

struct DnnHead {
    std::vector<Dense> layers;
};

struct QnnHead {
    Dense compressor; // feature-dim -> n_wires, linear
    VqcParams params;
    VqcConfig cfg;
    std::vector<double> angle_grad;
    bool vqc_trainable = true;
    Tensor class_matrix; // [n_wires, n_classes]; fixed at construction
    Tensor cached_squashed;

    explicit QnnHead(const ModelConfig& config)
        : compressor(CnnExtractor::kFeatureDim,
                     static_cast<std::size_t>(config.n_wires)) {}
};

struct HybridModel {
    ModelKind kind = ModelKind::CnnDnn;
    ModelConfig config;
    std::uint64_t seed = 0;

    CnnExtractor cnn;
    std::optional<DnnHead> dnn;
    std::optional<QnnHead> qnn;
};

// Seeded deterministic initialization. The CNN-QNN classification matrix is
// drawn once from a standard normal scaled by 1/sqrt(n_wires) and is never
// trainable.
HybridModel build_model(ModelKind kind, const ModelConfig& config,
                        std::uint64_t seed);

// CNN-DNN: cnn_extract -> DNN head. CNN-QNN: cnn_extract -> compressor ->
// tanh squash -> QNN forward (noisy when requested) -> class matrix.
// Returns logits [B, n_classes].
Tensor forward(HybridModel& model, const Tensor& waveform_batch, Mode mode,
               const std::optional<NoiseSpec>& noise = {});

// Copy the trained CNN of a CNN-DNN into a freshly built CNN-QNN.
// CnnQnn2 freezes the CNN and the compressor, leaving only the VQC angles
// trainable; CnnQnn3 leaves everything trainable.
HybridModel transfer_cnn(const HybridModel& source, Regime regime,
                         const ModelConfig& config, std::uint64_t seed);

struct EvalReport {
    double cross_entropy = 0.0;
    double accuracy = 0.0;
    std::size_t trainable_param_count = 0;
    std::size_t sample_count = 0;
};

enum class SplitPart { Train, Validation, Test };

EvalReport evaluate(HybridModel& model, const Dataset& data, SplitPart part,
                    const std::optional<NoiseSpec>& noise = {});

struct TrainConfig {
    Regime regime = Regime::BaselineCnnDnn;
    std::size_t epochs = 30;
    std::size_t batch_size = 256;
    OptKind optimizer = OptKind::Adam;
    double lr_classical = 1e-3;
    double lr_quantum = 1e-2;
    GradMethod grad_method = GradMethod::ParameterShift;
    double eps = 1e-3;
    std::uint64_t seed = 1;
    std::optional<NoiseSpec> noise; // routed through every quantum forward
};

struct EpochReport {
    std::size_t epoch = 0;
    double train_ce = 0.0;
    double val_ce = 0.0;
    double val_acc = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    HybridModel model; // best-validation-CE checkpoint
    std::vector<EpochReport> epochs;
    double best_val_ce = 0.0;
};

// Mini-batch training: forward -> cross-entropy -> backprop (quantum
// parameters via parameter-shift or finite difference) -> optimizer step.
// Throws NumericError naming the epoch and batch on a non-finite loss.
TrainResult train(HybridModel model, const Dataset& data,
                  const TrainConfig& cfg);

// Per-sample loss gradients across the classical/quantum boundary.
struct QnnSampleGrad {
    std::vector<double> param_grad;   // d loss / d vqc angles
    std::vector<double> feature_grad; // d loss / d squashed features
};
QnnSampleGrad qnn_sample_backward(std::span<const double> squashed,
                                  const VqcParams& params,
                                  const VqcConfig& cfg,
                                  std::span<const double> grad_obs,
                                  GradMethod method, double eps,
                                  bool want_feature_grad,
                                  const std::optional<NoiseSpec>& noise);

// Flat view of every stored tensor (parameters, buffers, the class matrix,
// the VQC angles) keyed by a stable dotted path, for serialization, counts,
// and freeze checks.
struct TensorRef {
    std::string name;
    std::vector<std::size_t> shape;
    double* data = nullptr;
    std::size_t n = 0;
    bool trainable = false;
    bool is_parameter = false; // false for BN running statistics
};
std::vector<TensorRef> tensor_refs(HybridModel& model);

std::size_t trainable_param_count(HybridModel& model);
std::size_t total_param_count(HybridModel& model);

const char* to_string(ModelKind kind);
const char* to_string(Regime regime);

} // namespace qkws
