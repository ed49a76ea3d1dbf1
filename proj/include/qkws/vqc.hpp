#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qkws/encoder.hpp"
#include "qkws/simcore.hpp"

namespace qkws {

struct VqcConfig {
    int n_wires = 8;
    int n_layers = 4;
    bool entangle = true; // nearest-neighbor ring; ignored on one wire
};

// n_layers * n_wires * 3
int param_count(const VqcConfig& cfg);

// Trainable rotation angles (alpha, beta, gamma) per layer and wire, for
// RX, RY, RZ respectively. Flattened layer-major, then wire, then axis.
struct VqcParams {
    int n_wires = 0;
    int n_layers = 0;
    std::vector<double> angles;

    double& at(int layer, int wire, int axis);
    double at(int layer, int wire, int axis) const;

    static VqcParams zeros(const VqcConfig& cfg);
    // Uniform on (-0.1, 0.1): near-identity start, away from the flat
    // plateau of deep random circuits.
    static VqcParams random_init(const VqcConfig& cfg, std::uint64_t seed);
};

// One circuit layer: the ring entangler
//   C(0->1) C(1->2) ... C(n-1->0)
// with the rightmost factor applied first, then RX(alpha_i) RY(beta_i)
// RZ(gamma_i) on each wire. layer_angles holds n_wires * 3 values.
void vqc_layer(StateVector& state, std::span<const double> layer_angles,
               const VqcConfig& cfg);

using Observation = std::vector<double>;

// Flat instruction stream for one full QNN circuit (encoding included),
// replayable on either the pure-state or the density-matrix backend.
struct CircuitOp {
    enum class Kind { Rotation, Cnot };
    Kind kind;
    Gate1Q gate;    // Rotation only
    int wire = 0;   // Rotation wire, or CNOT control
    int wire2 = 0;  // CNOT target
};

std::vector<CircuitOp> qnn_circuit_ops(std::span<const double> encoding_angles,
                                       const VqcParams& params,
                                       const VqcConfig& cfg);

// encode -> all layers -> <Z> on every wire. Features must be pre-squashed.
Observation qnn_forward(const FeatureVector& features, const VqcParams& params,
                        const VqcConfig& cfg);

// Same circuit with explicit encoding angles (radians, unrestricted); the
// gradient machinery shifts these directly.
Observation qnn_forward_angles(std::span<const double> encoding_angles,
                               const VqcParams& params, const VqcConfig& cfg);

} // namespace qkws
