#include "qkws/vqc.hpp"

#include <stdexcept>
#include <string>

#include "qkws/rng.hpp"

namespace qkws {

namespace {

void check_config(const VqcConfig& cfg) {
    if (cfg.n_wires < 1 || cfg.n_layers < 1) {
        throw std::invalid_argument("VqcConfig: n_wires and n_layers must be positive");
    }
}

std::size_t flat_index(const VqcParams& p, int layer, int wire, int axis) {
    return (static_cast<std::size_t>(layer) * p.n_wires + wire) * 3 + axis;
}

} // namespace

int param_count(const VqcConfig& cfg) {
    check_config(cfg);
    return cfg.n_layers * cfg.n_wires * 3;
}

double& VqcParams::at(int layer, int wire, int axis) {
    return angles[flat_index(*this, layer, wire, axis)];
}

double VqcParams::at(int layer, int wire, int axis) const {
    return angles[flat_index(*this, layer, wire, axis)];
}

VqcParams VqcParams::zeros(const VqcConfig& cfg) {
    check_config(cfg);
    VqcParams p;
    p.n_wires = cfg.n_wires;
    p.n_layers = cfg.n_layers;
    p.angles.assign(static_cast<std::size_t>(param_count(cfg)), 0.0);
    return p;
}

VqcParams VqcParams::random_init(const VqcConfig& cfg, std::uint64_t seed) {
    VqcParams p = zeros(cfg);
    rng::Engine engine(seed);
    for (auto& a : p.angles) a = rng::uniform(engine, -0.1, 0.1);
    return p;
}

void vqc_layer(StateVector& state, std::span<const double> layer_angles,
               const VqcConfig& cfg) {
    check_config(cfg);
    if (state.n_qubits != cfg.n_wires) {
        throw std::invalid_argument("vqc_layer: state has " +
                                    std::to_string(state.n_qubits) +
                                    " qubits, config wants " +
                                    std::to_string(cfg.n_wires));
    }
    if (layer_angles.size() != static_cast<std::size_t>(cfg.n_wires) * 3) {
        throw std::invalid_argument("vqc_layer: expected n_wires*3 angles");
    }
    const int n = cfg.n_wires;
    if (cfg.entangle && n >= 2) {
        // Rightmost factor of C(0->1) C(1->2) ... C(n-1->0) acts first.
        for (int i = n - 1; i >= 0; --i) {
            apply_cnot(state, i, (i + 1) % n);
        }
    }
    for (int i = 0; i < n; ++i) {
        apply_1q(state, make_rotation(Axis::X, layer_angles[3 * i + 0]), i);
        apply_1q(state, make_rotation(Axis::Y, layer_angles[3 * i + 1]), i);
        apply_1q(state, make_rotation(Axis::Z, layer_angles[3 * i + 2]), i);
    }
}

std::vector<CircuitOp> qnn_circuit_ops(std::span<const double> encoding_angles,
                                       const VqcParams& params,
                                       const VqcConfig& cfg) {
    check_config(cfg);
    const int n = cfg.n_wires;
    if (encoding_angles.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("qnn_circuit_ops: encoding angle count mismatch");
    }
    if (params.n_wires != n || params.n_layers != cfg.n_layers) {
        throw std::invalid_argument("qnn_circuit_ops: params/config shape mismatch");
    }
    std::vector<CircuitOp> ops;
    ops.reserve(static_cast<std::size_t>(n) +
                static_cast<std::size_t>(cfg.n_layers) * (4u * n));
    for (int i = 0; i < n; ++i) {
        ops.push_back({CircuitOp::Kind::Rotation,
                       make_rotation(Axis::Y, encoding_angles[i]), i, 0});
    }
    for (int layer = 0; layer < cfg.n_layers; ++layer) {
        if (cfg.entangle && n >= 2) {
            for (int i = n - 1; i >= 0; --i) {
                ops.push_back({CircuitOp::Kind::Cnot, Gate1Q{}, i, (i + 1) % n});
            }
        }
        for (int i = 0; i < n; ++i) {
            ops.push_back({CircuitOp::Kind::Rotation,
                           make_rotation(Axis::X, params.at(layer, i, 0)), i, 0});
            ops.push_back({CircuitOp::Kind::Rotation,
                           make_rotation(Axis::Y, params.at(layer, i, 1)), i, 0});
            ops.push_back({CircuitOp::Kind::Rotation,
                           make_rotation(Axis::Z, params.at(layer, i, 2)), i, 0});
        }
    }
    return ops;
}

Observation qnn_forward(const FeatureVector& features, const VqcParams& params,
                        const VqcConfig& cfg) {
    check_config(cfg);
    if (static_cast<int>(features.size()) != cfg.n_wires) {
        throw std::invalid_argument("qnn_forward: feature length must equal n_wires");
    }
    StateVector state = encode(features); // validates |x| < 1
    for (int layer = 0; layer < cfg.n_layers; ++layer) {
        const std::size_t offset =
            static_cast<std::size_t>(layer) * cfg.n_wires * 3;
        vqc_layer(state,
                  std::span<const double>(params.angles).subspan(
                      offset, static_cast<std::size_t>(cfg.n_wires) * 3),
                  cfg);
    }
    Observation obs(static_cast<std::size_t>(cfg.n_wires));
    for (int w = 0; w < cfg.n_wires; ++w) obs[w] = expect_z(state, w);
    return obs;
}

Observation qnn_forward_angles(std::span<const double> encoding_angles,
                               const VqcParams& params, const VqcConfig& cfg) {
    StateVector state = ground_state(cfg.n_wires);
    for (const auto& op : qnn_circuit_ops(encoding_angles, params, cfg)) {
        if (op.kind == CircuitOp::Kind::Rotation) {
            apply_1q(state, op.gate, op.wire);
        } else {
            apply_cnot(state, op.wire, op.wire2);
        }
    }
    Observation obs(static_cast<std::size_t>(cfg.n_wires));
    for (int w = 0; w < cfg.n_wires; ++w) obs[w] = expect_z(state, w);
    return obs;
}

} // namespace qkws
