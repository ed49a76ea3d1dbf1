#include "qkws/noisesim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "qkws/encoder.hpp"

namespace qkws {

namespace {

void check_wire(const DensityMatrix& rho, int wire, const char* who) {
    if (wire < 0 || wire >= rho.n_qubits) {
        throw std::invalid_argument(std::string(who) + ": wire " +
                                    std::to_string(wire) + " out of range");
    }
}

std::size_t wire_mask(int n_qubits, int wire) {
    return std::size_t{1} << (n_qubits - 1 - wire);
}

// rho <- M rho M^dagger for an arbitrary 2x2 M on `wire`; the Kraus sums
// below rely on this not assuming unitarity.
void conjugate_1q(DensityMatrix& rho, const std::array<Complex, 4>& m, int wire) {
    const std::size_t mask = wire_mask(rho.n_qubits, wire);
    const std::size_t dim = rho.dim();
    // Left multiply: rows mixed in pairs, every column.
    for (std::size_t r = 0; r < dim; ++r) {
        if (r & mask) continue;
        const std::size_t r1 = r | mask;
        Complex* row0 = rho.entries.data() + r * dim;
        Complex* row1 = rho.entries.data() + r1 * dim;
        for (std::size_t c = 0; c < dim; ++c) {
            const Complex a = row0[c];
            const Complex b = row1[c];
            row0[c] = m[0] * a + m[1] * b;
            row1[c] = m[2] * a + m[3] * b;
        }
    }
    // Right multiply by M^dagger: columns mixed in pairs, every row.
    const Complex c0 = std::conj(m[0]);
    const Complex c1 = std::conj(m[1]);
    const Complex c2 = std::conj(m[2]);
    const Complex c3 = std::conj(m[3]);
    for (std::size_t r = 0; r < dim; ++r) {
        Complex* row = rho.entries.data() + r * dim;
        for (std::size_t c = 0; c < dim; ++c) {
            if (c & mask) continue;
            const std::size_t c1i = c | mask;
            const Complex a = row[c];
            const Complex b = row[c1i];
            row[c] = a * c0 + b * c1;
            row[c1i] = a * c2 + b * c3;
        }
    }
}

} // namespace

double DensityMatrix::trace_real() const {
    double t = 0.0;
    const std::size_t d = dim();
    for (std::size_t i = 0; i < d; ++i) t += entries[i * d + i].real();
    return t;
}

double DensityMatrix::purity() const {
    // Tr(rho^2) = sum_{ij} rho_ij rho_ji = sum_{ij} |rho_ij|^2 for Hermitian rho.
    double p = 0.0;
    for (const auto& e : entries) p += std::norm(e);
    return p;
}

DensityMatrix to_density(const StateVector& state) {
    if (state.n_qubits > kMaxDensityQubits) {
        throw CapacityError("to_density: density-matrix budget is " +
                            std::to_string(kMaxDensityQubits) + " qubits");
    }
    DensityMatrix rho;
    rho.n_qubits = state.n_qubits;
    const std::size_t d = state.dim();
    rho.entries.resize(d * d);
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            rho.entries[r * d + c] =
                state.amplitudes[r] * std::conj(state.amplitudes[c]);
        }
    }
    return rho;
}

void apply_1q(DensityMatrix& rho, const Gate1Q& gate, int wire) {
    check_wire(rho, wire, "apply_1q");
    conjugate_1q(rho, gate.matrix, wire);
}

void apply_cnot(DensityMatrix& rho, int control, int target) {
    check_wire(rho, control, "apply_cnot");
    check_wire(rho, target, "apply_cnot");
    if (control == target) {
        throw std::invalid_argument("apply_cnot: control equals target");
    }
    const std::size_t cmask = wire_mask(rho.n_qubits, control);
    const std::size_t tmask = wire_mask(rho.n_qubits, target);
    const std::size_t dim = rho.dim();
    auto permute = [&](std::size_t i) {
        return (i & cmask) ? (i ^ tmask) : i;
    };
    // P rho P with P an involutive permutation: swap each unordered index
    // pair {(r,c), (Pr,Pc)} once.
    for (std::size_t r = 0; r < dim; ++r) {
        const std::size_t pr = permute(r);
        for (std::size_t c = 0; c < dim; ++c) {
            const std::size_t pc = permute(c);
            if (pr > r || (pr == r && pc > c)) {
                std::swap(rho.entries[r * dim + c], rho.entries[pr * dim + pc]);
            }
        }
    }
}

void apply_channel(DensityMatrix& rho, const NoiseSpec& spec, int wire) {
    check_wire(rho, wire, "apply_channel");
    const double p = spec.probability;
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("apply_channel: probability must be in [0, 1]");
    }
    if (p == 0.0) return;

    // Single-wire Pauli conjugations collapse to index arithmetic, so each
    // Kraus sum reduces to one in-place pass:
    //   (X rho X)[r,c] = rho[r^m, c^m]
    //   (Y rho Y)[r,c] = +-rho[r^m, c^m]   (- when the wire bits differ)
    //   (Z rho Z)[r,c] = +-rho[r, c]       (- when the wire bits differ)
    const std::size_t mask = wire_mask(rho.n_qubits, wire);
    const std::size_t dim = rho.dim();
    Complex* e = rho.entries.data();

    switch (spec.channel) {
    case NoiseChannel::Depolarizing: {
        // Equal bits: (1 - 2p/3) rho[r,c] + (2p/3) rho[r^m, c^m].
        // Differing bits: X and Y terms cancel, leaving (1 - 4p/3) rho[r,c].
        const double keep = 1.0 - 2.0 * p / 3.0;
        const double mix = 2.0 * p / 3.0;
        const double shrink = 1.0 - 4.0 * p / 3.0;
        for (std::size_t r = 0; r < dim; ++r) {
            const bool rb = (r & mask) != 0;
            for (std::size_t c = 0; c < dim; ++c) {
                const bool cb = (c & mask) != 0;
                if (rb != cb) {
                    e[r * dim + c] *= shrink;
                } else if (!rb) { // handle each {(r,c),(r^m,c^m)} pair once
                    Complex& a = e[r * dim + c];
                    Complex& b = e[(r | mask) * dim + (c | mask)];
                    const Complex a0 = a;
                    a = keep * a0 + mix * b;
                    b = keep * b + mix * a0;
                }
            }
        }
        break;
    }
    case NoiseChannel::BitFlip: {
        for (std::size_t r = 0; r < dim; ++r) {
            if (r & mask) continue;
            for (std::size_t c = 0; c < dim; ++c) {
                Complex& a = e[r * dim + c];
                Complex& b = e[(r | mask) * dim + (c ^ mask)];
                const Complex a0 = a;
                a = (1.0 - p) * a0 + p * b;
                b = (1.0 - p) * b + p * a0;
            }
        }
        break;
    }
    case NoiseChannel::PhaseFlip: {
        const double scale = 1.0 - 2.0 * p;
        for (std::size_t r = 0; r < dim; ++r) {
            const bool rb = (r & mask) != 0;
            for (std::size_t c = 0; c < dim; ++c) {
                if (rb != ((c & mask) != 0)) e[r * dim + c] *= scale;
            }
        }
        break;
    }
    }
}

double expect_z(const DensityMatrix& rho, int wire) {
    check_wire(rho, wire, "expect_z");
    const std::size_t mask = wire_mask(rho.n_qubits, wire);
    const std::size_t d = rho.dim();
    double value = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double diag = rho.entries[i * d + i].real();
        value += (i & mask) ? -diag : diag;
    }
    return value;
}

Observation noisy_qnn_forward(const FeatureVector& features,
                              const VqcParams& params, const VqcConfig& cfg,
                              const NoiseSpec& spec) {
    if (static_cast<int>(features.size()) != cfg.n_wires) {
        throw std::invalid_argument(
            "noisy_qnn_forward: feature length must equal n_wires");
    }
    std::vector<double> encoding_angles(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (!(std::abs(features[i]) < 1.0)) {
            throw std::invalid_argument(
                "noisy_qnn_forward: |feature| must be < 1 at index " +
                std::to_string(i));
        }
        encoding_angles[i] = kPi * features[i];
    }
    return noisy_qnn_forward_angles(encoding_angles, params, cfg, spec);
}

Observation noisy_qnn_forward_angles(std::span<const double> encoding_angles,
                                     const VqcParams& params,
                                     const VqcConfig& cfg,
                                     const NoiseSpec& spec) {
    if (cfg.n_wires > kMaxDensityQubits) {
        throw CapacityError("noisy_qnn_forward: density-matrix budget is " +
                            std::to_string(kMaxDensityQubits) + " qubits");
    }

    DensityMatrix rho = to_density(ground_state(cfg.n_wires));
    const bool per_gate = spec.placement == NoisePlacement::AfterEveryGate;
    for (const auto& op : qnn_circuit_ops(encoding_angles, params, cfg)) {
        if (op.kind == CircuitOp::Kind::Rotation) {
            apply_1q(rho, op.gate, op.wire);
            if (per_gate) apply_channel(rho, spec, op.wire);
        } else {
            apply_cnot(rho, op.wire, op.wire2);
            if (per_gate) {
                apply_channel(rho, spec, op.wire);
                apply_channel(rho, spec, op.wire2);
            }
        }
    }
    if (spec.placement == NoisePlacement::BeforeMeasurement) {
        for (int w = 0; w < cfg.n_wires; ++w) apply_channel(rho, spec, w);
    }
    Observation obs(static_cast<std::size_t>(cfg.n_wires));
    for (int w = 0; w < cfg.n_wires; ++w) obs[w] = expect_z(rho, w);
    return obs;
}

} // namespace qkws
