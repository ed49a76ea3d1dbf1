#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "qkws/simcore.hpp"
#include "qkws/vqc.hpp"

namespace qkws {

// Density-matrix register budget: 4^8 = 2^16 entries.
inline constexpr int kMaxDensityQubits = 8;

// 2^n x 2^n Hermitian trace-1 operator, row-major. Same wire convention as
// StateVector: wire 0 is the most significant bit of row/column indices.
struct DensityMatrix {
    int n_qubits = 0;
    std::vector<Complex> entries;

    std::size_t dim() const { return std::size_t{1} << n_qubits; }
    Complex& at(std::size_t row, std::size_t col) {
        return entries[row * dim() + col];
    }
    const Complex& at(std::size_t row, std::size_t col) const {
        return entries[row * dim() + col];
    }
    double trace_real() const;
    double purity() const; // Tr(rho^2), real part
};

enum class NoiseChannel { Depolarizing, BitFlip, PhaseFlip };
enum class NoisePlacement { AfterEveryGate, BeforeMeasurement };

struct NoiseSpec {
    NoiseChannel channel = NoiseChannel::Depolarizing;
    double probability = 0.0; // in [0, 1]
    NoisePlacement placement = NoisePlacement::AfterEveryGate;
};

// |psi><psi|
DensityMatrix to_density(const StateVector& state);

// rho <- U rho U^dagger with U acting on `wire`.
void apply_1q(DensityMatrix& rho, const Gate1Q& gate, int wire);

// rho <- P rho P with P the CNOT permutation.
void apply_cnot(DensityMatrix& rho, int control, int target);

// Kraus sum on one wire. Depolarizing with probability p:
//   rho' = (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z)
// Bit flip mixes with X rho X, phase flip with Z rho Z. Trace preserving.
void apply_channel(DensityMatrix& rho, const NoiseSpec& spec, int wire);

// Tr(rho Z_wire)
double expect_z(const DensityMatrix& rho, int wire);

// The qnn_forward circuit replayed on a density matrix with spec's channel
// after every gate (both wires of a CNOT), or once per wire before
// measurement, depending on spec.placement. Encoding gates included.
Observation noisy_qnn_forward(const FeatureVector& features,
                              const VqcParams& params, const VqcConfig& cfg,
                              const NoiseSpec& spec);

// Same with explicit, unrestricted encoding angles; the gradient machinery
// shifts these past the +-pi feature range.
Observation noisy_qnn_forward_angles(std::span<const double> encoding_angles,
                                     const VqcParams& params,
                                     const VqcConfig& cfg,
                                     const NoiseSpec& spec);

} // namespace qkws
