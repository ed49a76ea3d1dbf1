#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include "qkws/errors.hpp"

namespace qkws {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Pure-state register budget; the density-matrix counterpart squares the
// memory, so this keeps both sides desk-sized.
inline constexpr int kMaxQubits = 12;

// n-qubit pure state. Wire 0 is the most significant bit of the basis index,
// so |10> on two wires means wire 0 in |1> and lives at index 2.
struct StateVector {
    int n_qubits = 0;
    std::vector<Complex> amplitudes;

    std::size_t dim() const { return amplitudes.size(); }
    double norm_sq() const;
};

// |0...0> register. Throws CapacityError outside [1, kMaxQubits].
StateVector ground_state(int n_qubits);

enum class Axis { X, Y, Z };
enum class GateLabel { RX, RY, RZ, PauliZ };

struct Gate1Q {
    GateLabel label;
    double angle = 0.0;              // radians; meaningless for PauliZ
    std::array<Complex, 4> matrix{}; // row-major 2x2, unitary
};

// Half-angle convention:
//   RX(t) = [[cos t/2, -i sin t/2], [-i sin t/2, cos t/2]]
//   RY(t) = [[cos t/2,   -sin t/2], [   sin t/2,  cos t/2]]
//   RZ(t) = diag(e^{-i t/2}, e^{+i t/2})
Gate1Q make_rotation(Axis axis, double angle);
Gate1Q make_pauli_z();

// state <- (I x ... x U x ... x I) state, U acting on `wire`.
void apply_1q(StateVector& state, const Gate1Q& gate, int wire);

// Flips the target bit on basis states whose control bit is 1.
void apply_cnot(StateVector& state, int control, int target);

// <Z_wire> = P(bit 0) - P(bit 1); always in [-1, 1] for normalized states.
double expect_z(const StateVector& state, int wire);

} // namespace qkws
