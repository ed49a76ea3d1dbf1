#include "qkws/simcore.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace qkws {

namespace {

void check_wire(const StateVector& state, int wire, const char* who) {
    if (wire < 0 || wire >= state.n_qubits) {
        throw std::invalid_argument(std::string(who) + ": wire " +
                                    std::to_string(wire) +
                                    " out of range for " +
                                    std::to_string(state.n_qubits) + " qubits");
    }
}

// Wire w owns bit (n_qubits - 1 - w) of the basis index.
std::size_t wire_mask(int n_qubits, int wire) {
    return std::size_t{1} << (n_qubits - 1 - wire);
}

} // namespace

double StateVector::norm_sq() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return s;
}

StateVector ground_state(int n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw CapacityError("ground_state: n_qubits must be in [1, " +
                            std::to_string(kMaxQubits) + "], got " +
                            std::to_string(n_qubits));
    }
    StateVector state;
    state.n_qubits = n_qubits;
    state.amplitudes.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
    state.amplitudes[0] = Complex{1.0, 0.0};
    return state;
}

Gate1Q make_rotation(Axis axis, double angle) {
    if (!std::isfinite(angle)) {
        throw std::invalid_argument("make_rotation: non-finite angle");
    }
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    Gate1Q gate;
    gate.angle = angle;
    switch (axis) {
    case Axis::X:
        gate.label = GateLabel::RX;
        gate.matrix = {Complex{c, 0.0}, Complex{0.0, -s}, Complex{0.0, -s},
                       Complex{c, 0.0}};
        break;
    case Axis::Y:
        gate.label = GateLabel::RY;
        gate.matrix = {Complex{c, 0.0}, Complex{-s, 0.0}, Complex{s, 0.0},
                       Complex{c, 0.0}};
        break;
    case Axis::Z:
        gate.label = GateLabel::RZ;
        gate.matrix = {std::polar(1.0, -angle / 2.0), Complex{0.0, 0.0},
                       Complex{0.0, 0.0}, std::polar(1.0, angle / 2.0)};
        break;
    }
    return gate;
}

Gate1Q make_pauli_z() {
    Gate1Q gate;
    gate.label = GateLabel::PauliZ;
    gate.matrix = {Complex{1.0, 0.0}, Complex{0.0, 0.0}, Complex{0.0, 0.0},
                   Complex{-1.0, 0.0}};
    return gate;
}

void apply_1q(StateVector& state, const Gate1Q& gate, int wire) {
    check_wire(state, wire, "apply_1q");
    const std::size_t mask = wire_mask(state.n_qubits, wire);
    const auto& u = gate.matrix;
    const std::size_t dim = state.dim();
    for (std::size_t i = 0; i < dim; ++i) {
        if (i & mask) continue;
        const std::size_t j = i | mask;
        const Complex a = state.amplitudes[i];
        const Complex b = state.amplitudes[j];
        state.amplitudes[i] = u[0] * a + u[1] * b;
        state.amplitudes[j] = u[2] * a + u[3] * b;
    }
}

void apply_cnot(StateVector& state, int control, int target) {
    check_wire(state, control, "apply_cnot");
    check_wire(state, target, "apply_cnot");
    if (control == target) {
        throw std::invalid_argument("apply_cnot: control equals target");
    }
    const std::size_t cmask = wire_mask(state.n_qubits, control);
    const std::size_t tmask = wire_mask(state.n_qubits, target);
    const std::size_t dim = state.dim();
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & cmask) && !(i & tmask)) {
            std::swap(state.amplitudes[i], state.amplitudes[i | tmask]);
        }
    }
}

double expect_z(const StateVector& state, int wire) {
    check_wire(state, wire, "expect_z");
    const std::size_t mask = wire_mask(state.n_qubits, wire);
    double value = 0.0;
    for (std::size_t i = 0; i < state.dim(); ++i) {
        const double p = std::norm(state.amplitudes[i]);
        value += (i & mask) ? -p : p;
    }
    return value;
}

} // namespace qkws
