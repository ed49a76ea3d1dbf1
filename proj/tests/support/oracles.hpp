#pragma once

// Test-only brute-force references, independent of the bit-mask simulator:
// full 2^n x 2^n gate matrices assembled by Kronecker products and applied
// as dense matrix-vector chains.

#include <complex>
#include <cstdint>
#include <vector>

#include "qkws/rng.hpp"
#include "qkws/simcore.hpp"
#include "qkws/vqc.hpp"

namespace oracle {

using qkws::Complex;

struct Mat {
    std::size_t n = 0; // square dimension
    std::vector<Complex> a;

    Complex& at(std::size_t r, std::size_t c) { return a[r * n + c]; }
    Complex at(std::size_t r, std::size_t c) const { return a[r * n + c]; }
};

inline Mat identity(std::size_t n) {
    Mat m{n, std::vector<Complex>(n * n)};
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

inline Mat kron(const Mat& x, const Mat& y) {
    Mat m{x.n * y.n, std::vector<Complex>(x.n * y.n * x.n * y.n)};
    for (std::size_t rx = 0; rx < x.n; ++rx)
        for (std::size_t cx = 0; cx < x.n; ++cx)
            for (std::size_t ry = 0; ry < y.n; ++ry)
                for (std::size_t cy = 0; cy < y.n; ++cy)
                    m.at(rx * y.n + ry, cx * y.n + cy) =
                        x.at(rx, cx) * y.at(ry, cy);
    return m;
}

inline Mat matmul(const Mat& x, const Mat& y) {
    Mat m{x.n, std::vector<Complex>(x.n * x.n)};
    for (std::size_t r = 0; r < x.n; ++r)
        for (std::size_t k = 0; k < x.n; ++k) {
            const Complex v = x.at(r, k);
            if (v == Complex{}) continue;
            for (std::size_t c = 0; c < x.n; ++c) m.at(r, c) += v * y.at(k, c);
        }
    return m;
}

inline std::vector<Complex> matvec(const Mat& m, const std::vector<Complex>& v) {
    std::vector<Complex> out(m.n);
    for (std::size_t r = 0; r < m.n; ++r)
        for (std::size_t c = 0; c < m.n; ++c) out[r] += m.at(r, c) * v[c];
    return out;
}

inline Mat from_gate(const qkws::Gate1Q& g) {
    return Mat{2, {g.matrix[0], g.matrix[1], g.matrix[2], g.matrix[3]}};
}

// I x ... x U x ... x I with U at `wire`; wire 0 is the leftmost factor,
// matching the simulator's most-significant-bit convention.
inline Mat embed_1q(const qkws::Gate1Q& g, int wire, int n_qubits) {
    Mat m = identity(1);
    for (int w = 0; w < n_qubits; ++w) {
        m = kron(m, w == wire ? from_gate(g) : identity(2));
    }
    return m;
}

inline Mat cnot_matrix(int control, int target, int n_qubits) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    const std::size_t cmask = std::size_t{1} << (n_qubits - 1 - control);
    const std::size_t tmask = std::size_t{1} << (n_qubits - 1 - target);
    Mat m{dim, std::vector<Complex>(dim * dim)};
    for (std::size_t i = 0; i < dim; ++i) {
        const std::size_t j = (i & cmask) ? (i ^ tmask) : i;
        m.at(j, i) = 1.0;
    }
    return m;
}

inline double expect_z_dense(const std::vector<Complex>& amps, int wire,
                             int n_qubits) {
    const std::size_t mask = std::size_t{1} << (n_qubits - 1 - wire);
    double z = 0.0;
    for (std::size_t i = 0; i < amps.size(); ++i) {
        z += ((i & mask) ? -1.0 : 1.0) * std::norm(amps[i]);
    }
    return z;
}

// Dense-matrix replay of the whole QNN circuit: encoding, then per layer the
// entangler C(0->1) C(1->2) ... C(n-1->0) followed by the rotations.
inline qkws::Observation qnn_forward_dense(const qkws::FeatureVector& features,
                                           const qkws::VqcParams& params,
                                           const qkws::VqcConfig& cfg) {
    const int n = cfg.n_wires;
    Mat encode = identity(1);
    for (int i = 0; i < n; ++i) {
        encode = kron(encode,
                      from_gate(qkws::make_rotation(qkws::Axis::Y,
                                                    qkws::kPi * features[i])));
    }

    std::vector<Complex> state(std::size_t{1} << n);
    state[0] = 1.0;
    state = matvec(encode, state);

    for (int layer = 0; layer < cfg.n_layers; ++layer) {
        Mat m = identity(std::size_t{1} << n);
        if (cfg.entangle && n >= 2) {
            for (int i = 0; i < n; ++i) {
                m = matmul(m, cnot_matrix(i, (i + 1) % n, n));
            }
        }
        Mat rot = identity(1);
        for (int i = 0; i < n; ++i) {
            Mat wire_rot = from_gate(
                qkws::make_rotation(qkws::Axis::X, params.at(layer, i, 0)));
            wire_rot = matmul(from_gate(qkws::make_rotation(
                                  qkws::Axis::Y, params.at(layer, i, 1))),
                              wire_rot);
            wire_rot = matmul(from_gate(qkws::make_rotation(
                                  qkws::Axis::Z, params.at(layer, i, 2))),
                              wire_rot);
            rot = kron(rot, wire_rot);
        }
        m = matmul(rot, m);
        state = matvec(m, state);
    }

    qkws::Observation obs(static_cast<std::size_t>(n));
    for (int w = 0; w < n; ++w) obs[w] = expect_z_dense(state, w, n);
    return obs;
}

// Normalized random state for property tests.
inline qkws::StateVector random_state(int n_qubits, qkws::rng::Engine& engine) {
    qkws::StateVector s = qkws::ground_state(n_qubits);
    double norm = 0.0;
    for (auto& a : s.amplitudes) {
        a = Complex{qkws::rng::uniform(engine, -1.0, 1.0),
                    qkws::rng::uniform(engine, -1.0, 1.0)};
        norm += std::norm(a);
    }
    norm = std::sqrt(norm);
    for (auto& a : s.amplitudes) a /= norm;
    return s;
}

inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace oracle
