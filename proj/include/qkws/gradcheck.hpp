#pragma once

#include <cstdint>
#include <string>

namespace qkws {

// Cross-validation of the gradient paths: central finite differences
// against the exact parameter-shift rule on random small circuits, and
// analytic layer gradients against finite differences of scalar losses.
// Relative errors are scaled by the max-norm of the reference gradient
// (floored at 1e-8) so near-zero components do not blow up the ratio.
struct GradCheckReport {
    double max_rel_error_quantum = 0.0;
    double max_rel_error_classical = 0.0;
    std::string worst_quantum_site;
    std::string worst_classical_site;

    double max_rel_error() const {
        return max_rel_error_quantum > max_rel_error_classical
                   ? max_rel_error_quantum
                   : max_rel_error_classical;
    }
    bool pass(double threshold = 1e-4) const {
        return max_rel_error() < threshold;
    }
};

GradCheckReport run_gradcheck(std::uint64_t seed, double eps, int trials);

} // namespace qkws
