#pragma once

#include <vector>

#include "qkws/simcore.hpp"

namespace qkws {

using FeatureVector = std::vector<double>;

// tanh into (-1, 1). Saturated values are nudged off exact +-1 so the
// encoding angle pi*x never aliases at +-pi.
FeatureVector squash(const FeatureVector& features);

// Product state RY(pi * x_i)|0> per wire, one feature per qubit.
// Per-wire amplitudes are [cos(pi x_i / 2), sin(pi x_i / 2)].
// Requires every |x_i| < 1 (pre-squashed input).
StateVector encode(const FeatureVector& features);

} // namespace qkws
