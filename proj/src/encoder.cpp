#include "qkws/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qkws {

FeatureVector squash(const FeatureVector& features) {
    constexpr double kLimit = 1.0 - 1e-12;
    FeatureVector out(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (!std::isfinite(features[i])) {
            throw std::invalid_argument(
                "squash: non-finite feature at index " + std::to_string(i));
        }
        out[i] = std::clamp(std::tanh(features[i]), -kLimit, kLimit);
    }
    return out;
}

StateVector encode(const FeatureVector& features) {
    const int n = static_cast<int>(features.size());
    StateVector state = ground_state(n);
    for (int i = 0; i < n; ++i) {
        // NaN fails this comparison too.
        if (!(std::abs(features[i]) < 1.0)) {
            throw std::invalid_argument(
                "encode: |feature| must be < 1 at index " + std::to_string(i));
        }
        apply_1q(state, make_rotation(Axis::Y, kPi * features[i]), i);
    }
    return state;
}

} // namespace qkws
