#pragma once

// Deterministic inputs for the golden .gode fixture. Values come from closed-form
// expressions only, so they do not depend on any library's random distributions.

#include <cmath>

#include "gode/codec.hpp"

namespace gode::testing {

inline GaussianModel golden_model() {
    constexpr std::size_t n = 12;
    GaussianModel m(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        for (int d = 0; d < 3; ++d) m.positions[i * 3 + d] = static_cast<float>(std::sin(0.7 * t + d) * 0.8);
        for (int k = 0; k < kShScalars; ++k) {
            const double amp = k < 3 ? 1.2 : 0.15;
            m.sh[i * kShScalars + k] = static_cast<float>(amp * std::cos(0.37 * t * (k + 1) + 0.1 * k));
        }
        m.opacity_logit[i] = static_cast<float>(-1.0 + 0.4 * t);
        for (int d = 0; d < 3; ++d) m.scale_log[i * 3 + d] = static_cast<float>(-3.0 + 0.1 * t + 0.2 * d);
        m.rotation[i * 4] = 1.0f;
        m.rotation[i * 4 + 1] = static_cast<float>(0.05 * t);
        m.rotation[i * 4 + 2] = static_cast<float>(-0.03 * t);
        m.rotation[i * 4 + 3] = 0.25f;
    }
    return m;
}

inline Hierarchy golden_hierarchy() {
    Hierarchy h;
    h.source_count = 12;
    h.base = {1, 4, 7};
    h.enhancements = {{0, 9}, {}, {2, 3, 5, 11}};  // index 6, 8, 10 pruned
    return h;
}

inline GodeStream golden_stream() {
    const GaussianModel m = golden_model();
    const Hierarchy h = golden_hierarchy();
    const QuantizationSpec spec;
    return encode(m, h, spec, compute_quant_params(m, h, spec));
}

}  // namespace gode::testing
