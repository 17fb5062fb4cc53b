#pragma once

#include <random>

#include "gode/model.hpp"
#include "gode/sh.hpp"

namespace bench {

// A random cloud of n Gaussians in the unit ball seen from (0, 0, -4).
inline gode::GaussianModel random_cloud(std::size_t n, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f), pos01(0.0f, 1.0f);
    gode::GaussianModel m(n);
    for (std::size_t i = 0; i < n; ++i) {
        float x, y, z;
        do {
            x = u(rng);
            y = u(rng);
            z = u(rng);
        } while (x * x + y * y + z * z > 1.0f);
        m.positions[i * 3 + 0] = x;
        m.positions[i * 3 + 1] = y;
        m.positions[i * 3 + 2] = z;
        for (int k = 0; k < gode::kShScalars; ++k) m.sh[i * gode::kShScalars + k] = (k < 3 ? 1.0f : 0.1f) * u(rng);
        m.opacity_logit[i] = 1.0f + 2.0f * pos01(rng);
        for (int k = 0; k < 3; ++k) m.scale_log[i * 3 + k] = std::log(0.03f + 0.05f * pos01(rng));
        m.rotation[i * 4 + 0] = 1.0f;
        for (int k = 1; k < 4; ++k) m.rotation[i * 4 + k] = 0.3f * u(rng);
    }
    return m;
}

}  // namespace bench
