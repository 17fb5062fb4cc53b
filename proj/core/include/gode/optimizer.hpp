#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gode/model.hpp"
#include "gode/renderer.hpp"

namespace gode {

/// Per-attribute Adam learning rates of the reference 3DGS trainer.
/// Position rates are multiplied by the scene extent and decay log-linearly.
struct LearningRates {
    double position_init = 1.6e-4;
    double position_final = 1.6e-6;
    double sh_dc = 2.5e-3;
    double sh_rest = 2.5e-3 / 20.0;
    double opacity = 0.05;
    double scale = 5e-3;
    double rotation = 1e-3;
};

/// Adam whose moments and step counters advance only for the rows being updated.
class MaskedAdam {
public:
    MaskedAdam(std::size_t n, LearningRates rates, double spatial_scale, int total_steps);

    /// Applies one update to `model` rows `rows`; `grad` is indexed by position in `rows`.
    void step(GaussianModel& model, std::span<const std::size_t> rows, const GradientBuffer& grad,
              int iteration);

    double position_lr(int iteration) const;
    std::uint32_t steps_taken(std::size_t row) const { return steps_[row]; }

private:
    LearningRates rates_;
    double spatial_scale_;
    int total_steps_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::vector<std::uint32_t> steps_;
};

}  // namespace gode
