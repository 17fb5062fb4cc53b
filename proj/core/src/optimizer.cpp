#include "gode/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "gode/error.hpp"

namespace gode {
namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEpsilon = 1e-15;

}  // namespace

MaskedAdam::MaskedAdam(std::size_t n, LearningRates rates, double spatial_scale, int total_steps)
    : rates_(rates), spatial_scale_(spatial_scale), total_steps_(std::max(total_steps, 1)),
      m_(n * kParamsPerGaussian, 0.0), v_(n * kParamsPerGaussian, 0.0), steps_(n, 0) {}

double MaskedAdam::position_lr(int iteration) const {
    const double t = std::clamp(double(iteration) / total_steps_, 0.0, 1.0);
    const double lr = std::exp(std::log(rates_.position_init) * (1.0 - t) + std::log(rates_.position_final) * t);
    return lr * spatial_scale_;
}

void MaskedAdam::step(GaussianModel& model, std::span<const std::size_t> rows, const GradientBuffer& grad,
                      int iteration) {
    if (grad.size() != rows.size()) throw InvalidArgument("gradient rows do not match the update rows");
    const double lr_pos = position_lr(iteration);

    for (std::size_t j = 0; j < rows.size(); ++j) {
        const std::size_t row = rows[j];
        const std::uint32_t t = ++steps_[row];
        const double bc1 = 1.0 - std::pow(kBeta1, t);
        const double bc2 = 1.0 - std::pow(kBeta2, t);
        double* m = &m_[row * kParamsPerGaussian];
        double* v = &v_[row * kParamsPerGaussian];
        std::size_t slot = 0;

        auto update = [&](float& param, double g, double lr) {
            double& mm = m[slot];
            double& vv = v[slot];
            ++slot;
            mm = kBeta1 * mm + (1.0 - kBeta1) * g;
            vv = kBeta2 * vv + (1.0 - kBeta2) * g * g;
            const double step = lr * (mm / bc1) / (std::sqrt(vv / bc2) + kEpsilon);
            param = static_cast<float>(double(param) - step);
        };

        for (int d = 0; d < 3; ++d) update(model.positions[row * 3 + d], grad.positions[j * 3 + d], lr_pos);
        for (int d = 0; d < kShScalars; ++d) {
            update(model.sh[row * kShScalars + d], grad.sh[j * kShScalars + d], d < 3 ? rates_.sh_dc : rates_.sh_rest);
        }
        update(model.opacity_logit[row], grad.opacity_logit[j], rates_.opacity);
        for (int d = 0; d < 3; ++d) update(model.scale_log[row * 3 + d], grad.scale_log[j * 3 + d], rates_.scale);
        for (int d = 0; d < 4; ++d) update(model.rotation[row * 4 + d], grad.rotation[j * 4 + d], rates_.rotation);
    }
}

}  // namespace gode
