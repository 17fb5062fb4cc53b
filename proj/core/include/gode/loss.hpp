#pragma once

#include "gode/image.hpp"

namespace gode {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
inline constexpr double kDefaultSsimWeight = 0.2;

/// Mean SSIM over all pixels and channels, computed with an 11x11 Gaussian window
/// (sigma 1.5) applied with zero padding so the map has the image's size.
/// When `grad` is non-null it receives d(SSIM)/d(a).
double ssim_map_mean(const Image& a, const Image& b, Image* grad = nullptr);

struct LossResult {
    double loss = 0.0;
    Image d_image;
};

/// (1 - w) * mean|r - t| + w * (1 - SSIM(r, t)) and its gradient with respect to `rendered`.
LossResult loss_and_grad(const Image& rendered, const Image& target, double ssim_weight = kDefaultSsimWeight);

}  // namespace gode
