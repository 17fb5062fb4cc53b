#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "gode/codec.hpp"
#include "gode/image.hpp"
#include "gode/model.hpp"
#include "gode/renderer.hpp"

namespace gode {

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(1 / MSE) over all pixels and channels; +inf when the images are identical.
double psnr(const Image& a, const Image& b);

/// Mean SSIM (11x11 Gaussian window, sigma 1.5, channel-averaged). Requires H, W >= 11.
double ssim(const Image& a, const Image& b);

struct LevelReport {
    int level = 0;
    std::size_t gaussian_count = 0;
    std::size_t size_bytes = 0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    double render_ms_mean = 0.0;
};

struct EvaluateOptions {
    RenderOptions render;
    /// When set, writes level_<l>_view_<v>.png for every rendered view.
    std::filesystem::path png_dir;
};

/// Average PSNR/SSIM over `views` of every decoded level of `stream`.
std::vector<LevelReport> evaluate_levels(const GodeStream& stream, std::span<const View> views,
                                         const EvaluateOptions& options = {});

/// Average PSNR/SSIM of one model over `views`.
LevelReport evaluate_model(const GaussianModel& model, std::span<const View> views,
                           const RenderOptions& options = {});

/// CSV with header "level,W,size_bytes,psnr_db,ssim,render_ms".
void write_report_csv(std::span<const LevelReport> rows, std::ostream& out);

}  // namespace gode
