#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "gode/image.hpp"
#include "gode/model.hpp"

namespace gode {

struct Hierarchy;

inline constexpr double kLowPassFloor = 0.3;          // px^2 added to the 2D covariance diagonal
inline constexpr double kAlphaMax = 0.99;
inline constexpr double kAlphaMin = 1.0 / 255.0;
inline constexpr double kTransmittanceCutoff = 1e-4;
inline constexpr double kNearPlane = 0.2;
inline constexpr int kTileSize = 16;

struct RenderOptions {
    Eigen::Vector3d background = Eigen::Vector3d::Zero();
    /// Row-parallel workers. Results are bit-identical for a fixed worker count.
    int workers = 1;
};

/// Screen-space footprint of one Gaussian for one camera.
struct Projected2D {
    bool visible = false;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov2d = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d conic = Eigen::Matrix2d::Identity();
    double depth = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    std::array<bool, 3> color_clamped{};
    double alpha_base = 0.0;  // sigmoid(opacity_logit) times any opacity scale
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel bounding box
};

/// d(loss)/d(raw parameter) for every Gaussian, mirroring GaussianModel's layout.
struct GradientBuffer {
    std::vector<double> positions;
    std::vector<double> sh;
    std::vector<double> opacity_logit;
    std::vector<double> scale_log;
    std::vector<double> rotation;

    GradientBuffer() = default;
    explicit GradientBuffer(std::size_t n);

    std::size_t size() const noexcept { return opacity_logit.size(); }
    void set_zero();
    /// L2 norm of the 59 concatenated parameter gradients of Gaussian `i`.
    double gaussian_norm(std::size_t i) const;
    /// The 59 gradients of Gaussian `i` in field order (positions, sh, opacity, scale, rotation).
    std::array<double, kParamsPerGaussian> gaussian(std::size_t i) const;
};

/// Everything the backward pass needs to replay a forward render.
struct RenderState {
    Camera camera;
    RenderOptions options;
    std::vector<Projected2D> projected;               // one per Gaussian
    std::vector<std::uint32_t> order;                 // visible Gaussians by (depth, index)
    std::vector<std::vector<std::uint32_t>> tiles;    // per tile, depth-ordered
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<std::uint32_t> contributors;          // per pixel: tile-list entries consumed
    std::vector<double> final_transmittance;          // per pixel
    Image image;
};

/// Projects `model` and composites it front to back. `opacity_scale`, when non-empty,
/// multiplies each Gaussian's rendered opacity.
RenderState render_forward(const GaussianModel& model, const Camera& camera,
                           const RenderOptions& options = {},
                           std::span<const double> opacity_scale = {});

Image render(const GaussianModel& model, const Camera& camera, const RenderOptions& options = {});

/// Analytic gradient of sum(d_image * render(model)) with respect to every raw parameter.
GradientBuffer render_backward(const GaussianModel& model, const RenderState& state,
                               const Image& d_image, std::span<const double> opacity_scale = {});

GradientBuffer render_backward(const GaussianModel& model, const Camera& camera,
                               const Image& d_image, const RenderOptions& options = {});

/// Renders level `level` plus the enhancement layer above it with opacity scaled by `t`.
Image render_transition(const GaussianModel& model, const Hierarchy& hierarchy, int level,
                        double t, const Camera& camera, const RenderOptions& options = {});

}  // namespace gode
