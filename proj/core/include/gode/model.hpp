#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

#include "gode/image.hpp"

namespace gode {

inline constexpr int kShCoeffs = 16;                 // degree 3
inline constexpr int kShScalars = kShCoeffs * 3;     // 48 per Gaussian
inline constexpr int kParamsPerGaussian = 3 + kShScalars + 1 + 3 + 4;  // 59

/// Explicit Gaussian scene in raw (pre-activation) parameter space.
///
/// All arrays are flat and row-major with leading dimension N:
///   positions      N x 3
///   sh             N x 16 x 3   (coefficient-major, color-minor; coefficient 0 is DC)
///   opacity_logit  N            rendered opacity = sigmoid(opacity_logit)
///   scale_log      N x 3        rendered scale   = exp(scale_log)
///   rotation       N x 4        quaternion (w, x, y, z), normalized at render time
struct GaussianModel {
    std::vector<float> positions;
    std::vector<float> sh;
    std::vector<float> opacity_logit;
    std::vector<float> scale_log;
    std::vector<float> rotation;

    GaussianModel() = default;
    explicit GaussianModel(std::size_t n) { resize(n); }

    std::size_t size() const noexcept { return opacity_logit.size(); }
    bool empty() const noexcept { return opacity_logit.empty(); }
    void resize(std::size_t n);

    /// Appends Gaussian `i` of `other`.
    void push_back_from(const GaussianModel& other, std::size_t i);

    /// Throws InvalidArgument if array sizes disagree or any value is non-finite.
    void validate() const;

    bool operator==(const GaussianModel&) const = default;
};

/// Rows of `model` selected by `indices`, in the given order.
/// Throws InvalidArgument on out-of-range or duplicate indices.
GaussianModel subset(const GaussianModel& model, std::span<const std::size_t> indices);

/// Pinhole camera with a world-to-camera rigid transform.
/// Pixel (col, row) has its center at image coordinates (col, row).
struct Camera {
    int width = 0;
    int height = 0;
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // world -> camera
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d center() const { return -rotation.transpose() * translation; }
    void validate() const;

    /// Camera at `eye` looking at `target`; +y of the image points down, +z forward.
    static Camera look_at(int width, int height, double focal, const Eigen::Vector3d& eye,
                          const Eigen::Vector3d& target,
                          const Eigen::Vector3d& up = Eigen::Vector3d::UnitY());
};

struct View {
    Camera camera;
    Image target;

    void validate() const;
};

/// Radius of the bounding sphere of the camera centers (max distance to their centroid).
double scene_extent(std::span<const View> views);

}  // namespace gode
