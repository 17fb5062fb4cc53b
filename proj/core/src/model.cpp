#include "gode/model.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <string>

#include "gode/error.hpp"

namespace gode {

void GaussianModel::resize(std::size_t n) {
    positions.resize(n * 3);
    sh.resize(n * kShScalars);
    opacity_logit.resize(n);
    scale_log.resize(n * 3);
    rotation.resize(n * 4);
}

void GaussianModel::push_back_from(const GaussianModel& other, std::size_t i) {
    auto append = [i](std::vector<float>& dst, const std::vector<float>& src, std::size_t width) {
        dst.insert(dst.end(), src.begin() + static_cast<std::ptrdiff_t>(i * width),
                   src.begin() + static_cast<std::ptrdiff_t>((i + 1) * width));
    };
    append(positions, other.positions, 3);
    append(sh, other.sh, kShScalars);
    append(opacity_logit, other.opacity_logit, 1);
    append(scale_log, other.scale_log, 3);
    append(rotation, other.rotation, 4);
}

void GaussianModel::validate() const {
    const std::size_t n = size();
    if (positions.size() != n * 3 || sh.size() != n * kShScalars || scale_log.size() != n * 3 ||
        rotation.size() != n * 4) {
        throw InvalidArgument("GaussianModel arrays disagree on the Gaussian count");
    }
    auto check = [](const std::vector<float>& v, const char* name) {
        if (!std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); })) {
            throw InvalidArgument(std::string("non-finite value in ") + name);
        }
    };
    check(positions, "positions");
    check(sh, "sh");
    check(opacity_logit, "opacity_logit");
    check(scale_log, "scale_log");
    check(rotation, "rotation");
    for (std::size_t i = 0; i < n; ++i) {
        const float* q = &rotation[i * 4];
        if (q[0] == 0.0f && q[1] == 0.0f && q[2] == 0.0f && q[3] == 0.0f) {
            throw InvalidArgument("zero quaternion at Gaussian " + std::to_string(i));
        }
    }
}

GaussianModel subset(const GaussianModel& model, std::span<const std::size_t> indices) {
    const std::size_t n = model.size();
    std::vector<bool> seen(n, false);
    for (std::size_t idx : indices) {
        if (idx >= n) {
            throw InvalidArgument("subset index " + std::to_string(idx) + " out of range (N=" +
                                  std::to_string(n) + ")");
        }
        if (seen[idx]) {
            throw InvalidArgument("duplicate subset index " + std::to_string(idx));
        }
        seen[idx] = true;
    }
    GaussianModel out;
    out.positions.reserve(indices.size() * 3);
    out.sh.reserve(indices.size() * kShScalars);
    out.opacity_logit.reserve(indices.size());
    out.scale_log.reserve(indices.size() * 3);
    out.rotation.reserve(indices.size() * 4);
    for (std::size_t idx : indices) out.push_back_from(model, idx);
    return out;
}

void Camera::validate() const {
    if (width < 1 || height < 1) throw InvalidArgument("camera width/height must be >= 1");
    if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("camera focal lengths must be > 0");
    const Eigen::Matrix3d rrt = rotation * rotation.transpose();
    if ((rrt - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
        throw InvalidArgument("camera rotation is not orthonormal");
    }
    if (!translation.allFinite() || !std::isfinite(cx) || !std::isfinite(cy)) {
        throw InvalidArgument("camera has non-finite parameters");
    }
}

Camera Camera::look_at(int width, int height, double focal, const Eigen::Vector3d& eye,
                       const Eigen::Vector3d& target, const Eigen::Vector3d& up) {
    const Eigen::Vector3d forward = (target - eye).normalized();
    Eigen::Vector3d right = forward.cross(up);
    if (right.norm() < 1e-12) right = forward.unitOrthogonal();
    right.normalize();
    const Eigen::Vector3d down = forward.cross(right);

    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.fx = focal;
    cam.fy = focal;
    cam.cx = 0.5 * (width - 1);
    cam.cy = 0.5 * (height - 1);
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -cam.rotation * eye;
    return cam;
}

void View::validate() const {
    camera.validate();
    if (target.width != camera.width || target.height != camera.height) {
        throw InvalidArgument("view target size does not match its camera");
    }
    if (target.data.size() != target.pixel_count() * 3) {
        throw InvalidArgument("view target buffer has the wrong length");
    }
}

double scene_extent(std::span<const View> views) {
    if (views.empty()) return 0.0;
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& v : views) centroid += v.camera.center();
    centroid /= static_cast<double>(views.size());
    double radius = 0.0;
    for (const auto& v : views) radius = std::max(radius, (v.camera.center() - centroid).norm());
    return radius;
}

}  // namespace gode
