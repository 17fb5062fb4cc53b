#include "gode/sh.hpp"

#include <algorithm>

#include "gode/error.hpp"

namespace gode {
namespace {

constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                          -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                          0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                          -0.5900435899266435};

}  // namespace

std::array<double, kShCoeffs> sh_basis(const Eigen::Vector3d& dir) {
    const double x = dir.x(), y = dir.y(), z = dir.z();
    const double xx = x * x, yy = y * y, zz = z * z;
    return {kC0,
            -kC1 * y,
            kC1 * z,
            -kC1 * x,
            kC2[0] * x * y,
            kC2[1] * y * z,
            kC2[2] * (2.0 * zz - xx - yy),
            kC2[3] * x * z,
            kC2[4] * (xx - yy),
            kC3[0] * y * (3.0 * xx - yy),
            kC3[1] * x * y * z,
            kC3[2] * y * (4.0 * zz - xx - yy),
            kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
            kC3[4] * x * (4.0 * zz - xx - yy),
            kC3[5] * z * (xx - yy),
            kC3[6] * x * (xx - 3.0 * yy)};
}

std::array<Eigen::Vector3d, kShCoeffs> sh_basis_gradient(const Eigen::Vector3d& dir) {
    const double x = dir.x(), y = dir.y(), z = dir.z();
    const double xx = x * x, yy = y * y, zz = z * z;
    using V = Eigen::Vector3d;
    return {V(0, 0, 0),
            V(0, -kC1, 0),
            V(0, 0, kC1),
            V(-kC1, 0, 0),
            kC2[0] * V(y, x, 0),
            kC2[1] * V(0, z, y),
            kC2[2] * V(-2.0 * x, -2.0 * y, 4.0 * z),
            kC2[3] * V(z, 0, x),
            kC2[4] * V(2.0 * x, -2.0 * y, 0),
            kC3[0] * V(6.0 * x * y, 3.0 * xx - 3.0 * yy, 0),
            kC3[1] * V(y * z, x * z, x * y),
            kC3[2] * V(-2.0 * x * y, 4.0 * zz - xx - 3.0 * yy, 8.0 * y * z),
            kC3[3] * V(-6.0 * x * z, -6.0 * y * z, 6.0 * zz - 3.0 * xx - 3.0 * yy),
            kC3[4] * V(4.0 * zz - 3.0 * xx - yy, -2.0 * x * y, 8.0 * x * z),
            kC3[5] * V(2.0 * x * z, -2.0 * y * z, xx - yy),
            kC3[6] * V(3.0 * xx - 3.0 * yy, -6.0 * x * y, 0)};
}

Eigen::Vector3d evaluate_sh(std::span<const float> coeffs, const Eigen::Vector3d& dir) {
    if (coeffs.size() != static_cast<std::size_t>(kShScalars)) {
        throw InvalidArgument("evaluate_sh expects 48 coefficients");
    }
    const auto basis = sh_basis(dir);
    Eigen::Vector3d rgb = Eigen::Vector3d::Constant(0.5);
    for (int k = 0; k < kShCoeffs; ++k) {
        for (int c = 0; c < 3; ++c) rgb[c] += basis[k] * coeffs[k * 3 + c];
    }
    return rgb.cwiseMax(0.0);
}

}  // namespace gode
