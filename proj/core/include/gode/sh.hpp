#pragma once

#include <Eigen/Core>

#include <array>
#include <span>

#include "gode/model.hpp"

namespace gode {

/// Real SH basis up to degree 3 with the 3DGS sign/normalization conventions.
std::array<double, kShCoeffs> sh_basis(const Eigen::Vector3d& dir);

/// Partial derivatives of every basis function with respect to (x, y, z) of `dir`,
/// treating the components as independent (no unit-norm projection).
std::array<Eigen::Vector3d, kShCoeffs> sh_basis_gradient(const Eigen::Vector3d& dir);

/// View-dependent color: 0.5 + sum_k basis_k(dir) * coeffs[k], clamped at zero per channel.
/// `coeffs` holds 16 x 3 values (coefficient-major).
Eigen::Vector3d evaluate_sh(std::span<const float> coeffs, const Eigen::Vector3d& dir);

}  // namespace gode
