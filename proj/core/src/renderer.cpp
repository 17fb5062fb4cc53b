#include "gode/renderer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "gode/error.hpp"
#include "gode/hierarchy.hpp"
#include "gode/sh.hpp"

namespace gode {
namespace {

using Eigen::Matrix2d;
using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::Vector4d load_quat(const GaussianModel& m, std::size_t i) {
    return {m.rotation[i * 4], m.rotation[i * 4 + 1], m.rotation[i * 4 + 2], m.rotation[i * 4 + 3]};
}

Matrix3d quat_to_rotation(const Eigen::Vector4d& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Matrix3d r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

struct Geometry {
    Vector3d p_cam;
    Matrix3d sigma;
    Matrix3d rot;
    Vector3d scale;
    Eigen::Matrix<double, 2, 3> jacobian;
};

Geometry gaussian_geometry(const GaussianModel& m, std::size_t i, const Camera& cam) {
    Geometry g;
    const Vector3d x(m.positions[i * 3], m.positions[i * 3 + 1], m.positions[i * 3 + 2]);
    g.p_cam = cam.rotation * x + cam.translation;
    const Eigen::Vector4d q = load_quat(m, i);
    g.rot = quat_to_rotation(q / q.norm());
    g.scale = Vector3d(std::exp(double(m.scale_log[i * 3])), std::exp(double(m.scale_log[i * 3 + 1])),
                       std::exp(double(m.scale_log[i * 3 + 2])));
    const Matrix3d ms = g.rot * g.scale.asDiagonal();
    g.sigma = ms * ms.transpose();
    const double z = g.p_cam.z();
    g.jacobian << cam.fx / z, 0.0, -cam.fx * g.p_cam.x() / (z * z),
                  0.0, cam.fy / z, -cam.fy * g.p_cam.y() / (z * z);
    return g;
}

Projected2D project_one(const GaussianModel& m, std::size_t i, const Camera& cam, double opacity_scale) {
    Projected2D p;
    const Geometry g = gaussian_geometry(m, i, cam);
    const double z = g.p_cam.z();
    if (!(z > kNearPlane)) return p;

    p.alpha_base = sigmoid(m.opacity_logit[i]) * opacity_scale;
    if (!(p.alpha_base >= kAlphaMin)) return p;

    const Eigen::Matrix<double, 2, 3> t = g.jacobian * cam.rotation;
    p.cov2d = t * g.sigma * t.transpose();
    p.cov2d(0, 0) += kLowPassFloor;
    p.cov2d(1, 1) += kLowPassFloor;
    const double det = p.cov2d.determinant();
    if (!(det > 0.0)) return p;
    p.conic = p.cov2d.inverse();

    p.mean = Vector2d(cam.fx * g.p_cam.x() / z + cam.cx, cam.fy * g.p_cam.y() / z + cam.cy);
    p.depth = z;

    // Pixels with alpha >= 1/255 satisfy d^T conic d <= 2 ln(255 o).
    const double r2 = 2.0 * std::log(p.alpha_base / kAlphaMin);
    const double hx = std::sqrt(r2 * p.cov2d(0, 0)) + 1.0;
    const double hy = std::sqrt(r2 * p.cov2d(1, 1)) + 1.0;
    const double fx0 = std::ceil(p.mean.x() - hx), fx1 = std::floor(p.mean.x() + hx);
    const double fy0 = std::ceil(p.mean.y() - hy), fy1 = std::floor(p.mean.y() + hy);
    if (fx1 < 0.0 || fy1 < 0.0 || fx0 > cam.width - 1 || fy0 > cam.height - 1) return p;
    p.x0 = static_cast<int>(std::max(fx0, 0.0));
    p.x1 = static_cast<int>(std::min(fx1, double(cam.width - 1)));
    p.y0 = static_cast<int>(std::max(fy0, 0.0));
    p.y1 = static_cast<int>(std::min(fy1, double(cam.height - 1)));

    const Vector3d x(m.positions[i * 3], m.positions[i * 3 + 1], m.positions[i * 3 + 2]);
    const Vector3d dir = (x - cam.center()).normalized();
    const auto basis = sh_basis(dir);
    Vector3d rgb = Vector3d::Constant(0.5);
    for (int k = 0; k < kShCoeffs; ++k) {
        for (int c = 0; c < 3; ++c) rgb[c] += basis[k] * m.sh[i * kShScalars + k * 3 + c];
    }
    for (int c = 0; c < 3; ++c) {
        p.color_clamped[c] = rgb[c] < 0.0;
        p.color[c] = std::max(rgb[c], 0.0);
    }
    p.visible = true;
    return p;
}

template <class Fn>
void parallel_rows(int rows, int workers, Fn&& fn) {
    workers = std::clamp(workers, 1, std::max(rows, 1));
    if (workers == 1) {
        fn(0, rows, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const int begin = rows * w / workers;
        const int end = rows * (w + 1) / workers;
        pool.emplace_back([&fn, begin, end, w] { fn(begin, end, w); });
    }
    for (auto& t : pool) t.join();
}

// Per-Gaussian screen-space gradient accumulator.
struct ScreenGrad {
    double mean_x = 0, mean_y = 0;
    double conic_a = 0, conic_b = 0, conic_c = 0;
    double color[3] = {0, 0, 0};
    double alpha_base = 0;

    void add(const ScreenGrad& o) {
        mean_x += o.mean_x;
        mean_y += o.mean_y;
        conic_a += o.conic_a;
        conic_b += o.conic_b;
        conic_c += o.conic_c;
        for (int c = 0; c < 3; ++c) color[c] += o.color[c];
        alpha_base += o.alpha_base;
    }
};

Matrix3d drot_dw(double w, double x, double y, double z) {
    (void)w;
    Matrix3d d;
    d << 0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0;
    return d;
}
Matrix3d drot_dx(double w, double x, double y, double z) {
    Matrix3d d;
    d << 0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x;
    return d;
}
Matrix3d drot_dy(double w, double x, double y, double z) {
    Matrix3d d;
    d << -4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y;
    return d;
}
Matrix3d drot_dz(double w, double x, double y, double z) {
    Matrix3d d;
    d << -4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0;
    return d;
}

void check_opacity_scale(std::span<const double> scale, std::size_t n) {
    if (!scale.empty() && scale.size() != n) {
        throw InvalidArgument("opacity_scale must be empty or have one entry per Gaussian");
    }
}

}  // namespace

GradientBuffer::GradientBuffer(std::size_t n)
    : positions(n * 3, 0.0), sh(n * kShScalars, 0.0), opacity_logit(n, 0.0),
      scale_log(n * 3, 0.0), rotation(n * 4, 0.0) {}

void GradientBuffer::set_zero() {
    for (auto* v : {&positions, &sh, &opacity_logit, &scale_log, &rotation}) {
        std::fill(v->begin(), v->end(), 0.0);
    }
}

std::array<double, kParamsPerGaussian> GradientBuffer::gaussian(std::size_t i) const {
    std::array<double, kParamsPerGaussian> out{};
    std::size_t k = 0;
    for (int d = 0; d < 3; ++d) out[k++] = positions[i * 3 + d];
    for (int d = 0; d < kShScalars; ++d) out[k++] = sh[i * kShScalars + d];
    out[k++] = opacity_logit[i];
    for (int d = 0; d < 3; ++d) out[k++] = scale_log[i * 3 + d];
    for (int d = 0; d < 4; ++d) out[k++] = rotation[i * 4 + d];
    return out;
}

double GradientBuffer::gaussian_norm(std::size_t i) const {
    double s = 0.0;
    for (double g : gaussian(i)) s += g * g;
    return std::sqrt(s);
}

RenderState render_forward(const GaussianModel& model, const Camera& camera,
                           const RenderOptions& options, std::span<const double> opacity_scale) {
    const std::size_t n = model.size();
    check_opacity_scale(opacity_scale, n);

    RenderState st;
    st.camera = camera;
    st.options = options;
    st.projected.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        st.projected[i] = project_one(model, i, camera, opacity_scale.empty() ? 1.0 : opacity_scale[i]);
        if (st.projected[i].visible) st.order.push_back(static_cast<std::uint32_t>(i));
    }
    std::sort(st.order.begin(), st.order.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double da = st.projected[a].depth, db = st.projected[b].depth;
        return da < db || (da == db && a < b);
    });

    st.tiles_x = (camera.width + kTileSize - 1) / kTileSize;
    st.tiles_y = (camera.height + kTileSize - 1) / kTileSize;
    st.tiles.assign(static_cast<std::size_t>(st.tiles_x) * st.tiles_y, {});
    for (std::uint32_t g : st.order) {
        const auto& p = st.projected[g];
        for (int ty = p.y0 / kTileSize; ty <= p.y1 / kTileSize; ++ty) {
            for (int tx = p.x0 / kTileSize; tx <= p.x1 / kTileSize; ++tx) {
                st.tiles[static_cast<std::size_t>(ty) * st.tiles_x + tx].push_back(g);
            }
        }
    }

    st.image = Image(camera.width, camera.height);
    st.contributors.assign(st.image.pixel_count(), 0);
    st.final_transmittance.assign(st.image.pixel_count(), 1.0);
    const Vector3d bg = options.background;

    parallel_rows(camera.height, options.workers, [&](int row_begin, int row_end, int) {
        for (int row = row_begin; row < row_end; ++row) {
            for (int col = 0; col < camera.width; ++col) {
                const auto& list = st.tiles[static_cast<std::size_t>(row / kTileSize) * st.tiles_x + col / kTileSize];
                double transmittance = 1.0;
                Vector3d c = Vector3d::Zero();
                std::uint32_t last = 0;
                for (std::size_t k = 0; k < list.size(); ++k) {
                    const auto& p = st.projected[list[k]];
                    const double dx = col - p.mean.x();
                    const double dy = row - p.mean.y();
                    const double power = -0.5 * (p.conic(0, 0) * dx * dx + p.conic(1, 1) * dy * dy) -
                                         p.conic(0, 1) * dx * dy;
                    if (power > 0.0) continue;
                    const double alpha = std::min(kAlphaMax, p.alpha_base * std::exp(power));
                    if (alpha < kAlphaMin) continue;
                    const double next_t = transmittance * (1.0 - alpha);
                    if (next_t < kTransmittanceCutoff) break;
                    c += p.color * (alpha * transmittance);
                    transmittance = next_t;
                    last = static_cast<std::uint32_t>(k + 1);
                }
                const std::size_t pix = static_cast<std::size_t>(row) * camera.width + col;
                st.contributors[pix] = last;
                st.final_transmittance[pix] = transmittance;
                for (int ch = 0; ch < 3; ++ch) st.image.data[pix * 3 + ch] = c[ch] + transmittance * bg[ch];
            }
        }
    });
    return st;
}

Image render(const GaussianModel& model, const Camera& camera, const RenderOptions& options) {
    return render_forward(model, camera, options).image;
}

GradientBuffer render_backward(const GaussianModel& model, const RenderState& st,
                               const Image& d_image, std::span<const double> opacity_scale) {
    const Camera& cam = st.camera;
    if (d_image.width != cam.width || d_image.height != cam.height) {
        throw InvalidArgument("d_image does not match the camera size");
    }
    const std::size_t n = model.size();
    if (st.projected.size() != n) throw InvalidArgument("render state belongs to a different model");
    check_opacity_scale(opacity_scale, n);

    const int workers = std::clamp(st.options.workers, 1, std::max(cam.height, 1));
    std::vector<std::vector<ScreenGrad>> partial(workers, std::vector<ScreenGrad>(n));
    const Vector3d bg = st.options.background;

    parallel_rows(cam.height, workers, [&](int row_begin, int row_end, int w) {
        auto& acc = partial[w];
        for (int row = row_begin; row < row_end; ++row) {
            for (int col = 0; col < cam.width; ++col) {
                const std::size_t pix = static_cast<std::size_t>(row) * cam.width + col;
                const Vector3d dl_dc(d_image.data[pix * 3], d_image.data[pix * 3 + 1], d_image.data[pix * 3 + 2]);
                const auto& list = st.tiles[static_cast<std::size_t>(row / kTileSize) * st.tiles_x + col / kTileSize];
                const double final_t = st.final_transmittance[pix];
                const double bg_dot = bg.dot(dl_dc);
                double transmittance = final_t;
                Vector3d accum = Vector3d::Zero();
                Vector3d last_color = Vector3d::Zero();
                double last_alpha = 0.0;
                for (std::size_t k = st.contributors[pix]; k-- > 0;) {
                    const std::uint32_t g = list[k];
                    const auto& p = st.projected[g];
                    const double dx = col - p.mean.x();
                    const double dy = row - p.mean.y();
                    const double power = -0.5 * (p.conic(0, 0) * dx * dx + p.conic(1, 1) * dy * dy) -
                                         p.conic(0, 1) * dx * dy;
                    if (power > 0.0) continue;
                    const double gauss = std::exp(power);
                    const double raw_alpha = p.alpha_base * gauss;
                    const double alpha = std::min(kAlphaMax, raw_alpha);
                    if (alpha < kAlphaMin) continue;
                    transmittance /= (1.0 - alpha);

                    ScreenGrad& sg = acc[g];
                    const double weight = alpha * transmittance;
                    for (int ch = 0; ch < 3; ++ch) sg.color[ch] += weight * dl_dc[ch];

                    accum = last_alpha * last_color + (1.0 - last_alpha) * accum;
                    last_alpha = alpha;
                    last_color = p.color;

                    double dl_dalpha = transmittance * (p.color - accum).dot(dl_dc);
                    dl_dalpha -= final_t / (1.0 - alpha) * bg_dot;
                    if (raw_alpha >= kAlphaMax) continue;

                    sg.alpha_base += gauss * dl_dalpha;
                    const double dl_dpower = p.alpha_base * gauss * dl_dalpha;
                    sg.mean_x += dl_dpower * (p.conic(0, 0) * dx + p.conic(0, 1) * dy);
                    sg.mean_y += dl_dpower * (p.conic(0, 1) * dx + p.conic(1, 1) * dy);
                    sg.conic_a += dl_dpower * (-0.5 * dx * dx);
                    sg.conic_b += dl_dpower * (-dx * dy);
                    sg.conic_c += dl_dpower * (-0.5 * dy * dy);
                }
            }
        }
    });
    for (int w = 1; w < workers; ++w) {
        for (std::size_t i = 0; i < n; ++i) partial[0][i].add(partial[w][i]);
    }
    const auto& screen = partial[0];

    GradientBuffer grad(n);
    const Vector3d cam_center = cam.center();
    for (std::uint32_t g : st.order) {
        const auto& p = st.projected[g];
        const ScreenGrad& sg = screen[g];

        const double s = sigmoid(model.opacity_logit[g]);
        const double oscale = opacity_scale.empty() ? 1.0 : opacity_scale[g];
        grad.opacity_logit[g] = sg.alpha_base * oscale * s * (1.0 - s);

        // View-dependent color.
        const Vector3d x(model.positions[g * 3], model.positions[g * 3 + 1], model.positions[g * 3 + 2]);
        const Vector3d view = x - cam_center;
        const double view_len = view.norm();
        const Vector3d dir = view / view_len;
        Vector3d dl_dcolor(sg.color[0], sg.color[1], sg.color[2]);
        for (int c = 0; c < 3; ++c) {
            if (p.color_clamped[c]) dl_dcolor[c] = 0.0;
        }
        const auto basis = sh_basis(dir);
        const auto basis_grad = sh_basis_gradient(dir);
        Vector3d dl_ddir = Vector3d::Zero();
        for (int k = 0; k < kShCoeffs; ++k) {
            double coeff_dot = 0.0;
            for (int c = 0; c < 3; ++c) {
                grad.sh[g * kShScalars + k * 3 + c] = basis[k] * dl_dcolor[c];
                coeff_dot += model.sh[g * kShScalars + k * 3 + c] * dl_dcolor[c];
            }
            dl_ddir += coeff_dot * basis_grad[k];
        }
        Vector3d dl_dx = (dl_ddir - dir * dir.dot(dl_ddir)) / view_len;

        // Covariance chain: conic -> cov2d -> (J W, Sigma).
        const Geometry geo = gaussian_geometry(model, g, cam);
        Matrix2d g_conic;
        g_conic << sg.conic_a, 0.5 * sg.conic_b, 0.5 * sg.conic_b, sg.conic_c;
        const Matrix2d g_cov = -p.conic * g_conic * p.conic;
        const Eigen::Matrix<double, 2, 3> t = geo.jacobian * cam.rotation;
        Matrix3d g_sigma = t.transpose() * g_cov * t;
        g_sigma = 0.5 * (g_sigma + g_sigma.transpose());
        const Eigen::Matrix<double, 2, 3> g_t = 2.0 * g_cov * t * geo.sigma;
        const Eigen::Matrix<double, 2, 3> g_j = g_t * cam.rotation.transpose();

        const double px = geo.p_cam.x(), py = geo.p_cam.y(), z = geo.p_cam.z();
        const double z2 = z * z, z3 = z2 * z;
        Vector3d dl_dp = Vector3d::Zero();
        dl_dp.x() += sg.mean_x * cam.fx / z;
        dl_dp.z() += -sg.mean_x * cam.fx * px / z2;
        dl_dp.y() += sg.mean_y * cam.fy / z;
        dl_dp.z() += -sg.mean_y * cam.fy * py / z2;
        dl_dp.z() += g_j(0, 0) * (-cam.fx / z2);
        dl_dp.x() += g_j(0, 2) * (-cam.fx / z2);
        dl_dp.z() += g_j(0, 2) * (2.0 * cam.fx * px / z3);
        dl_dp.z() += g_j(1, 1) * (-cam.fy / z2);
        dl_dp.y() += g_j(1, 2) * (-cam.fy / z2);
        dl_dp.z() += g_j(1, 2) * (2.0 * cam.fy * py / z3);
        dl_dx += cam.rotation.transpose() * dl_dp;
        for (int d = 0; d < 3; ++d) grad.positions[g * 3 + d] = dl_dx[d];

        // Sigma = M M^T with M = R diag(s).
        const Matrix3d m = geo.rot * geo.scale.asDiagonal();
        const Matrix3d g_m = 2.0 * g_sigma * m;
        Matrix3d g_r;
        for (int j = 0; j < 3; ++j) {
            const double g_s = g_m.col(j).dot(geo.rot.col(j));
            grad.scale_log[g * 3 + j] = g_s * geo.scale[j];
            g_r.col(j) = g_m.col(j) * geo.scale[j];
        }

        const Eigen::Vector4d q = load_quat(model, g);
        const double qlen = q.norm();
        const Eigen::Vector4d qn = q / qlen;
        const double w = qn[0], qx = qn[1], qy = qn[2], qz = qn[3];
        const Eigen::Vector4d g_qn(g_r.cwiseProduct(drot_dw(w, qx, qy, qz)).sum(),
                                   g_r.cwiseProduct(drot_dx(w, qx, qy, qz)).sum(),
                                   g_r.cwiseProduct(drot_dy(w, qx, qy, qz)).sum(),
                                   g_r.cwiseProduct(drot_dz(w, qx, qy, qz)).sum());
        const Eigen::Vector4d g_q = (g_qn - qn * qn.dot(g_qn)) / qlen;
        for (int d = 0; d < 4; ++d) grad.rotation[g * 4 + d] = g_q[d];
    }
    return grad;
}

GradientBuffer render_backward(const GaussianModel& model, const Camera& camera,
                               const Image& d_image, const RenderOptions& options) {
    const RenderState st = render_forward(model, camera, options);
    return render_backward(model, st, d_image);
}

Image render_transition(const GaussianModel& model, const Hierarchy& hierarchy, int level,
                        double t, const Camera& camera, const RenderOptions& options) {
    if (level < 0 || level >= hierarchy.levels() - 1) {
        throw InvalidArgument("transition level must satisfy 0 <= level < L-1");
    }
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("transition factor t must lie in [0, 1]");
    const std::vector<std::size_t> lower = hierarchy.level_indices(level);
    const std::vector<std::size_t> upper = hierarchy.level_indices(level + 1);
    const GaussianModel sub = subset(model, upper);
    std::vector<double> scale(upper.size(), 1.0);
    std::fill(scale.begin() + static_cast<std::ptrdiff_t>(lower.size()), scale.end(), t);
    return render_forward(sub, camera, options, scale).image;
}

}  // namespace gode
