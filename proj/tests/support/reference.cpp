#include "reference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "dual.hpp"
#include "gode/loss.hpp"
#include "gode/renderer.hpp"

namespace gode::testing {
namespace {

using std::exp;
using std::sqrt;

template <class T>
using Params = std::array<T, kParamsPerGaussian>;

// Field offsets inside the 59-entry parameter row.
constexpr int kPos = 0;
constexpr int kSh = 3;
constexpr int kOpacity = 51;
constexpr int kScale = 52;
constexpr int kRot = 55;

template <class T>
std::array<T, 16> basis(const T& x, const T& y, const T& z) {
    const double c0 = 0.5 / std::sqrt(std::numbers::pi);
    const double c1 = std::sqrt(3.0) * c0;
    const T xx = x * x, yy = y * y, zz = z * z;
    return {T(c0),
            T(-c1) * y,
            T(c1) * z,
            T(-c1) * x,
            T(1.0925484305920792) * x * y,
            T(-1.0925484305920792) * y * z,
            T(0.31539156525252005) * (T(2.0) * zz - xx - yy),
            T(-1.0925484305920792) * x * z,
            T(0.5462742152960396) * (xx - yy),
            T(-0.5900435899266435) * y * (T(3.0) * xx - yy),
            T(2.890611442640554) * x * y * z,
            T(-0.4570457994644658) * y * (T(4.0) * zz - xx - yy),
            T(0.3731763325901154) * z * (T(2.0) * zz - T(3.0) * xx - T(3.0) * yy),
            T(-0.4570457994644658) * x * (T(4.0) * zz - xx - yy),
            T(1.445305721320277) * z * (xx - yy),
            T(-0.5900435899266435) * x * (xx - T(3.0) * yy)};
}

template <class T>
struct Splat {
    bool live = false;
    double depth = 0.0;
    T mx, my;
    T ca, cb, cc;  // conic entries [ca cb; cb cc]
    T opacity;
    std::array<T, 3> color;
};

template <class T>
Splat<T> project(const Params<T>& p, const Camera& cam) {
    Splat<T> s;
    const auto& R = cam.rotation;
    const auto& t = cam.translation;
    std::array<T, 3> pc;
    for (int r = 0; r < 3; ++r) {
        pc[r] = T(t[r]);
        for (int c = 0; c < 3; ++c) pc[r] += T(R(r, c)) * p[kPos + c];
    }
    if (!(value_of(pc[2]) > 0.2)) return s;
    s.opacity = T(1.0) / (T(1.0) + exp(-p[kOpacity]));
    if (value_of(s.opacity) < 1.0 / 255.0) return s;

    const T qn = sqrt(p[kRot] * p[kRot] + p[kRot + 1] * p[kRot + 1] + p[kRot + 2] * p[kRot + 2] +
                      p[kRot + 3] * p[kRot + 3]);
    const T w = p[kRot] / qn, x = p[kRot + 1] / qn, y = p[kRot + 2] / qn, z = p[kRot + 3] / qn;
    T rot[3][3] = {{T(1.0) - T(2.0) * (y * y + z * z), T(2.0) * (x * y - w * z), T(2.0) * (x * z + w * y)},
                   {T(2.0) * (x * y + w * z), T(1.0) - T(2.0) * (x * x + z * z), T(2.0) * (y * z - w * x)},
                   {T(2.0) * (x * z - w * y), T(2.0) * (y * z + w * x), T(1.0) - T(2.0) * (x * x + y * y)}};
    T sigma[3][3];
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            sigma[r][c] = T(0.0);
            for (int k = 0; k < 3; ++k) {
                const T sk = exp(T(2.0) * p[kScale + k]);
                sigma[r][c] += rot[r][k] * sk * rot[c][k];
            }
        }
    }
    // Local affine projection: J (2x3) times the camera rotation.
    const T iz = T(1.0) / pc[2];
    T jac[2][3] = {{T(cam.fx) * iz, T(0.0), T(-cam.fx) * pc[0] * iz * iz},
                   {T(0.0), T(cam.fy) * iz, T(-cam.fy) * pc[1] * iz * iz}};
    T tm[2][3];
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 3; ++c) {
            tm[r][c] = T(0.0);
            for (int k = 0; k < 3; ++k) tm[r][c] += jac[r][k] * T(R(k, c));
        }
    }
    T cov[2][2];
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            cov[r][c] = T(0.0);
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) cov[r][c] += tm[r][a] * sigma[a][b] * tm[c][b];
            }
        }
    }
    cov[0][0] += T(0.3);
    cov[1][1] += T(0.3);
    const T det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    if (!(value_of(det) > 0.0)) return s;
    s.ca = cov[1][1] / det;
    s.cb = -cov[0][1] / det;
    s.cc = cov[0][0] / det;
    s.mx = T(cam.fx) * pc[0] * iz + T(cam.cx);
    s.my = T(cam.fy) * pc[1] * iz + T(cam.cy);
    s.depth = value_of(pc[2]);

    const Eigen::Vector3d centre = cam.center();
    const T dx = p[kPos] - T(centre.x()), dy = p[kPos + 1] - T(centre.y()), dz = p[kPos + 2] - T(centre.z());
    const T len = sqrt(dx * dx + dy * dy + dz * dz);
    const auto b = basis(dx / len, dy / len, dz / len);
    for (int ch = 0; ch < 3; ++ch) {
        T v = T(0.5);
        for (int k = 0; k < 16; ++k) v += b[k] * p[kSh + k * 3 + ch];
        s.color[ch] = value_of(v) < 0.0 ? T(0.0) : v;
    }
    s.live = true;
    return s;
}

template <class T>
std::vector<T> render_naive(const std::vector<Params<T>>& params, const Camera& cam, const Eigen::Vector3d& bg) {
    const std::size_t n = params.size();
    std::vector<Splat<T>> splats(n);
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i) {
        splats[i] = project(params[i], cam);
        if (splats[i].live) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return splats[a].depth < splats[b].depth; });

    std::vector<T> out(static_cast<std::size_t>(cam.width) * cam.height * 3, T(0.0));
    for (int row = 0; row < cam.height; ++row) {
        for (int col = 0; col < cam.width; ++col) {
            T trans(1.0);
            std::array<T, 3> acc = {T(0.0), T(0.0), T(0.0)};
            for (std::size_t i : order) {
                const auto& s = splats[i];
                const T dx = T(double(col)) - s.mx, dy = T(double(row)) - s.my;
                const T power = T(-0.5) * (s.ca * dx * dx + s.cc * dy * dy) - s.cb * dx * dy;
                if (value_of(power) > 0.0) continue;
                T alpha = s.opacity * exp(power);
                if (value_of(alpha) > 0.99) alpha = T(0.99);
                if (value_of(alpha) < 1.0 / 255.0) continue;
                const T next = trans * (T(1.0) - alpha);
                if (value_of(next) < 1e-4) break;
                for (int ch = 0; ch < 3; ++ch) acc[ch] += s.color[ch] * alpha * trans;
                trans = next;
            }
            const std::size_t pix = static_cast<std::size_t>(row) * cam.width + col;
            for (int ch = 0; ch < 3; ++ch) out[pix * 3 + ch] = acc[ch] + trans * T(bg[ch]);
        }
    }
    return out;
}

template <class T>
std::vector<Params<T>> gather(const GaussianModel& m) {
    std::vector<Params<T>> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (int k = 0; k < kParamsPerGaussian; ++k) out[i][k] = T(double(parameter(const_cast<GaussianModel&>(m), i, k)));
    }
    return out;
}

}  // namespace

float& parameter(GaussianModel& m, std::size_t i, int k) {
    if (k < kSh) return m.positions[i * 3 + k];
    if (k < kOpacity) return m.sh[i * kShScalars + (k - kSh)];
    if (k == kOpacity) return m.opacity_logit[i];
    if (k < kRot) return m.scale_log[i * 3 + (k - kScale)];
    return m.rotation[i * 4 + (k - kRot)];
}

Image reference_render(const GaussianModel& model, const Camera& camera, const Eigen::Vector3d& background) {
    Image img(camera.width, camera.height);
    img.data = render_naive(gather<double>(model), camera, background);
    return img;
}

std::vector<double> reference_gradient_of(const GaussianModel& model, std::size_t i, const Camera& camera,
                                          const Eigen::Vector3d& background, const Image& d_image) {
    auto params = gather<Dual>(model);
    std::vector<double> out(kParamsPerGaussian, 0.0);
    for (int k = 0; k < kParamsPerGaussian; ++k) {
        params[i][k].d = 1.0;
        const auto img = render_naive(params, camera, background);
        params[i][k].d = 0.0;
        double s = 0.0;
        for (std::size_t p = 0; p < img.size(); ++p) s += d_image.data[p] * img[p].d;
        out[k] = s;
    }
    return out;
}

std::vector<double> reference_gradient(const GaussianModel& model, const Camera& camera,
                                       const Eigen::Vector3d& background, const Image& d_image) {
    std::vector<double> out;
    out.reserve(model.size() * kParamsPerGaussian);
    for (std::size_t i = 0; i < model.size(); ++i) {
        const auto g = reference_gradient_of(model, i, camera, background, d_image);
        out.insert(out.end(), g.begin(), g.end());
    }
    return out;
}

double finite_difference(const GaussianModel& model, std::size_t i, int k, const Camera& camera,
                         const Image& d_image, double h) {
    GaussianModel plus = model, minus = model;
    float& xp = parameter(plus, i, k);
    float& xm = parameter(minus, i, k);
    const float x0 = xp;
    xp = static_cast<float>(double(x0) + h);
    xm = static_cast<float>(double(x0) - h);
    const double step = double(xp) - double(xm);
    auto objective = [&](const GaussianModel& m) {
        const Image img = render(m, camera);
        double s = 0.0;
        for (std::size_t p = 0; p < img.data.size(); ++p) s += d_image.data[p] * img.data[p];
        return s;
    };
    return (objective(plus) - objective(minus)) / step;
}

double naive_psnr(const Image& a, const Image& b) {
    long double se = 0.0L;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const long double d = static_cast<long double>(a.data[i]) - b.data[i];
        se += d * d;
    }
    const long double mse = se / a.data.size();
    if (mse == 0.0L) return std::numeric_limits<double>::infinity();
    return static_cast<double>(-10.0L * std::log10(mse));
}

double naive_ssim(const Image& a, const Image& b) {
    constexpr int size = 11;
    constexpr double sigma = 1.5;
    double w2[size][size];
    double total = 0.0;
    for (int u = 0; u < size; ++u) {
        for (int v = 0; v < size; ++v) {
            const double du = u - size / 2, dv = v - size / 2;
            w2[u][v] = std::exp(-(du * du + dv * dv) / (2 * sigma * sigma));
            total += w2[u][v];
        }
    }
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double sum = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        for (int r = 0; r < a.height; ++r) {
            for (int c = 0; c < a.width; ++c) {
                double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
                for (int u = 0; u < size; ++u) {
                    for (int v = 0; v < size; ++v) {
                        const int rr = r + u - size / 2, cc = c + v - size / 2;
                        if (rr < 0 || cc < 0 || rr >= a.height || cc >= a.width) continue;
                        const double w = w2[u][v] / total;
                        const double x = a.at(rr, cc, ch), y = b.at(rr, cc, ch);
                        ma += w * x;
                        mb += w * y;
                        saa += w * x * x;
                        sbb += w * y * y;
                        sab += w * x * y;
                    }
                }
                const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
                sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            }
        }
    }
    return sum / (3.0 * a.width * a.height);
}

Hierarchy reference_hierarchy(const GaussianModel& model, std::span<const View> views,
                              const LevelProgression& progression, double ssim_weight) {
    const std::size_t n = model.size();
    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), std::size_t{0});

    auto score_all = [&]() {
        std::vector<double> score(n, 0.0);
        const GaussianModel sub = subset(model, active);
        for (const View& view : views) {
            const Image img = reference_render(sub, view.camera, Eigen::Vector3d::Zero());
            const Image d_image = loss_and_grad(img, view.target, ssim_weight).d_image;
            for (std::size_t j = 0; j < active.size(); ++j) {
                const auto g = reference_gradient_of(sub, j, view.camera, Eigen::Vector3d::Zero(), d_image);
                double s = 0.0;
                for (double x : g) s += x * x;
                score[active[j]] += std::sqrt(s);
            }
        }
        return score;
    };
    auto take_lowest = [&](std::size_t k) {
        const auto score = score_all();
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t i : active) ranked.emplace_back(score[i], i);
        std::sort(ranked.begin(), ranked.end());
        std::vector<std::size_t> taken;
        for (std::size_t j = 0; j < k; ++j) taken.push_back(ranked[j].second);
        std::sort(taken.begin(), taken.end());
        std::vector<std::size_t> rest;
        for (std::size_t i : active) {
            if (!std::binary_search(taken.begin(), taken.end(), i)) rest.push_back(i);
        }
        active = rest;
        return taken;
    };

    if (n > progression.total()) take_lowest(n - progression.total());
    Hierarchy h;
    h.source_count = n;
    h.enhancements.resize(progression.levels - 1);
    for (int l = progression.levels - 1; l >= 1; --l) {
        if (progression.increments[l] > 0) h.enhancements[l - 1] = take_lowest(progression.increments[l]);
    }
    h.base = active;
    return h;
}

}  // namespace gode::testing
