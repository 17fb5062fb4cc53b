#include "gode/scene_fit.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include "gode/error.hpp"
#include "gode/loss.hpp"

namespace gode {
namespace {

using Rng = std::mt19937_64;

constexpr double kShC0 = 0.28209479177387814;

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

SceneKind parse_scene_kind(const std::string& s) {
    if (s == "blobs") return SceneKind::Blobs;
    throw InvalidArgument("unknown scene kind '" + s + "' (expected blobs)");
}

SyntheticScene make_synthetic_scene(SceneKind kind, int n_views, int resolution, std::uint64_t seed,
                                    int reference_gaussians) {
    if (n_views < 1) throw InvalidArgument("synthetic scene needs at least one view");
    if (resolution < 1) throw InvalidArgument("resolution must be >= 1");
    (void)kind;

    Rng rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    SyntheticScene scene;
    GaussianModel& m = scene.reference;
    m.resize(static_cast<std::size_t>(reference_gaussians));
    for (int i = 0; i < reference_gaussians; ++i) {
        // Uniform in the unit ball.
        Eigen::Vector3d p;
        do {
            p = Eigen::Vector3d(2 * u01(rng) - 1, 2 * u01(rng) - 1, 2 * u01(rng) - 1);
        } while (p.squaredNorm() > 1.0);
        for (int d = 0; d < 3; ++d) m.positions[i * 3 + d] = static_cast<float>(p[d]);

        // Base colors in [0.05, 0.8] plus a mild degree-1 term keep every rendered value inside [0, 1].
        for (int c = 0; c < 3; ++c) {
            m.sh[i * kShScalars + c] = static_cast<float>((0.05 + 0.75 * u01(rng) - 0.5) / kShC0);
        }
        for (int k = 1; k < 4; ++k) {
            for (int c = 0; c < 3; ++c) m.sh[i * kShScalars + k * 3 + c] = static_cast<float>(0.1 * (2 * u01(rng) - 1));
        }
        m.opacity_logit[i] = static_cast<float>(1.0 + 3.0 * u01(rng));
        const double base = std::log(0.03) + u01(rng) * (std::log(0.14) - std::log(0.03));
        for (int d = 0; d < 3; ++d) m.scale_log[i * 3 + d] = static_cast<float>(base + 0.5 * (u01(rng) - 0.5));
        Eigen::Vector4d q(normal(rng), normal(rng), normal(rng), normal(rng));
        q.normalize();
        for (int d = 0; d < 4; ++d) m.rotation[i * 4 + d] = static_cast<float>(q[d]);
    }

    constexpr double kRadius = 4.0;
    for (int v = 0; v < n_views; ++v) {
        const double angle = 2.0 * std::numbers::pi * v / n_views;
        const double height = (v % 2 == 0) ? 0.8 : -0.6;
        const Eigen::Vector3d eye(kRadius * std::cos(angle), height, kRadius * std::sin(angle));
        View view;
        view.camera = Camera::look_at(resolution, resolution, double(resolution), eye, Eigen::Vector3d::Zero());
        view.target = render(m, view.camera);
        scene.views.push_back(std::move(view));
    }
    return scene;
}

GaussianModel initialize_gaussians(std::span<const View> views, std::size_t n, std::uint64_t seed) {
    if (views.empty()) throw InvalidArgument("fit needs at least one view");
    if (n < 1) throw InvalidArgument("fit needs at least one Gaussian");
    for (const auto& v : views) v.validate();

    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& v : views) centroid += v.camera.center();
    centroid /= static_cast<double>(views.size());
    double extent = scene_extent(views);
    if (!(extent > 0.0)) extent = 1.0;

    auto seen_by_all = [&](const Eigen::Vector3d& x) {
        for (const auto& v : views) {
            const Eigen::Vector3d p = v.camera.rotation * x + v.camera.translation;
            if (p.z() <= kNearPlane) return false;
            const double u = v.camera.fx * p.x() / p.z() + v.camera.cx;
            const double w = v.camera.fy * p.y() / p.z() + v.camera.cy;
            if (u < 0.0 || w < 0.0 || u > v.camera.width - 1 || w > v.camera.height - 1) return false;
        }
        return true;
    };

    Rng rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    GaussianModel m(n);
    const std::size_t max_attempts = 1000 + 5000 * n;
    std::size_t found = 0;
    for (std::size_t attempt = 0; attempt < max_attempts && found < n; ++attempt) {
        const Eigen::Vector3d x = centroid + extent * Eigen::Vector3d(2 * u01(rng) - 1, 2 * u01(rng) - 1, 2 * u01(rng) - 1);
        if (!seen_by_all(x)) continue;
        for (int d = 0; d < 3; ++d) m.positions[found * 3 + d] = static_cast<float>(x[d]);
        ++found;
    }
    if (found < n) throw InvalidArgument("cameras share no common viewing volume");

    const float scale_log = static_cast<float>(std::log(0.02 * extent));
    const float opacity = static_cast<float>(logit(0.1));
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) m.sh[i * kShScalars + c] = static_cast<float>((u01(rng) - 0.5) / kShC0);
        m.opacity_logit[i] = opacity;
        for (int d = 0; d < 3; ++d) m.scale_log[i * 3 + d] = scale_log;
        m.rotation[i * 4] = 1.0f;
    }
    return m;
}

GaussianModel fit(std::span<const View> views, std::size_t n, const FitConfig& config) {
    GaussianModel model = initialize_gaussians(views, n, config.seed);
    if (config.iterations <= 0) return model;

    const double extent = scene_extent(views);
    MaskedAdam adam(n, config.rates, extent > 0.0 ? extent : 1.0, config.iterations);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Rng rng(config.seed ^ 0x9E3779B97F4A7C15ull);
    std::uniform_int_distribution<std::size_t> pick_view(0, views.size() - 1);

    if (config.progress) *config.progress << "iteration,loss\n";
    for (int it = 0; it < config.iterations; ++it) {
        const View& view = views[pick_view(rng)];
        const RenderState st = render_forward(model, view.camera, config.render);
        const LossResult loss = loss_and_grad(st.image, view.target, config.ssim_weight);
        const GradientBuffer grad = render_backward(model, st, loss.d_image);
        adam.step(model, rows, grad, it);
        if (config.progress && (it % config.log_every == 0 || it + 1 == config.iterations)) {
            *config.progress << it << "," << loss.loss << "\n";
        }
    }
    return model;
}

GaussianModel fit(std::span<const View> views, std::size_t n, int iterations, std::uint64_t seed) {
    FitConfig config;
    config.iterations = iterations;
    config.seed = seed;
    return fit(views, n, config);
}

}  // namespace gode
