#include <gtest/gtest.h>

#include "gode/error.hpp"
#include "gode/loss.hpp"
#include "gode/metrics.hpp"
#include "gode/scene_fit.hpp"
#include "scenes.hpp"

using namespace gode;
using namespace gode::testing;

TEST(SyntheticScene, ShapeAndRange) {
    const auto scene = make_synthetic_scene(SceneKind::Blobs, 8, 32, 1);
    ASSERT_EQ(scene.views.size(), 8u);
    for (const auto& v : scene.views) {
        EXPECT_EQ(v.target.width, 32);
        EXPECT_EQ(v.target.height, 32);
        for (double x : v.target.data) {
            EXPECT_GE(x, 0.0);
            EXPECT_LE(x, 1.0);
        }
    }
    EXPECT_NO_THROW(scene.reference.validate());
}

TEST(SyntheticScene, DeterministicAndSelfConsistent) {
    const auto a = make_synthetic_scene(SceneKind::Blobs, 3, 24, 7);
    const auto b = make_synthetic_scene(SceneKind::Blobs, 3, 24, 7);
    for (std::size_t v = 0; v < 3; ++v) {
        EXPECT_EQ(a.views[v].target, b.views[v].target);
        EXPECT_TRUE(std::isinf(psnr(render(a.reference, a.views[v].camera), a.views[v].target)));
    }
    const auto c = make_synthetic_scene(SceneKind::Blobs, 3, 24, 8);
    EXPECT_NE(a.views[0].target, c.views[0].target);
    EXPECT_EQ(parse_scene_kind("blobs"), SceneKind::Blobs);
    EXPECT_THROW(parse_scene_kind("teapot"), InvalidArgument);
}

TEST(Fit, InitializationFollowsTheRecipe) {
    const auto scene = make_synthetic_scene(SceneKind::Blobs, 4, 24, 2);
    const GaussianModel m = initialize_gaussians(scene.views, 50, 3);
    ASSERT_EQ(m.size(), 50u);
    const double extent = scene_extent(scene.views);
    for (std::size_t i = 0; i < 50; ++i) {
        EXPECT_FLOAT_EQ(m.scale_log[i * 3], static_cast<float>(std::log(0.02 * extent)));
        EXPECT_FLOAT_EQ(m.opacity_logit[i], static_cast<float>(std::log(0.1 / 0.9)));
        EXPECT_EQ(m.rotation[i * 4], 1.0f);
        const Eigen::Vector3d x(m.positions[i * 3], m.positions[i * 3 + 1], m.positions[i * 3 + 2]);
        for (const auto& v : scene.views) {
            const Eigen::Vector3d p = v.camera.rotation * x + v.camera.translation;
            ASSERT_GT(p.z(), kNearPlane);
            const double u = v.camera.fx * p.x() / p.z() + v.camera.cx;
            EXPECT_GE(u, 0.0);
            EXPECT_LE(u, v.camera.width - 1.0);
        }
    }
}

TEST(Fit, DegenerateCameraSetIsRejected) {
    std::vector<View> views(2);
    views[0].camera = Camera::look_at(8, 8, 8, {0, 0, -3}, {0, 0, 0});
    views[1].camera = Camera::look_at(8, 8, 8, {0, 0, 3}, {0, 0, 10});  // looking away
    for (auto& v : views) v.target = Image(8, 8);
    EXPECT_THROW(initialize_gaussians(views, 4, 1), InvalidArgument);
    EXPECT_THROW(fit(std::span<const View>{}, 4, 1, 1), InvalidArgument);
    EXPECT_THROW(fit(views, 0, 1, 1), InvalidArgument);
}

TEST(Fit, SingleGaussianMatchesFlatTarget) {
    View view;
    view.camera = axis_camera(3, 3, 12.0);
    view.target = Image(3, 3, 0.35);
    const std::vector<View> views = {view};
    const GaussianModel m = fit(views, 1, 500, 5);
    ASSERT_EQ(m.size(), 1u);
    const Image out = render(m, view.camera);
    double mse = 0;
    for (std::size_t i = 0; i < out.data.size(); ++i) mse += std::pow(out.data[i] - view.target.data[i], 2);
    mse /= out.data.size();
    EXPECT_LT(mse, 1e-3);
}

TEST(Fit, DeterministicAndCountPreserving) {
    const auto scene = make_synthetic_scene(SceneKind::Blobs, 3, 24, 4);
    const GaussianModel a = fit(scene.views, 30, 20, 9);
    const GaussianModel b = fit(scene.views, 30, 20, 9);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 30u);
    EXPECT_NO_THROW(a.validate());
}

TEST(Fit, LossDecreasesEarlyOnSmoothTarget) {
    View view;
    view.camera = axis_camera(16, 16, 16);
    view.camera.translation = Eigen::Vector3d(0, 0, 3.0);
    view.target = Image(16, 16, 0.0);
    for (int r = 0; r < 16; ++r) {
        for (int c = 0; c < 16; ++c) {
            for (int ch = 0; ch < 3; ++ch) view.target.at(r, c, ch) = 0.3 + 0.02 * r + 0.01 * c * (ch + 1) / 3.0;
        }
    }
    const std::vector<View> views = {view};
    std::vector<double> losses;
    for (int iters = 0; iters <= 10; ++iters) {
        const GaussianModel m = fit(views, 10, iters, 2);
        losses.push_back(loss_and_grad(render(m, view.camera), view.target, 0.2).loss);
    }
    for (std::size_t i = 1; i < losses.size(); ++i) EXPECT_LT(losses[i], losses[i - 1]) << i;
}
