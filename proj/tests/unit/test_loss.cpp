#include <gtest/gtest.h>

#include "gode/error.hpp"
#include "gode/loss.hpp"
#include "scenes.hpp"

using namespace gode;
using namespace gode::testing;

TEST(Loss, IdenticalImagesGiveZero) {
    TestRng rng(1);
    const Image a = random_image(12, 12, rng);
    const LossResult r = loss_and_grad(a, a, 0.2);
    EXPECT_NEAR(r.loss, 0.0, 1e-15);
    for (double g : r.d_image.data) EXPECT_NEAR(g, 0.0, 1e-15);
}

TEST(Loss, PureL1OfConstantDifference) {
    Image r(6, 5, 0.75), t(6, 5, 0.25);
    t.at(0, 0, 0) = 1.25;  // one entry with the opposite sign
    const LossResult res = loss_and_grad(r, t, 0.0);
    EXPECT_NEAR(res.loss, 0.5, 1e-15);
    const double unit = 1.0 / (6 * 5 * 3);
    EXPECT_DOUBLE_EQ(res.d_image.at(0, 0, 0), -unit);
    EXPECT_DOUBLE_EQ(res.d_image.at(4, 5, 2), unit);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TestRng rng(seed);
        const Image r = random_image(8, 8, rng), t = random_image(8, 8, rng);
        for (double w : {0.0, 0.2, 1.0}) {
            const LossResult res = loss_and_grad(r, t, w);
            for (std::size_t i = 0; i < r.data.size(); ++i) {
                Image p = r, m = r;
                p.data[i] += 1e-6;
                m.data[i] -= 1e-6;
                const double fd = (loss_and_grad(p, t, w).loss - loss_and_grad(m, t, w).loss) / 2e-6;
                const double an = res.d_image.data[i];
                EXPECT_LE(std::abs(an - fd), std::max(1e-3 * std::abs(fd), 1e-8)) << "w=" << w << " i=" << i;
            }
        }
    }
}

TEST(Loss, ShapeMismatchThrows) {
    EXPECT_THROW(loss_and_grad(Image(4, 4), Image(4, 5), 0.2), InvalidArgument);
}

TEST(Ssim, IdenticalIsOneAndBounded) {
    TestRng rng(4);
    const Image a = random_image(20, 15, rng), b = random_image(20, 15, rng);
    EXPECT_NEAR(ssim_map_mean(a, a), 1.0, 1e-12);
    const double s = ssim_map_mean(a, b);
    EXPECT_LT(s, 1.0);
    EXPECT_GT(s, -1.0);
    EXPECT_NEAR(s, ssim_map_mean(b, a), 1e-12);
}
