#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gode/error.hpp"
#include "gode/finetune.hpp"
#include "gode/loss.hpp"
#include "scenes.hpp"

using namespace gode;
using namespace gode::testing;

TEST(Sampling, SingleLevelAlwaysZero) {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_level(1, LevelSampling::uniform(), rng), 0);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_level(1, LevelSampling::weighted(3), rng, 10, 100), 0);
}

TEST(Sampling, UniformFrequencies) {
    Rng rng(2);
    const LevelSampler s(8, LevelSampling::uniform());
    std::vector<int> counts(8, 0);
    for (int i = 0; i < 100000; ++i) ++counts[s(rng)];
    for (int c : counts) EXPECT_NEAR(c / 1e5, 0.125, 0.01);
}

TEST(Sampling, WeightedProbabilitiesIncreaseWithLevel) {
    for (double g : {1.0, 3.0, 7.0, 20.0}) {
        const auto p = level_probabilities(8, LevelSampling::weighted(g), 100000, 1936500);
        EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
        for (std::size_t l = 1; l < p.size(); ++l) EXPECT_GE(p[l], p[l - 1]) << "G=" << g;
        EXPECT_GT(p.back(), p.front());
    }
}

TEST(Sampling, WeightedUsesFlooredProgressionWeights) {
    // c_min = 10, c_max = 80, G = 3 -> b' = 2, weights 10, 20, 40, 80, 160.
    const auto p = level_probabilities(5, LevelSampling::weighted(3), 10, 80);
    const double total = 10 + 20 + 40 + 80 + 160;
    const double w[] = {10, 20, 40, 80, 160};
    for (int l = 0; l < 5; ++l) EXPECT_NEAR(p[l], w[l] / total, 1e-12);
}

TEST(Sampling, SmallGDoesNotOverflowTheWeights) {
    for (double g : {0.5, 0.05, 1e-3}) {
        const auto p = level_probabilities(8, LevelSampling::weighted(g), 100000, 1936500);
        double sum = 0;
        for (int l = 0; l < 8; ++l) {
            EXPECT_TRUE(std::isfinite(p[l])) << "G " << g;
            if (l > 0) EXPECT_GE(p[l], p[l - 1]) << "G " << g << " level " << l;
            sum += p[l];
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
        EXPECT_GT(p[7], 0.99);
    }
}

TEST(Sampling, ParseStrategies) {
    EXPECT_EQ(LevelSampling::parse("uniform").kind, LevelSampling::Kind::Uniform);
    const auto w = LevelSampling::parse("weighted:2.5");
    EXPECT_EQ(w.kind, LevelSampling::Kind::Weighted);
    EXPECT_DOUBLE_EQ(w.g, 2.5);
    EXPECT_THROW(LevelSampling::parse("weighted:"), InvalidArgument);
    EXPECT_THROW(LevelSampling::parse("random"), InvalidArgument);
}

TEST(Config, SetAndLoad) {
    FinetuneConfig c;
    c.set("iterations", "250");
    c.set("lambda", "0.5");
    c.set("sampling", "weighted:4");
    c.set("l1_normalization", "sum");
    EXPECT_EQ(c.iterations, 250);
    EXPECT_DOUBLE_EQ(c.sh_l1_weight, 0.5);
    EXPECT_EQ(c.l1_normalization, L1Normalization::Sum);
    c.set("l1_normalization", "gaussian-mean");
    EXPECT_EQ(c.l1_normalization, L1Normalization::MeanOverGaussians);
    c.set("l1_normalization", "mean");
    EXPECT_EQ(c.l1_normalization, L1Normalization::MeanOverCoefficients);
    EXPECT_THROW(c.set("l1_normalization", "median"), InvalidArgument);
    EXPECT_THROW(c.set("iterations", "-1"), InvalidArgument);
    EXPECT_THROW(c.set("bogus", "1"), InvalidArgument);
    const auto path = std::filesystem::temp_directory_path() / "gode_ft.cfg";
    std::ofstream(path) << "# comment\niterations = 7\nlr_opacity=0.01  # trailing\n\nseed=3\n";
    FinetuneConfig d;
    d.load(path);
    EXPECT_EQ(d.iterations, 7);
    EXPECT_DOUBLE_EQ(d.rates.opacity, 0.01);
    EXPECT_EQ(d.seed, 3u);
}

namespace {

struct SmallScene {
    GaussianModel model;
    Hierarchy hierarchy;
    std::vector<View> views;
};

SmallScene small_scene(std::uint64_t seed) {
    TestRng rng(seed);
    SmallScene s;
    s.views = orbit_views(random_model(30, rng, 0.8), 3, 16);
    s.model = random_model(20, rng, 0.8);
    const std::vector<std::size_t> sizes = {6, 6, 8};
    s.hierarchy = contiguous_hierarchy(sizes);
    return s;
}

double objective(const GaussianModel& m, const View& v, double w) {
    return loss_and_grad(render(m, v.camera), v.target, w).loss;
}

}  // namespace

TEST(Finetune, ZeroIterationsReturnsInputUnchanged) {
    const SmallScene s = small_scene(1);
    FinetuneConfig c;
    c.iterations = 0;
    const auto r = finetune(s.model, s.hierarchy, s.views, QuantizationSpec{}, c);
    EXPECT_EQ(r.model, s.model);
}

TEST(Finetune, SingleStepReducesLossOnOneGaussian) {
    GaussianModel m(1);
    set_gaussian(m, 0, {0.0, 0.0, 4.0}, {0.3, 0.6, 0.2}, 0.5, 0.4);
    const Camera cam = axis_camera(16, 16, 16);
    GaussianModel goal = m;
    set_gaussian(goal, 0, {0.05, 0.0, 4.0}, {0.6, 0.4, 0.3}, 0.7, 0.45);
    const std::vector<View> views = {View{cam, render(goal, cam)}};
    Hierarchy h;
    h.source_count = 1;
    h.base = {0};
    FinetuneConfig c;
    c.iterations = 1;
    c.sh_l1_weight = 0.0;
    const auto r = finetune(m, h, views, QuantizationSpec::none(), c);
    EXPECT_LT(objective(r.model, views[0], 0.2), objective(m, views[0], 0.2));
}

TEST(Finetune, L1StepShrinksNonzeroShAtZeroResidual) {
    TestRng rng(2);
    GaussianModel m = random_model(4, rng, 0.5);
    for (auto& v : m.sh) v *= 0.5f;
    const auto views = orbit_views(m, 1, 16);  // target equals the current render
    Hierarchy h;
    h.source_count = 4;
    h.base = {0, 1, 2, 3};
    for (auto norm : {L1Normalization::Sum, L1Normalization::MeanOverGaussians, L1Normalization::MeanOverCoefficients}) {
        FinetuneConfig c;
        c.iterations = 1;
        c.l1_normalization = norm;
        const auto r = finetune(m, h, views, QuantizationSpec::none(), c);
        double before = 0, after = 0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            for (int k = 3; k < kShScalars; ++k) {
                const float b = m.sh[i * kShScalars + k], a = r.model.sh[i * kShScalars + k];
                if (b != 0.0f) EXPECT_LT(std::abs(a), std::abs(b));
                before += std::abs(b);
                after += std::abs(a);
            }
        }
        EXPECT_LT(after, before);
    }
}

TEST(Finetune, GaussiansOutsideSampledLevelsStayUntouched) {
    const SmallScene s = small_scene(3);
    // Sample only level 0 or 1 by collapsing the top layer's probability: use a
    // hierarchy whose top level is never drawn because it has three levels and
    // the run is long enough to visit the lower ones only if restricted.
    Hierarchy h = s.hierarchy;
    FinetuneConfig c;
    c.iterations = 40;
    c.seed = 11;
    const auto r = finetune(s.model, h, s.views, QuantizationSpec{}, c);
    const int max_level = *std::max_element(r.levels.begin(), r.levels.end());
    std::vector<bool> reached(s.model.size(), false);
    for (std::size_t i : h.level_indices(max_level)) reached[i] = true;
    for (std::size_t i = 0; i < s.model.size(); ++i) {
        if (reached[i]) continue;
        for (int k = 0; k < kShScalars; ++k) EXPECT_EQ(r.model.sh[i * kShScalars + k], s.model.sh[i * kShScalars + k]);
        EXPECT_EQ(r.model.opacity_logit[i], s.model.opacity_logit[i]);
    }
    // Gaussians never in the sampled levels have no optimizer steps: check by restricting to level 0.
    Hierarchy two;
    two.source_count = s.model.size();
    two.base = h.base;
    two.enhancements = {};
    const auto base_only = finetune(s.model, two, s.views, QuantizationSpec{}, c);
    for (std::size_t i = 6; i < s.model.size(); ++i) {
        for (int d = 0; d < 3; ++d) EXPECT_EQ(base_only.model.positions[i * 3 + d], s.model.positions[i * 3 + d]);
        for (int d = 0; d < 4; ++d) EXPECT_EQ(base_only.model.rotation[i * 4 + d], s.model.rotation[i * 4 + d]);
    }
}

TEST(Finetune, NoneSpecEqualsPlainMaskedTraining) {
    const SmallScene s = small_scene(4);
    FinetuneConfig c;
    c.iterations = 15;
    c.sh_l1_weight = 0.0;
    const auto a = finetune(s.model, s.hierarchy, s.views, QuantizationSpec::none(), c);
    // Hand-rolled masked Adam loop with the same sampling stream.
    GaussianModel m = s.model;
    MaskedAdam adam(m.size(), c.rates, scene_extent(s.views), c.iterations);
    Rng rng(c.seed);
    std::uniform_int_distribution<std::size_t> pick(0, s.views.size() - 1);
    const LevelSampler sampler(3, c.sampling, 6, 20);
    for (int it = 0; it < c.iterations; ++it) {
        const View& v = s.views[pick(rng)];
        const auto rows = s.hierarchy.level_indices(sampler(rng));
        const GaussianModel sub = subset(m, rows);
        const RenderState st = render_forward(sub, v.camera);
        const GradientBuffer g = render_backward(sub, st, loss_and_grad(st.image, v.target, 0.2).d_image);
        adam.step(m, rows, g, it);
    }
    EXPECT_EQ(a.model, m);
}

TEST(Finetune, DeterministicForFixedSeed) {
    const SmallScene s = small_scene(5);
    FinetuneConfig c;
    c.iterations = 10;
    c.seed = 99;
    std::ostringstream log;
    c.progress = &log;
    c.log_every = 5;
    const auto a = finetune(s.model, s.hierarchy, s.views, QuantizationSpec{}, c);
    c.progress = nullptr;
    const auto b = finetune(s.model, s.hierarchy, s.views, QuantizationSpec{}, c);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(log.str().substr(0, 21), "iteration,level,loss\n");
}

TEST(Finetune, RejectsMismatchedHierarchy) {
    const SmallScene s = small_scene(6);
    Hierarchy h = s.hierarchy;
    h.source_count = 99;
    FinetuneConfig c;
    c.iterations = 1;
    EXPECT_THROW(finetune(s.model, h, s.views, QuantizationSpec{}, c), InvalidArgument);
}

TEST(Optimizer, PositionRateDecaysLogLinearly) {
    MaskedAdam adam(1, LearningRates{}, 2.0, 100);
    EXPECT_NEAR(adam.position_lr(0), 1.6e-4 * 2.0, 1e-18);
    EXPECT_NEAR(adam.position_lr(100), 1.6e-6 * 2.0, 1e-18);
    EXPECT_NEAR(adam.position_lr(50), std::sqrt(1.6e-4 * 1.6e-6) * 2.0, 1e-15);
}

TEST(Optimizer, FirstStepMovesEachParameterByItsRate) {
    GaussianModel m(2);
    m.rotation[0] = m.rotation[4] = 1.0f;
    GradientBuffer g(1);
    g.sh[0] = 3.0;
    g.sh[10] = -0.5;
    g.opacity_logit[0] = 1e-3;
    MaskedAdam adam(2, LearningRates{}, 1.0, 10);
    const std::vector<std::size_t> rows = {1};
    adam.step(m, rows, g, 0);
    EXPECT_NEAR(m.sh[kShScalars + 0], -2.5e-3, 1e-9);
    EXPECT_NEAR(m.sh[kShScalars + 10], 2.5e-3 / 20, 1e-9);
    EXPECT_NEAR(m.opacity_logit[1], -0.05, 1e-9);
    EXPECT_EQ(m.sh[0], 0.0f);
    EXPECT_EQ(adam.steps_taken(0), 0u);
    EXPECT_EQ(adam.steps_taken(1), 1u);
}
