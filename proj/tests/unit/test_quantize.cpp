#include <gtest/gtest.h>

#include <cstring>
#include <numeric>

#include "gode/error.hpp"
#include "gode/half.hpp"
#include "gode/hierarchy.hpp"
#include "gode/quantize.hpp"
#include "scenes.hpp"

using namespace gode;
using namespace gode::testing;

TEST(Affine8, UnitRangeExample) {
    const ChannelQuant p = channel_quant_from_range(-1.0, 1.0);
    EXPECT_FLOAT_EQ(p.scale, 2.0f / 255.0f);
    EXPECT_FLOAT_EQ(p.zero_point, 127.5f);
    EXPECT_EQ(quantize_code(0.5f, p), 191);
    EXPECT_NEAR(dequantize_code(191, p), 0.49804, 1e-5);
    EXPECT_NEAR(dequantize_code(191, p), (2.0 / 255.0) * 63.5, 1e-6);
}

TEST(Affine8, RangeEndpointsHitCodeLimits) {
    TestRng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const float lo = static_cast<float>(uniform(rng, -5, 1));
        const float hi = lo + static_cast<float>(uniform(rng, 1e-3, 6));
        const ChannelQuant p = channel_quant_from_range(lo, hi);
        EXPECT_EQ(quantize_code(lo, p), 0);
        EXPECT_EQ(quantize_code(hi, p), 255);
        EXPECT_LE(std::abs(dequantize_code(0, p) - lo), p.scale / 2 + 1e-6);
        EXPECT_LE(std::abs(dequantize_code(255, p) - hi), p.scale / 2 + 1e-6);
    }
}

TEST(Affine8, ConstantChannelRoundTripsExactly) {
    for (float c : {0.0f, -3.25f, 17.5f, 1e-3f}) {
        const ChannelQuant p = channel_quant_from_range(c, c);
        EXPECT_EQ(p.scale, 1.0f);
        EXPECT_EQ(p.zero_point, -c);
        const std::vector<float> x(4, c);
        EXPECT_EQ(fake_quantize(x, p), x);
    }
}

TEST(Affine8, ErrorBoundedByHalfScaleInRange) {
    TestRng rng(2);
    const ChannelQuant p = channel_quant_from_range(-0.7, 2.3);
    for (int i = 0; i < 100000; ++i) {
        const float x = static_cast<float>(uniform(rng, -0.7, 2.3));
        const float y = dequantize_code(quantize_code(x, p), p);
        ASSERT_LE(std::abs(double(x) - y), p.scale / 2.0 + 1e-6) << x;
    }
}

TEST(Affine8, OutOfRangeValuesAreClippedAndFlagged) {
    const ChannelQuant p = channel_quant_from_range(0.0, 1.0);
    EXPECT_EQ(quantize_code(2.0f, p), 255);
    EXPECT_EQ(quantize_code(-1.0f, p), 0);
    EXPECT_TRUE(quantize_clips(2.0f, p));
    EXPECT_FALSE(quantize_clips(1.0f, p));
}

TEST(Affine8, DequantizedValuesRequantizeToSameCode) {
    const ChannelQuant p = channel_quant_from_range(-2.17, 0.93);
    for (int q = 0; q < 256; ++q) EXPECT_EQ(quantize_code(dequantize_code(q, p), p), q);
}

TEST(StraightThrough, PassesGradientUnchanged) {
    const std::vector<double> g = {2.0, -0.0, 1e-300, -7.5};
    const auto out = straight_through(g);
    ASSERT_EQ(out.size(), g.size());
    EXPECT_EQ(std::memcmp(out.data(), g.data(), g.size() * sizeof(double)), 0);
}

TEST(Half, Examples) {
    EXPECT_EQ(quantize_fp16(1.0f), 1.0f);
    EXPECT_EQ(quantize_fp16(0.1f), 0.0999755859375f);
    EXPECT_EQ(quantize_fp16(65504.0f), 65504.0f);
    EXPECT_EQ(float_to_half_bits(1.0f), 0x3C00);
    EXPECT_EQ(float_to_half_bits(-2.0f), 0xC000);
    EXPECT_EQ(half_bits_to_float(0x0001), std::ldexp(1.0f, -24));
    EXPECT_EQ(quantize_fp16(std::ldexp(1.0f, -26)), 0.0f);           // below half the smallest subnormal
    EXPECT_EQ(quantize_fp16(std::ldexp(3.0f, -26)), std::ldexp(1.0f, -24));
    EXPECT_EQ(float_to_half_bits(1.0f + std::ldexp(1.0f, -11)), 0x3C00);  // tie rounds to even
    EXPECT_EQ(float_to_half_bits(1.0f + std::ldexp(3.0f, -11)), 0x3C02);
}

TEST(Half, OverflowIsAnError) {
    EXPECT_THROW(quantize_fp16(70000.0f), InvalidArgument);
    EXPECT_THROW(quantize_fp16(-65520.0f), InvalidArgument);
    EXPECT_NO_THROW(quantize_fp16(65519.0f));
}

TEST(Half, RelativeErrorBoundInNormalRange) {
    TestRng rng(3);
    for (int i = 0; i < 100000; ++i) {
        const float x = static_cast<float>(std::ldexp(uniform(rng, 1.0, 2.0), static_cast<int>(rng() % 30) - 14)) *
                        (rng() % 2 ? 1.0f : -1.0f);
        ASSERT_LE(std::abs(double(x) - quantize_fp16(x)), std::ldexp(1.0, -11) * std::abs(x));
    }
}

TEST(Half, AllHalfValuesRoundTrip) {
    for (std::uint32_t b = 0; b < 0x10000; ++b) {
        const auto bits = static_cast<std::uint16_t>(b);
        if ((bits & 0x7C00) == 0x7C00) continue;  // Inf / NaN
        EXPECT_EQ(float_to_half_bits(half_bits_to_float(bits)), bits);
    }
}

TEST(QuantSpec, DefaultRecordSize) {
    // 3 x f32 position + 48 x u8 SH + f16 opacity + 3 x f16 scale + 4 x f16 rotation.
    EXPECT_EQ(QuantizationSpec{}.record_bytes(), 3 * 4 + 48 + 2 + 3 * 2 + 4 * 2);
    EXPECT_EQ(QuantizationSpec{}.record_bytes(), 76);
    EXPECT_EQ(QuantizationSpec::none().record_bytes(), 59 * 4);
    EXPECT_EQ(parse_quant_mode("affine8"), QuantMode::Affine8);
    EXPECT_EQ(to_string(QuantMode::Half16), "fp16");
    EXPECT_THROW(parse_quant_mode("int4"), InvalidArgument);
}

TEST(QuantParams, UnitChannelExampleAndTopLevelRange) {
    GaussianModel m(3);
    for (int i = 0; i < 3; ++i) m.rotation[i * 4] = 1.0f;
    m.sh[0] = -1.0f;
    m.sh[kShScalars] = 1.0f;
    m.sh[2 * kShScalars] = 50.0f;  // not part of the hierarchy
    Hierarchy h;
    h.source_count = 3;
    h.base = {0};
    h.enhancements = {{1}};
    const QuantParams p = compute_quant_params(m, h, QuantizationSpec{});
    ASSERT_EQ(p.of(Attribute::Sh).size(), 48u);
    EXPECT_FLOAT_EQ(p.of(Attribute::Sh)[0].scale, 2.0f / 255.0f);
    EXPECT_FLOAT_EQ(p.of(Attribute::Sh)[0].zero_point, 127.5f);
    EXPECT_TRUE(p.of(Attribute::Opacity).empty());
}

TEST(QuantParams, IndependentOfOrderingAndRejectNaN) {
    TestRng rng(4);
    GaussianModel m = random_model(30, rng);
    std::vector<std::size_t> perm(30);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_EQ(compute_quant_params(m, QuantizationSpec{}), compute_quant_params(subset(m, perm), QuantizationSpec{}));
    m.sh[7] = std::numeric_limits<float>::quiet_NaN();
    EXPECT_THROW(compute_quant_params(m, QuantizationSpec{}), InvalidArgument);
}

TEST(ApplyQuantization, NoneSpecIsIdentityAndDefaultChangesOnlyQuantizedFields) {
    TestRng rng(5);
    const GaussianModel m = random_model(25, rng);
    EXPECT_EQ(apply_quantization(m, QuantizationSpec::none(), {}), m);
    const QuantizationSpec spec;
    const GaussianModel q = apply_quantization(m, spec, compute_quant_params(m, spec));
    EXPECT_EQ(q.positions, m.positions);
    for (std::size_t i = 0; i < m.opacity_logit.size(); ++i) EXPECT_EQ(q.opacity_logit[i], quantize_fp16(m.opacity_logit[i]));
    const GaussianModel again = apply_quantization(q, spec, compute_quant_params(m, spec));
    EXPECT_EQ(again, q);
}

TEST(ApplyQuantization, CountsClampedValues) {
    TestRng rng(6);
    GaussianModel m = random_model(10, rng);
    const QuantizationSpec spec;
    const QuantParams p = compute_quant_params(m, spec);
    m.sh[0] += 10.0f;
    m.sh[kShScalars + 1] -= 10.0f;
    QuantizeStats stats;
    apply_quantization(m, spec, p, &stats);
    EXPECT_EQ(stats.clamped, 2u);
}

TEST(QuantParams, JsonSidecarRoundTripsExactly) {
    TestRng rng(7);
    const GaussianModel m = random_model(20, rng);
    QuantizationSpec spec;
    spec.modes[static_cast<int>(Attribute::Scale)] = QuantMode::Affine8;
    const QuantParams p = compute_quant_params(m, spec);
    const auto path = std::filesystem::temp_directory_path() / "gode_qparams.json";
    save_quant_params_json(p, path);
    EXPECT_EQ(load_quant_params_json(path), p);
}
