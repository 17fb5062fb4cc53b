#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gode/model.hpp"

namespace gode {

struct Hierarchy;

enum class QuantMode : std::uint8_t { None = 0, Affine8 = 1, Half16 = 2 };

enum class Attribute : int { Position = 0, Sh = 1, Opacity = 2, Scale = 3, Rotation = 4 };
inline constexpr int kAttributeCount = 5;
inline constexpr std::array<int, kAttributeCount> kAttributeWidth = {3, kShScalars, 1, 3, 4};
inline constexpr std::array<const char*, kAttributeCount> kAttributeName = {"position", "sh", "opacity",
                                                                            "scale", "rotation"};

std::vector<float>& attribute_values(GaussianModel& m, Attribute a);
const std::vector<float>& attribute_values(const GaussianModel& m, Attribute a);

/// Storage bytes of one scalar under `mode` (f32, u8, f16).
int mode_bytes(QuantMode mode);

/// Per-attribute quantization. Defaults: positions raw, SH 8-bit affine, the rest binary16.
struct QuantizationSpec {
    std::array<QuantMode, kAttributeCount> modes = {QuantMode::None, QuantMode::Affine8, QuantMode::Half16,
                                                    QuantMode::Half16, QuantMode::Half16};

    QuantMode mode(Attribute a) const { return modes[static_cast<int>(a)]; }
    /// Logical bytes per Gaussian record (76 for the default spec).
    int record_bytes() const;

    static QuantizationSpec none();
    bool operator==(const QuantizationSpec&) const = default;
};

/// Affine parameters of one 8-bit channel.
/// q = clip(round(x / scale + zero_point), q_min, q_max); x_dq = scale * (q - zero_point).
/// scale and zero_point are held at float precision so encoder, decoder and trainer agree bit-exactly.
struct ChannelQuant {
    float scale = 1.0f;
    float zero_point = 0.0f;
    int q_min = 0;
    int q_max = 255;

    bool operator==(const ChannelQuant&) const = default;
};

/// From a channel's [min, max]. A degenerate range gets scale 1 and zero_point q_min - min.
ChannelQuant channel_quant_from_range(double min, double max, int q_min = 0, int q_max = 255);

/// One entry per channel for every Affine8 attribute; empty for the others.
struct QuantParams {
    std::array<std::vector<ChannelQuant>, kAttributeCount> channels;

    const std::vector<ChannelQuant>& of(Attribute a) const { return channels[static_cast<int>(a)]; }
    bool operator==(const QuantParams&) const = default;
};

int quantize_code(float x, const ChannelQuant& p);
/// True when x maps outside [q_min, q_max] by more than rounding (i.e. it gets clipped).
bool quantize_clips(float x, const ChannelQuant& p);
float dequantize_code(int q, const ChannelQuant& p);

/// Quantize-then-dequantize (forward of fake quantization).
std::vector<float> fake_quantize(std::span<const float> x, const ChannelQuant& p);

/// Backward of any quantizer here: the straight-through estimator passes gradients unchanged.
std::vector<double> straight_through(std::span<const double> upstream);

/// Round to nearest-even binary16 and widen back. Throws InvalidArgument on overflow to Inf.
std::vector<float> quantize_fp16(std::span<const float> x);
float quantize_fp16(float x);

/// Per-channel ranges over every Gaussian in the hierarchy's top level.
QuantParams compute_quant_params(const GaussianModel& model, const Hierarchy& hierarchy,
                                 const QuantizationSpec& spec);
/// Same, over all Gaussians of `model`.
QuantParams compute_quant_params(const GaussianModel& model, const QuantizationSpec& spec);

struct QuantizeStats {
    std::size_t clamped = 0;  // 8-bit values outside their frozen channel range
};

/// The frozen-quantizer image of every Gaussian of `model`: what the encoder stores and
/// the trainer renders.
GaussianModel apply_quantization(const GaussianModel& model, const QuantizationSpec& spec,
                                 const QuantParams& params, QuantizeStats* stats = nullptr);

/// JSON sidecar holding the frozen ranges, so separate tool invocations share them exactly.
void save_quant_params_json(const QuantParams& params, const std::filesystem::path& path);
QuantParams load_quant_params_json(const std::filesystem::path& path);

std::string to_string(QuantMode mode);
QuantMode parse_quant_mode(const std::string& s);

}  // namespace gode
