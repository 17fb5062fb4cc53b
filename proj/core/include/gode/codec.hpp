#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gode/hierarchy.hpp"
#include "gode/model.hpp"
#include "gode/quantize.hpp"

namespace gode {

inline constexpr std::uint8_t kGodeMagic[4] = {0x47, 0x4F, 0x44, 0x45};  // "GODE"
inline constexpr std::uint16_t kGodeVersion = 1;

/// Header of a layered stream. All fields little-endian on disk:
///   magic[4] version:u16 L:u16 counts:u32[L] modes:u8[5] lzma_preset:u8
///   per Affine8 attribute: q_min:u8 q_max:u8 (scale:f32 zero_point:f32)[channels]
///   blob_lengths:u64[L]
struct GodeHeader {
    std::uint16_t version = kGodeVersion;
    std::vector<std::uint32_t> counts;
    QuantizationSpec spec;
    std::uint8_t lzma_preset = 6;
    QuantParams params;
    std::vector<std::uint64_t> blob_lengths;

    int levels() const { return static_cast<int>(counts.size()); }
    std::size_t encoded_size() const;
    /// Header plus layers 0..level.
    std::size_t prefix_size(int level) const;
    std::size_t cumulative_count(int level) const;
};

/// Header plus one independently compressed blob per layer. Within a blob attributes are
/// stored planar: every channel of every attribute as a contiguous run over the layer's records.
struct GodeStream {
    GodeHeader header;
    std::vector<std::vector<std::uint8_t>> layers;

    std::vector<std::uint8_t> bytes() const;
    std::size_t size() const { return header.prefix_size(header.levels() - 1); }
};

struct EncodeStats {
    std::size_t clamped = 0;  // 8-bit values outside their frozen range (clamped, not fatal)
};

GodeStream encode(const GaussianModel& model, const Hierarchy& hierarchy, const QuantizationSpec& spec,
                  const QuantParams& params, EncodeStats* stats = nullptr,
                  std::uint8_t lzma_preset = 6);

/// Parses the header at the start of `bytes`; throws CodecError.
GodeHeader parse_header(std::span<const std::uint8_t> bytes);

/// Parses as many complete layers as `bytes` holds.
GodeStream parse_stream(std::span<const std::uint8_t> bytes);

/// Dequantized Gaussians of layers 0..level, in layer order.
GaussianModel decode(std::span<const std::uint8_t> bytes, int level);
GaussianModel decode(const GodeStream& stream, int level);

/// Header plus layers 0..level.
std::vector<std::uint8_t> truncate(const GodeStream& stream, int level);
std::vector<std::uint8_t> truncate(std::span<const std::uint8_t> bytes, int level);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace gode
