#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gode::lzma {

inline constexpr std::uint32_t kDefaultPreset = 6;

/// xz container, CRC32 check, single-threaded so output is deterministic.
std::vector<std::uint8_t> compress(std::span<const std::uint8_t> data, std::uint32_t preset = kDefaultPreset);

/// Throws CodecError on corrupt input or when the output size differs from `expected_size`.
std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> data, std::size_t expected_size);

}  // namespace gode::lzma
