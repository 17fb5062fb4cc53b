#pragma once

#include <cstdint>

namespace gode {

/// IEEE binary16 bits nearest to `value` (round-to-nearest-even). Overflow yields +-Inf bits.
std::uint16_t float_to_half_bits(float value) noexcept;

/// Exact widening of binary16 bits.
float half_bits_to_float(std::uint16_t bits) noexcept;

inline bool half_bits_is_inf(std::uint16_t bits) noexcept { return (bits & 0x7FFFu) == 0x7C00u; }

}  // namespace gode
