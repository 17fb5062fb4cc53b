#include "gode/lzma_codec.hpp"

#include <lzma.h>

#include <string>

#include "gode/error.hpp"

namespace gode::lzma {

std::vector<std::uint8_t> compress(std::span<const std::uint8_t> data, std::uint32_t preset) {
    std::vector<std::uint8_t> out(lzma_stream_buffer_bound(data.size()));
    std::size_t written = 0;
    const lzma_ret ret = lzma_easy_buffer_encode(preset, LZMA_CHECK_CRC32, nullptr, data.data(), data.size(),
                                                 out.data(), &written, out.size());
    if (ret != LZMA_OK) throw CodecError("LZMA compression failed (code " + std::to_string(ret) + ")");
    out.resize(written);
    return out;
}

std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> data, std::size_t expected_size) {
    std::vector<std::uint8_t> out(expected_size);
    std::uint64_t memlimit = UINT64_MAX;
    std::size_t in_pos = 0;
    std::size_t out_pos = 0;
    const lzma_ret ret = lzma_stream_buffer_decode(&memlimit, 0, nullptr, data.data(), &in_pos, data.size(),
                                                   out.data(), &out_pos, out.size());
    if (ret == LZMA_BUF_ERROR && out_pos == out.size()) {
        throw CodecError("LZMA payload decodes to more bytes than the header declares");
    }
    if (ret != LZMA_OK) throw CodecError("LZMA payload is corrupt (code " + std::to_string(ret) + ")");
    if (out_pos != expected_size || in_pos != data.size()) {
        throw CodecError("LZMA payload size does not match the header");
    }
    return out;
}

}  // namespace gode::lzma
