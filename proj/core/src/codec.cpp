#include "gode/codec.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gode/error.hpp"
#include "gode/half.hpp"
#include "gode/lzma_codec.hpp"

namespace gode {
namespace {

static_assert(std::endian::native == std::endian::little, "codec assumes a little-endian host");

class Writer {
public:
    template <class T>
    void put(T v) {
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, &v, sizeof(T));
        out_.insert(out_.end(), raw, raw + sizeof(T));
    }
    void put_bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    std::vector<std::uint8_t>& data() { return out_; }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
    template <class T>
    T get(const char* what) {
        if (pos_ + sizeof(T) > in_.size()) throw CodecError(std::string("stream truncated in header at ") + what);
        T v;
        std::memcpy(&v, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::size_t pos() const { return pos_; }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

void write_header(Writer& w, const GodeHeader& h) {
    w.put_bytes(kGodeMagic);
    w.put<std::uint16_t>(h.version);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(h.counts.size()));
    for (auto c : h.counts) w.put<std::uint32_t>(c);
    for (auto m : h.spec.modes) w.put<std::uint8_t>(static_cast<std::uint8_t>(m));
    w.put<std::uint8_t>(h.lzma_preset);
    for (int a = 0; a < kAttributeCount; ++a) {
        if (h.spec.modes[a] != QuantMode::Affine8) continue;
        const auto& ch = h.params.channels[a];
        w.put<std::uint8_t>(static_cast<std::uint8_t>(ch.front().q_min));
        w.put<std::uint8_t>(static_cast<std::uint8_t>(ch.front().q_max));
        for (const auto& p : ch) {
            w.put<float>(p.scale);
            w.put<float>(p.zero_point);
        }
    }
    for (auto len : h.blob_lengths) w.put<std::uint64_t>(len);
}

std::vector<std::uint8_t> pack_layer(const GaussianModel& model, std::span<const std::size_t> rows,
                                     const QuantizationSpec& spec, const QuantParams& params, EncodeStats* stats) {
    Writer w;
    for (int a = 0; a < kAttributeCount; ++a) {
        const auto& values = attribute_values(model, static_cast<Attribute>(a));
        const int width = kAttributeWidth[a];
        for (int c = 0; c < width; ++c) {
            for (std::size_t row : rows) {
                const float x = values[row * width + c];
                switch (spec.modes[a]) {
                    case QuantMode::None:
                        w.put<float>(x);
                        break;
                    case QuantMode::Half16: {
                        const std::uint16_t h = float_to_half_bits(x);
                        if (half_bits_is_inf(h)) throw InvalidArgument("value overflows binary16 during encode");
                        w.put<std::uint16_t>(h);
                        break;
                    }
                    case QuantMode::Affine8: {
                        const ChannelQuant& p = params.channels[a][c];
                        if (stats && quantize_clips(x, p)) ++stats->clamped;
                        w.put<std::uint8_t>(static_cast<std::uint8_t>(quantize_code(x, p)));
                        break;
                    }
                }
            }
        }
    }
    return std::move(w.data());
}

void unpack_layer(std::span<const std::uint8_t> raw, std::size_t count, const GodeHeader& h, GaussianModel& out,
                  std::size_t first_row) {
    std::size_t pos = 0;
    for (int a = 0; a < kAttributeCount; ++a) {
        auto& values = attribute_values(out, static_cast<Attribute>(a));
        const int width = kAttributeWidth[a];
        for (int c = 0; c < width; ++c) {
            for (std::size_t r = 0; r < count; ++r) {
                float& dst = values[(first_row + r) * width + c];
                switch (h.spec.modes[a]) {
                    case QuantMode::None:
                        std::memcpy(&dst, raw.data() + pos, 4);
                        pos += 4;
                        break;
                    case QuantMode::Half16: {
                        std::uint16_t bits;
                        std::memcpy(&bits, raw.data() + pos, 2);
                        pos += 2;
                        dst = half_bits_to_float(bits);
                        break;
                    }
                    case QuantMode::Affine8:
                        dst = dequantize_code(raw[pos], h.params.channels[a][c]);
                        pos += 1;
                        break;
                }
            }
        }
    }
}

}  // namespace

std::size_t GodeHeader::encoded_size() const {
    std::size_t n = 4 + 2 + 2 + 4 * counts.size() + kAttributeCount + 1 + 8 * counts.size();
    for (int a = 0; a < kAttributeCount; ++a) {
        if (spec.modes[a] == QuantMode::Affine8) n += 2 + 8 * static_cast<std::size_t>(kAttributeWidth[a]);
    }
    return n;
}

std::size_t GodeHeader::prefix_size(int level) const {
    if (level < 0 || level >= levels()) throw InvalidArgument("level out of range");
    std::size_t n = encoded_size();
    for (int l = 0; l <= level; ++l) n += blob_lengths[l];
    return n;
}

std::size_t GodeHeader::cumulative_count(int level) const {
    if (level < 0 || level >= levels()) throw InvalidArgument("level out of range");
    std::size_t n = 0;
    for (int l = 0; l <= level; ++l) n += counts[l];
    return n;
}

std::vector<std::uint8_t> GodeStream::bytes() const {
    Writer w;
    write_header(w, header);
    for (const auto& layer : layers) w.put_bytes(layer);
    return std::move(w.data());
}

GodeStream encode(const GaussianModel& model, const Hierarchy& hierarchy, const QuantizationSpec& spec,
                  const QuantParams& params, EncodeStats* stats, std::uint8_t lzma_preset) {
    model.validate();
    hierarchy.validate();
    if (hierarchy.source_count != model.size()) {
        throw InvalidArgument("hierarchy does not match the model being encoded");
    }
    if (hierarchy.levels() > 0xFFFF) throw InvalidArgument("too many levels for the container");
    for (int a = 0; a < kAttributeCount; ++a) {
        if (spec.modes[a] != QuantMode::Affine8) continue;
        const auto& ch = params.channels[a];
        if (ch.size() != static_cast<std::size_t>(kAttributeWidth[a])) {
            throw InvalidArgument(std::string("missing quantization params for ") + kAttributeName[a]);
        }
        for (const auto& p : ch) {
            if (p.q_min != ch.front().q_min || p.q_max != ch.front().q_max || p.q_min < 0 || p.q_max > 255 ||
                !(p.scale > 0.0f)) {
                throw InvalidArgument(std::string("invalid quantization params for ") + kAttributeName[a]);
            }
        }
    }

    GodeStream s;
    s.header.spec = spec;
    s.header.params = params;
    for (int a = 0; a < kAttributeCount; ++a) {
        if (spec.modes[a] != QuantMode::Affine8) s.header.params.channels[a].clear();
    }
    s.header.lzma_preset = lzma_preset;

    std::vector<std::vector<std::size_t>> layers{hierarchy.base};
    layers.insert(layers.end(), hierarchy.enhancements.begin(), hierarchy.enhancements.end());
    for (const auto& rows : layers) {
        s.header.counts.push_back(static_cast<std::uint32_t>(rows.size()));
        if (rows.empty()) {
            s.layers.emplace_back();
        } else {
            const auto raw = pack_layer(model, rows, spec, params, stats);
            s.layers.push_back(lzma::compress(raw, lzma_preset));
        }
        s.header.blob_lengths.push_back(s.layers.back().size());
    }
    return s;
}

GodeHeader parse_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kGodeMagic, 4) != 0) {
        throw CodecError("not a GODE stream (bad magic)");
    }
    Reader r(bytes.subspan(4));
    GodeHeader h;
    h.version = r.get<std::uint16_t>("version");
    if (h.version != kGodeVersion) {
        throw CodecError("unsupported GODE format version " + std::to_string(h.version));
    }
    const auto levels = r.get<std::uint16_t>("level count");
    if (levels == 0) throw CodecError("GODE stream declares zero levels");
    for (int l = 0; l < levels; ++l) h.counts.push_back(r.get<std::uint32_t>("counts"));
    for (int a = 0; a < kAttributeCount; ++a) {
        const auto m = r.get<std::uint8_t>("quantization spec");
        if (m > static_cast<std::uint8_t>(QuantMode::Half16)) throw CodecError("unknown quantization mode in header");
        h.spec.modes[a] = static_cast<QuantMode>(m);
    }
    h.lzma_preset = r.get<std::uint8_t>("lzma preset");
    for (int a = 0; a < kAttributeCount; ++a) {
        if (h.spec.modes[a] != QuantMode::Affine8) continue;
        const int q_min = r.get<std::uint8_t>("q_min");
        const int q_max = r.get<std::uint8_t>("q_max");
        auto& ch = h.params.channels[a];
        for (int c = 0; c < kAttributeWidth[a]; ++c) {
            ChannelQuant p;
            p.q_min = q_min;
            p.q_max = q_max;
            p.scale = r.get<float>("quant scale");
            p.zero_point = r.get<float>("quant zero point");
            if (!(p.scale > 0.0f)) throw CodecError("non-positive quantization scale in header");
            ch.push_back(p);
        }
    }
    for (int l = 0; l < levels; ++l) h.blob_lengths.push_back(r.get<std::uint64_t>("blob lengths"));
    for (int l = 0; l < levels; ++l) {
        if ((h.counts[l] == 0) != (h.blob_lengths[l] == 0)) throw CodecError("layer length disagrees with its count");
    }
    return h;
}

GodeStream parse_stream(std::span<const std::uint8_t> bytes) {
    GodeStream s;
    s.header = parse_header(bytes);
    std::size_t pos = s.header.encoded_size();
    for (int l = 0; l < s.header.levels(); ++l) {
        const std::uint64_t len = s.header.blob_lengths[l];
        if (pos + len > bytes.size()) break;
        s.layers.emplace_back(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                              bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return s;
}

GaussianModel decode(const GodeStream& stream, int level) {
    const GodeHeader& h = stream.header;
    if (level < 0 || level >= h.levels()) {
        throw InvalidArgument("level " + std::to_string(level) + " outside [0, " + std::to_string(h.levels()) + ")");
    }
    if (static_cast<int>(stream.layers.size()) <= level) {
        throw CodecError("stream truncated inside layer " + std::to_string(stream.layers.size()));
    }
    const std::size_t record = static_cast<std::size_t>(h.spec.record_bytes());
    GaussianModel out(h.cumulative_count(level));
    std::size_t row = 0;
    for (int l = 0; l <= level; ++l) {
        const std::size_t count = h.counts[l];
        if (count == 0) continue;
        const auto raw = lzma::decompress(stream.layers[l], count * record);
        unpack_layer(raw, count, h, out, row);
        row += count;
    }
    return out;
}

GaussianModel decode(std::span<const std::uint8_t> bytes, int level) {
    return decode(parse_stream(bytes), level);
}

std::vector<std::uint8_t> truncate(const GodeStream& stream, int level) {
    if (level < 0 || level >= stream.header.levels()) throw InvalidArgument("truncation level out of range");
    if (static_cast<int>(stream.layers.size()) <= level) throw CodecError("stream lacks the requested layers");
    Writer w;
    write_header(w, stream.header);
    for (int l = 0; l <= level; ++l) w.put_bytes(stream.layers[l]);
    return std::move(w.data());
}

std::vector<std::uint8_t> truncate(std::span<const std::uint8_t> bytes, int level) {
    const GodeHeader h = parse_header(bytes);
    if (level < 0 || level >= h.levels()) throw InvalidArgument("truncation level out of range");
    const std::size_t n = h.prefix_size(level);
    if (n > bytes.size()) throw CodecError("stream lacks the requested layers");
    return {bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace gode
