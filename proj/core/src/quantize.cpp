#include "gode/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "gode/error.hpp"
#include "gode/half.hpp"
#include "gode/hierarchy.hpp"

namespace gode {

std::vector<float>& attribute_values(GaussianModel& m, Attribute a) {
    switch (a) {
        case Attribute::Position: return m.positions;
        case Attribute::Sh: return m.sh;
        case Attribute::Opacity: return m.opacity_logit;
        case Attribute::Scale: return m.scale_log;
        case Attribute::Rotation: return m.rotation;
    }
    throw InvalidArgument("unknown attribute");
}

const std::vector<float>& attribute_values(const GaussianModel& m, Attribute a) {
    return attribute_values(const_cast<GaussianModel&>(m), a);
}

int mode_bytes(QuantMode mode) {
    switch (mode) {
        case QuantMode::None: return 4;
        case QuantMode::Affine8: return 1;
        case QuantMode::Half16: return 2;
    }
    throw InvalidArgument("unknown quantization mode");
}

int QuantizationSpec::record_bytes() const {
    int bytes = 0;
    for (int a = 0; a < kAttributeCount; ++a) bytes += kAttributeWidth[a] * mode_bytes(modes[a]);
    return bytes;
}

QuantizationSpec QuantizationSpec::none() {
    QuantizationSpec s;
    s.modes.fill(QuantMode::None);
    return s;
}

ChannelQuant channel_quant_from_range(double min, double max, int q_min, int q_max) {
    if (!std::isfinite(min) || !std::isfinite(max) || max < min) {
        throw InvalidArgument("invalid channel range");
    }
    ChannelQuant p;
    p.q_min = q_min;
    p.q_max = q_max;
    if (max == min) {
        p.scale = 1.0f;
        p.zero_point = static_cast<float>(q_min - min);
        return p;
    }
    p.scale = static_cast<float>((max - min) / (q_max - q_min));
    p.zero_point = static_cast<float>(q_min - min / double(p.scale));
    return p;
}

int quantize_code(float x, const ChannelQuant& p) {
    const double v = std::nearbyint(double(x) / double(p.scale) + double(p.zero_point));
    return static_cast<int>(std::clamp(v, double(p.q_min), double(p.q_max)));
}

bool quantize_clips(float x, const ChannelQuant& p) {
    const double v = std::nearbyint(double(x) / double(p.scale) + double(p.zero_point));
    return v < p.q_min || v > p.q_max;
}

float dequantize_code(int q, const ChannelQuant& p) {
    return static_cast<float>(double(p.scale) * (double(q) - double(p.zero_point)));
}

std::vector<float> fake_quantize(std::span<const float> x, const ChannelQuant& p) {
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = dequantize_code(quantize_code(x[i], p), p);
    return out;
}

std::vector<double> straight_through(std::span<const double> upstream) {
    return {upstream.begin(), upstream.end()};
}

float quantize_fp16(float x) {
    const std::uint16_t h = float_to_half_bits(x);
    if (half_bits_is_inf(h) && std::isfinite(x)) {
        throw InvalidArgument("value " + std::to_string(x) + " overflows binary16");
    }
    return half_bits_to_float(h);
}

std::vector<float> quantize_fp16(std::span<const float> x) {
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = quantize_fp16(x[i]);
    return out;
}

namespace {

QuantParams params_over(const GaussianModel& model, std::span<const std::size_t> rows,
                        const QuantizationSpec& spec) {
    QuantParams params;
    for (int a = 0; a < kAttributeCount; ++a) {
        if (spec.modes[a] != QuantMode::Affine8) continue;
        const int width = kAttributeWidth[a];
        const auto& values = attribute_values(model, static_cast<Attribute>(a));
        auto& channels = params.channels[a];
        channels.resize(width);
        for (int c = 0; c < width; ++c) {
            double lo = 0.0, hi = 0.0;
            bool first = true;
            for (std::size_t i : rows) {
                const double v = values[i * width + c];
                if (std::isnan(v)) throw InvalidArgument("NaN in model while computing quantization ranges");
                if (first) {
                    lo = hi = v;
                    first = false;
                } else {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
            channels[c] = channel_quant_from_range(lo, hi);
        }
    }
    return params;
}

}  // namespace

QuantParams compute_quant_params(const GaussianModel& model, const Hierarchy& hierarchy,
                                 const QuantizationSpec& spec) {
    if (hierarchy.source_count != model.size()) throw InvalidArgument("hierarchy does not match model");
    const auto rows = hierarchy.level_indices(hierarchy.levels() - 1);
    if (rows.empty()) throw InvalidArgument("cannot compute quantization ranges of an empty model");
    return params_over(model, rows, spec);
}

QuantParams compute_quant_params(const GaussianModel& model, const QuantizationSpec& spec) {
    if (model.empty()) throw InvalidArgument("cannot compute quantization ranges of an empty model");
    std::vector<std::size_t> rows(model.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return params_over(model, rows, spec);
}

GaussianModel apply_quantization(const GaussianModel& model, const QuantizationSpec& spec,
                                 const QuantParams& params, QuantizeStats* stats) {
    GaussianModel out = model;
    for (int a = 0; a < kAttributeCount; ++a) {
        auto& values = attribute_values(out, static_cast<Attribute>(a));
        const int width = kAttributeWidth[a];
        switch (spec.modes[a]) {
            case QuantMode::None:
                break;
            case QuantMode::Half16:
                for (auto& v : values) v = quantize_fp16(v);
                break;
            case QuantMode::Affine8: {
                const auto& channels = params.channels[a];
                if (channels.size() != static_cast<std::size_t>(width)) {
                    throw InvalidArgument(std::string("missing quantization params for ") + kAttributeName[a]);
                }
                for (std::size_t i = 0; i < values.size(); ++i) {
                    const ChannelQuant& p = channels[i % width];
                    if (stats && quantize_clips(values[i], p)) ++stats->clamped;
                    values[i] = dequantize_code(quantize_code(values[i], p), p);
                }
                break;
            }
        }
    }
    return out;
}

void save_quant_params_json(const QuantParams& params, const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::object();
    for (int a = 0; a < kAttributeCount; ++a) {
        if (params.channels[a].empty()) continue;
        nlohmann::json list = nlohmann::json::array();
        for (const auto& c : params.channels[a]) {
            list.push_back({{"scale", double(c.scale)}, {"zero_point", double(c.zero_point)},
                            {"q_min", c.q_min}, {"q_max", c.q_max}});
        }
        doc[kAttributeName[a]] = std::move(list);
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(1) << "\n";
}

QuantParams load_quant_params_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open quantization params " + path.string());
    QuantParams params;
    try {
        nlohmann::json doc;
        in >> doc;
        for (int a = 0; a < kAttributeCount; ++a) {
            if (!doc.contains(kAttributeName[a])) continue;
            for (const auto& c : doc.at(kAttributeName[a])) {
                ChannelQuant q;
                q.scale = static_cast<float>(c.at("scale").get<double>());
                q.zero_point = static_cast<float>(c.at("zero_point").get<double>());
                q.q_min = c.at("q_min").get<int>();
                q.q_max = c.at("q_max").get<int>();
                params.channels[a].push_back(q);
            }
            if (params.channels[a].size() != static_cast<std::size_t>(kAttributeWidth[a])) {
                throw IoError(std::string("wrong channel count for ") + kAttributeName[a] + " in " + path.string());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed quantization params " + path.string() + ": " + e.what());
    }
    return params;
}

std::string to_string(QuantMode mode) {
    switch (mode) {
        case QuantMode::None: return "none";
        case QuantMode::Affine8: return "affine8";
        case QuantMode::Half16: return "fp16";
    }
    return "?";
}

QuantMode parse_quant_mode(const std::string& s) {
    if (s == "none") return QuantMode::None;
    if (s == "affine8" || s == "8") return QuantMode::Affine8;
    if (s == "fp16" || s == "16") return QuantMode::Half16;
    throw InvalidArgument("unknown quantization mode '" + s + "'");
}

}  // namespace gode
