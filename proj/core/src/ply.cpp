#include "gode/ply.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "gode/error.hpp"

namespace gode {
namespace {

static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

std::vector<std::string> canonical_properties() {
    std::vector<std::string> names = {"x", "y", "z", "nx", "ny", "nz"};
    for (int i = 0; i < 3; ++i) names.push_back("f_dc_" + std::to_string(i));
    for (int i = 0; i < 45; ++i) names.push_back("f_rest_" + std::to_string(i));
    names.push_back("opacity");
    for (int i = 0; i < 3; ++i) names.push_back("scale_" + std::to_string(i));
    for (int i = 0; i < 4; ++i) names.push_back("rot_" + std::to_string(i));
    return names;
}

std::size_t type_size(const std::string& type) {
    static const std::map<std::string, std::size_t> sizes = {
        {"char", 1},  {"uchar", 1},  {"int8", 1},   {"uint8", 1},   {"short", 2},
        {"ushort", 2}, {"int16", 2}, {"uint16", 2}, {"int", 4},     {"uint", 4},
        {"int32", 4}, {"uint32", 4}, {"float", 4},  {"float32", 4}, {"double", 8},
        {"float64", 8}};
    auto it = sizes.find(type);
    return it == sizes.end() ? 0 : it->second;
}

struct PropertySlot {
    std::string name;
    std::string type;
    std::size_t offset = 0;
    std::size_t size = 0;
};

}  // namespace

std::string ply_header(std::size_t vertex_count) {
    std::ostringstream h;
    h << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "element vertex " << vertex_count << "\n";
    for (const auto& name : canonical_properties()) h << "property float " << name << "\n";
    h << "end_header\n";
    return h.str();
}

GaussianModel read_ply(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "ply") throw PlyParseError("missing 'ply' magic");

    bool have_format = false;
    bool in_vertex = false;
    bool have_vertex = false;
    std::size_t count = 0;
    std::vector<PropertySlot> props;
    std::size_t stride = 0;

    while (true) {
        if (!std::getline(in, line)) throw PlyParseError("header ended before end_header");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string keyword;
        ls >> keyword;
        if (keyword == "end_header") break;
        if (keyword == "comment" || keyword == "obj_info" || keyword.empty()) continue;
        if (keyword == "format") {
            std::string fmt, version;
            ls >> fmt >> version;
            if (fmt != "binary_little_endian") throw PlyParseError("unsupported format", fmt);
            have_format = true;
        } else if (keyword == "element") {
            std::string name;
            long long n = -1;
            ls >> name >> n;
            if (name != "vertex") throw PlyParseError("unexpected element", name);
            if (have_vertex) throw PlyParseError("duplicate element", name);
            if (ls.fail() || n < 0) throw PlyParseError("bad vertex count", line);
            count = static_cast<std::size_t>(n);
            in_vertex = have_vertex = true;
        } else if (keyword == "property") {
            if (!in_vertex) throw PlyParseError("property outside vertex element", line);
            std::string type, name;
            ls >> type >> name;
            if (type == "list") throw PlyParseError("list properties unsupported", name);
            const std::size_t sz = type_size(type);
            if (sz == 0 || name.empty()) throw PlyParseError("unknown property type", name.empty() ? line : name);
            props.push_back({name, type, stride, sz});
            stride += sz;
        } else {
            throw PlyParseError("unknown header line", line);
        }
    }
    if (!have_format) throw PlyParseError("missing format line");
    if (!have_vertex) throw PlyParseError("missing vertex element");

    std::map<std::string, const PropertySlot*> by_name;
    for (const auto& p : props) {
        if (!by_name.emplace(p.name, &p).second) throw PlyParseError("duplicate property", p.name);
    }
    auto offset_of = [&](const std::string& name) -> std::size_t {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw PlyParseError("missing property", name);
        if (it->second->type != "float" && it->second->type != "float32") {
            throw PlyParseError("property must be float", name);
        }
        return it->second->offset;
    };

    std::array<std::size_t, 3> pos_off{offset_of("x"), offset_of("y"), offset_of("z")};
    std::array<std::size_t, 3> dc_off{};
    for (int c = 0; c < 3; ++c) dc_off[c] = offset_of("f_dc_" + std::to_string(c));
    std::array<std::size_t, 45> rest_off{};
    for (int k = 0; k < 45; ++k) rest_off[k] = offset_of("f_rest_" + std::to_string(k));
    const std::size_t opa_off = offset_of("opacity");
    std::array<std::size_t, 3> scale_off{};
    for (int k = 0; k < 3; ++k) scale_off[k] = offset_of("scale_" + std::to_string(k));
    std::array<std::size_t, 4> rot_off{};
    for (int k = 0; k < 4; ++k) rot_off[k] = offset_of("rot_" + std::to_string(k));

    GaussianModel model(count);
    std::vector<char> record(stride);
    auto get = [&record](std::size_t off) {
        float v;
        std::memcpy(&v, record.data() + off, sizeof(float));
        return v;
    };
    for (std::size_t i = 0; i < count; ++i) {
        if (!in.read(record.data(), static_cast<std::streamsize>(stride))) {
            const auto got = static_cast<std::size_t>(in.gcount());
            std::string where = props.empty() ? std::string() : props.back().name;
            for (const auto& p : props) {
                if (p.offset + p.size > got) {
                    where = p.name;
                    break;
                }
            }
            throw PlyParseError("truncated payload at vertex " + std::to_string(i), where);
        }
        for (int k = 0; k < 3; ++k) model.positions[i * 3 + k] = get(pos_off[k]);
        for (int c = 0; c < 3; ++c) model.sh[i * kShScalars + c] = get(dc_off[c]);
        // f_rest is color-major: 15 coefficients of R, then G, then B.
        for (int c = 0; c < 3; ++c) {
            for (int k = 1; k < kShCoeffs; ++k) {
                model.sh[i * kShScalars + k * 3 + c] = get(rest_off[c * 15 + (k - 1)]);
            }
        }
        model.opacity_logit[i] = get(opa_off);
        for (int k = 0; k < 3; ++k) model.scale_log[i * 3 + k] = get(scale_off[k]);
        for (int k = 0; k < 4; ++k) model.rotation[i * 4 + k] = get(rot_off[k]);
    }
    return model;
}

GaussianModel load_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open PLY file " + path.string());
    return read_ply(in);
}

void write_ply(const GaussianModel& model, std::ostream& out) {
    const std::size_t n = model.size();
    const std::string header = ply_header(n);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::array<float, kPlyFloatsPerVertex> rec{};
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = 0;
        for (int d = 0; d < 3; ++d) rec[k++] = model.positions[i * 3 + d];
        for (int d = 0; d < 3; ++d) rec[k++] = 0.0f;
        for (int c = 0; c < 3; ++c) rec[k++] = model.sh[i * kShScalars + c];
        for (int c = 0; c < 3; ++c) {
            for (int j = 1; j < kShCoeffs; ++j) rec[k++] = model.sh[i * kShScalars + j * 3 + c];
        }
        rec[k++] = model.opacity_logit[i];
        for (int d = 0; d < 3; ++d) rec[k++] = model.scale_log[i * 3 + d];
        for (int d = 0; d < 4; ++d) rec[k++] = model.rotation[i * 4 + d];
        out.write(reinterpret_cast<const char*>(rec.data()), sizeof(rec));
    }
    if (!out) throw IoError("failed writing PLY payload");
}

void save_ply(const GaussianModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_ply(model, out);
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace gode
