#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "gode/error.hpp"
#include "gode/io.hpp"

namespace gode {

using nlohmann::json;

std::vector<View> load_views(const std::filesystem::path& json_path, bool load_images) {
    std::ifstream in(json_path);
    if (!in) throw IoError("cannot open views file " + json_path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError("malformed views JSON " + json_path.string() + ": " + e.what());
    }
    const json& list = doc.is_object() ? doc.at("views") : doc;
    if (!list.is_array()) throw IoError("views JSON must be an array of views");

    const auto base_dir = json_path.parent_path();
    std::vector<View> views;
    views.reserve(list.size());
    try {
        for (const auto& entry : list) {
            View v;
            Camera& c = v.camera;
            c.width = entry.at("width").get<int>();
            c.height = entry.at("height").get<int>();
            c.fx = entry.at("fx").get<double>();
            c.fy = entry.at("fy").get<double>();
            c.cx = entry.at("cx").get<double>();
            c.cy = entry.at("cy").get<double>();
            const auto rot = entry.at("rotation").get<std::vector<double>>();
            const auto trans = entry.at("translation").get<std::vector<double>>();
            if (rot.size() != 9 || trans.size() != 3) {
                throw IoError("view rotation must have 9 entries and translation 3");
            }
            for (int r = 0; r < 3; ++r) {
                for (int k = 0; k < 3; ++k) c.rotation(r, k) = rot[r * 3 + k];
                c.translation(r) = trans[r];
            }
            c.validate();
            if (load_images) {
                std::filesystem::path img = entry.at("image_path").get<std::string>();
                if (img.is_relative()) img = base_dir / img;
                v.target = load_png(img);
                if (!v.target.same_shape(Image(c.width, c.height))) {
                    throw IoError("image " + img.string() + " does not match camera size");
                }
            } else {
                v.target = Image(c.width, c.height);
            }
            views.push_back(std::move(v));
        }
    } catch (const json::exception& e) {
        throw IoError("malformed view entry in " + json_path.string() + ": " + e.what());
    }
    return views;
}

void save_views(std::span<const View> views, const std::filesystem::path& json_path) {
    const auto base_dir = json_path.parent_path();
    json list = json::array();
    for (std::size_t i = 0; i < views.size(); ++i) {
        const View& v = views[i];
        std::ostringstream name;
        name << "view_" << std::setw(3) << std::setfill('0') << i << ".png";
        save_png(v.target, base_dir / name.str());
        std::vector<double> rot(9), trans(3);
        for (int r = 0; r < 3; ++r) {
            for (int k = 0; k < 3; ++k) rot[r * 3 + k] = v.camera.rotation(r, k);
            trans[r] = v.camera.translation(r);
        }
        list.push_back({{"image_path", name.str()},
                        {"width", v.camera.width},
                        {"height", v.camera.height},
                        {"fx", v.camera.fx},
                        {"fy", v.camera.fy},
                        {"cx", v.camera.cx},
                        {"cy", v.camera.cy},
                        {"rotation", rot},
                        {"translation", trans}});
    }
    std::ofstream out(json_path);
    if (!out) throw IoError("cannot write " + json_path.string());
    out << std::setw(2) << list << "\n";
}

}  // namespace gode
