#pragma once

#include <filesystem>
#include <vector>

#include "gode/image.hpp"
#include "gode/model.hpp"

namespace gode {

/// 8-bit RGB(A) PNG -> [0,1] reals. Alpha is dropped, gray is broadcast.
Image load_png(const std::filesystem::path& path);

/// [0,1] reals -> 8-bit RGB PNG (values clamped, rounded to nearest).
void save_png(const Image& image, const std::filesystem::path& path);

/// Reads a views file: a JSON array (or {"views": [...]}) of
/// {image_path, width, height, fx, fy, cx, cy, rotation[9] row-major, translation[3]}.
/// Relative image paths resolve against the JSON file's directory. Views whose image
/// cannot be found are an error unless `load_images` is false, in which case targets
/// are left as black images of the camera size.
std::vector<View> load_views(const std::filesystem::path& json_path, bool load_images = true);

/// Writes `views` as JSON plus one PNG per view (view_###.png) beside the JSON file.
void save_views(std::span<const View> views, const std::filesystem::path& json_path);

}  // namespace gode
