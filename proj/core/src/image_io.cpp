#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "gode/error.hpp"
#include "gode/io.hpp"

namespace gode {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image load_png(const std::filesystem::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        throw IoError("cannot read PNG " + path.string() + ": " + img.message);
    }
    img.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
        std::string msg = img.message;
        png_image_free(&img);
        throw IoError("cannot decode PNG " + path.string() + ": " + msg);
    }
    Image out(static_cast<int>(img.width), static_cast<int>(img.height));
    for (std::size_t i = 0; i < buffer.size(); ++i) out.data[i] = buffer[i] / 255.0;
    return out;
}

void save_png(const Image& image, const std::filesystem::path& path) {
    if (image.width < 1 || image.height < 1) throw InvalidArgument("cannot save an empty image");
    std::vector<png_byte> buffer(image.data.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        const double v = std::clamp(image.data[i], 0.0, 1.0);
        buffer[i] = static_cast<png_byte>(std::lround(v * 255.0));
    }
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGB;
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    if (!png_image_write_to_stdio(&img, file.get(), 0, buffer.data(), 0, nullptr)) {
        throw IoError("cannot encode PNG " + path.string() + ": " + img.message);
    }
}

}  // namespace gode
