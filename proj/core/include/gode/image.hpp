#pragma once

#include <cstddef>
#include <vector>

namespace gode {

/// H x W x 3 image of reals, interleaved RGB, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }
    std::size_t index(int row, int col, int ch) const noexcept {
        return (static_cast<std::size_t>(row) * width + col) * 3 + ch;
    }
    double& at(int row, int col, int ch) { return data[index(row, col, ch)]; }
    double at(int row, int col, int ch) const { return data[index(row, col, ch)]; }

    bool same_shape(const Image& o) const noexcept { return width == o.width && height == o.height; }
    bool operator==(const Image&) const = default;
};

}  // namespace gode
