#include <cmath>

#include "gode/error.hpp"
#include "gode/loss.hpp"

namespace gode {

LossResult loss_and_grad(const Image& rendered, const Image& target, double ssim_weight) {
    if (!rendered.same_shape(target) || rendered.data.size() != target.data.size()) {
        throw InvalidArgument("loss inputs differ in shape");
    }
    const std::size_t count = rendered.data.size();
    if (count == 0) throw InvalidArgument("loss of an empty image");

    LossResult out;
    out.d_image = Image(rendered.width, rendered.height);
    const double l1_weight = 1.0 - ssim_weight;
    const double inv = 1.0 / static_cast<double>(count);

    double l1 = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double d = rendered.data[i] - target.data[i];
        l1 += std::abs(d);
        const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        out.d_image.data[i] = l1_weight * sign * inv;
    }
    out.loss = l1_weight * l1 * inv;

    if (ssim_weight != 0.0) {
        Image d_ssim;
        const double s = ssim_map_mean(rendered, target, &d_ssim);
        out.loss += ssim_weight * (1.0 - s);
        for (std::size_t i = 0; i < count; ++i) out.d_image.data[i] -= ssim_weight * d_ssim.data[i];
    }
    return out;
}

}  // namespace gode
