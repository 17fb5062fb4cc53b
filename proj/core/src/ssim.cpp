#include <array>
#include <cmath>
#include <vector>

#include "gode/error.hpp"
#include "gode/loss.hpp"

namespace gode {
namespace {

using Plane = std::vector<double>;

const std::array<double, kSsimWindow>& window1d() {
    static const std::array<double, kSsimWindow> w = [] {
        std::array<double, kSsimWindow> k{};
        double sum = 0.0;
        for (int i = 0; i < kSsimWindow; ++i) {
            const double d = i - kSsimWindow / 2;
            k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
            sum += k[i];
        }
        for (auto& v : k) v /= sum;
        return k;
    }();
    return w;
}

// Separable zero-padded Gaussian filter; self-adjoint because the window is symmetric.
Plane blur(const Plane& in, int h, int w) {
    const auto& k = window1d();
    constexpr int r = kSsimWindow / 2;
    Plane tmp(in.size(), 0.0), out(in.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) {
                const int xx = x + i;
                if (xx >= 0 && xx < w) s += k[i + r] * in[static_cast<std::size_t>(y) * w + xx];
            }
            tmp[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) {
                const int yy = y + i;
                if (yy >= 0 && yy < h) s += k[i + r] * tmp[static_cast<std::size_t>(yy) * w + x];
            }
            out[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    return out;
}

}  // namespace

double ssim_map_mean(const Image& a, const Image& b, Image* grad) {
    if (!a.same_shape(b)) throw InvalidArgument("SSIM inputs differ in shape");
    const int h = a.height, w = a.width;
    const std::size_t np = a.pixel_count();
    if (np == 0) throw InvalidArgument("SSIM of an empty image");
    if (grad) *grad = Image(w, h);

    const double norm = 1.0 / static_cast<double>(np * 3);
    double total = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        Plane x(np), y(np), xx(np), yy(np), xy(np);
        for (std::size_t i = 0; i < np; ++i) {
            x[i] = a.data[i * 3 + ch];
            y[i] = b.data[i * 3 + ch];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const Plane mu_x = blur(x, h, w), mu_y = blur(y, h, w);
        const Plane e_xx = blur(xx, h, w), e_yy = blur(yy, h, w), e_xy = blur(xy, h, w);

        Plane g_mu(grad ? np : 0), g_exx(grad ? np : 0), g_exy(grad ? np : 0);
        for (std::size_t i = 0; i < np; ++i) {
            const double mx = mu_x[i], my = mu_y[i];
            const double var_x = e_xx[i] - mx * mx;
            const double var_y = e_yy[i] - my * my;
            const double cov = e_xy[i] - mx * my;
            const double a1 = 2.0 * mx * my + kSsimC1;
            const double a2 = 2.0 * cov + kSsimC2;
            const double b1 = mx * mx + my * my + kSsimC1;
            const double b2 = var_x + var_y + kSsimC2;
            const double s = (a1 * a2) / (b1 * b2);
            total += s;
            if (grad) {
                const double ds_dmx = 2.0 * my * a2 / (b1 * b2) - s * 2.0 * mx / b1;
                const double ds_dvar = -s / b2;
                const double ds_dcov = 2.0 * a1 / (b1 * b2);
                g_exx[i] = ds_dvar * norm;
                g_exy[i] = ds_dcov * norm;
                g_mu[i] = (ds_dmx - 2.0 * mx * ds_dvar - my * ds_dcov) * norm;
            }
        }
        if (grad) {
            const Plane bm = blur(g_mu, h, w), bxx = blur(g_exx, h, w), bxy = blur(g_exy, h, w);
            for (std::size_t i = 0; i < np; ++i) {
                grad->data[i * 3 + ch] = bm[i] + 2.0 * x[i] * bxx[i] + y[i] * bxy[i];
            }
        }
    }
    return total * norm;
}

}  // namespace gode
