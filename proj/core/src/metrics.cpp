#include "gode/metrics.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "gode/error.hpp"
#include "gode/io.hpp"
#include "gode/loss.hpp"

namespace gode {

double psnr(const Image& a, const Image& b) {
    if (!a.same_shape(b) || a.data.size() != b.data.size()) throw InvalidArgument("PSNR inputs differ in shape");
    if (a.data.empty()) throw InvalidArgument("PSNR of an empty image");
    double se = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.data.size());
    if (mse == 0.0) return kPsnrIdentical;
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw InvalidArgument("SSIM inputs differ in shape");
    if (a.width < kSsimWindow || a.height < kSsimWindow) {
        throw InvalidArgument("SSIM needs images of at least 11x11 pixels");
    }
    return ssim_map_mean(a, b);
}

LevelReport evaluate_model(const GaussianModel& model, std::span<const View> views, const RenderOptions& options) {
    if (views.empty()) throw InvalidArgument("evaluation needs at least one view");
    LevelReport r;
    r.gaussian_count = model.size();
    double ms = 0.0;
    for (const View& v : views) {
        const auto t0 = std::chrono::steady_clock::now();
        const Image img = render(model, v.camera, options);
        const auto t1 = std::chrono::steady_clock::now();
        ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
        r.psnr_db += psnr(img, v.target);
        r.ssim += ssim(img, v.target);
    }
    const double n = static_cast<double>(views.size());
    r.psnr_db /= n;
    r.ssim /= n;
    r.render_ms_mean = ms / n;
    return r;
}

std::vector<LevelReport> evaluate_levels(const GodeStream& stream, std::span<const View> views,
                                         const EvaluateOptions& options) {
    if (views.empty()) throw InvalidArgument("evaluation needs at least one view");
    std::vector<LevelReport> rows;
    for (int l = 0; l < stream.header.levels(); ++l) {
        const GaussianModel model = decode(stream, l);
        LevelReport r = evaluate_model(model, views, options.render);
        r.level = l;
        r.size_bytes = stream.header.prefix_size(l);
        if (!options.png_dir.empty()) {
            for (std::size_t v = 0; v < views.size(); ++v) {
                std::ostringstream name;
                name << "level_" << l << "_view_" << std::setw(3) << std::setfill('0') << v << ".png";
                save_png(render(model, views[v].camera, options.render), options.png_dir / name.str());
            }
        }
        rows.push_back(r);
    }
    return rows;
}

void write_report_csv(std::span<const LevelReport> rows, std::ostream& out) {
    out << "level,W,size_bytes,psnr_db,ssim,render_ms\n";
    for (const auto& r : rows) {
        out << r.level << "," << r.gaussian_count << "," << r.size_bytes << "," << std::setprecision(10)
            << r.psnr_db << "," << r.ssim << "," << r.render_ms_mean << "\n";
    }
}

}  // namespace gode
