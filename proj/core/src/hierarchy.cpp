#include "gode/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "gode/error.hpp"
#include "gode/loss.hpp"

namespace gode {

double progression_value(std::size_t c_min, double base, int level) {
    const double v = double(c_min) * std::pow(base, level);
    if (!std::isfinite(v)) return v;
    const double nearest = std::round(v);
    if (std::abs(v - nearest) <= 1e-9 * std::max(v, 1.0)) return nearest;
    return std::floor(v);
}

std::size_t progression_count(std::size_t c_min, double base, int level) {
    const double v = progression_value(c_min, base, level);
    constexpr auto kMax = std::numeric_limits<std::size_t>::max();
    if (!(v < static_cast<double>(kMax))) return kMax;
    return static_cast<std::size_t>(v);
}

LevelProgression compute_progression(std::size_t c_min, std::size_t c_max, int levels) {
    if (levels < 2) throw InvalidArgument("progression needs at least 2 levels");
    if (c_min < 1) throw InvalidArgument("c_min must be >= 1");
    if (c_max < c_min) throw InvalidArgument("c_max must be >= c_min");

    LevelProgression p;
    p.c_min = c_min;
    p.c_max = c_max;
    p.levels = levels;
    p.base = std::exp((std::log(double(c_max)) - std::log(double(c_min))) / (levels - 1));
    p.cumulative.resize(levels);
    for (int l = 0; l < levels; ++l) {
        p.cumulative[l] = std::min(progression_count(c_min, p.base, l), c_max);
    }
    p.cumulative[0] = c_min;
    // Guard against pow round-off dipping below the previous level.
    for (int l = 1; l < levels; ++l) p.cumulative[l] = std::max(p.cumulative[l], p.cumulative[l - 1]);
    p.increments.resize(levels);
    p.increments[0] = c_min;
    for (int l = 1; l < levels; ++l) p.increments[l] = p.cumulative[l] - p.cumulative[l - 1];
    return p;
}

std::size_t default_c_max(std::size_t n, double fraction) {
    return static_cast<std::size_t>(std::floor(fraction * double(n)));
}

std::size_t Hierarchy::level_size(int level) const {
    if (level < 0 || level >= levels()) throw InvalidArgument("level out of range");
    std::size_t s = base.size();
    for (int l = 1; l <= level; ++l) s += enhancements[l - 1].size();
    return s;
}

std::vector<std::size_t> Hierarchy::level_indices(int level) const {
    if (level < 0 || level >= levels()) throw InvalidArgument("level out of range");
    std::vector<std::size_t> out(base);
    for (int l = 1; l <= level; ++l) out.insert(out.end(), enhancements[l - 1].begin(), enhancements[l - 1].end());
    return out;
}

std::vector<std::size_t> Hierarchy::layer_sizes() const {
    std::vector<std::size_t> out{base.size()};
    for (const auto& e : enhancements) out.push_back(e.size());
    return out;
}

void Hierarchy::validate() const {
    std::vector<bool> seen(source_count, false);
    auto check = [&](const std::vector<std::size_t>& layer) {
        for (std::size_t i : layer) {
            if (i >= source_count) throw InvalidArgument("hierarchy index out of range");
            if (seen[i]) throw InvalidArgument("hierarchy layers overlap at index " + std::to_string(i));
            seen[i] = true;
        }
    };
    check(base);
    for (const auto& e : enhancements) check(e);
}

Hierarchy contiguous_hierarchy(std::span<const std::size_t> layer_sizes) {
    if (layer_sizes.empty()) throw InvalidArgument("hierarchy needs at least one layer");
    Hierarchy h;
    std::size_t next = 0;
    for (std::size_t l = 0; l < layer_sizes.size(); ++l) {
        std::vector<std::size_t> layer(layer_sizes[l]);
        std::iota(layer.begin(), layer.end(), next);
        next += layer_sizes[l];
        if (l == 0) {
            h.base = std::move(layer);
        } else {
            h.enhancements.push_back(std::move(layer));
        }
    }
    h.source_count = next;
    return h;
}

ScoreKind parse_score_kind(const std::string& s) {
    if (s == "gradient") return ScoreKind::GradientNorm;
    if (s == "opacity") return ScoreKind::Opacity;
    throw InvalidArgument("unknown score kind '" + s + "' (expected gradient|opacity)");
}

std::vector<double> accumulate_scores(const GaussianModel& model, std::span<const std::size_t> active,
                                      std::span<const View> views, const ScoreOptions& options) {
    if (views.empty()) throw InvalidArgument("scoring needs at least one view");
    const std::size_t n = model.size();
    std::vector<double> scores(n, kInactiveScore);

    if (options.kind == ScoreKind::Opacity) {
        for (std::size_t i : active) {
            if (i >= n) throw InvalidArgument("active index out of range");
            scores[i] = 1.0 / (1.0 + std::exp(-double(model.opacity_logit[i])));
        }
        return scores;
    }

    const GaussianModel sub = subset(model, active);
    std::vector<double> norm_sum(active.size(), 0.0);
    std::vector<double> grad_sum;
    if (options.accumulation == ScoreAccumulation::SumThenNorm) grad_sum.assign(active.size() * kParamsPerGaussian, 0.0);

    for (const View& view : views) {
        const RenderState st = render_forward(sub, view.camera, options.render);
        const LossResult loss = loss_and_grad(st.image, view.target, options.ssim_weight);
        const GradientBuffer grad = render_backward(sub, st, loss.d_image);
        for (std::size_t j = 0; j < active.size(); ++j) {
            if (options.accumulation == ScoreAccumulation::NormThenSum) {
                norm_sum[j] += grad.gaussian_norm(j);
            } else {
                const auto g = grad.gaussian(j);
                for (int k = 0; k < kParamsPerGaussian; ++k) grad_sum[j * kParamsPerGaussian + k] += g[k];
            }
        }
    }
    for (std::size_t j = 0; j < active.size(); ++j) {
        if (options.accumulation == ScoreAccumulation::NormThenSum) {
            scores[active[j]] = norm_sum[j];
        } else {
            double s = 0.0;
            for (int k = 0; k < kParamsPerGaussian; ++k) {
                const double g = grad_sum[j * kParamsPerGaussian + k];
                s += g * g;
            }
            scores[active[j]] = std::sqrt(s);
        }
    }
    return scores;
}

std::vector<std::size_t> lowest_k(std::span<const double> scores, std::span<const std::size_t> active,
                                  std::size_t k) {
    if (k > active.size()) throw InvalidArgument("cannot select more Gaussians than are active");
    std::vector<std::size_t> order(active.begin(), active.end());
    auto less = [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), less);
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

Hierarchy build_hierarchy(const GaussianModel& model, std::span<const View> views,
                          const LevelProgression& progression, const HierarchyOptions& options) {
    const std::size_t n = model.size();
    if (progression.levels < 2 || progression.cumulative.size() != static_cast<std::size_t>(progression.levels)) {
        throw InvalidArgument("malformed progression");
    }
    if (progression.total() > n || progression.c_max > n) {
        throw InvalidArgument("progression (" + std::to_string(progression.total()) +
                              " Gaussians) exceeds model size " + std::to_string(n));
    }
    if (views.empty()) throw InvalidArgument("hierarchy construction needs at least one view");

    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), std::size_t{0});

    auto remove = [&active](const std::vector<std::size_t>& masked) {
        std::vector<std::size_t> kept;
        kept.reserve(active.size() - masked.size());
        std::set_difference(active.begin(), active.end(), masked.begin(), masked.end(), std::back_inserter(kept));
        active = std::move(kept);
    };

    std::vector<double> shared_scores;
    auto scores_for = [&]() -> std::vector<double> {
        if (options.one_shot) {
            if (shared_scores.empty()) shared_scores = accumulate_scores(model, active, views, options.score);
            return shared_scores;
        }
        return accumulate_scores(model, active, views, options.score);
    };

    if (n > progression.total()) {
        const auto scores = scores_for();
        remove(lowest_k(scores, active, n - progression.total()));
    }

    Hierarchy h;
    h.source_count = n;
    h.enhancements.resize(progression.levels - 1);
    for (int l = progression.levels - 1; l >= 1; --l) {
        const std::size_t k = progression.increments[l];
        if (k == 0) continue;
        const auto scores = scores_for();
        auto masked = lowest_k(scores, active, k);
        remove(masked);
        h.enhancements[l - 1] = std::move(masked);
    }
    h.base = std::move(active);
    return h;
}

void save_hierarchy_json(const Hierarchy& h, const LevelProgression& p, const std::filesystem::path& path) {
    nlohmann::json doc = {{"c_min", p.c_min},
                          {"c_max", p.c_max},
                          {"L", p.levels},
                          {"k_s", p.increments},
                          {"source_count", h.source_count},
                          {"base", h.base},
                          {"enhancements", h.enhancements}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump() << "\n";
}

Hierarchy load_hierarchy_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open hierarchy file " + path.string());
    try {
        nlohmann::json doc;
        in >> doc;
        Hierarchy h;
        h.base = doc.at("base").get<std::vector<std::size_t>>();
        h.enhancements = doc.at("enhancements").get<std::vector<std::vector<std::size_t>>>();
        if (doc.contains("source_count")) {
            h.source_count = doc.at("source_count").get<std::size_t>();
        } else {
            std::size_t max_index = 0;
            for (std::size_t i : h.base) max_index = std::max(max_index, i + 1);
            for (const auto& e : h.enhancements) {
                for (std::size_t i : e) max_index = std::max(max_index, i + 1);
            }
            h.source_count = max_index;
        }
        if (doc.contains("L") && doc.at("L").get<int>() != h.levels()) {
            throw IoError("hierarchy L disagrees with its layer list");
        }
        h.validate();
        return h;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed hierarchy JSON " + path.string() + ": " + e.what());
    }
}

}  // namespace gode
