#include "gode/finetune.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "gode/error.hpp"
#include "gode/loss.hpp"

namespace gode {

LevelSampling LevelSampling::parse(const std::string& s) {
    if (s == "uniform") return uniform();
    const std::string prefix = "weighted:";
    if (s.rfind(prefix, 0) == 0) {
        try {
            std::size_t used = 0;
            const std::string rest = s.substr(prefix.size());
            const double g = std::stod(rest, &used);
            if (used == rest.size() && g > 0.0) return weighted(g);
        } catch (const std::exception&) {
        }
    }
    throw InvalidArgument("unknown level sampling '" + s + "' (expected uniform|weighted:G)");
}

std::vector<double> level_probabilities(int levels, const LevelSampling& sampling, std::size_t c_min,
                                        std::size_t c_max) {
    if (levels < 1) throw InvalidArgument("level sampling needs L >= 1");
    std::vector<double> p(levels, 1.0 / levels);
    if (sampling.kind == LevelSampling::Kind::Uniform || levels == 1) return p;
    if (!(sampling.g > 0.0)) throw InvalidArgument("weighted sampling needs G > 0");
    if (c_min < 1 || c_max < c_min) throw InvalidArgument("weighted sampling needs 1 <= c_min <= c_max");

    const double log_b = (std::log(double(c_max)) - std::log(double(c_min))) / sampling.g;
    const double b = std::exp(log_b);
    bool finite = true;
    for (int l = 0; l < levels; ++l) {
        p[l] = progression_value(c_min, b, l);
        finite = finite && std::isfinite(p[l]);
    }
    if (!finite) {
        // Weights beyond double range: relative sizes from logs, where the floor is immaterial.
        for (int l = 0; l < levels; ++l) p[l] = std::exp((l - (levels - 1)) * log_b);
    }
    double sum = 0.0;
    for (double v : p) sum += v;
    for (auto& v : p) v /= sum;
    return p;
}

LevelSampler::LevelSampler(int levels, const LevelSampling& sampling, std::size_t c_min, std::size_t c_max)
    : probabilities_(level_probabilities(levels, sampling, c_min, c_max)) {
    cdf_.resize(probabilities_.size());
    double acc = 0.0;
    for (std::size_t l = 0; l < probabilities_.size(); ++l) {
        acc += probabilities_[l];
        cdf_[l] = acc;
    }
}

int LevelSampler::operator()(Rng& rng) const {
    const int levels = static_cast<int>(probabilities_.size());
    if (levels == 1) return 0;
    const double u = std::uniform_real_distribution<double>(0.0, cdf_.back())(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min(static_cast<int>(it - cdf_.begin()), levels - 1);
}

int sample_level(int levels, const LevelSampling& sampling, Rng& rng, std::size_t c_min, std::size_t c_max) {
    return LevelSampler(levels, sampling, c_min, c_max)(rng);
}

namespace {

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw InvalidArgument("bad numeric value for " + key + ": '" + value + "'");
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw InvalidArgument("bad boolean value for " + key + ": '" + value + "'");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

void FinetuneConfig::set(const std::string& key, const std::string& value) {
    if (key == "iterations") {
        const double v = parse_double(key, value);
        if (v < 0 || v != std::floor(v)) throw InvalidArgument("iterations must be a non-negative integer");
        iterations = static_cast<int>(v);
    } else if (key == "lambda" || key == "sh_l1_weight") {
        sh_l1_weight = parse_double(key, value);
        if (sh_l1_weight < 0) throw InvalidArgument("lambda must be >= 0");
    } else if (key == "l1_normalization") {
        if (value == "sum") {
            l1_normalization = L1Normalization::Sum;
        } else if (value == "gaussian-mean") {
            l1_normalization = L1Normalization::MeanOverGaussians;
        } else if (value == "mean") {
            l1_normalization = L1Normalization::MeanOverCoefficients;
        } else {
            throw InvalidArgument("l1_normalization must be sum|gaussian-mean|mean");
        }
    } else if (key == "l1_include_dc") {
        l1_include_dc = parse_bool(key, value);
    } else if (key == "sampling") {
        sampling = LevelSampling::parse(value);
    } else if (key == "ssim_weight") {
        ssim_weight = parse_double(key, value);
    } else if (key == "lr_position_init") {
        rates.position_init = parse_double(key, value);
    } else if (key == "lr_position_final") {
        rates.position_final = parse_double(key, value);
    } else if (key == "lr_sh_dc") {
        rates.sh_dc = parse_double(key, value);
    } else if (key == "lr_sh_rest") {
        rates.sh_rest = parse_double(key, value);
    } else if (key == "lr_opacity") {
        rates.opacity = parse_double(key, value);
    } else if (key == "lr_scale") {
        rates.scale = parse_double(key, value);
    } else if (key == "lr_rotation") {
        rates.rotation = parse_double(key, value);
    } else if (key == "seed") {
        seed = static_cast<std::uint64_t>(parse_double(key, value));
    } else if (key == "threads") {
        render.workers = std::max(1, static_cast<int>(parse_double(key, value)));
    } else if (key == "log_every") {
        log_every = std::max(1, static_cast<int>(parse_double(key, value)));
    } else {
        throw InvalidArgument("unknown fine-tune setting '" + key + "'");
    }
}

void FinetuneConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
        }
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

FinetuneResult finetune(const GaussianModel& model, const Hierarchy& hierarchy, std::span<const View> views,
                        const QuantizationSpec& spec, const FinetuneConfig& config, const QuantParams* frozen) {
    model.validate();
    hierarchy.validate();
    if (hierarchy.source_count != model.size()) {
        throw InvalidArgument("hierarchy was built for " + std::to_string(hierarchy.source_count) +
                              " Gaussians but the model has " + std::to_string(model.size()));
    }
    if (views.empty()) throw InvalidArgument("fine-tuning needs at least one view");
    if (config.iterations < 0 || config.sh_l1_weight < 0) throw InvalidArgument("invalid fine-tune config");

    FinetuneResult result;
    result.model = model;
    result.params = frozen ? *frozen : compute_quant_params(model, hierarchy, spec);
    if (config.iterations == 0) return result;

    const int levels = hierarchy.levels();
    std::vector<std::vector<std::size_t>> level_rows(levels);
    for (int l = 0; l < levels; ++l) level_rows[l] = hierarchy.level_indices(l);

    const double extent = scene_extent(views);
    MaskedAdam adam(model.size(), config.rates, extent > 0.0 ? extent : 1.0, config.iterations);
    const LevelSampler sampler(levels, config.sampling, std::max<std::size_t>(level_rows.front().size(), 1),
                               std::max<std::size_t>(level_rows.back().size(), 1));
    Rng rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick_view(0, views.size() - 1);

    if (config.progress) *config.progress << "iteration,level,loss\n";
    result.losses.reserve(config.iterations);
    result.levels.reserve(config.iterations);

    for (int it = 0; it < config.iterations; ++it) {
        const View& view = views[pick_view(rng)];
        const int level = sampler(rng);
        const auto& rows = level_rows[level];
        if (rows.empty()) {
            result.losses.push_back(0.0);
            result.levels.push_back(level);
            continue;
        }

        const GaussianModel latent = subset(result.model, rows);
        const GaussianModel quantized = apply_quantization(latent, spec, result.params);
        const RenderState st = render_forward(quantized, view.camera, config.render);
        const LossResult loss = loss_and_grad(st.image, view.target, config.ssim_weight);
        // Straight-through: gradients with respect to the quantized values are applied to the latent ones.
        GradientBuffer grad = render_backward(quantized, st, loss.d_image);

        double total = loss.loss;
        if (config.sh_l1_weight > 0.0) {
            const int first = config.l1_include_dc ? 0 : 3;
            double weight = config.sh_l1_weight;
            if (config.l1_normalization == L1Normalization::MeanOverGaussians) {
                weight /= static_cast<double>(rows.size());
            } else if (config.l1_normalization == L1Normalization::MeanOverCoefficients) {
                weight /= static_cast<double>(rows.size()) * (kShScalars - first);
            }
            double l1 = 0.0;
            for (std::size_t j = 0; j < rows.size(); ++j) {
                for (int k = first; k < kShScalars; ++k) {
                    const double c = latent.sh[j * kShScalars + k];
                    l1 += std::abs(c);
                    grad.sh[j * kShScalars + k] += weight * (c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0));
                }
            }
            total += weight * l1;
        }

        adam.step(result.model, rows, grad, it);
        result.losses.push_back(total);
        result.levels.push_back(level);

        if (config.progress && (it % config.log_every == 0 || it + 1 == config.iterations)) {
            *config.progress << it << "," << level << "," << total << "\n";
        }
        if (config.checkpoint_every > 0 && config.checkpoint && (it + 1) % config.checkpoint_every == 0) {
            config.checkpoint(it + 1, result.model);
        }
    }
    return result;
}

}  // namespace gode
