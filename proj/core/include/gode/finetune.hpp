#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gode/hierarchy.hpp"
#include "gode/model.hpp"
#include "gode/optimizer.hpp"
#include "gode/quantize.hpp"
#include "gode/renderer.hpp"

namespace gode {

using Rng = std::mt19937_64;

/// Level sampling during fine-tuning: uniform, or weighted towards upper levels with
/// probabilities proportional to floor(c_min * b'^l), b' = (c_max / c_min)^(1 / G).
struct LevelSampling {
    enum class Kind { Uniform, Weighted };
    Kind kind = Kind::Uniform;
    double g = 0.0;

    static LevelSampling uniform() { return {}; }
    static LevelSampling weighted(double g) { return {Kind::Weighted, g}; }
    /// "uniform" or "weighted:G".
    static LevelSampling parse(const std::string& s);
};

/// Per-level probabilities for `levels` levels spanning [c_min, c_max] Gaussians.
std::vector<double> level_probabilities(int levels, const LevelSampling& sampling, std::size_t c_min = 1,
                                        std::size_t c_max = 1);

class LevelSampler {
public:
    LevelSampler(int levels, const LevelSampling& sampling, std::size_t c_min = 1, std::size_t c_max = 1);
    int operator()(Rng& rng) const;
    const std::vector<double>& probabilities() const { return probabilities_; }

private:
    std::vector<double> probabilities_;
    std::vector<double> cdf_;
};

int sample_level(int levels, const LevelSampling& sampling, Rng& rng, std::size_t c_min = 1,
                 std::size_t c_max = 1);

enum class L1Normalization {
    Sum,                  // lambda * sum_i ||C_i||_1
    MeanOverGaussians,    // lambda / |G_l| * sum_i ||C_i||_1
    MeanOverCoefficients  // lambda / (|G_l| * penalized scalars per Gaussian) * sum_i ||C_i||_1
};

struct FinetuneConfig {
    int iterations = 30000;
    double sh_l1_weight = 1e-2;
    L1Normalization l1_normalization = L1Normalization::MeanOverCoefficients;
    bool l1_include_dc = true;
    LevelSampling sampling;
    double ssim_weight = 0.2;
    LearningRates rates;
    std::uint64_t seed = 0;
    RenderOptions render;

    /// CSV rows "iteration,level,loss" every `log_every` iterations when set.
    std::ostream* progress = nullptr;
    int log_every = 100;

    /// Optional periodic export of the latent model; off when checkpoint_every == 0.
    int checkpoint_every = 0;
    std::function<void(int, const GaussianModel&)> checkpoint;

    /// Applies one key=value setting; throws InvalidArgument on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    /// Reads a flat key=value file ('#' starts a comment).
    void load(const std::filesystem::path& path);
};

struct FinetuneResult {
    GaussianModel model;  // latent (unquantized) parameters
    QuantParams params;   // frozen ranges used throughout training
    std::vector<double> losses;
    std::vector<int> levels;
};

/// Quantization-aware fine-tuning over randomly sampled levels. Quantization ranges are
/// `frozen` when given, otherwise computed once from the input model before training.
FinetuneResult finetune(const GaussianModel& model, const Hierarchy& hierarchy, std::span<const View> views,
                        const QuantizationSpec& spec, const FinetuneConfig& config,
                        const QuantParams* frozen = nullptr);

}  // namespace gode
