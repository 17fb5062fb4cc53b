#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gode/model.hpp"
#include "gode/optimizer.hpp"
#include "gode/renderer.hpp"

namespace gode {

enum class SceneKind { Blobs };

SceneKind parse_scene_kind(const std::string& s);

struct SyntheticScene {
    std::vector<View> views;
    GaussianModel reference;  // the model the targets were rendered from
};

/// Procedural reference model viewed from `n_views` cameras on a circle around the origin.
/// Targets are exact renders of the reference (black background).
SyntheticScene make_synthetic_scene(SceneKind kind, int n_views, int resolution, std::uint64_t seed,
                                    int reference_gaussians = 600);

struct FitConfig {
    int iterations = 3000;
    std::uint64_t seed = 0;
    double ssim_weight = 0.2;
    LearningRates rates;
    RenderOptions render;
    std::ostream* progress = nullptr;  // CSV "iteration,loss"
    int log_every = 100;
};

/// Fixed-count initialization inside the volume every camera sees: random DC color,
/// isotropic scale 2% of the scene extent, identity rotation, opacity 0.1.
GaussianModel initialize_gaussians(std::span<const View> views, std::size_t n, std::uint64_t seed);

/// Fixed-count gradient-descent fit of `n` Gaussians to the views (no densification).
GaussianModel fit(std::span<const View> views, std::size_t n, const FitConfig& config);
GaussianModel fit(std::span<const View> views, std::size_t n, int iterations, std::uint64_t seed);

}  // namespace gode
