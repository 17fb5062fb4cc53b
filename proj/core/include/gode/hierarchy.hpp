#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gode/model.hpp"
#include "gode/renderer.hpp"

namespace gode {

/// Logarithmic level progression |G_l| = floor(c_min * b^l), b = (c_max / c_min)^(1 / (L - 1)).
struct LevelProgression {
    std::size_t c_min = 0;
    std::size_t c_max = 0;
    int levels = 0;
    double base = 1.0;
    std::vector<std::size_t> cumulative;  // |G_l|
    std::vector<std::size_t> increments;  // k_s; increments[0] == c_min

    std::size_t total() const { return cumulative.empty() ? 0 : cumulative.back(); }
};

/// floor(c_min * base^level). Products within 1e-9 (relative) of an integer count as that
/// integer, so exact bases such as 2 are not lost to pow/log round-off. Saturates at SIZE_MAX.
std::size_t progression_count(std::size_t c_min, double base, int level);
/// The same floor held as a double (may be +inf), for weights that need not fit a count.
double progression_value(std::size_t c_min, double base, int level);

LevelProgression compute_progression(std::size_t c_min, std::size_t c_max, int levels);

/// Default top-level budget: floor(0.75 * N).
std::size_t default_c_max(std::size_t n, double fraction = 0.75);

/// Disjoint base set G_0 and enhancement sets E_1..E_{L-1}, as indices into the source model.
struct Hierarchy {
    std::vector<std::size_t> base;
    std::vector<std::vector<std::size_t>> enhancements;
    std::size_t source_count = 0;

    int levels() const { return static_cast<int>(enhancements.size()) + 1; }
    std::size_t level_size(int level) const;
    /// G_level as base ++ E_1 ++ ... ++ E_level. Decoded streams use this order.
    std::vector<std::size_t> level_indices(int level) const;
    std::vector<std::size_t> layer_sizes() const;

    /// Checks disjointness and index range; throws InvalidArgument.
    void validate() const;

    bool operator==(const Hierarchy&) const = default;
};

/// Hierarchy whose layers are consecutive index ranges with the given sizes,
/// i.e. the layout of a decoded stream.
Hierarchy contiguous_hierarchy(std::span<const std::size_t> layer_sizes);

enum class ScoreKind { GradientNorm, Opacity };
enum class ScoreAccumulation { NormThenSum, SumThenNorm };

ScoreKind parse_score_kind(const std::string& s);

struct ScoreOptions {
    ScoreKind kind = ScoreKind::GradientNorm;
    ScoreAccumulation accumulation = ScoreAccumulation::NormThenSum;
    double ssim_weight = 0.2;
    RenderOptions render;
};

inline constexpr double kInactiveScore = std::numeric_limits<double>::infinity();

/// Importance score per Gaussian of `model` (size N). Indices not in `active` get +inf.
std::vector<double> accumulate_scores(const GaussianModel& model, std::span<const std::size_t> active,
                                      std::span<const View> views, const ScoreOptions& options = {});

/// The `k` active indices with the lowest scores, ties broken by lower index,
/// returned in ascending index order.
std::vector<std::size_t> lowest_k(std::span<const double> scores, std::span<const std::size_t> active,
                                  std::size_t k);

struct HierarchyOptions {
    ScoreOptions score;
    bool one_shot = false;
};

/// Top-down iterative masking. When N exceeds the progression total, the
/// lowest-scoring N - total Gaussians are dropped first and belong to no layer.
Hierarchy build_hierarchy(const GaussianModel& model, std::span<const View> views,
                          const LevelProgression& progression, const HierarchyOptions& options = {});

/// JSON sidecar {c_min, c_max, L, k_s, source_count, base, enhancements}.
void save_hierarchy_json(const Hierarchy& h, const LevelProgression& p, const std::filesystem::path& path);
Hierarchy load_hierarchy_json(const std::filesystem::path& path);

}  // namespace gode
