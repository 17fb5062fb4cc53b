// Command-line front end: synthetic data, fitting, hierarchy construction,
// fine-tuning, encoding and evaluation of layered Gaussian splat streams.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gode/codec.hpp"
#include "gode/error.hpp"
#include "gode/finetune.hpp"
#include "gode/hierarchy.hpp"
#include "gode/io.hpp"
#include "gode/metrics.hpp"
#include "gode/ply.hpp"
#include "gode/quantize.hpp"
#include "gode/scene_fit.hpp"

namespace fs = std::filesystem;
using namespace gode;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    int threads = 1;

    RenderOptions render() const {
        RenderOptions o;
        o.workers = threads;
        return o;
    }
};

fs::path qparams_sidecar(const fs::path& model) { return fs::path(model.string() + ".qparams.json"); }

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::string frame_name(const std::string& prefix, int i) {
    std::ostringstream s;
    s << prefix << std::setw(3) << std::setfill('0') << i << ".png";
    return s.str();
}

const View& pick_view(const std::vector<View>& views, int index) {
    if (index < 0 || index >= static_cast<int>(views.size())) {
        throw InvalidArgument("camera index " + std::to_string(index) + " outside [0, " +
                              std::to_string(views.size()) + ")");
    }
    return views[index];
}

LevelProgression progression_for(std::size_t n, int levels, std::size_t c_min, double cmax_frac) {
    const std::size_t c_max = default_c_max(n, cmax_frac);
    if (c_max < c_min) {
        throw InvalidArgument("c_max = " + std::to_string(c_max) + " (" + std::to_string(cmax_frac) + " x " +
                              std::to_string(n) + ") is below c_min = " + std::to_string(c_min));
    }
    return compute_progression(c_min, c_max, levels);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Progressive level-of-detail codec for 3D Gaussian splats"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Renderer worker threads")->capture_default_str()->check(CLI::PositiveNumber);

    // synth
    auto* synth = app.add_subcommand("synth", "Render a procedural reference scene into posed views");
    std::string synth_dir, synth_kind = "blobs";
    int synth_views = 8, synth_res = 128, synth_blobs = 600;
    synth->add_option("--out-dir", synth_dir, "Output directory (views.json, PNGs, reference.ply)")->required();
    synth->add_option("--kind", synth_kind, "Scene kind")->capture_default_str();
    synth->add_option("--views", synth_views, "Number of views")->capture_default_str();
    synth->add_option("--resolution", synth_res, "Image width and height")->capture_default_str();
    synth->add_option("--blobs", synth_blobs, "Gaussians in the reference scene")->capture_default_str();

    // fit
    auto* fitc = app.add_subcommand("fit", "Fit a fixed number of Gaussians to posed images");
    std::string fit_views, fit_out, fit_log;
    std::size_t fit_n = 5000;
    int fit_iters = 3000;
    fitc->add_option("--views", fit_views, "Views JSON")->required();
    fitc->add_option("--n", fit_n, "Number of Gaussians")->capture_default_str();
    fitc->add_option("--iters", fit_iters, "Iterations")->capture_default_str();
    fitc->add_option("--out", fit_out, "Output PLY")->required();
    fitc->add_option("--log", fit_log, "Optional CSV loss log");

    // hierarchy
    auto* hier = app.add_subcommand("hierarchy", "Build base and enhancement layers by iterative masking");
    std::string h_model, h_views, h_out, h_score = "gradient", h_accum = "norm-sum";
    int h_levels = 8;
    std::size_t h_cmin = 100000;
    double h_frac = 0.75;
    bool h_one_shot = false;
    hier->add_option("--model", h_model, "Input PLY")->required();
    hier->add_option("--views", h_views, "Views JSON")->required();
    hier->add_option("--levels", h_levels, "Number of levels L")->capture_default_str();
    hier->add_option("--cmin", h_cmin, "Gaussians in the base level")->capture_default_str();
    hier->add_option("--cmax-frac", h_frac, "Top level size as a fraction of the model")->capture_default_str();
    hier->add_option("--score", h_score, "gradient | opacity")->capture_default_str();
    hier->add_option("--accumulation", h_accum, "norm-sum | sum-norm")->capture_default_str();
    hier->add_flag("--one-shot", h_one_shot, "Score once instead of after every masking step");
    hier->add_option("--out", h_out, "Output hierarchy JSON")->required();

    // finetune
    auto* ft = app.add_subcommand("finetune", "Quantization-aware fine-tuning over sampled levels");
    std::string ft_model, ft_hier, ft_views, ft_out, ft_config, ft_log, ft_sampling, ft_norm;
    int ft_iters = -1;
    double ft_lambda = -1.0;
    ft->add_option("--model", ft_model, "Input PLY")->required();
    ft->add_option("--hierarchy", ft_hier, "Hierarchy JSON")->required();
    ft->add_option("--views", ft_views, "Views JSON")->required();
    ft->add_option("--config", ft_config, "key=value settings file");
    ft->add_option("--iters", ft_iters, "Iterations (default 30000)");
    ft->add_option("--lambda", ft_lambda, "SH L1 weight (default 1e-2)");
    ft->add_option("--sampling", ft_sampling, "uniform | weighted:G");
    ft->add_option("--l1-normalization", ft_norm, "sum | gaussian-mean | mean");
    ft->add_option("--log", ft_log, "Optional CSV progress log");
    ft->add_option("--out", ft_out, "Output PLY (frozen ranges go to <out>.qparams.json)")->required();

    // encode
    auto* enc = app.add_subcommand("encode", "Write a layered .gode stream");
    std::string e_model, e_hier, e_out, e_qparams;
    int e_preset = 6;
    enc->add_option("--model", e_model, "Fine-tuned PLY")->required();
    enc->add_option("--hierarchy", e_hier, "Hierarchy JSON")->required();
    enc->add_option("--qparams", e_qparams, "Frozen ranges (default <model>.qparams.json if present)");
    enc->add_option("--preset", e_preset, "LZMA preset 0-9")->capture_default_str()->check(CLI::Range(0, 9));
    enc->add_option("--out", e_out, "Output .gode")->required();

    // decode
    auto* dec = app.add_subcommand("decode", "Decode one level of a stream to PLY");
    std::string d_in, d_out;
    int d_level = 0;
    dec->add_option("--in", d_in, "Input .gode (may be a truncated prefix)")->required();
    dec->add_option("--level", d_level, "Level to decode")->required();
    dec->add_option("--out", d_out, "Output PLY")->required();

    // truncate
    auto* trn = app.add_subcommand("truncate", "Cut a stream after the given level");
    std::string t_in, t_out;
    int t_level = 0;
    trn->add_option("--in", t_in, "Input .gode")->required();
    trn->add_option("--level", t_level, "Last level kept")->required();
    trn->add_option("--out", t_out, "Output .gode")->required();

    // render
    auto* ren = app.add_subcommand("render", "Render one level from one camera");
    std::string r_in, r_views, r_out;
    int r_level = 0, r_camera = 0;
    ren->add_option("--in", r_in, "Input .gode")->required();
    ren->add_option("--views", r_views, "Views JSON providing cameras")->required();
    ren->add_option("--level", r_level, "Level")->required();
    ren->add_option("--camera", r_camera, "Camera index")->capture_default_str();
    ren->add_option("--out", r_out, "Output PNG")->required();

    // transition
    auto* tr = app.add_subcommand("transition", "Render frames blending level l into level l+1");
    std::string tr_in, tr_views, tr_out;
    int tr_level = 0, tr_camera = 0, tr_steps = 8;
    tr->add_option("--in", tr_in, "Input .gode")->required();
    tr->add_option("--views", tr_views, "Views JSON providing cameras")->required();
    tr->add_option("--level", tr_level, "Lower level l")->required();
    tr->add_option("--camera", tr_camera, "Camera index")->capture_default_str();
    tr->add_option("--steps", tr_steps, "Number of frames (t from 0 to 1)")->capture_default_str()->check(CLI::Range(2, 100000));
    tr->add_option("--out", tr_out, "Output directory")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "Per-level quality and size report");
    std::string ev_in, ev_views, ev_out, ev_png;
    ev->add_option("--in", ev_in, "Input .gode")->required();
    ev->add_option("--views", ev_views, "Views JSON with target images")->required();
    ev->add_option("--out", ev_out, "Output CSV (default stdout)");
    ev->add_option("--png-dir", ev_png, "Also write every rendered view here");

    // ablate-flat
    auto* ab = app.add_subcommand("ablate-flat", "Independent per-level mask and fine-tune (no hierarchy)");
    std::string ab_model, ab_views, ab_out, ab_sampling = "uniform";
    int ab_levels = 8, ab_iters = 30000;
    std::size_t ab_cmin = 100000;
    double ab_frac = 0.75, ab_lambda = 1e-2;
    ab->add_option("--model", ab_model, "Input PLY")->required();
    ab->add_option("--views", ab_views, "Views JSON")->required();
    ab->add_option("--levels", ab_levels, "Number of levels")->capture_default_str();
    ab->add_option("--cmin", ab_cmin, "Smallest level size")->capture_default_str();
    ab->add_option("--cmax-frac", ab_frac, "Largest level as a fraction of the model")->capture_default_str();
    ab->add_option("--iters", ab_iters, "Fine-tune iterations per level")->capture_default_str();
    ab->add_option("--lambda", ab_lambda, "SH L1 weight")->capture_default_str();
    ab->add_option("--out", ab_out, "Output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    try {
        if (*synth) {
            const auto scene = make_synthetic_scene(parse_scene_kind(synth_kind), synth_views, synth_res, g.seed, synth_blobs);
            fs::create_directories(synth_dir);
            save_views(scene.views, fs::path(synth_dir) / "views.json");
            save_ply(scene.reference, fs::path(synth_dir) / "reference.ply");
            std::cerr << "wrote " << scene.views.size() << " views to " << synth_dir << "\n";
        } else if (*fitc) {
            const auto views = load_views(fit_views);
            FitConfig cfg;
            cfg.iterations = fit_iters;
            cfg.seed = g.seed;
            cfg.render = g.render();
            std::ofstream log;
            if (!fit_log.empty()) {
                log.open(fit_log);
                cfg.progress = &log;
            }
            const GaussianModel m = fit(views, fit_n, cfg);
            ensure_parent(fit_out);
            save_ply(m, fit_out);
            std::cerr << "fitted " << m.size() << " Gaussians\n";
        } else if (*hier) {
            const GaussianModel model = load_ply(h_model);
            const auto views = load_views(h_views);
            const auto prog = progression_for(model.size(), h_levels, h_cmin, h_frac);
            HierarchyOptions opts;
            opts.score.kind = parse_score_kind(h_score);
            if (h_accum == "norm-sum") {
                opts.score.accumulation = ScoreAccumulation::NormThenSum;
            } else if (h_accum == "sum-norm") {
                opts.score.accumulation = ScoreAccumulation::SumThenNorm;
            } else {
                throw InvalidArgument("--accumulation must be norm-sum or sum-norm");
            }
            opts.score.render = g.render();
            opts.one_shot = h_one_shot;
            const Hierarchy h = build_hierarchy(model, views, prog, opts);
            ensure_parent(h_out);
            save_hierarchy_json(h, prog, h_out);
            std::cerr << "levels:";
            for (auto c : prog.cumulative) std::cerr << " " << c;
            std::cerr << "\n";
        } else if (*ft) {
            const GaussianModel model = load_ply(ft_model);
            const Hierarchy h = load_hierarchy_json(ft_hier);
            const auto views = load_views(ft_views);
            FinetuneConfig cfg;
            cfg.seed = g.seed;
            if (!ft_config.empty()) cfg.load(ft_config);
            if (ft_iters >= 0) cfg.iterations = ft_iters;
            if (ft_lambda >= 0) cfg.sh_l1_weight = ft_lambda;
            if (!ft_sampling.empty()) cfg.set("sampling", ft_sampling);
            if (!ft_norm.empty()) cfg.set("l1_normalization", ft_norm);
            cfg.render = g.render();
            std::ofstream log;
            if (!ft_log.empty()) {
                log.open(ft_log);
                cfg.progress = &log;
            }
            const auto result = finetune(model, h, views, QuantizationSpec{}, cfg);
            ensure_parent(ft_out);
            save_ply(result.model, ft_out);
            save_quant_params_json(result.params, qparams_sidecar(ft_out));
            std::cerr << "fine-tuned " << cfg.iterations << " iterations\n";
        } else if (*enc) {
            const GaussianModel model = load_ply(e_model);
            const Hierarchy h = load_hierarchy_json(e_hier);
            const QuantizationSpec spec;
            QuantParams params;
            if (!e_qparams.empty()) {
                params = load_quant_params_json(e_qparams);
            } else if (fs::exists(qparams_sidecar(e_model))) {
                params = load_quant_params_json(qparams_sidecar(e_model));
            } else {
                params = compute_quant_params(model, h, spec);
            }
            EncodeStats stats;
            const GodeStream s = encode(model, h, spec, params, &stats, static_cast<std::uint8_t>(e_preset));
            ensure_parent(e_out);
            write_file(e_out, s.bytes());
            if (stats.clamped > 0) std::cerr << "warning: " << stats.clamped << " values clamped to their frozen range\n";
            std::cerr << "wrote " << s.size() << " bytes, " << s.header.levels() << " levels\n";
        } else if (*dec) {
            const GaussianModel m = decode(read_file(d_in), d_level);
            ensure_parent(d_out);
            save_ply(m, d_out);
        } else if (*trn) {
            const auto bytes = truncate(read_file(t_in), t_level);
            ensure_parent(t_out);
            write_file(t_out, bytes);
        } else if (*ren) {
            const auto views = load_views(r_views, false);
            const GaussianModel m = decode(read_file(r_in), r_level);
            ensure_parent(r_out);
            save_png(render(m, pick_view(views, r_camera).camera, g.render()), r_out);
        } else if (*tr) {
            const auto views = load_views(tr_views, false);
            const GodeStream s = parse_stream(read_file(tr_in));
            if (tr_level < 0 || tr_level + 1 >= s.header.levels()) {
                throw InvalidArgument("transition level must be in [0, L-1)");
            }
            const GaussianModel m = decode(s, tr_level + 1);
            std::vector<std::size_t> sizes(s.header.counts.begin(), s.header.counts.begin() + tr_level + 2);
            const Hierarchy h = contiguous_hierarchy(sizes);
            const Camera& cam = pick_view(views, tr_camera).camera;
            fs::create_directories(tr_out);
            for (int k = 0; k < tr_steps; ++k) {
                const double t = static_cast<double>(k) / (tr_steps - 1);
                save_png(render_transition(m, h, tr_level, t, cam, g.render()), fs::path(tr_out) / frame_name("frame_", k));
            }
        } else if (*ev) {
            const GodeStream s = parse_stream(read_file(ev_in));
            const auto views = load_views(ev_views);
            EvaluateOptions opts;
            opts.render = g.render();
            if (!ev_png.empty()) {
                fs::create_directories(ev_png);
                opts.png_dir = ev_png;
            }
            const auto rows = evaluate_levels(s, views, opts);
            if (ev_out.empty()) {
                write_report_csv(rows, std::cout);
            } else {
                ensure_parent(ev_out);
                std::ofstream out(ev_out);
                write_report_csv(rows, out);
            }
        } else if (*ab) {
            const GaussianModel model = load_ply(ab_model);
            const auto views = load_views(ab_views);
            const auto prog = progression_for(model.size(), ab_levels, ab_cmin, ab_frac);
            HierarchyOptions hopts;
            hopts.score.render = g.render();
            FinetuneConfig cfg;
            cfg.seed = g.seed;
            cfg.iterations = ab_iters;
            cfg.sh_l1_weight = ab_lambda;
            cfg.sampling = LevelSampling::parse(ab_sampling);
            cfg.render = g.render();
            std::vector<LevelReport> rows;
            for (int l = 0; l < prog.levels; ++l) {
                const std::size_t count = prog.cumulative[l];
                const Hierarchy h = build_hierarchy(model, views, compute_progression(count, count, 2), hopts);
                const auto tuned = finetune(model, h, views, QuantizationSpec{}, cfg);
                const GodeStream s = encode(tuned.model, h, QuantizationSpec{}, tuned.params);
                LevelReport r = evaluate_model(decode(s, 1), views, g.render());
                r.level = l;
                r.size_bytes = s.size();
                rows.push_back(r);
                std::cerr << "level " << l << ": " << count << " Gaussians, " << r.psnr_db << " dB\n";
            }
            if (ab_out.empty()) {
                write_report_csv(rows, std::cout);
            } else {
                ensure_parent(ab_out);
                std::ofstream out(ab_out);
                write_report_csv(rows, out);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
