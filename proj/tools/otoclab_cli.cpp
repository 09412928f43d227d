// Command-line front end: analytic velocities, circuit compilation, OTOC
// surfaces, and the full butterfly-velocity pipeline, driven by a JSON config
// with flag overrides (flags win).

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "otoclab/otoclab.hpp"

namespace {

using namespace otoclab;

std::filesystem::path resolve_outdir(const RunConfig& cfg) {
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    if (const char* env = std::getenv("OTOCLAB_OUT"); env && *env) return env;
    return ".";
}

std::vector<double> linear_grid(double lo, double hi, double step) {
    if (step <= 0.0) throw std::invalid_argument("grid step must be positive");
    std::vector<double> grid;
    const int count = int(std::round((hi - lo) / step));
    for (int i = 0; i <= count; ++i) grid.push_back(lo + i * step);
    return grid;
}

// Common config plumbing: every subcommand takes --config plus overrides.
struct CommonOpts {
    std::string config_path;
    double J = 1.0, r = 0.0, h = 0.0;
    int n = 5;
    std::string mode = "exact";
    std::string compiler = "exact-U";
    int layers = 8;
    double t_max = 3.0, t_step = 0.05;
    std::vector<int> j_list;
    long shots = 0;
    double p2 = 0.0, p_read = 0.0;
    std::uint64_t seed = 1;
    int n_traj = 48;
    int restarts = 3;
    std::string outdir;
    int jobs = 1;

    void attach(CLI::App* sub) {
        // --h is the transverse field, so help keeps only its long spelling.
        sub->set_help_flag("--help", "print this help message and exit");
        sub->add_option("--config", config_path, "JSON config file; flags override it")
            ->check(CLI::ExistingFile);
        sub->add_option("--J", J, "coupling J");
        sub->add_option("--r", r, "anisotropy r");
        sub->add_option("--h", h, "transverse field h");
        sub->add_option("--n", n, "chain length")->check(CLI::Range(1, 12));
        sub->add_option("--mode", mode, "estimator: exact|sampled|noisy");
        sub->add_option("--compiler", compiler, "evolution: exact-U|rtr|trotter");
        sub->add_option("--layers", layers, "circuit depth")->check(CLI::PositiveNumber);
        sub->add_option("--t-max", t_max, "time grid end");
        sub->add_option("--t-step", t_step, "time grid step");
        sub->add_option("--j-list", j_list, "probe sites (default 2..n)");
        sub->add_option("--shots", shots, "shots per point (0 = exact probabilities)");
        sub->add_option("--p2", p2, "two-qubit depolarizing probability");
        sub->add_option("--p-read", p_read, "readout flip probability");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--n-traj", n_traj, "noise trajectories per point");
        sub->add_option("--restarts", restarts, "optimizer restarts");
        sub->add_option("--out", outdir, "output directory (default $OTOCLAB_OUT or .)");
        sub->add_option("--jobs", jobs, "parallel workers for grid evaluation")
            ->check(CLI::PositiveNumber);
    }

    RunConfig resolve(const CLI::App* sub) const {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        const auto set = [sub](const char* name) { return sub->count(name) > 0; };
        if (set("--J")) cfg.model.J = J;
        if (set("--r")) cfg.model.r = r;
        if (set("--h")) cfg.model.h = h;
        if (set("--n")) cfg.model.n = n;
        if (set("--mode")) cfg.mode = mode;
        if (set("--compiler")) cfg.compiler.type = compiler;
        if (set("--layers")) cfg.compiler.layers = layers;
        if (set("--t-max")) cfg.t_max = t_max;
        if (set("--t-step")) cfg.t_step = t_step;
        if (set("--j-list")) cfg.j_list = j_list;
        if (set("--shots")) cfg.shots = shots;
        if (set("--p2")) cfg.noise.p2 = p2;
        if (set("--p-read")) cfg.noise.p_read = p_read;
        if (set("--seed")) cfg.seed = seed;
        if (set("--n-traj")) cfg.n_traj = n_traj;
        if (set("--restarts")) cfg.compiler.trust.restarts = restarts;
        if (set("--out")) cfg.output_dir = outdir;
        if (set("--jobs")) cfg.jobs = jobs;
        cfg.validate();
        return cfg;
    }
};

// Time-indexed evolution provider.  The rtr path keeps the previous solution
// as the next start, falling back to fresh restarts when continuation stalls.
std::function<Evolution(double)> make_evolution(const RunConfig& cfg) {
    if (cfg.compiler.type == "trotter") {
        const ModelParams p = cfg.model;
        const int layers = cfg.compiler.layers;
        return [p, layers](double t) -> Evolution { return trotter_compile(p, t, layers); };
    }
    auto spectral = std::make_shared<SpectralEvolution>(build_xy_hamiltonian(cfg.model));
    if (cfg.compiler.type == "exact-U")
        return [spectral](double t) -> Evolution { return spectral->at(t); };

    TrustRegionConfig tr = cfg.compiler.trust;
    tr.seed = cfg.seed;
    const int n = cfg.model.n;
    const int layers = cfg.compiler.layers;
    auto prev = std::make_shared<std::optional<GateSequence>>();
    return [spectral, tr, n, layers, prev](double t) -> Evolution {
        const Matrix target = spectral->at(t);
        CompilationResult res;
        if (prev->has_value()) {
            res = rtr_compile_from(**prev, target, tr);
            if (res.final_error > 0.05) {
                CompilationResult fresh = rtr_compile(target, n, layers, tr);
                if (fresh.final_cost < res.final_cost) res = fresh;
            }
        } else {
            res = rtr_compile(target, n, layers, tr);
        }
        *prev = res.gates;
        return res.gates;
    };
}

SurfaceOptions surface_options(const RunConfig& cfg) {
    SurfaceOptions opts;
    opts.mode = mode_from_string(cfg.mode);
    opts.noise = cfg.noise;
    opts.shots = cfg.shots;
    opts.seed = cfg.seed;
    opts.n_traj = cfg.n_traj;
    return opts;
}

void write_output(const RunConfig& cfg, const std::string& name, const std::string& body,
                  bool with_header = true) {
    const std::filesystem::path path = resolve_outdir(cfg) / name;
    atomic_write(path, with_header ? metadata_header(config_hash(cfg), cfg.seed) + body : body);
    std::cout << "wrote " << path.string() << "\n";
}

json with_meta(const RunConfig& cfg, json body) {
    body["meta"] = {{"version", version_string},
                    {"config_hash", config_hash(cfg)},
                    {"seed", cfg.seed}};
    return body;
}

void cmd_analytic(const CommonOpts& opts, const CLI::App* sub, bool do_sweep,
                  const std::vector<double>& r_range, const std::vector<double>& h_range) {
    const RunConfig cfg = opts.resolve(sub);
    if (!do_sweep) {
        const VelocityResult v = butterfly_velocity(cfg.model.J, cfg.model.r, cfg.model.h);
        std::printf("%.6f\n", v.v_B);
        return;
    }
    const auto r_grid = linear_grid(r_range[0], r_range[1], r_range[2]);
    const auto h_grid = linear_grid(h_range[0], h_range[1], h_range[2]);
    std::cout << sweep_csv(r_grid, h_grid, vb_sweep(r_grid, h_grid, cfg.model.J));
}

void cmd_sweep(const CommonOpts& opts, const CLI::App* sub,
               const std::vector<double>& r_range, const std::vector<double>& h_range) {
    const RunConfig cfg = opts.resolve(sub);
    const auto r_grid = linear_grid(r_range[0], r_range[1], r_range[2]);
    const auto h_grid = linear_grid(h_range[0], h_range[1], h_range[2]);
    std::vector<std::vector<double>> grid(r_grid.size(),
                                          std::vector<double>(h_grid.size(), 0.0));
    parallel_for(r_grid.size(), unsigned(cfg.jobs), [&](std::size_t i) {
        for (std::size_t k = 0; k < h_grid.size(); ++k)
            grid[i][k] = butterfly_velocity(cfg.model.J, r_grid[i], h_grid[k]).v_B;
    });
    write_output(cfg, "vb_sweep.csv", sweep_csv(r_grid, h_grid, grid));
}

void cmd_compile(const CommonOpts& opts, const CLI::App* sub, double t,
                 const std::vector<int>& depths) {
    const RunConfig cfg = opts.resolve(sub);
    if (cfg.model.n < 2) throw std::invalid_argument("compile needs n >= 2");
    const Matrix target = SpectralEvolution(build_xy_hamiltonian(cfg.model)).at(t);
    TrustRegionConfig tr = cfg.compiler.trust;
    tr.seed = cfg.seed;

    std::string csv = "layers,rtr_error,lt_error\n";
    for (int d : depths) {
        if (d < 1) throw std::invalid_argument("depth list entries must be >= 1");
        const CompilationResult rtr = rtr_compile(target, cfg.model.n, d, tr);
        std::string lt = "nan";
        if (d % 2 == 0)
            lt = fmt12(normalized_error(trotter_compile(cfg.model, t, d), target));
        csv += std::to_string(d) + "," + fmt12(rtr.final_error) + "," + lt + "\n";
    }
    write_output(cfg, "compile_errors.csv", csv);

    const CompilationResult res = rtr_compile(target, cfg.model.n, cfg.compiler.layers, tr);
    write_output(cfg, "compile_result.json",
                 with_meta(cfg, compilation_to_json(res)).dump(2) + "\n", false);
    std::printf("rtr layers=%d error=%.3e iterations=%d converged=%s\n", cfg.compiler.layers,
                res.final_error, res.iterations, res.converged ? "yes" : "no");
}

void cmd_otoc(const CommonOpts& opts, const CLI::App* sub) {
    const RunConfig cfg = opts.resolve(sub);
    if (cfg.model.n < 2) throw std::invalid_argument("otoc needs n >= 2");
    const auto j_list = cfg.j_list.empty() ? default_j_list(cfg.model.n) : cfg.j_list;
    const auto t_grid = default_t_grid(cfg.t_max, cfg.t_step);
    const auto points =
        otoc_surface(cfg.model, j_list, t_grid, make_evolution(cfg), surface_options(cfg));
    write_output(cfg, "otoc_surface.csv", surface_csv(points));
    std::size_t failed = 0;
    for (const auto& pt : points)
        if (!pt.ok) ++failed;
    std::printf("surface: %zu points, %zu failed\n", points.size(), failed);
    for (const auto& pt : points)
        if (!pt.ok)
            std::fprintf(stderr, "point j=%d t=%g failed: %s\n", pt.rec.j, pt.rec.t,
                         pt.error.c_str());
}

void cmd_velocity(const CommonOpts& opts, const CLI::App* sub) {
    const RunConfig cfg = opts.resolve(sub);
    if (cfg.model.n < 2) throw std::invalid_argument("velocity needs n >= 2");
    PipelineOptions po;
    po.j_list = cfg.j_list;
    po.t_grid = default_t_grid(cfg.t_max, cfg.t_step);
    po.surface = surface_options(cfg);
    const PipelineResult res = run_pipeline(cfg.model, make_evolution(cfg), po);

    write_output(cfg, "otoc_surface.csv", surface_csv(res.surface));
    write_output(cfg, "velocity_fit.json", with_meta(cfg, fit_report_json(res)).dump(2) + "\n",
                 false);

    std::printf("model J=%g r=%g h=%g n=%d  mode=%s compiler=%s\n", cfg.model.J, cfg.model.r,
                cfg.model.h, cfg.model.n, cfg.mode.c_str(), cfg.compiler.type.c_str());
    for (const auto& sp : res.spreading)
        if (sp.quality != CrossingQuality::not_reached)
            std::printf("  t_%d = %.4f\n", sp.j, sp.t_j);
    std::printf("analytic v_B = %.6f\n", res.analytic_vB);
    std::printf("fitted   v_B = %.6f  (rel dev %.2f%%)\n", res.fit.v_B, 100.0 * res.rel_dev);
    for (const auto& warning : res.warnings)
        std::fprintf(stderr, "warning: %s\n", warning.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"butterfly-velocity laboratory for the 1d anisotropic XY chain"};
    app.set_help_flag("--help", "print this help message and exit");
    app.set_version_flag("--version", otoclab::version_string);
    app.require_subcommand(1);

    CommonOpts analytic_opts, sweep_opts, compile_opts, otoc_opts, velocity_opts;
    bool analytic_do_sweep = false;
    std::vector<double> analytic_r_range{-2.0, 2.0, 0.1}, analytic_h_range{-2.0, 2.0, 0.1};
    std::vector<double> sweep_r_range{-2.0, 2.0, 0.1}, sweep_h_range{-2.0, 2.0, 0.1};
    double compile_t = 1.0;
    std::vector<int> compile_depths{2, 4, 6, 8};

    auto* analytic = app.add_subcommand("analytic", "closed-form butterfly velocity");
    analytic_opts.attach(analytic);
    analytic->add_flag("--sweep", analytic_do_sweep, "emit the (r, h) sweep CSV to stdout");
    analytic->add_option("--r-range", analytic_r_range, "sweep r grid: min max step")
        ->expected(3);
    analytic->add_option("--h-range", analytic_h_range, "sweep h grid: min max step")
        ->expected(3);
    analytic->callback([&] {
        cmd_analytic(analytic_opts, analytic, analytic_do_sweep, analytic_r_range,
                     analytic_h_range);
    });

    auto* sweep = app.add_subcommand("sweep", "butterfly velocity over an (r, h) grid");
    sweep_opts.attach(sweep);
    sweep->add_option("--r-range", sweep_r_range, "r grid: min max step")->expected(3);
    sweep->add_option("--h-range", sweep_h_range, "h grid: min max step")->expected(3);
    sweep->callback([&] { cmd_sweep(sweep_opts, sweep, sweep_r_range, sweep_h_range); });

    auto* compile = app.add_subcommand("compile", "compile exp(-iHt) into a brick-wall circuit");
    compile_opts.attach(compile);
    compile->add_option("--t", compile_t, "evolution time");
    compile->add_option("--depths", compile_depths, "layer counts for the error curve");
    compile->callback([&] { cmd_compile(compile_opts, compile, compile_t, compile_depths); });

    auto* otoc = app.add_subcommand("otoc", "C_j(t) surface over the (j, t) grid");
    otoc_opts.attach(otoc);
    otoc->callback([&] { cmd_otoc(otoc_opts, otoc); });

    auto* velocity = app.add_subcommand("velocity", "full pipeline: surface, fit, summary");
    velocity_opts.attach(velocity);
    velocity->callback([&] { cmd_velocity(velocity_opts, velocity); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
