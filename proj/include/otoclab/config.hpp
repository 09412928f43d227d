#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "otoclab/model.hpp"
#include "otoclab/rtr.hpp"
#include "otoclab/sim.hpp"
#include "otoclab/util.hpp"
#include "otoclab/yky.hpp"

namespace otoclab {

inline EstimatorMode mode_from_string(const std::string& s) {
    if (s == "exact") return EstimatorMode::exact;
    if (s == "sampled") return EstimatorMode::sampled;
    if (s == "noisy") return EstimatorMode::noisy;
    throw std::invalid_argument("unknown estimator mode: " + s);
}

struct CompilerSpec {
    std::string type = "exact-U";  // exact-U | rtr | trotter
    int layers = 8;
    TrustRegionConfig trust;

    void validate() const {
        if (type != "exact-U" && type != "rtr" && type != "trotter")
            throw std::invalid_argument("unknown compiler type: " + type);
        if (type != "exact-U" && layers < 1)
            throw std::invalid_argument("compiler needs at least one layer");
    }
};

struct RunConfig {
    ModelParams model{1.0, 0.0, 0.0, 5, Boundary::open};
    std::string mode = "exact";  // exact | sampled | noisy
    CompilerSpec compiler;
    double t_max = 3.0;
    double t_step = 0.05;
    std::vector<int> j_list;  // empty: {2..n}
    long shots = 0;
    NoiseSpec noise;
    std::uint64_t seed = 1;
    int n_traj = 48;
    std::string output_dir;  // empty: $OTOCLAB_OUT or "."
    int jobs = 1;

    void validate() const {
        model.validate();
        compiler.validate();
        noise.validate();
        mode_from_string(mode);
        if (t_step <= 0.0 || t_max < 0.0)
            throw std::invalid_argument("time grid needs t_step > 0 and t_max >= 0");
        if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
        if (n_traj < 1) throw std::invalid_argument("n_traj must be >= 1");
    }
};

using json_t = nlohmann::ordered_json;

inline json_t config_to_json(const RunConfig& c) {
    json_t out;
    out["model"] = {{"J", c.model.J},
                    {"r", c.model.r},
                    {"h", c.model.h},
                    {"n", c.model.n},
                    {"boundary", c.model.boundary == Boundary::open ? "open" : "periodic"}};
    out["mode"] = c.mode;
    out["compiler"] = {{"type", c.compiler.type},
                       {"layers", c.compiler.layers},
                       {"trust", {{"max_iters", c.compiler.trust.max_iters},
                                  {"grad_tol", c.compiler.trust.grad_tol},
                                  {"delta0", c.compiler.trust.delta0},
                                  {"delta_max", c.compiler.trust.delta_max},
                                  {"rho_accept", c.compiler.trust.rho_accept},
                                  {"rho_expand", c.compiler.trust.rho_expand},
                                  {"restarts", c.compiler.trust.restarts},
                                  {"init_spread", c.compiler.trust.init_spread}}}};
    out["t_max"] = c.t_max;
    out["t_step"] = c.t_step;
    out["j_list"] = c.j_list;
    out["shots"] = c.shots;
    out["noise"] = {{"p2", c.noise.p2}, {"p_read", c.noise.p_read}};
    out["seed"] = c.seed;
    out["n_traj"] = c.n_traj;
    out["output_dir"] = c.output_dir;
    out["jobs"] = c.jobs;
    return out;
}

inline RunConfig config_from_json(const json_t& in) {
    RunConfig c;
    if (in.contains("model")) {
        const auto& m = in["model"];
        c.model.J = m.value("J", c.model.J);
        c.model.r = m.value("r", c.model.r);
        c.model.h = m.value("h", c.model.h);
        c.model.n = m.value("n", c.model.n);
        const std::string boundary = m.value("boundary", std::string("open"));
        if (boundary != "open" && boundary != "periodic")
            throw std::invalid_argument("unknown boundary: " + boundary);
        c.model.boundary = boundary == "open" ? Boundary::open : Boundary::periodic;
    }
    c.mode = in.value("mode", c.mode);
    if (in.contains("compiler")) {
        const auto& comp = in["compiler"];
        c.compiler.type = comp.value("type", c.compiler.type);
        c.compiler.layers = comp.value("layers", c.compiler.layers);
        if (comp.contains("trust")) {
            const auto& tr = comp["trust"];
            auto& t = c.compiler.trust;
            t.max_iters = tr.value("max_iters", t.max_iters);
            t.grad_tol = tr.value("grad_tol", t.grad_tol);
            t.delta0 = tr.value("delta0", t.delta0);
            t.delta_max = tr.value("delta_max", t.delta_max);
            t.rho_accept = tr.value("rho_accept", t.rho_accept);
            t.rho_expand = tr.value("rho_expand", t.rho_expand);
            t.restarts = tr.value("restarts", t.restarts);
            t.init_spread = tr.value("init_spread", t.init_spread);
        }
    }
    c.t_max = in.value("t_max", c.t_max);
    c.t_step = in.value("t_step", c.t_step);
    c.j_list = in.value("j_list", c.j_list);
    c.shots = in.value("shots", c.shots);
    if (in.contains("noise")) {
        c.noise.p2 = in["noise"].value("p2", c.noise.p2);
        c.noise.p_read = in["noise"].value("p_read", c.noise.p_read);
    }
    c.seed = in.value("seed", c.seed);
    c.n_traj = in.value("n_traj", c.n_traj);
    c.output_dir = in.value("output_dir", c.output_dir);
    c.jobs = in.value("jobs", c.jobs);
    c.validate();
    return c;
}

// Canonical serialization; re-serializing a parsed config reproduces it byte
// for byte.
inline std::string canonical_config(const RunConfig& c) {
    return config_to_json(c).dump(2) + "\n";
}

// Identifies the computation, so fields that cannot change results (where
// files land, how many workers ran) do not contribute.
inline std::string config_hash(const RunConfig& c) {
    RunConfig keyed = c;
    keyed.output_dir.clear();
    keyed.jobs = 1;
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical_config(keyed))));
    return buf;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json(json_t::parse(buf.str()));
}

}  // namespace otoclab
