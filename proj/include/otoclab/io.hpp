#pragma once

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "otoclab/analytic.hpp"
#include "otoclab/butterfly.hpp"
#include "otoclab/rtr.hpp"
#include "otoclab/util.hpp"
#include "otoclab/yky.hpp"

namespace otoclab {

inline constexpr const char* version_string = "0.1.0";

using json = nlohmann::ordered_json;

// 12 significant digits, the precision contract of every CSV column.
inline std::string fmt12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

// Comment header carried by every output file; enough to reproduce the run.
inline std::string metadata_header(const std::string& config_hash, std::uint64_t seed) {
    std::string head;
    head += "#version=" + std::string(version_string) + "\n";
    head += "#config_hash=" + config_hash + "\n";
    head += "#seed=" + std::to_string(seed) + "\n";
    return head;
}

// Write-temp-then-rename; readers never observe a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path dir =
        path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::filesystem::create_directories(dir);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("atomic_write: cannot open " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("atomic_write: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string sweep_csv(const std::vector<double>& r_grid,
                             const std::vector<double>& h_grid,
                             const std::vector<std::vector<double>>& grid) {
    std::string out = "r,h,v_B\n";
    for (std::size_t i = 0; i < r_grid.size(); ++i)
        for (std::size_t k = 0; k < h_grid.size(); ++k)
            out += fmt12(r_grid[i]) + "," + fmt12(h_grid[k]) + "," + fmt12(grid[i][k]) + "\n";
    return out;
}

inline std::string surface_csv(const std::vector<SurfacePoint>& points) {
    std::string out = "j,t,F_EPR,otoc,C,mode,shots,ci\n";
    for (const auto& pt : points) {
        if (!pt.ok) continue;
        const auto& r = pt.rec;
        out += std::to_string(r.j) + "," + fmt12(r.t) + "," + fmt12(r.f_epr) + "," +
               fmt12(r.otoc_est) + "," + fmt12(r.c) + "," + to_string(r.mode) + "," +
               std::to_string(r.shots) + "," + fmt12(r.ci_halfwidth) + "\n";
    }
    return out;
}

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k)
            row.push_back(json::array({m(i, k).real(), m(i, k).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& rows) {
    const Eigen::Index nr = Eigen::Index(rows.size());
    if (nr == 0) throw std::invalid_argument("matrix_from_json: empty matrix");
    const Eigen::Index nc = Eigen::Index(rows.at(0).size());
    Matrix m(nr, nc);
    for (Eigen::Index i = 0; i < nr; ++i)
        for (Eigen::Index k = 0; k < nc; ++k) {
            const auto& cell = rows.at(i).at(k);
            m(i, k) = cxd(cell.at(0).get<double>(), cell.at(1).get<double>());
        }
    return m;
}

inline json gates_to_json(const GateSequence& seq) {
    json out;
    out["n"] = seq.n;
    out["layers"] = json::array();
    for (const auto& gate : seq.layers) out["layers"].push_back(matrix_to_json(gate));
    return out;
}

inline GateSequence gates_from_json(const json& in) {
    GateSequence seq;
    seq.n = in.at("n").get<int>();
    for (const auto& gate : in.at("layers")) seq.layers.push_back(matrix_from_json(gate));
    seq.validate();
    return seq;
}

inline json compilation_to_json(const CompilationResult& res) {
    json out;
    out["gates"] = gates_to_json(res.gates);
    out["cost_history"] = res.cost_history;
    out["final_cost"] = res.final_cost;
    out["final_error"] = res.final_error;
    out["iterations"] = res.iterations;
    out["converged"] = res.converged;
    return out;
}

inline json counts_to_json(const std::map<std::string, long>& counts, long shots,
                           std::uint64_t seed, const NoiseSpec& noise) {
    json out;
    out["counts"] = json::object();
    for (const auto& [key, count] : counts) out["counts"][key] = count;
    out["shots"] = shots;
    out["seed"] = seed;
    out["noise"] = {{"p2", noise.p2}, {"p_read", noise.p_read}};
    return out;
}

inline json fit_report_json(const PipelineResult& res) {
    json out;
    out["slope"] = res.fit.slope;
    out["intercept"] = res.fit.intercept;
    out["v_B"] = res.fit.v_B;
    out["residual_rms"] = res.fit.residual_rms;
    out["points"] = res.fit.points;
    out["analytic_vB"] = res.analytic_vB;
    out["rel_dev"] = res.rel_dev;
    return out;
}

}  // namespace otoclab
