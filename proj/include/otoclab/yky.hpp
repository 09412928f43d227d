#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "otoclab/brickwall.hpp"
#include "otoclab/linalg.hpp"
#include "otoclab/model.hpp"
#include "otoclab/sim.hpp"
#include "otoclab/util.hpp"

namespace otoclab {

// Infinite-temperature OTOC averaged over single-site Paulis at sites 1 and j:
// (1/16) sum_{V_1, W_j} Tr[W_j(t) V_1 W_j(t) V_1] / 2^n with W_j(t) = U^dag W_j U.
// The sum is real by cyclicity; a residual imaginary part is a hard error.
inline double averaged_otoc_oracle(const Matrix& u, int j) {
    int n = 0;
    while ((Eigen::Index(1) << n) < u.rows()) ++n;
    if ((Eigen::Index(1) << n) != u.rows() || u.cols() != u.rows())
        throw std::invalid_argument("averaged_otoc_oracle: operator must be 2^n x 2^n");
    if (j < 2 || j > n) throw std::invalid_argument("averaged_otoc_oracle: need 2 <= j <= n");

    const double dim = std::ldexp(1.0, n);
    cxd total = 0.0;
    for (Pauli w : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
        const Matrix wt = u.adjoint() * pauli_at(j, w, n) * u;
        for (Pauli v : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
            const Matrix v1 = pauli_at(1, v, n);
            total += (wt * v1 * wt * v1).trace() / dim;
        }
    }
    total /= 16.0;
    if (std::abs(total.imag()) > 1e-10)
        throw std::runtime_error("averaged_otoc_oracle: trace average not real");
    return total.real();
}

inline double squared_commutator(double f_epr) {
    if (f_epr <= 0.0) throw std::invalid_argument("squared_commutator: F_EPR must be positive");
    return 2.0 - 1.0 / (2.0 * f_epr);
}

enum class EstimatorMode { exact, sampled, noisy };

inline std::string to_string(EstimatorMode mode) {
    switch (mode) {
        case EstimatorMode::exact: return "exact";
        case EstimatorMode::sampled: return "sampled";
        case EstimatorMode::noisy: return "noisy";
    }
    throw std::logic_error("EstimatorMode: unknown value");
}

// Either the dense evolution operator or its compiled circuit.
using Evolution = std::variant<Matrix, GateSequence>;

struct OtocRecord {
    int j = 2;
    double t = 0.0;
    double f_epr = 0.0;     // conditional Bell-"00" probability at (A_0, B_0)
    double otoc_est = 0.0;  // 1 / (4 F_EPR)
    double c = 0.0;         // 2 - 1 / (2 F_EPR)
    EstimatorMode mode = EstimatorMode::exact;
    long shots = 0;
    double ci_halfwidth = 0.0;  // Wilson (sampled) or 1.96 sigma_mc (noisy, shots = 0)
    double sigma_mc = 0.0;      // trajectory-average standard error of otoc_est
};

struct ProtocolSpec {
    ModelParams params;
    Evolution evolution;
    int j = 2;
    double t = 0.0;  // bookkeeping only; the evolution operator sets the physics
    EstimatorMode mode = EstimatorMode::exact;
    NoiseSpec noise;
    long shots = 0;
    std::uint64_t seed = 1;
    int n_traj = 48;  // noisy-mode trajectory count

    void validate() const {
        params.validate();
        noise.validate();
        if (params.n < 2) throw std::invalid_argument("ProtocolSpec: need n >= 2");
        if (j < 2 || j > params.n)
            throw std::invalid_argument("ProtocolSpec: need 2 <= j <= n");
        if (mode != EstimatorMode::exact && shots < 0)
            throw std::invalid_argument("ProtocolSpec: negative shots");
        if (mode == EstimatorMode::sampled && shots < 1)
            throw std::invalid_argument("ProtocolSpec: sampled mode needs shots >= 1");
        if (mode == EstimatorMode::noisy) {
            if (n_traj < 1) throw std::invalid_argument("ProtocolSpec: need n_traj >= 1");
            if (!std::holds_alternative<GateSequence>(evolution))
                throw std::invalid_argument(
                    "ProtocolSpec: noisy mode needs a compiled evolution");
        }
        if (const auto* seq = std::get_if<GateSequence>(&evolution)) {
            if (seq->n != params.n)
                throw std::invalid_argument("ProtocolSpec: sequence site count mismatch");
        } else {
            const auto& u = std::get<Matrix>(evolution);
            if (u.rows() != (Eigen::Index(1) << params.n) || u.cols() != u.rows())
                throw std::invalid_argument("ProtocolSpec: operator dimension mismatch");
        }
    }
};

namespace detail {

// Doubled-register circuit of the compiled evolution: per layer, the gates on
// the A copy then their entrywise conjugates on the B copy.
struct DoubledGate {
    Matrix gate;
    int qa, qb;
};

inline std::vector<DoubledGate> doubled_circuit(const GateSequence& seq,
                                                const DoubledLayout& lay) {
    std::vector<DoubledGate> gates;
    for (std::size_t l = 0; l < seq.layers.size(); ++l) {
        for (int site : layer_gate_sites(seq.n, int(l)))
            gates.push_back({seq.layers[l], lay.a(site), lay.a(site + 1)});
        for (int site : layer_gate_sites(seq.n, int(l)))
            gates.push_back({seq.layers[l].conjugate(), lay.b(site), lay.b(site + 1)});
    }
    return gates;
}

// Pauli insertions for one trajectory: all gate coins first, then the Pauli
// choices, so an insertion-free trajectory is known before any evolution.
inline std::vector<std::pair<int, int>> draw_insertions(int gate_count, double p2,
                                                        std::mt19937_64& rng) {
    std::vector<std::pair<int, int>> hits;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (int g = 0; g < gate_count; ++g)
        if (coin(rng) < p2) hits.push_back({g, 0});
    std::uniform_int_distribution<int> pick(1, 15);
    for (auto& hit : hits) hit.second = pick(rng);
    return hits;
}

inline StateVector run_doubled(const std::vector<DoubledGate>& circuit, int n,
                               const std::vector<std::pair<int, int>>& insertions) {
    StateVector s = prepare_yky_input(n);
    std::size_t next = 0;
    for (int g = 0; g < int(circuit.size()); ++g) {
        apply_gate(s, circuit[g].gate, {circuit[g].qa, circuit[g].qb});
        while (next < insertions.size() && insertions[next].first == g) {
            const int idx = insertions[next].second;
            apply_gate(s, kron(pauli_matrix(Pauli(idx / 4)), pauli_matrix(Pauli(idx % 4))),
                       {circuit[g].qa, circuit[g].qb});
            ++next;
        }
    }
    return s;
}

// Final doubled-register state under noiseless evolution.
inline StateVector noiseless_final_state(const ModelParams& params,
                                         const Evolution& evolution) {
    const DoubledLayout lay(params.n);
    if (const auto* u = std::get_if<Matrix>(&evolution)) {
        StateVector s = prepare_yky_input(params.n);
        apply_unitary_pair(s, *u, params.n, true);
        return s;
    }
    return run_doubled(doubled_circuit(std::get<GateSequence>(evolution), lay), params.n, {});
}

inline OtocRecord record_from_f(int j, double t, double f, EstimatorMode mode, long shots,
                                double ci, double sigma_mc) {
    OtocRecord rec;
    rec.j = j;
    rec.t = t;
    rec.f_epr = f;
    rec.otoc_est = 1.0 / (4.0 * f);
    rec.c = squared_commutator(f);
    rec.mode = mode;
    rec.shots = shots;
    rec.ci_halfwidth = ci;
    rec.sigma_mc = sigma_mc;
    return rec;
}

inline OtocRecord exact_record(const StateVector& psi, const DoubledLayout& lay, int j,
                               double t) {
    auto [pj, conditioned] = bell_project(psi, lay.a(j), lay.b(j));
    (void)pj;
    const double f = bell_projection_prob(conditioned, lay.a(0), lay.b(0));
    return record_from_f(j, t, f, EstimatorMode::exact, 0, 0.0, 0.0);
}

inline double wilson_halfwidth(long hits, long trials) {
    const double z = 1.96;
    const double m = double(trials);
    const double p = double(hits) / m;
    return z * std::sqrt(p * (1.0 - p) / m + z * z / (4.0 * m * m)) / (1.0 + z * z / m);
}

inline OtocRecord sampled_record(const StateVector& psi, const DoubledLayout& lay, int j,
                                 double t, long shots, const NoiseSpec& noise,
                                 std::uint64_t seed, EstimatorMode mode) {
    const auto counts = sample_counts(
        psi, {{lay.a(j), lay.b(j)}, {lay.a(0), lay.b(0)}}, shots, noise, seed);
    long conditioned = 0, joint = 0;
    for (const auto& [key, count] : counts) {
        if (key[0] == '0' && key[1] == '0') {
            conditioned += count;
            if (key[2] == '0' && key[3] == '0') joint += count;
        }
    }
    if (conditioned == 0)
        throw std::runtime_error("yky_run: no shots passed the Bell conditioning");
    const double f = double(joint) / double(conditioned);
    return record_from_f(j, t, f, mode, shots, wilson_halfwidth(joint, conditioned), 0.0);
}

// Per-trajectory probabilities of the conditioning outcome and the joint
// outcome, after readout noise, for one probe site.
struct TrajectoryProbs {
    double p_cond = 0.0;
    double p_joint = 0.0;
};

inline TrajectoryProbs outcome_probs(const StateVector& psi, const DoubledLayout& lay,
                                     int j, double p_read) {
    const auto dist = apply_readout(
        measurement_distribution(psi, {{lay.a(j), lay.b(j)}, {lay.a(0), lay.b(0)}}), 4,
        p_read);
    TrajectoryProbs probs;
    for (std::size_t out = 0; out < dist.size(); ++out)
        if ((out & 0b1100) == 0) probs.p_cond += dist[out];
    probs.p_joint = dist[0];
    return probs;
}

// Ratio estimate over trajectories with a delta-method standard error,
// propagated to otoc_est = 1/(4F).
inline OtocRecord trajectory_record(const std::vector<TrajectoryProbs>& probs, int j,
                                    double t, long shots) {
    const std::size_t tcount = probs.size();
    double num = 0.0, den = 0.0;
    for (const auto& pr : probs) {
        num += pr.p_joint;
        den += pr.p_cond;
    }
    if (den <= 0.0) throw std::runtime_error("yky_run: conditioning probability vanished");
    const double f = num / den;
    double sigma_f = 0.0;
    if (tcount > 1) {
        const double mean_cond = den / double(tcount);
        double ss = 0.0;
        for (const auto& pr : probs) {
            const double resid = pr.p_joint - f * pr.p_cond;
            ss += resid * resid;
        }
        const double var_resid = ss / double(tcount - 1);
        sigma_f = std::sqrt(var_resid / double(tcount)) / mean_cond;
    }
    const double sigma_otoc = sigma_f / (4.0 * f * f);
    return record_from_f(j, t, f, EstimatorMode::noisy, shots, 1.96 * sigma_otoc,
                         sigma_otoc);
}

}  // namespace detail

inline OtocRecord yky_run(const ProtocolSpec& spec) {
    spec.validate();
    const DoubledLayout lay(spec.params.n);

    if (spec.mode == EstimatorMode::exact) {
        const StateVector psi = detail::noiseless_final_state(spec.params, spec.evolution);
        return detail::exact_record(psi, lay, spec.j, spec.t);
    }

    if (spec.mode == EstimatorMode::sampled) {
        const StateVector psi = detail::noiseless_final_state(spec.params, spec.evolution);
        return detail::sampled_record(psi, lay, spec.j, spec.t, spec.shots, spec.noise,
                                      spec.seed, EstimatorMode::sampled);
    }

    // Noisy mode: trajectory ensemble over Pauli insertions.  The insertion-free
    // trajectory is computed once and reused.
    const auto& seq = std::get<GateSequence>(spec.evolution);
    const auto circuit = detail::doubled_circuit(seq, lay);
    StateVector clean;
    bool have_clean = false;

    std::vector<detail::TrajectoryProbs> probs;
    long total_cond = 0, total_joint = 0;
    const long base_shots = spec.shots > 0 ? spec.shots / spec.n_traj : 0;
    const long extra = spec.shots > 0 ? spec.shots % spec.n_traj : 0;

    for (int i = 0; i < spec.n_traj; ++i) {
        std::mt19937_64 rng(mix_seed(mix_seed(spec.seed, 0x72616a), std::uint64_t(i)));
        const auto hits = detail::draw_insertions(int(circuit.size()), spec.noise.p2, rng);
        const StateVector* psi = nullptr;
        StateVector own;
        if (hits.empty()) {
            if (!have_clean) {
                clean = detail::run_doubled(circuit, spec.params.n, {});
                have_clean = true;
            }
            psi = &clean;
        } else {
            own = detail::run_doubled(circuit, spec.params.n, hits);
            psi = &own;
        }

        if (spec.shots == 0) {
            probs.push_back(detail::outcome_probs(*psi, lay, spec.j, spec.noise.p_read));
        } else {
            const long traj_shots = base_shots + (i < extra ? 1 : 0);
            if (traj_shots == 0) continue;
            NoiseSpec readout_only;
            readout_only.p_read = spec.noise.p_read;
            const auto counts = sample_counts(
                *psi, {{lay.a(spec.j), lay.b(spec.j)}, {lay.a(0), lay.b(0)}}, traj_shots,
                readout_only, mix_seed(mix_seed(spec.seed, 0x73686f74), std::uint64_t(i)));
            for (const auto& [key, count] : counts) {
                if (key[0] == '0' && key[1] == '0') {
                    total_cond += count;
                    if (key[2] == '0' && key[3] == '0') total_joint += count;
                }
            }
        }
    }

    if (spec.shots == 0)
        return detail::trajectory_record(probs, spec.j, spec.t, 0);
    if (total_cond == 0)
        throw std::runtime_error("yky_run: no shots passed the Bell conditioning");
    const double f = double(total_joint) / double(total_cond);
    return detail::record_from_f(spec.j, spec.t, f, EstimatorMode::noisy, spec.shots,
                                 detail::wilson_halfwidth(total_joint, total_cond), 0.0);
}

struct SurfacePoint {
    OtocRecord rec;
    bool ok = false;
    std::string error;
};

struct SurfaceOptions {
    EstimatorMode mode = EstimatorMode::exact;
    NoiseSpec noise;
    long shots = 0;
    std::uint64_t seed = 1;
    int n_traj = 48;
};

// C_j(t) over a (j, t) grid.  evolution_at supplies the operator or circuit
// for each time; final states and trajectory ensembles are shared across the
// j list at fixed t.  Failed points carry their error and the surface
// continues.
inline std::vector<SurfacePoint> otoc_surface(const ModelParams& params,
                                              const std::vector<int>& j_list,
                                              const std::vector<double>& t_grid,
                                              const std::function<Evolution(double)>& evolution_at,
                                              const SurfaceOptions& opts) {
    params.validate();
    opts.noise.validate();
    const DoubledLayout lay(params.n);
    for (int j : j_list)
        if (j < 2 || j > params.n)
            throw std::invalid_argument("otoc_surface: need 2 <= j <= n");

    std::vector<SurfacePoint> points;
    points.reserve(j_list.size() * t_grid.size());

    for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
        const double t = t_grid[ti];

        const auto push_error = [&](int j, const std::string& what) {
            SurfacePoint pt;
            pt.rec.j = j;
            pt.rec.t = t;
            pt.rec.mode = opts.mode;
            pt.error = what;
            points.push_back(std::move(pt));
        };

        Evolution evo;
        try {
            evo = evolution_at(t);
        } catch (const std::exception& ex) {
            for (int j : j_list) push_error(j, ex.what());
            continue;
        }

        if (opts.mode == EstimatorMode::noisy) {
            if (!std::holds_alternative<GateSequence>(evo)) {
                for (int j : j_list) push_error(j, "noisy mode needs a compiled evolution");
                continue;
            }
            // Trajectory states are shared across j: replicate yky_run's ensemble
            // here with per-time seeds.
            const auto& seq = std::get<GateSequence>(evo);
            const auto circuit = detail::doubled_circuit(seq, lay);
            StateVector clean;
            bool have_clean = false;
            std::vector<std::vector<detail::TrajectoryProbs>> probs(j_list.size());
            std::vector<long> cond(j_list.size(), 0), joint(j_list.size(), 0);
            const long base_shots = opts.shots > 0 ? opts.shots / opts.n_traj : 0;
            const long extra = opts.shots > 0 ? opts.shots % opts.n_traj : 0;
            const std::uint64_t tseed = mix_seed(opts.seed, std::uint64_t(ti));

            for (int i = 0; i < opts.n_traj; ++i) {
                std::mt19937_64 rng(mix_seed(mix_seed(tseed, 0x72616a), std::uint64_t(i)));
                const auto hits =
                    detail::draw_insertions(int(circuit.size()), opts.noise.p2, rng);
                const StateVector* psi = nullptr;
                StateVector own;
                if (hits.empty()) {
                    if (!have_clean) {
                        clean = detail::run_doubled(circuit, params.n, {});
                        have_clean = true;
                    }
                    psi = &clean;
                } else {
                    own = detail::run_doubled(circuit, params.n, hits);
                    psi = &own;
                }
                for (std::size_t jd = 0; jd < j_list.size(); ++jd) {
                    if (opts.shots == 0) {
                        probs[jd].push_back(detail::outcome_probs(*psi, lay, j_list[jd],
                                                                  opts.noise.p_read));
                    } else {
                        const long traj_shots = base_shots + (i < extra ? 1 : 0);
                        if (traj_shots == 0) continue;
                        NoiseSpec readout_only;
                        readout_only.p_read = opts.noise.p_read;
                        const auto counts = sample_counts(
                            *psi,
                            {{lay.a(j_list[jd]), lay.b(j_list[jd])}, {lay.a(0), lay.b(0)}},
                            traj_shots, readout_only,
                            mix_seed(mix_seed(mix_seed(tseed, 0x73686f74),
                                              std::uint64_t(i)),
                                     std::uint64_t(jd)));
                        for (const auto& [key, count] : counts) {
                            if (key[0] == '0' && key[1] == '0') {
                                cond[jd] += count;
                                if (key[2] == '0' && key[3] == '0') joint[jd] += count;
                            }
                        }
                    }
                }
            }
            for (std::size_t jd = 0; jd < j_list.size(); ++jd) {
                SurfacePoint pt;
                try {
                    if (opts.shots == 0) {
                        pt.rec = detail::trajectory_record(probs[jd], j_list[jd], t, 0);
                    } else {
                        if (cond[jd] == 0)
                            throw std::runtime_error(
                                "no shots passed the Bell conditioning");
                        const double f = double(joint[jd]) / double(cond[jd]);
                        pt.rec = detail::record_from_f(
                            j_list[jd], t, f, EstimatorMode::noisy, opts.shots,
                            detail::wilson_halfwidth(joint[jd], cond[jd]), 0.0);
                    }
                    pt.ok = true;
                } catch (const std::exception& ex) {
                    pt.rec.j = j_list[jd];
                    pt.rec.t = t;
                    pt.rec.mode = opts.mode;
                    pt.error = ex.what();
                }
                points.push_back(std::move(pt));
            }
            continue;
        }

        StateVector psi;
        try {
            psi = detail::noiseless_final_state(params, evo);
        } catch (const std::exception& ex) {
            for (int j : j_list) push_error(j, ex.what());
            continue;
        }
        for (int j : j_list) {
            SurfacePoint pt;
            try {
                if (opts.mode == EstimatorMode::exact) {
                    pt.rec = detail::exact_record(psi, lay, j, t);
                } else {
                    pt.rec = detail::sampled_record(
                        psi, lay, j, t, opts.shots, opts.noise,
                        mix_seed(mix_seed(opts.seed, std::uint64_t(ti)), std::uint64_t(j)),
                        EstimatorMode::sampled);
                }
                pt.ok = true;
            } catch (const std::exception& ex) {
                pt.rec.j = j;
                pt.rec.t = t;
                pt.rec.mode = opts.mode;
                pt.error = ex.what();
            }
            points.push_back(std::move(pt));
        }
    }
    return points;
}

}  // namespace otoclab
