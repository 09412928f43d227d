#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "otoclab/brickwall.hpp"
#include "otoclab/linalg.hpp"
#include "otoclab/util.hpp"

namespace otoclab {

// One matrix per layer; tangent to U(4)^m at G when every G_l^dag H_l is
// skew-Hermitian.
using TangentVector = std::vector<Matrix>;

inline double tangent_inner(const TangentVector& a, const TangentVector& b) {
    double sum = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l)
        sum += (a[l].adjoint() * b[l]).trace().real();
    return sum;
}

inline double tangent_norm(const TangentVector& a) {
    return std::sqrt(tangent_inner(a, a));
}

inline TangentVector tangent_project(const GateSequence& at, const TangentVector& z) {
    TangentVector out(z.size());
    for (std::size_t l = 0; l < z.size(); ++l) {
        const Matrix gz = at.layers[l].adjoint() * z[l];
        out[l] = z[l] - at.layers[l] * ((gz + gz.adjoint()) / 2.0);
    }
    return out;
}

inline GateSequence qr_retraction(const GateSequence& at, const TangentVector& step) {
    GateSequence out = at;
    for (std::size_t l = 0; l < step.size(); ++l)
        out.layers[l] = qf(at.layers[l] + step[l]);
    return out;
}

inline TangentVector riemannian_gradient(const GateSequence& at, const Matrix& target) {
    return tangent_project(at, euclidean_gradient(at, target));
}

// Finite-difference Hessian action along the retraction.  The probe uses a
// unit direction so the step size is independent of |eta|, and the result is
// rescaled back; the moved gradient is transported by projection.
inline TangentVector hessian_vector(const GateSequence& at, const Matrix& target,
                                    const TangentVector& grad, const TangentVector& eta) {
    const std::size_t m = eta.size();
    TangentVector out(m);
    const double len = tangent_norm(eta);
    if (len == 0.0) {
        for (std::size_t l = 0; l < m; ++l) out[l] = Matrix::Zero(4, 4);
        return out;
    }
    double sq = 0.0;
    for (const auto& g : at.layers) sq += g.squaredNorm();
    const double eps = 1e-5 * (1.0 + std::sqrt(sq));

    TangentVector probe(m);
    for (std::size_t l = 0; l < m; ++l) probe[l] = (eps / len) * eta[l];
    const GateSequence moved = qr_retraction(at, probe);
    const TangentVector moved_grad = tangent_project(at, riemannian_gradient(moved, target));
    for (std::size_t l = 0; l < m; ++l)
        out[l] = (len / eps) * (moved_grad[l] - grad[l]);
    return out;
}

struct TrustRegionConfig {
    int max_iters = 200;
    double grad_tol = 1e-8;
    double delta0 = 0.0;      // 0: 0.1 * sqrt(layers)
    double delta_max = 0.0;   // 0: sqrt(layers)
    double delta_floor = 1e-14;
    double rho_accept = 0.1;
    double rho_expand = 0.75;
    double tcg_kappa = 0.1;
    double tcg_theta = 1.0;
    int tcg_max_iters = 0;    // 0: 16 * layers
    int restarts = 3;
    double init_spread = 0.01;
    double restart_stop_cost = 1e-18;
    std::uint64_t seed = 1;
};

// Steihaug-Toint truncated CG on the trust-region model.  Stops at the
// boundary on negative curvature or an overlong step, otherwise once the
// residual passes the superlinear threshold.
inline TangentVector solve_subproblem(const GateSequence& at, const Matrix& target,
                                      const TangentVector& grad, double delta,
                                      const TrustRegionConfig& cfg) {
    const std::size_t m = at.layers.size();
    TangentVector eta(m), r = grad, d(m);
    for (std::size_t l = 0; l < m; ++l) {
        eta[l] = Matrix::Zero(4, 4);
        d[l] = -grad[l];
    }
    const double r0 = tangent_norm(grad);
    const double stop = r0 * std::min(cfg.tcg_kappa, std::pow(r0, cfg.tcg_theta));
    const int max_inner = cfg.tcg_max_iters > 0 ? cfg.tcg_max_iters : int(16 * m);

    const auto to_boundary = [&](const double ed, const double dd, const double ee) {
        return (-ed + std::sqrt(ed * ed + dd * (delta * delta - ee))) / dd;
    };

    double rr = r0 * r0;
    for (int it = 0; it < max_inner; ++it) {
        const TangentVector hd = hessian_vector(at, target, grad, d);
        const double dhd = tangent_inner(d, hd);
        const double ed = tangent_inner(eta, d);
        const double dd = tangent_inner(d, d);
        const double ee = tangent_inner(eta, eta);
        if (dd == 0.0) return eta;
        if (dhd <= 0.0) {
            const double tau = to_boundary(ed, dd, ee);
            for (std::size_t l = 0; l < m; ++l) eta[l] += tau * d[l];
            return eta;
        }
        const double alpha = rr / dhd;
        if (ee + 2.0 * alpha * ed + alpha * alpha * dd >= delta * delta) {
            const double tau = to_boundary(ed, dd, ee);
            for (std::size_t l = 0; l < m; ++l) eta[l] += tau * d[l];
            return eta;
        }
        for (std::size_t l = 0; l < m; ++l) eta[l] += alpha * d[l];
        double rr_next = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
            r[l] += alpha * hd[l];
            rr_next += (r[l].adjoint() * r[l]).trace().real();
        }
        if (std::sqrt(rr_next) <= stop) return eta;
        const double beta = rr_next / rr;
        for (std::size_t l = 0; l < m; ++l) d[l] = -r[l] + beta * d[l];
        rr = rr_next;
    }
    return eta;
}

struct CompilationResult {
    GateSequence gates;
    std::vector<double> cost_history;  // cost at the start plus every accepted step
    double final_cost = 0.0;
    double final_error = 0.0;          // normalized Frobenius distance
    int iterations = 0;
    bool converged = false;            // gradient norm reached grad_tol
};

inline CompilationResult rtr_minimize(const GateSequence& start, const Matrix& target,
                                      const TrustRegionConfig& cfg = {}) {
    start.validate();
    const double m = double(start.layers.size());
    double delta = cfg.delta0 > 0.0 ? cfg.delta0 : 0.1 * std::sqrt(m);
    const double delta_max = cfg.delta_max > 0.0 ? cfg.delta_max : std::sqrt(m);

    CompilationResult res;
    res.gates = start;
    double f = compile_cost(res.gates, target);
    res.cost_history.push_back(f);
    TangentVector grad = riemannian_gradient(res.gates, target);

    for (int it = 0; it < cfg.max_iters; ++it) {
        if (tangent_norm(grad) <= cfg.grad_tol) {
            res.converged = true;
            break;
        }
        if (delta < cfg.delta_floor) break;
        res.iterations = it + 1;

        const TangentVector eta = solve_subproblem(res.gates, target, grad, delta, cfg);
        const TangentVector heta = hessian_vector(res.gates, target, grad, eta);
        const double pred = -tangent_inner(grad, eta) - 0.5 * tangent_inner(eta, heta);
        const GateSequence trial = qr_retraction(res.gates, eta);
        const double f_trial = compile_cost(trial, target);
        const double rho = pred > 0.0 ? (f - f_trial) / pred : -1.0;

        if (rho < cfg.rho_accept) {
            delta /= 4.0;
            continue;
        }
        const double step = tangent_norm(eta);
        res.gates = trial;
        f = f_trial;
        res.cost_history.push_back(f);
        grad = riemannian_gradient(res.gates, target);
        if (rho > cfg.rho_expand && step >= delta * (1.0 - 1e-12))
            delta = std::min(2.0 * delta, delta_max);
    }
    if (!res.converged && tangent_norm(grad) <= cfg.grad_tol) res.converged = true;
    res.final_cost = f;
    res.final_error = normalized_error(res.gates, target);
    return res;
}

// Near-identity start; spread 0.01 keeps the initial circuit close to the
// identity, larger values wander toward Haar-like gates.
inline GateSequence random_brickwall(int n, int layers, double spread,
                                     std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed));
    GateSequence seq;
    seq.n = n;
    seq.layers.reserve(layers);
    for (int l = 0; l < layers; ++l)
        seq.layers.push_back(qf(Matrix::Identity(4, 4) + spread * gaussian_matrix(4, rng)));
    return seq;
}

inline CompilationResult rtr_compile(const Matrix& target, int n, int layers,
                                     const TrustRegionConfig& cfg = {}) {
    if (layers < 1) throw std::invalid_argument("rtr_compile: need at least one layer");
    if (target.rows() != (Eigen::Index(1) << n) || target.cols() != target.rows())
        throw std::invalid_argument("rtr_compile: target dimension mismatch");
    CompilationResult best;
    for (int s = 0; s < std::max(1, cfg.restarts); ++s) {
        const GateSequence start =
            random_brickwall(n, layers, cfg.init_spread, mix_seed(cfg.seed, std::uint64_t(s)));
        CompilationResult cand = rtr_minimize(start, target, cfg);
        if (s == 0 || cand.final_cost < best.final_cost) best = std::move(cand);
        if (best.final_cost <= cfg.restart_stop_cost) break;
    }
    return best;
}

// Continuation: reuse the gates of a previous compile as the start, e.g. when
// walking a grid of evolution times.
inline CompilationResult rtr_compile_from(const GateSequence& start, const Matrix& target,
                                          const TrustRegionConfig& cfg = {}) {
    return rtr_minimize(start, target, cfg);
}

}  // namespace otoclab
