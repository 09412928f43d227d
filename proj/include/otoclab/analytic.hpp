#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace otoclab {

// Quasiparticle dispersion of the XY chain in the thermodynamic limit:
//   eps(k) = -2J sqrt((h - cos k)^2 + r^2 sin^2 k)
inline double dispersion(double J, double r, double h, double k) {
    const double a = h - std::cos(k);
    const double b = r * std::sin(k);
    return -2.0 * J * std::hypot(a, b);
}

struct GroupVelocity {
    double value = 0.0;
    // Set when eps(k) has a conical point at k and the value is a one-sided
    // limit taken 1e-6 away from it.
    bool limit = false;
};

// d eps / dk.  At gap-closing momenta the derivative is 0/0; both one-sided
// limits exist and we report the one with the larger magnitude.
inline GroupVelocity group_velocity(double J, double r, double h, double k) {
    const auto raw = [J, r, h](double q) {
        const double a = h - std::cos(q);
        const double s = std::sin(q);
        const double gap = std::hypot(a, r * s);
        return -2.0 * J * (s * a + r * r * s * std::cos(q)) / gap;
    };
    const double gap = std::hypot(h - std::cos(k), r * std::sin(k));
    if (gap > 1e-9) return {raw(k), false};
    const double lo = raw(k - 1e-6);
    const double hi = raw(k + 1e-6);
    return {std::abs(lo) >= std::abs(hi) ? lo : hi, true};
}

struct VelocityResult {
    double v_B = 0.0;
    double k_star = 0.0;     // argmax of |group velocity| on [0, pi]
    std::string method;      // "closed-form" or "grid+refine"
};

// Maximal quasiparticle speed v_B = max_k |d eps / dk|.
//
// Two anisotropy values admit closed forms:
//   r = 0:     |v_g| = 2|J| sin k, so v_B = 2|J| at k = pi/2 for every h.
//   |r| = 1:   v_B = 2|J| min(1, |h|), at cos k* = h (|h| < 1) or 1/h.
// Everything else is a dense scan of [0, pi] refined by golden-section
// search on the winning bracket.
inline VelocityResult butterfly_velocity(double J, double r, double h) {
    if (!std::isfinite(J) || !std::isfinite(r) || !std::isfinite(h))
        throw std::invalid_argument("butterfly_velocity: parameters must be finite");
    const double pi = std::acos(-1.0);

    if (r == 0.0) return {2.0 * std::abs(J), pi / 2.0, "closed-form"};

    if (std::abs(r) == 1.0) {
        const double absh = std::abs(h);
        const double c = absh < 1.0 ? h : 1.0 / h;
        const double k_star = absh == 0.0 ? pi / 2.0 : std::acos(c);
        return {2.0 * std::abs(J) * std::min(1.0, absh), k_star, "closed-form"};
    }

    const auto speed = [J, r, h](double k) {
        return std::abs(group_velocity(J, r, h, k).value);
    };

    const int grid = 4096;
    double best_k = 0.0, best_v = -1.0;
    for (int i = 0; i <= grid; ++i) {
        const double k = pi * i / grid;
        const double v = speed(k);
        if (v > best_v) { best_v = v; best_k = k; }
    }

    // Golden-section refinement inside one grid cell either side of the peak.
    double a = std::max(0.0, best_k - pi / grid);
    double b = std::min(pi, best_k + pi / grid);
    const double gold = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gold * (b - a), x2 = a + gold * (b - a);
    double f1 = speed(x1), f2 = speed(x2);
    while (b - a > 1e-10) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + gold * (b - a); f2 = speed(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - gold * (b - a); f1 = speed(x1);
        }
    }
    const double k_star = (a + b) / 2.0;
    return {speed(k_star), k_star, "grid+refine"};
}

// v_B over the Cartesian product of the grids; row index follows r_grid,
// column index h_grid.
inline std::vector<std::vector<double>> vb_sweep(const std::vector<double>& r_grid,
                                                 const std::vector<double>& h_grid,
                                                 double J) {
    std::vector<std::vector<double>> grid(r_grid.size(),
                                          std::vector<double>(h_grid.size(), 0.0));
    for (std::size_t i = 0; i < r_grid.size(); ++i)
        for (std::size_t k = 0; k < h_grid.size(); ++k)
            grid[i][k] = butterfly_velocity(J, r_grid[i], h_grid[k]).v_B;
    return grid;
}

}  // namespace otoclab
