#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "otoclab/analytic.hpp"
#include "otoclab/model.hpp"
#include "otoclab/yky.hpp"

namespace otoclab {

enum class CrossingQuality { interpolated, exact_sample, not_reached };

struct SpreadingPoint {
    int j = 0;
    double t_j = std::numeric_limits<double>::quiet_NaN();
    CrossingQuality quality = CrossingQuality::not_reached;
};

// First time C(t) reaches the threshold, interpolated linearly between the
// bracketing samples.  C(0) already past the threshold gives t_j = 0.
inline SpreadingPoint spreading_time(const std::vector<std::pair<double, double>>& series,
                                     double threshold = 0.1) {
    if (series.empty()) throw std::invalid_argument("spreading_time: empty series");
    for (std::size_t i = 1; i < series.size(); ++i)
        if (series[i].first <= series[i - 1].first)
            throw std::invalid_argument("spreading_time: series must be sorted by t");

    SpreadingPoint pt;
    if (series[0].second >= threshold) {
        pt.t_j = series[0].first;
        pt.quality = CrossingQuality::exact_sample;
        return pt;
    }
    for (std::size_t i = 1; i < series.size(); ++i) {
        const auto [t1, c1] = series[i];
        if (c1 < threshold) continue;
        if (c1 == threshold) {
            pt.t_j = t1;
            pt.quality = CrossingQuality::exact_sample;
        } else {
            const auto [t0, c0] = series[i - 1];
            pt.t_j = t0 + (threshold - c0) * (t1 - t0) / (c1 - c0);
            pt.quality = CrossingQuality::interpolated;
        }
        return pt;
    }
    return pt;  // not reached
}

struct VelocityFit {
    double slope = 0.0;
    double intercept = 0.0;
    double v_B = 0.0;  // 1 / slope
    double residual_rms = 0.0;
    int points = 0;
    bool causal = true;  // slope > 0
};

// Ordinary least squares of t_j against j over the reached points.
inline VelocityFit fit_velocity(const std::vector<SpreadingPoint>& points) {
    std::vector<std::pair<double, double>> data;  // (j, t_j)
    for (const auto& pt : points)
        if (pt.quality != CrossingQuality::not_reached)
            data.push_back({double(pt.j), pt.t_j});
    if (data.size() < 2)
        throw std::invalid_argument("fit_velocity: need at least two reached points");

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : data) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double count = double(data.size());
    const double denom = count * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_velocity: degenerate j values");

    VelocityFit fit;
    fit.points = int(data.size());
    fit.slope = (count * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / count;
    double ss = 0.0;
    for (const auto& [x, y] : data) {
        const double resid = y - (fit.slope * x + fit.intercept);
        ss += resid * resid;
    }
    fit.residual_rms = std::sqrt(ss / count);
    if (fit.slope > 0.0) {
        fit.v_B = 1.0 / fit.slope;
    } else {
        fit.causal = false;
        fit.v_B = std::numeric_limits<double>::quiet_NaN();
    }
    return fit;
}

inline std::vector<int> default_j_list(int n) {
    std::vector<int> js;
    for (int j = 2; j <= n; ++j) js.push_back(j);
    return js;
}

inline std::vector<double> default_t_grid(double t_max = 3.0, double dt = 0.05) {
    std::vector<double> ts;
    const int steps = int(std::round(t_max / dt));
    for (int i = 0; i <= steps; ++i) ts.push_back(i * dt);
    return ts;
}

struct PipelineOptions {
    std::vector<int> j_list;     // empty: {2..n}
    std::vector<double> t_grid;  // empty: [0, 3] step 0.05
    SurfaceOptions surface;
    double threshold = 0.1;
};

struct PipelineResult {
    std::vector<SurfacePoint> surface;
    std::vector<SpreadingPoint> spreading;
    VelocityFit fit;
    double analytic_vB = 0.0;
    double rel_dev = 0.0;  // |fitted - analytic| / analytic
    std::vector<std::string> warnings;
};

// Surface -> spreading times -> least-squares velocity, with the analytic
// value attached for comparison.  Unreachable or failed probe sites become
// warnings; the fit proceeds on what remains.
inline PipelineResult run_pipeline(const ModelParams& params,
                                   const std::function<Evolution(double)>& evolution_at,
                                   const PipelineOptions& opts = {}) {
    params.validate();
    const std::vector<int> j_list =
        opts.j_list.empty() ? default_j_list(params.n) : opts.j_list;
    const std::vector<double> t_grid =
        opts.t_grid.empty() ? default_t_grid() : opts.t_grid;

    PipelineResult res;
    res.surface = otoc_surface(params, j_list, t_grid, evolution_at, opts.surface);

    for (int j : j_list) {
        std::vector<std::pair<double, double>> series;
        for (const auto& pt : res.surface) {
            if (!pt.ok && pt.rec.j == j)
                res.warnings.push_back("j=" + std::to_string(j) + " t=" + std::to_string(pt.rec.t) +
                                       ": " + pt.error);
            if (pt.ok && pt.rec.j == j) series.push_back({pt.rec.t, pt.rec.c});
        }
        if (series.empty()) {
            res.warnings.push_back("j=" + std::to_string(j) + ": no usable points");
            continue;
        }
        SpreadingPoint sp = spreading_time(series, opts.threshold);
        sp.j = j;
        if (sp.quality == CrossingQuality::not_reached)
            res.warnings.push_back("j=" + std::to_string(j) +
                                   ": threshold not reached on the time grid");
        res.spreading.push_back(sp);
    }

    res.fit = fit_velocity(res.spreading);
    res.analytic_vB = butterfly_velocity(params.J, params.r, params.h).v_B;
    if (res.analytic_vB > 0.0)
        res.rel_dev = std::abs(res.fit.v_B - res.analytic_vB) / res.analytic_vB;
    return res;
}

}  // namespace otoclab
