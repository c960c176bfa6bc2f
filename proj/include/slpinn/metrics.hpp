#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "slpinn/reference.hpp"

namespace slpinn {

/// Pointwise E = u_ref - u_pred on the reference grid's nodes.
inline SolutionGrid error_field(
    const SolutionGrid& ref,
    const std::function<double(double, double)>& pred) {
    SolutionGrid e = ref;
    for (int it = 0; it < ref.nt; ++it)
        for (int ix = 0; ix < ref.nx; ++ix)
            e.values[static_cast<std::size_t>(it) * ref.nx + ix] =
                ref.value(it, ix) - pred(ref.x_nodes[ix], ref.t_nodes[it]);
    return e;
}

/// Row-evaluator overload: `pred_row` fills predictions for all x-nodes of
/// one time row at once (lets callers hoist per-row work).
inline SolutionGrid error_field_rows(
    const SolutionGrid& ref,
    const std::function<void(std::span<const double>, double,
                             std::span<double>)>& pred_row) {
    SolutionGrid e = ref;
    std::vector<double> buf(ref.nx);
    for (int it = 0; it < ref.nt; ++it) {
        pred_row(ref.x_nodes, ref.t_nodes[it], buf);
        for (int ix = 0; ix < ref.nx; ++ix)
            e.values[static_cast<std::size_t>(it) * ref.nx + ix] =
                ref.value(it, ix) - buf[ix];
    }
    return e;
}

/// Trapezoidal (Int |E|^2 dx)^(1/2) over the uniform row.
inline double l2_space(std::span<const double> row, double dx) {
    if (row.size() < 2) throw std::invalid_argument("row too short");
    double s = 0.5 * (row.front() * row.front() + row.back() * row.back());
    for (std::size_t i = 1; i + 1 < row.size(); ++i) s += row[i] * row[i];
    return std::sqrt(s * dx);
}

/// Trapezoid in t of the squared spatial L2 norms, square-rooted.
inline double l2_space_time(const SolutionGrid& e) {
    if (e.nt < 2) throw std::invalid_argument("need at least two time rows");
    const double dt = e.t_final / (e.nt - 1);
    double s = 0.0;
    for (int it = 0; it < e.nt; ++it) {
        const double v = l2_space(e.row(it), e.dx);
        const double w = (it == 0 || it == e.nt - 1) ? 0.5 : 1.0;
        s += w * v * v;
    }
    return std::sqrt(s * dt);
}

inline double linf_space(std::span<const double> row) {
    double m = 0.0;
    for (double v : row) m = std::max(m, std::abs(v));
    return m;
}

/// Error norms in the layout of the result tables: space-time L2 plus
/// max-norms at fixed times. For the Riemann cases a layer-excluded variant
/// (radius 20 eps / (u_L + u_R) around the shock) is reported as a
/// diagnostic; the headline numbers remain full-domain.
struct ErrorReport {
    double l2_space_time = 0.0;
    std::vector<std::pair<double, double>> linf_by_time;
    bool has_layer_excluded = false;
    double l2_space_time_excluded = 0.0;
    std::vector<std::pair<double, double>> linf_by_time_excluded;
    double grid_dx = 0.0, grid_dt = 0.0;
    int grid_nx = 0, grid_nt = 0;
};

inline ErrorReport compute_error_report(const SolutionGrid& e,
                                        const ProblemSpec& ps,
                                        std::span<const double> times = {}) {
    static const double kDefaultTimes[] = {0.25, 0.5, 0.75, 1.0};
    if (times.empty()) times = kDefaultTimes;
    ErrorReport r;
    r.grid_dx = e.dx;
    r.grid_dt = e.dt;
    r.grid_nx = e.nx;
    r.grid_nt = e.nt;
    r.l2_space_time = l2_space_time(e);
    for (double t : times)
        r.linf_by_time.emplace_back(t, linf_space(e.row(e.time_index(t))));

    if (ps.riemann()) {
        r.has_layer_excluded = true;
        const double radius = 20.0 * ps.eps / (ps.u_left + ps.u_right_mag);
        const ShockCurve shock = ps.shock();
        SolutionGrid masked = e;
        for (int it = 0; it < e.nt; ++it) {
            const double a = shock.alpha(e.t_nodes[it]);
            for (int ix = 0; ix < e.nx; ++ix)
                if (std::abs(e.x_nodes[ix] - a) < radius)
                    masked.values[static_cast<std::size_t>(it) * e.nx + ix] = 0.0;
        }
        r.l2_space_time_excluded = l2_space_time(masked);
        for (double t : times)
            r.linf_by_time_excluded.emplace_back(
                t, linf_space(masked.row(masked.time_index(t))));
    }
    return r;
}

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// CSV layout: metric,t,value — one row per norm entry.
inline void write_error_report_csv(const std::filesystem::path& path,
                                   const ErrorReport& r) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "metric,t,value\n";
    out << "l2_space_time,," << detail::fmt_g17(r.l2_space_time) << "\n";
    for (const auto& [t, v] : r.linf_by_time)
        out << "linf," << detail::fmt_g17(t) << "," << detail::fmt_g17(v)
            << "\n";
    if (r.has_layer_excluded) {
        out << "l2_space_time_layer_excluded,,"
            << detail::fmt_g17(r.l2_space_time_excluded) << "\n";
        for (const auto& [t, v] : r.linf_by_time_excluded)
            out << "linf_layer_excluded," << detail::fmt_g17(t) << ","
                << detail::fmt_g17(v) << "\n";
    }
}

}  // namespace slpinn
