#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "slpinn/physics.hpp"

namespace slpinn {

// ---- complementary error function -------------------------------------------

namespace detail {

/// Maclaurin series of erf, used for |z| <= 2 where cancellation in
/// 1 - erf(z) stays below ~1e-13 relative.
inline double erf_series(double z) {
    const double z2 = z * z;
    double term = z;  // (-1)^n z^(2n+1) / n!
    double sum = z;
    for (int n = 1; n < 200; ++n) {
        term *= -z2 / n;
        const double add = term / (2 * n + 1);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
    }
    return (2.0 / std::sqrt(std::numbers::pi)) * sum;
}

/// Continued fraction F(z) with erfc(z) = exp(-z^2)/sqrt(pi) * F(z),
///   F(z) = 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))),
/// evaluated by the modified Lentz method. Valid for z > ~1.
inline double erfc_cf_factor(double z) {
    const double tiny = 1e-300;
    double f = tiny, c = tiny, d = 0.0;
    for (int n = 1; n < 400; ++n) {
        const double a = (n == 1) ? 1.0 : 0.5 * (n - 1);
        const double b = z;
        d = b + a * d;
        if (d == 0.0) d = tiny;
        c = b + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return f;
}

}  // namespace detail

/// erfc to ~1e-13 relative for |z| <= 6, decaying to the underflow floor for
/// large z. Series near the origin, continued fraction in the tail.
inline double erfc(double z) {
    if (std::isnan(z)) return z;
    if (z < 0.0) return 2.0 - erfc(-z);
    if (z <= 2.0) return 1.0 - detail::erf_series(z);
    if (z > 26.7) return 0.0;  // below the smallest positive double
    return std::exp(-z * z) / std::sqrt(std::numbers::pi) *
           detail::erfc_cf_factor(z);
}

/// log(erfc(z)) without underflow for large positive z; used to form erfc
/// ratios whose factors underflow individually.
inline double log_erfc(double z) {
    if (z <= 2.0) return std::log(erfc(z));
    return -z * z - 0.5 * std::log(std::numbers::pi) +
           std::log(detail::erfc_cf_factor(z));
}

// ---- Cole-Hopf solution of the Riemann cases --------------------------------

/// Viscous Riemann solution
///   u = u_L - (u_L+u_R) / (1 + exp(A) * erfc(a1)/erfc(a2)),
/// with A = -(u_L+u_R)(x-ct)/(2 eps), evaluated through log-erfc differences
/// so that the ratio stays O(1) where both erfc factors underflow.
inline double exact_riemann(const ProblemSpec& ps, double x, double t) {
    ps.validate();
    if (!ps.riemann())
        throw std::invalid_argument("exact_riemann needs a Riemann case");
    if (!(t > 0.0)) throw std::invalid_argument("exact_riemann requires t > 0");
    const double uL = ps.u_left, uR = ps.u_right_mag, eps = ps.eps;
    const double c = 0.5 * (uL - uR);
    const double s = 2.0 * std::sqrt(eps * t);
    const double A = -(uL + uR) * (x - c * t) / (2.0 * eps);
    const double a1 = (x - uL * t) / s;
    const double a2 = (-x - uR * t) / s;
    const double D = A + log_erfc(a1) - log_erfc(a2);
    // u = uL - (uL+uR) * sigma(-D), with a saturation-safe logistic.
    double sig;
    if (D >= 0.0) {
        const double e = std::exp(-D);
        sig = e / (1.0 + e);
    } else {
        sig = 1.0 / (1.0 + std::exp(D));
    }
    return uL - (uL + uR) * sig;
}

// ---- Gauss-Hermite quadrature ------------------------------------------------

struct QuadRule {
    std::vector<double> nodes, weights;  // ascending nodes, exact +- symmetry
};

namespace detail {

/// QL with implicit shifts on a symmetric tridiagonal matrix, accumulating
/// only the first row of the eigenvector matrix (all that Golub-Welsch
/// weights need). `d` holds the diagonal and returns the eigenvalues; `e`
/// holds the subdiagonal in e[0..n-2].
inline void tridiag_ql_firstrow(std::vector<double>& d, std::vector<double>& e,
                                std::vector<double>& first_row) {
    const int n = static_cast<int>(d.size());
    e.resize(n, 0.0);
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd)
                    break;
            }
            if (m != l) {
                if (++iter > 60)
                    throw std::runtime_error("tridiagonal QL did not converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    f = first_row[i + 1];
                    first_row[i + 1] = s * first_row[i] + c * f;
                    first_row[i] = c * first_row[i] - s * f;
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

}  // namespace detail

/// Nodes and weights for integrals against exp(-s^2), via Golub-Welsch on
/// the Jacobi matrix of the Hermite recurrence (subdiagonal sqrt(k/2)).
inline QuadRule gauss_hermite(int n) {
    if (n < 2 || n > 500)
        throw std::invalid_argument("gauss_hermite order out of range [2,500]");
    std::vector<double> d(n, 0.0), e(n, 0.0), row(n, 0.0);
    for (int k = 0; k + 1 < n; ++k) e[k] = std::sqrt(0.5 * (k + 1));
    row[0] = 1.0;
    detail::tridiag_ql_firstrow(d, e, row);

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return d[a] < d[b]; });

    const double mu0 = std::sqrt(std::numbers::pi);  // int exp(-s^2) ds
    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = d[order[i]];
        rule.weights[i] = mu0 * row[order[i]] * row[order[i]];
    }
    // enforce the exact +- symmetry of the rule
    for (int i = 0; i < n / 2; ++i) {
        const double node = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
        rule.nodes[n - 1 - i] = node;
        rule.nodes[i] = -node;
        const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
        rule.weights[i] = rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

/// Raised when the requested accuracy cannot be certified (quadrature below
/// the supported viscosity, unstable finite-difference settings, ...).
struct AccuracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Cole-Hopf quotient for the sine case,
///   u = -Int sin(pi(x-eta)) F(x-eta) G(eta,t) / Int F(x-eta) G(eta,t),
/// with the Gaussian kernel absorbed by the substitution eta = 2 sqrt(eps t) s
/// and F normalized by its maximum to avoid overflow. Supported for
/// eps >= 1e-2/pi; below that the integrand's internal layer is not resolved
/// at any permitted order and the finite-difference reference is
/// authoritative.
inline double exact_smooth(double eps, double x, double t, int quad_order = 200) {
    constexpr double kMinEps = 1e-2 / std::numbers::pi;
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (eps < kMinEps * (1.0 - 1e-12))
        throw AccuracyError(
            "exact_smooth is unreliable below eps = 1e-2/pi; use the "
            "finite-difference reference");
    if (!(t > 0.0)) throw std::invalid_argument("exact_smooth requires t > 0");
    static thread_local QuadRule rule;
    static thread_local int cached_order = -1;
    if (cached_order != quad_order) {
        rule = gauss_hermite(quad_order);
        cached_order = quad_order;
    }
    const double scale = 2.0 * std::sqrt(eps * t);
    const double pi = std::numbers::pi;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < quad_order; ++i) {
        const double y = x - scale * rule.nodes[i];
        // F(y)/max F = exp(-(cos(pi y)+1)/(2 pi eps)) in (0, 1].
        const double f = std::exp(-(std::cos(pi * y) + 1.0) / (2.0 * pi * eps));
        num += rule.weights[i] * std::sin(pi * y) * f;
        den += rule.weights[i] * f;
    }
    return -num / den;
}

// ---- finite-difference reference solver --------------------------------------

/// Solution snapshots on a uniform (x, t) grid, the common currency of the
/// reference solver and the error metrics. `dt` records the solver step that
/// produced the values; rows are stored at `nt` uniformly spaced times.
struct SolutionGrid {
    CaseKind kind = CaseKind::SmoothSine;
    double eps = 0.0;
    double dx = 0.0;
    double dt = 0.0;
    double t_final = 1.0;
    double u_left = 0.0, u_right_mag = 0.0;  // Riemann states (0 for sine)
    int nx = 0, nt = 0;
    std::vector<double> x_nodes, t_nodes;
    std::vector<double> values;  // time-major: values[it * nx + ix]

    std::span<const double> row(int it) const {
        return {values.data() + static_cast<std::size_t>(it) * nx,
                static_cast<std::size_t>(nx)};
    }
    double value(int it, int ix) const {
        return values[static_cast<std::size_t>(it) * nx + ix];
    }

    int time_index(double t) const {
        const double step = t_final / (nt - 1);
        const int it = static_cast<int>(std::llround(t / step));
        if (it < 0 || it >= nt || std::abs(t_nodes[it] - t) > 1e-9)
            throw std::invalid_argument("time not on the stored grid");
        return it;
    }

    int space_index(double x) const {
        const double step = 2.0 / (nx - 1);
        const int ix = static_cast<int>(std::llround((x + 1.0) / step));
        if (ix < 0 || ix >= nx || std::abs(x_nodes[ix] - x) > 1e-9)
            throw std::invalid_argument("position not on the stored grid");
        return ix;
    }
};

struct StabilityError : std::runtime_error {
    StabilityError(const std::string& msg, double max_dt_)
        : std::runtime_error(msg), max_dt(max_dt_) {}
    double max_dt;
};

inline double fd_max_stable_dt(const ProblemSpec& ps, double dx) {
    return std::min(dx * dx / (2.0 * ps.eps), dx / ps.data_bound());
}

/// The step actually taken: `dt` reduced so that each snapshot interval is an
/// integer number of substeps.
inline double fd_effective_dt(double t_final, int nt_out, double dt) {
    const double interval = t_final / (nt_out - 1);
    const int substeps =
        std::max(1, static_cast<int>(std::ceil(interval / dt - 1e-12)));
    return interval / substeps;
}

/// One forward-time step of the central scheme with the advection term in
/// conservative form d/dx(u^2/2): periodic wrap or pinned Dirichlet ends.
/// Returns max|u| over the updated nodes.
inline double fd_step(std::span<const double> u, std::span<double> un,
                      bool periodic, double eps, double dx, double dt) {
    const int nx = static_cast<int>(u.size());
    const double c_diff = eps * dt / (dx * dx);
    const double c_adv = dt / (4.0 * dx);
    double vmax = 0.0;
    if (periodic) {
        for (int i = 0; i < nx - 1; ++i) {
            const double ul = (i == 0) ? u[nx - 2] : u[i - 1];
            const double ur = (i == nx - 2) ? u[0] : u[i + 1];
            un[i] = u[i] + c_diff * (ur - 2.0 * u[i] + ul) -
                    c_adv * (ur * ur - ul * ul);
            vmax = std::max(vmax, std::abs(un[i]));
        }
        un[nx - 1] = un[0];
    } else {
        un[0] = u[0];
        un[nx - 1] = u[nx - 1];
        vmax = std::max(std::abs(un[0]), std::abs(un[nx - 1]));
        for (int i = 1; i < nx - 1; ++i) {
            const double ul = u[i - 1], ur = u[i + 1];
            un[i] = u[i] + c_diff * (ur - 2.0 * u[i] + ul) -
                    c_adv * (ur * ur - ul * ul);
            vmax = std::max(vmax, std::abs(un[i]));
        }
    }
    return vmax;
}

/// Forward-time central-space scheme for the viscous Burgers equation, with
/// the advection term in conservative form d/dx(u^2/2). Periodic wrap for the
/// sine case, Dirichlet far-field pinning for the Riemann cases. The time
/// step is reduced so snapshot times are hit exactly.
inline SolutionGrid solve_fd(const ProblemSpec& ps, double dx, double dt,
                             int nt_out = 201) {
    ps.validate();
    if (!(dx > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("dx and dt must be positive");
    if (nt_out < 2) throw std::invalid_argument("need at least two snapshots");
    const double max_dt = fd_max_stable_dt(ps, dx);
    if (dt > max_dt * (1.0 + 1e-12))
        throw StabilityError(
            "unstable time step: dt = " + std::to_string(dt) +
                " exceeds the maximal stable dt = " + std::to_string(max_dt) +
                " (min of dx^2/(2 eps) and dx/max|u|)",
            max_dt);

    const int nx = static_cast<int>(std::llround(2.0 / dx)) + 1;
    if (nx < 5 || std::abs((nx - 1) * dx - 2.0) > 1e-6 * dx)
        throw std::invalid_argument("dx must divide the domain (-1, 1)");

    SolutionGrid g;
    g.kind = ps.kind;
    g.eps = ps.eps;
    g.dx = 2.0 / (nx - 1);
    g.t_final = ps.t_final;
    if (ps.riemann()) {
        g.u_left = ps.u_left;
        g.u_right_mag = ps.u_right_mag;
    }
    g.nx = nx;
    g.nt = nt_out;
    g.x_nodes.resize(nx);
    const double half = 1.0 / (nx - 1);
    for (int i = 0; i < nx; ++i)
        g.x_nodes[i] = (2.0 * i - (nx - 1)) * half;  // exact +- symmetry
    g.t_nodes.resize(nt_out);
    for (int j = 0; j < nt_out; ++j)
        g.t_nodes[j] = ps.t_final * j / (nt_out - 1);

    const double interval = ps.t_final / (nt_out - 1);
    const double h = fd_effective_dt(ps.t_final, nt_out, dt);
    const int substeps = static_cast<int>(std::llround(interval / h));
    g.dt = h;

    const bool periodic = ps.kind == CaseKind::SmoothSine;
    std::vector<double> u(nx), un(nx);
    for (int i = 0; i < nx; ++i) {
        const double x = g.x_nodes[i];
        if (ps.riemann() && x == 0.0)
            u[i] = 0.5 * (ps.u_left - ps.u_right_mag);  // jump midpoint
        else
            u[i] = initial_data(ps, x);
    }
    if (periodic) u[nx - 1] = u[0];

    g.values.assign(static_cast<std::size_t>(nt_out) * nx, 0.0);
    std::copy(u.begin(), u.end(), g.values.begin());

    const double bound = 10.0 * ps.data_bound();
    long long step_index = 0;

    for (int snap = 1; snap < nt_out; ++snap) {
        for (int s = 0; s < substeps; ++s) {
            ++step_index;
            const double vmax = fd_step(u, un, periodic, ps.eps, g.dx, h);
            if (!(vmax <= bound))
                throw std::runtime_error("finite-difference blow-up at step " +
                                         std::to_string(step_index));
            u.swap(un);
        }
        std::copy(u.begin(), u.end(),
                  g.values.begin() + static_cast<std::size_t>(snap) * nx);
    }
    return g;
}

// ---- grid file format ---------------------------------------------------------

inline constexpr char kGridMagic[8] = {'S', 'L', 'P', 'G', 'R', 'D', '0', '1'};

inline void write_grid(const std::filesystem::path& path,
                       const SolutionGrid& g) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out.write(kGridMagic, 8);
    const std::int32_t kind = static_cast<std::int32_t>(g.kind);
    const std::int32_t nx = g.nx, nt = g.nt;
    out.write(reinterpret_cast<const char*>(&kind), 4);
    out.write(reinterpret_cast<const char*>(&nx), 4);
    out.write(reinterpret_cast<const char*>(&nt), 4);
    const double header[6] = {g.eps,     g.dx,     g.dt,
                              g.t_final, g.u_left, g.u_right_mag};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    auto write_vec = [&](const std::vector<double>& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    write_vec(g.x_nodes);
    write_vec(g.t_nodes);
    write_vec(g.values);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline SolutionGrid read_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kGridMagic, 8) != 0)
        throw std::runtime_error("not a grid file: " + path.string());
    std::int32_t kind, nx, nt;
    in.read(reinterpret_cast<char*>(&kind), 4);
    in.read(reinterpret_cast<char*>(&nx), 4);
    in.read(reinterpret_cast<char*>(&nt), 4);
    double header[6];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || nx < 2 || nt < 2)
        throw std::runtime_error("corrupt grid header: " + path.string());
    SolutionGrid g;
    g.kind = static_cast<CaseKind>(kind);
    g.nx = nx;
    g.nt = nt;
    g.eps = header[0];
    g.dx = header[1];
    g.dt = header[2];
    g.t_final = header[3];
    g.u_left = header[4];
    g.u_right_mag = header[5];
    auto read_vec = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
    };
    read_vec(g.x_nodes, nx);
    read_vec(g.t_nodes, nt);
    read_vec(g.values, static_cast<std::size_t>(nx) * nt);
    if (!in) throw std::runtime_error("truncated grid file: " + path.string());
    return g;
}

}  // namespace slpinn
