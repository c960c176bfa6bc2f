#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "slpinn/corrector.hpp"
#include "slpinn/jet.hpp"
#include "slpinn/network.hpp"
#include "slpinn/tape.hpp"

namespace slpinn {

enum class CaseKind { SmoothSine, RiemannSteady, RiemannMoving };

inline const char* case_name(CaseKind k) {
    switch (k) {
        case CaseKind::SmoothSine: return "smooth_sine";
        case CaseKind::RiemannSteady: return "riemann_steady";
        case CaseKind::RiemannMoving: return "riemann_moving";
    }
    return "?";
}

/// Problem data: viscosity, initial/boundary data family, and the space-time
/// box (-1, 1) x (0, T] with T = 1.
struct ProblemSpec {
    double eps = 1e-2;
    CaseKind kind = CaseKind::SmoothSine;
    double u_left = 1.0;       // Riemann left state (unused for SmoothSine)
    double u_right_mag = 1.0;  // right state is -u_right_mag
    double x_min = -1.0, x_max = 1.0;
    double t_final = 1.0;

    void validate() const {
        if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
        if (!(t_final > 0.0)) throw std::invalid_argument("T must be positive");
        if (kind != CaseKind::SmoothSine &&
            (!(u_left > 0.0) || !(u_right_mag > 0.0)))
            throw std::invalid_argument("Riemann states must be positive");
    }

    bool riemann() const { return kind != CaseKind::SmoothSine; }

    ShockCurve shock() const {
        return ShockCurve{riemann() ? shock_speed(u_left, u_right_mag) : 0.0};
    }

    /// Uniform bound on |u| from the data (maximum principle).
    double data_bound() const {
        return riemann() ? std::max(u_left, u_right_mag) : 1.0;
    }

    /// Admissible open interval for b(t) = u^eps(alpha(t), t). For the
    /// Riemann family this is (u+, u-) = (-u_R, u_L); for the sine case the
    /// data bound stands in for the (time-dependent) one-sided limits.
    std::pair<double, double> entropy_interval() const {
        if (riemann()) return {-u_right_mag, u_left};
        return {-1.0, 1.0};
    }
};

/// Initial data; throws on an untagged request exactly at a Riemann jump.
inline double initial_data(const ProblemSpec& ps, double x) {
    if (ps.kind == CaseKind::SmoothSine) return -std::sin(std::numbers::pi * x);
    if (x < 0.0) return ps.u_left;
    if (x > 0.0) return -ps.u_right_mag;
    throw std::domain_error("initial data at the jump requires a side tag");
}

inline double initial_data(const ProblemSpec& ps, double x, Side side) {
    if (ps.kind == CaseKind::SmoothSine) return -std::sin(std::numbers::pi * x);
    return side == Side::L ? ps.u_left : -ps.u_right_mag;
}

/// Burgers residual u_t - eps u_xx + u u_x evaluated from a jet.
inline double pde_residual(const Jet& u, double eps) {
    return u.dt - eps * u.dxx + u.v * u.dx;
}

/// Tape form; the result is a scalar node (value slot only).
inline TapeRef pde_residual(TapeRef u, double eps) {
    return extract_dt(u) - extract_dxx(u) * eps + extract_v(u) * extract_dx(u);
}

struct SampleCounts {
    int n = 5000;        // collocation points in the interior
    int n_boundary = 80; // times on the lateral boundary
    int n_initial = 80;  // points on t = 0
    int n_interface = 80;// times on the shock curve
};

struct XT {
    double x, t;
};

/// Collocation, boundary, initial and interface sets. The merged interior and
/// initial sets are what a baseline PINN trains on; the L/R partitions (split
/// by the shock curve, order preserved) are the sl-PINN views of the same
/// draws.
struct TrainingSets {
    std::vector<XT> interior;
    std::vector<XT> interior_left, interior_right;
    std::vector<double> boundary_t;
    std::vector<double> initial_x;
    std::vector<double> initial_left, initial_right;
    std::vector<XT> interface_pts;
};

/// Uniform sampling of all four sets, deterministic per seed. Interior and
/// initial draws exactly on the shock curve (or on the outer walls) are
/// redrawn so that every point lies strictly inside its subdomain.
inline TrainingSets sample_training_sets(const ProblemSpec& ps,
                                         const ShockCurve& shock,
                                         const SampleCounts& counts,
                                         std::uint64_t seed) {
    ps.validate();
    if (counts.n < 0 || counts.n_boundary < 0 || counts.n_initial < 0 ||
        counts.n_interface < 0)
        throw std::invalid_argument("sample counts must be non-negative");
    std::mt19937_64 rng(seed);
    TrainingSets out;
    const double T = ps.t_final;

    out.interior.reserve(counts.n);
    for (int i = 0; i < counts.n; ++i) {
        double x, t;
        do {
            x = ps.x_min + uniform01(rng) * (ps.x_max - ps.x_min);
            t = T * (1.0 - uniform01(rng));  // (0, T]
        } while (x <= ps.x_min || x == shock.alpha(t));
        out.interior.push_back({x, t});
        if (x < shock.alpha(t))
            out.interior_left.push_back({x, t});
        else
            out.interior_right.push_back({x, t});
    }

    out.boundary_t.reserve(counts.n_boundary);
    for (int i = 0; i < counts.n_boundary; ++i)
        out.boundary_t.push_back(T * (1.0 - uniform01(rng)));

    out.initial_x.reserve(counts.n_initial);
    const double alpha0 = shock.alpha(0.0);
    for (int i = 0; i < counts.n_initial; ++i) {
        double x;
        do {
            x = ps.x_min + uniform01(rng) * (ps.x_max - ps.x_min);
        } while (x <= ps.x_min || x == alpha0);
        out.initial_x.push_back(x);
        if (x < alpha0)
            out.initial_left.push_back(x);
        else
            out.initial_right.push_back(x);
    }

    out.interface_pts.reserve(counts.n_interface);
    for (int i = 0; i < counts.n_interface; ++i) {
        const double t = T * (1.0 - uniform01(rng));
        out.interface_pts.push_back({shock.alpha(t), t});
    }
    return out;
}

// ---- boundary terms --------------------------------------------------------

/// PINN boundary term at one time: periodic trace mismatch for the sine case,
/// squared distance to the far-field states for the Riemann cases.
template <class V>
V boundary_term_pinn(const ProblemSpec& ps, const V& u_at_left,
                     const V& u_at_right) {
    if (ps.kind == CaseKind::SmoothSine) return square(u_at_right - u_at_left);
    return square(u_at_left - ps.u_left) + square(u_at_right + ps.u_right_mag);
}

/// sl-PINN boundary term for the loss of `side`. The sine case couples both
/// training solutions and is identical in both losses; the Riemann cases pin
/// each side at its own wall.
template <class V>
V boundary_term_slpinn(const ProblemSpec& ps, Side side,
                       const V& u_tilde_left_at_left_wall,
                       const V& u_tilde_right_at_right_wall) {
    if (ps.kind == CaseKind::SmoothSine)
        return square(u_tilde_right_at_right_wall - u_tilde_left_at_left_wall);
    if (side == Side::L)
        return square(u_tilde_left_at_left_wall - ps.u_left);
    return square(u_tilde_right_at_right_wall + ps.u_right_mag);
}

// Convenience double instantiations matching the operation contracts.
inline double boundary_loss_pinn(const ProblemSpec& ps, double u_at_left,
                                 double u_at_right) {
    return boundary_term_pinn<double>(ps, u_at_left, u_at_right);
}
inline double boundary_loss_slpinn(const ProblemSpec& ps, Side side,
                                   double u_tilde_left, double u_tilde_right) {
    return boundary_term_slpinn<double>(ps, side, u_tilde_left, u_tilde_right);
}

// ---- training solution and loss assembly -----------------------------------

/// u~ = u^ + phi~ at one point on the tape. When x is exactly on the shock
/// curve the interface net evaluation is reused for both roles.
inline TapeRef tilde_u(Tape& tp, Tape::BlockId net, Side side,
                       const ProblemSpec& ps, const ShockCurve& shock,
                       const CorrectorState& state, double x, double t,
                       bool use_corrector = true) {
    const TapeRef u_hat = tp.net(net, x, t);
    if (!use_corrector) return u_hat;
    const double a = shock.alpha(t);
    const TapeRef at_shock = (x == a) ? u_hat : tp.net(net, a, t);
    const TapeRef phi =
        training_corrector(side, at_shock, shock, state, ps.eps, x, t);
    return u_hat + phi;
}

/// Sum of squared PDE residuals of u^ over `pts` (baseline PINN).
inline TapeRef pinn_residual_sq_sum(Tape& tp, Tape::BlockId net,
                                    const ProblemSpec& ps,
                                    std::span<const XT> pts) {
    TapeRef sum = tp.constant(0.0);
    for (const XT& p : pts)
        sum = sum + square(pde_residual(tp.net(net, p.x, p.t), ps.eps));
    return sum;
}

/// Sum of squared PDE residuals of u~ over one side's collocation points.
inline TapeRef sl_residual_sq_sum(Tape& tp, Tape::BlockId net, Side side,
                                  const ProblemSpec& ps, const ShockCurve& shock,
                                  const CorrectorState& state,
                                  std::span<const XT> pts,
                                  bool use_corrector = true) {
    TapeRef sum = tp.constant(0.0);
    for (const XT& p : pts) {
        const TapeRef u =
            tilde_u(tp, net, side, ps, shock, state, p.x, p.t, use_corrector);
        sum = sum + square(pde_residual(u, ps.eps));
    }
    return sum;
}

inline TapeRef pinn_boundary_sq_sum(Tape& tp, Tape::BlockId net,
                                    const ProblemSpec& ps,
                                    std::span<const double> ts) {
    TapeRef sum = tp.constant(0.0);
    for (double t : ts) {
        const TapeRef ul = tp.net(net, ps.x_min, t);
        const TapeRef ur = tp.net(net, ps.x_max, t);
        sum = sum + boundary_term_pinn(ps, ul, ur);
    }
    return sum;
}

inline TapeRef sl_boundary_sq_sum(Tape& tp, Tape::BlockId net_left,
                                  Tape::BlockId net_right, Side side,
                                  const ProblemSpec& ps, const ShockCurve& shock,
                                  const CorrectorState& state,
                                  std::span<const double> ts,
                                  bool use_corrector = true) {
    TapeRef sum = tp.constant(0.0);
    for (double t : ts) {
        TapeRef term = tp.constant(0.0);
        if (ps.kind == CaseKind::SmoothSine) {
            const TapeRef utl = tilde_u(tp, net_left, Side::L, ps, shock, state,
                                        ps.x_min, t, use_corrector);
            const TapeRef utr = tilde_u(tp, net_right, Side::R, ps, shock, state,
                                        ps.x_max, t, use_corrector);
            term = boundary_term_slpinn(ps, side, utl, utr);
        } else if (side == Side::L) {
            const TapeRef utl = tilde_u(tp, net_left, Side::L, ps, shock, state,
                                        ps.x_min, t, use_corrector);
            term = boundary_term_slpinn(ps, side, utl, utl /*unused*/);
        } else {
            const TapeRef utr = tilde_u(tp, net_right, Side::R, ps, shock, state,
                                        ps.x_max, t, use_corrector);
            term = boundary_term_slpinn(ps, side, utr /*unused*/, utr);
        }
        sum = sum + term;
    }
    return sum;
}

inline TapeRef pinn_initial_sq_sum(Tape& tp, Tape::BlockId net,
                                   const ProblemSpec& ps,
                                   std::span<const double> xs) {
    TapeRef sum = tp.constant(0.0);
    for (double x : xs)
        sum = sum + square(tp.net(net, x, 0.0) - initial_data(ps, x));
    return sum;
}

inline TapeRef sl_initial_sq_sum(Tape& tp, Tape::BlockId net, Side side,
                                 const ProblemSpec& ps, const ShockCurve& shock,
                                 const CorrectorState& state,
                                 std::span<const double> xs,
                                 bool use_corrector = true) {
    TapeRef sum = tp.constant(0.0);
    for (double x : xs) {
        const TapeRef u =
            tilde_u(tp, net, side, ps, shock, state, x, 0.0, use_corrector);
        sum = sum + square(u - initial_data(ps, x, side));
    }
    return sum;
}

struct InterfaceSums {
    TapeRef continuity;         // sum |u~_L - u~_R|^2
    TapeRef residual_mismatch;  // sum |R(u~_L) - R(u~_R)|^2
};

/// Interface sums over T_Gamma; identical nodes feed both side losses.
inline InterfaceSums interface_sq_sums(Tape& tp, Tape::BlockId net_left,
                                       Tape::BlockId net_right,
                                       const ProblemSpec& ps,
                                       const ShockCurve& shock,
                                       const CorrectorState& state,
                                       std::span<const XT> pts,
                                       bool use_corrector = true) {
    TapeRef cont = tp.constant(0.0);
    TapeRef resm = tp.constant(0.0);
    for (const XT& p : pts) {
        const TapeRef ul = tilde_u(tp, net_left, Side::L, ps, shock, state, p.x,
                                   p.t, use_corrector);
        const TapeRef ur = tilde_u(tp, net_right, Side::R, ps, shock, state, p.x,
                                   p.t, use_corrector);
        cont = cont + square(ul - ur);
        resm = resm +
               square(pde_residual(ul, ps.eps) - pde_residual(ur, ps.eps));
    }
    return {cont, resm};
}

/// Full PINN loss on one tape: mean squared residual + mean boundary term +
/// mean squared initial mismatch. Returns a scalar node.
inline TapeRef loss_pinn(Tape& tp, Tape::BlockId net, const ProblemSpec& ps,
                         const TrainingSets& sets) {
    TapeRef loss = tp.constant(0.0);
    if (!sets.interior.empty())
        loss = loss + pinn_residual_sq_sum(tp, net, ps, sets.interior) /
                          static_cast<double>(sets.interior.size());
    if (!sets.boundary_t.empty())
        loss = loss + pinn_boundary_sq_sum(tp, net, ps, sets.boundary_t) /
                          static_cast<double>(sets.boundary_t.size());
    if (!sets.initial_x.empty())
        loss = loss + pinn_initial_sq_sum(tp, net, ps, sets.initial_x) /
                          static_cast<double>(sets.initial_x.size());
    return tp.extract_v(loss);
}

struct SlLossNodes {
    TapeRef loss_left, loss_right;
};

/// Both sl-PINN side losses on one tape. The two interface terms are shared
/// nodes, so they enter both losses bitwise-identically.
inline SlLossNodes loss_slpinn(Tape& tp, Tape::BlockId net_left,
                               Tape::BlockId net_right, const ProblemSpec& ps,
                               const ShockCurve& shock,
                               const CorrectorState& state,
                               const TrainingSets& sets,
                               bool use_corrector = true) {
    TapeRef ll = tp.constant(0.0);
    TapeRef lr = tp.constant(0.0);
    if (!sets.interior_left.empty())
        ll = ll + sl_residual_sq_sum(tp, net_left, Side::L, ps, shock, state,
                                     sets.interior_left, use_corrector) /
                      static_cast<double>(sets.interior_left.size());
    if (!sets.interior_right.empty())
        lr = lr + sl_residual_sq_sum(tp, net_right, Side::R, ps, shock, state,
                                     sets.interior_right, use_corrector) /
                      static_cast<double>(sets.interior_right.size());
    if (!sets.boundary_t.empty()) {
        const double nb = static_cast<double>(sets.boundary_t.size());
        if (ps.kind == CaseKind::SmoothSine) {
            const TapeRef shared =
                sl_boundary_sq_sum(tp, net_left, net_right, Side::L, ps, shock,
                                   state, sets.boundary_t, use_corrector);
            ll = ll + shared / nb;
            lr = lr + shared / nb;
        } else {
            ll = ll + sl_boundary_sq_sum(tp, net_left, net_right, Side::L, ps,
                                         shock, state, sets.boundary_t,
                                         use_corrector) /
                          nb;
            lr = lr + sl_boundary_sq_sum(tp, net_left, net_right, Side::R, ps,
                                         shock, state, sets.boundary_t,
                                         use_corrector) /
                          nb;
        }
    }
    if (!sets.initial_left.empty())
        ll = ll + sl_initial_sq_sum(tp, net_left, Side::L, ps, shock, state,
                                    sets.initial_left, use_corrector) /
                      static_cast<double>(sets.initial_left.size());
    if (!sets.initial_right.empty())
        lr = lr + sl_initial_sq_sum(tp, net_right, Side::R, ps, shock, state,
                                    sets.initial_right, use_corrector) /
                      static_cast<double>(sets.initial_right.size());
    if (!sets.interface_pts.empty()) {
        const double ni = static_cast<double>(sets.interface_pts.size());
        const InterfaceSums is =
            interface_sq_sums(tp, net_left, net_right, ps, shock, state,
                              sets.interface_pts, use_corrector);
        const TapeRef iface = is.continuity / ni + is.residual_mismatch / ni;
        ll = ll + iface;
        lr = lr + iface;
    }
    return {tp.extract_v(ll), tp.extract_v(lr)};
}

}  // namespace slpinn
