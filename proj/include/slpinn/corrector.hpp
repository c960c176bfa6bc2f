#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "slpinn/jet.hpp"
#include "slpinn/tape.hpp"

namespace slpinn {

enum class Side { L, R };

inline const char* side_name(Side s) { return s == Side::L ? "L" : "R"; }

/// Raised when corrector parameters leave their admissible set (log argument
/// non-positive, vanishing layer slope). During training this is a
/// diverged-state fault handled by the driver.
struct CorrectorDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shock location alpha(t) = speed * t and its constant speed. Covers every
/// case treated here: alpha == 0 for the smooth problem, alpha = t/4 for the
/// moving Riemann shock.
struct ShockCurve {
    double speed = 0.0;

    double alpha(double t) const { return speed * t; }
    double alpha_dot(double /*t*/) const { return speed; }
};

/// Rankine-Hugoniot speed for left state u_L and right state -u_R_mag.
/// Requires both magnitudes positive so that u_L > speed > -u_R_mag.
inline double shock_speed(double u_left, double u_right_mag) {
    if (!(u_left > 0.0) || !(u_right_mag > 0.0))
        throw std::invalid_argument(
            "shock_speed requires positive one-sided magnitudes (entropy "
            "ordering)");
    return 0.5 * (u_left - u_right_mag);
}

/// Scalar b~ approximating b(t) = u^eps(alpha(t), t), together with the
/// entropy interval it must stay inside. The interval check is the caller's
/// error condition; the value is never clamped here.
struct CorrectorState {
    double b_tilde = 0.0;
    double b_lo = -std::numeric_limits<double>::infinity();
    double b_hi = std::numeric_limits<double>::infinity();

    bool inside_interval() const { return b_tilde > b_lo && b_tilde < b_hi; }
};

inline double init_b_tilde(double u0_left_limit, double u0_right_limit) {
    return 0.5 * (u0_left_limit + u0_right_limit);
}

inline double update_b_tilde(double u_tilde_left_at_shock,
                             double u_tilde_right_at_shock) {
    return 0.5 * (u_tilde_left_at_shock + u_tilde_right_at_shock);
}

struct CorrectorProfileParams {
    double slope;   // M_*
    double offset;  // m_*
};

/// Layer slope and offset of the explicit profile. Enforces the one-sided
/// ordering (u0 - alpha_dot positive on side L, negative on side R) and the
/// positivity of the log argument.
inline CorrectorProfileParams corrector_profile_params(Side side, double u0_side,
                                                       double alpha_dot, double b,
                                                       double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    const double d = u0_side - alpha_dot;
    if (side == Side::L ? !(d > 0.0) : !(d < 0.0))
        throw CorrectorDomainError(
            std::string("corrector ordering violated on side ") + side_name(side));
    const double num = u0_side - 2.0 * alpha_dot + b;
    const double den = u0_side - b;
    if (!(num * den > 0.0))
        throw CorrectorDomainError("corrector log argument is non-positive");
    const double slope = d / eps;
    return {slope, std::log(num / den) / slope};
}

/// Explicit interior-layer profile
///   phi(x~) = (alpha_dot - u0) * (1 + tanh(M/2 (x~ - m))).
inline double corrector_explicit(Side side, double u0_side, double alpha_dot,
                                 double b, double eps, double x_tilde) {
    const auto [M, m] = corrector_profile_params(side, u0_side, alpha_dot, b, eps);
    return (alpha_dot - u0_side) * (1.0 + std::tanh(0.5 * M * (x_tilde - m)));
}

/// Residual combination -eps*phi'' + (u0 - alpha_dot)*phi' + phi*phi',
/// i.e. -eps*phi'' + 1/2 d/dx~ [2 u0 phi - 2 alpha_dot phi + phi^2]
/// evaluated from supplied derivatives. Exposed so zero and negative-control
/// profiles can be pushed through the same combination.
inline double corrector_ode_combination(double eps, double u0_side,
                                        double alpha_dot, double phi,
                                        double dphi, double ddphi) {
    return -eps * ddphi + (u0_side - alpha_dot) * dphi + phi * dphi;
}

/// ODE residual of the explicit profile using its analytic derivatives.
/// Vanishes identically in exact arithmetic; serves as a verification oracle.
inline double corrector_ode_residual(Side side, double u0_side, double alpha_dot,
                                     double b, double eps, double x_tilde) {
    const auto [M, m] = corrector_profile_params(side, u0_side, alpha_dot, b, eps);
    const double d = alpha_dot - u0_side;
    const double T = std::tanh(0.5 * M * (x_tilde - m));
    const double sech2 = 1.0 - T * T;
    const double phi = d * (1.0 + T);
    const double dphi = d * 0.5 * M * sech2;
    const double ddphi = -d * 0.5 * M * M * sech2 * T;
    return corrector_ode_combination(eps, u0_side, alpha_dot, phi, dphi, ddphi);
}

namespace detail {

inline double value_of(const Jet& j) { return j.v; }
inline double value_of(TapeRef r) { return r.value().v; }
inline Jet zero_like(const Jet&) { return Jet{}; }
inline TapeRef zero_like(TapeRef r) { return r.tape()->constant(0.0); }

inline void check_training_corrector_domain(double u_gamma, double alpha_dot,
                                            double b_tilde) {
    const double num = u_gamma - 2.0 * alpha_dot + b_tilde;
    const double den = u_gamma - b_tilde;
    if (!(num * den > 0.0))
        throw CorrectorDomainError(
            "training corrector log argument is non-positive (u~=" +
            std::to_string(u_gamma) + ", b~=" + std::to_string(b_tilde) + ")");
    if (std::abs(u_gamma - alpha_dot) < 1e-12)
        throw CorrectorDomainError("training corrector layer slope vanished");
}

/// Shared formula for the training corrector, usable with plain jets and
/// with tape nodes. `u_gamma` is the jet of the field (x,t) -> u^(alpha(t),t)
/// (constant in x); `x_minus_alpha` is the jet of x - alpha(t).
template <class V>
V training_corrector_expr(const V& u_gamma, const V& x_minus_alpha,
                          double alpha_dot, double b_tilde, double eps) {
    const V slope = (u_gamma - alpha_dot) * (1.0 / eps);
    if (b_tilde == alpha_dot) {
        // m~ = log(1)/M~ vanishes identically; the reduced profile needs no
        // log or division and stays differentiable through u^ = alpha_dot.
        const V arg = 0.5 * (slope * x_minus_alpha);
        return (alpha_dot - u_gamma) * (1.0 + tanh(arg));
    }
    check_training_corrector_domain(value_of(u_gamma), alpha_dot, b_tilde);
    const V num = u_gamma - (2.0 * alpha_dot - b_tilde);
    const V den = u_gamma - b_tilde;
    const V offset = log(num / den) / slope;
    const V arg = 0.5 * (slope * (x_minus_alpha - offset));
    return (alpha_dot - u_gamma) * (1.0 + tanh(arg));
}

}  // namespace detail

/// Training corrector as a jet in (x, t), from the raw network jet evaluated
/// at (alpha(t), t). Gradients flow into the network parameters through that
/// evaluation when the tape overload is used.
inline Jet training_corrector(Side /*side*/, const Jet& net_at_shock,
                              const ShockCurve& shock,
                              const CorrectorState& state, double eps, double x,
                              double t) {
    const double ad = shock.alpha_dot(t);
    const Jet u_gamma{net_at_shock.v, 0.0, 0.0,
                      ad * net_at_shock.dx + net_at_shock.dt};
    const Jet x_minus_alpha{x - shock.alpha(t), 1.0, 0.0, -ad};
    return detail::training_corrector_expr(u_gamma, x_minus_alpha, ad,
                                           state.b_tilde, eps);
}

/// Tape overload: `net_at_shock` must be a net evaluation at (alpha(t), t).
inline TapeRef training_corrector(Side /*side*/, TapeRef net_at_shock,
                                  const ShockCurve& shock,
                                  const CorrectorState& state, double eps,
                                  double x, double t) {
    Tape& tp = *net_at_shock.tape();
    const double ad = shock.alpha_dot(t);
    const TapeRef u_gamma = tp.interface_value(net_at_shock, ad);
    const TapeRef x_minus_alpha =
        tp.constant(Jet{x - shock.alpha(t), 1.0, 0.0, -ad});
    return detail::training_corrector_expr(u_gamma, x_minus_alpha, ad,
                                           state.b_tilde, eps);
}

/// Value of the training corrector (no derivatives), for prediction and for
/// the b~ update.
inline double training_corrector_value(double u_hat_at_shock, double alpha_dot,
                                       double b_tilde, double eps, double x,
                                       double alpha_t) {
    const double slope = (u_hat_at_shock - alpha_dot) / eps;
    if (b_tilde == alpha_dot)
        return (alpha_dot - u_hat_at_shock) *
               (1.0 + std::tanh(0.5 * slope * (x - alpha_t)));
    detail::check_training_corrector_domain(u_hat_at_shock, alpha_dot, b_tilde);
    const double num = u_hat_at_shock - 2.0 * alpha_dot + b_tilde;
    const double den = u_hat_at_shock - b_tilde;
    const double offset = std::log(num / den) / slope;
    return (alpha_dot - u_hat_at_shock) *
           (1.0 + std::tanh(0.5 * slope * (x - alpha_t - offset)));
}

}  // namespace slpinn
