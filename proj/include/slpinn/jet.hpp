#pragma once

#include <cmath>
#include <stdexcept>

namespace slpinn {

/// Value of a scalar field together with its x-, xx- and t-derivatives at a
/// point. All composition rules below follow ordinary calculus; the second
/// x-derivative is carried exactly (product and chain rules), never by
/// finite differences.
struct Jet {
    double v   = 0.0;  ///< field value
    double dx  = 0.0;  ///< first x-derivative
    double dxx = 0.0;  ///< second x-derivative
    double dt  = 0.0;  ///< first t-derivative

    static constexpr Jet variable_x(double x) { return {x, 1.0, 0.0, 0.0}; }
    static constexpr Jet variable_t(double t) { return {t, 0.0, 0.0, 1.0}; }
    static constexpr Jet constant(double c) { return {c, 0.0, 0.0, 0.0}; }

    bool finite() const {
        return std::isfinite(v) && std::isfinite(dx) && std::isfinite(dxx) &&
               std::isfinite(dt);
    }

    friend constexpr bool operator==(const Jet&, const Jet&) = default;
};

constexpr Jet operator+(const Jet& a, const Jet& b) {
    return {a.v + b.v, a.dx + b.dx, a.dxx + b.dxx, a.dt + b.dt};
}

constexpr Jet operator-(const Jet& a, const Jet& b) {
    return {a.v - b.v, a.dx - b.dx, a.dxx - b.dxx, a.dt - b.dt};
}

constexpr Jet operator-(const Jet& a) { return {-a.v, -a.dx, -a.dxx, -a.dt}; }

constexpr Jet operator*(const Jet& a, const Jet& b) {
    return {a.v * b.v,
            a.dx * b.v + a.v * b.dx,
            a.dxx * b.v + 2.0 * a.dx * b.dx + a.v * b.dxx,
            a.dt * b.v + a.v * b.dt};
}

constexpr Jet operator*(const Jet& a, double c) {
    return {a.v * c, a.dx * c, a.dxx * c, a.dt * c};
}
constexpr Jet operator*(double c, const Jet& a) { return a * c; }

constexpr Jet operator+(const Jet& a, double c) {
    return {a.v + c, a.dx, a.dxx, a.dt};
}
constexpr Jet operator+(double c, const Jet& a) { return a + c; }
constexpr Jet operator-(const Jet& a, double c) { return a + (-c); }
constexpr Jet operator-(double c, const Jet& a) { return (-a) + c; }

/// 1/b. Requires b.v != 0.
constexpr Jet recip(const Jet& b) {
    const double iv = 1.0 / b.v;
    const double iv2 = iv * iv;
    return {iv, -b.dx * iv2, (2.0 * b.dx * b.dx * iv - b.dxx) * iv2,
            -b.dt * iv2};
}

constexpr Jet operator/(const Jet& a, const Jet& b) { return a * recip(b); }
constexpr Jet operator/(const Jet& a, double c) { return a * (1.0 / c); }
constexpr Jet operator/(double c, const Jet& b) { return recip(b) * c; }

inline Jet tanh(const Jet& a) {
    const double v = std::tanh(a.v);
    const double s = 1.0 - v * v;  // sech^2
    return {v, s * a.dx, s * a.dxx - 2.0 * v * s * a.dx * a.dx, s * a.dt};
}

inline Jet exp(const Jet& a) {
    const double v = std::exp(a.v);
    return {v, v * a.dx, v * (a.dxx + a.dx * a.dx), v * a.dt};
}

/// Natural log. Throws std::domain_error for non-positive values so that
/// corrector faults surface instead of propagating NaNs.
inline Jet log(const Jet& a) {
    if (!(a.v > 0.0))
        throw std::domain_error("log of non-positive jet value");
    const double iv = 1.0 / a.v;
    return {std::log(a.v), a.dx * iv, a.dxx * iv - a.dx * a.dx * iv * iv,
            a.dt * iv};
}

inline Jet sin(const Jet& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return {s, c * a.dx, c * a.dxx - s * a.dx * a.dx, c * a.dt};
}

inline Jet square(const Jet& a) { return a * a; }
constexpr double square(double a) { return a * a; }

// Component extraction as scalar-valued fields (derivative slots cleared).
// Used to assemble PDE residuals, which are pointwise scalars of the jet.
constexpr Jet extract_v(const Jet& a) { return Jet::constant(a.v); }
constexpr Jet extract_dx(const Jet& a) { return Jet::constant(a.dx); }
constexpr Jet extract_dxx(const Jet& a) { return Jet::constant(a.dxx); }
constexpr Jet extract_dt(const Jet& a) { return Jet::constant(a.dt); }

}  // namespace slpinn
