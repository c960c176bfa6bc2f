#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace slpinn {

/// First/second moment estimates plus the fixed hyperparameters of
/// bias-corrected Adam.
struct AdamState {
    std::vector<double> m, v;
    long long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double delta = 1e-8;

    void init(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
        step = 0;
    }
};

/// One full-batch Adam update, in place. Rejects non-finite gradients so the
/// training driver can log and halt instead of silently corrupting moments.
inline void adam_step(AdamState& st, std::span<double> params,
                      std::span<const double> grad) {
    if (st.m.size() != params.size() || grad.size() != params.size())
        throw std::invalid_argument("adam_step size mismatch");
    for (double g : grad)
        if (!std::isfinite(g))
            throw std::runtime_error("adam_step: non-finite gradient");
    st.step += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.delta);
    }
}

/// Objective callback: fills `grad` and returns the loss. May return +inf for
/// points it refuses to evaluate (the line search treats those as too far).
using ValueAndGrad =
    std::function<double(std::span<const double>, std::span<double>)>;

/// Limited-memory curvature pairs and line-search constants. `lr` is the
/// initial trial step of the strong-Wolfe search.
struct LbfgsState {
    int memory = 10;
    double lr = 1.0;
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_evals = 20;

    std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs;
    std::vector<double> f_grad;  // gradient at the current point
    double f_value = 0.0;
    bool f_cached = false;

    void reset() {
        pairs.clear();
        f_cached = false;
    }
};

enum class LbfgsStatus {
    kOk,              // step accepted
    kConverged,       // gradient exactly zero; params unchanged
    kStagnated,       // line search failed; params unchanged
    kBaseNotEvaluable // objective is non-finite at the current point
};

struct LbfgsResult {
    LbfgsStatus status;
    double loss;  // objective at the returned parameters
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Two-loop recursion; returns the search direction in `dir`.
inline void lbfgs_direction(const LbfgsState& st, std::span<const double> g,
                            std::vector<double>& dir) {
    const std::size_t n = g.size();
    dir.assign(g.begin(), g.end());
    if (st.pairs.empty()) {
        for (double& d : dir) d = -d;
        return;
    }
    const std::size_t k = st.pairs.size();
    std::vector<double> alpha(k), rho(k);
    for (std::size_t i = 0; i < k; ++i)
        rho[i] = 1.0 / dot(st.pairs[i].first, st.pairs[i].second);
    for (std::size_t i = k; i-- > 0;) {
        alpha[i] = rho[i] * dot(st.pairs[i].first, dir);
        for (std::size_t j = 0; j < n; ++j)
            dir[j] -= alpha[i] * st.pairs[i].second[j];
    }
    const auto& [s_last, y_last] = st.pairs.back();
    const double gamma = dot(s_last, y_last) / dot(y_last, y_last);
    for (double& d : dir) d *= gamma;
    for (std::size_t i = 0; i < k; ++i) {
        const double beta = rho[i] * dot(st.pairs[i].second, dir);
        for (std::size_t j = 0; j < n; ++j)
            dir[j] += (alpha[i] - beta) * st.pairs[i].first[j];
    }
    for (double& d : dir) d = -d;
}

}  // namespace detail

/// One L-BFGS iteration with a strong-Wolfe line search. Falls back to
/// steepest descent when the two-loop direction is not a descent direction;
/// curvature pairs with s.y <= 0 are skipped when updating the memory.
inline LbfgsResult lbfgs_step(LbfgsState& st, std::vector<double>& params,
                              const ValueAndGrad& vg) {
    const std::size_t n = params.size();
    if (!st.f_cached) {
        st.f_grad.assign(n, 0.0);
        st.f_value = vg(params, st.f_grad);
        st.f_cached = true;
    }
    const double f0 = st.f_value;
    if (!std::isfinite(f0)) {
        st.f_cached = false;
        return {LbfgsStatus::kBaseNotEvaluable, f0};
    }

    bool all_zero = true;
    for (double g : st.f_grad)
        if (g != 0.0) {
            all_zero = false;
            break;
        }
    if (all_zero) return {LbfgsStatus::kConverged, f0};

    thread_local std::vector<double> dir;
    detail::lbfgs_direction(st, st.f_grad, dir);
    double dphi0 = detail::dot(dir, st.f_grad);
    if (!(dphi0 < 0.0)) {
        for (std::size_t i = 0; i < n; ++i) dir[i] = -st.f_grad[i];
        dphi0 = detail::dot(dir, st.f_grad);
    }

    // Strong Wolfe search along dir (Nocedal & Wright alg. 3.5/3.6 with
    // safeguarded quadratic interpolation in the zoom phase).
    std::vector<double> x_trial(n), g_trial(n);
    const auto phi = [&](double a) {
        for (std::size_t i = 0; i < n; ++i) x_trial[i] = params[i] + a * dir[i];
        return vg(x_trial, g_trial);
    };
    const double c1 = st.c1, c2 = st.c2;
    int evals = 0;
    double a_prev = 0.0, f_prev = f0, dphi_prev = dphi0;
    double a = st.lr;
    double a_accept = -1.0, f_accept = 0.0;
    std::vector<double> g_accept;

    double lo = 0.0, hi = 0.0, f_lo = f0, dphi_lo = dphi0;
    bool zooming = false;
    double f_hi = 0.0;

    while (evals < st.max_evals) {
        if (!zooming) {
            const double fa = phi(a);
            ++evals;
            const double dphia =
                std::isfinite(fa) ? detail::dot(dir, g_trial)
                                  : std::numeric_limits<double>::infinity();
            if (!std::isfinite(fa) || fa > f0 + c1 * a * dphi0 ||
                (evals > 1 && fa >= f_prev)) {
                lo = a_prev; f_lo = f_prev; dphi_lo = dphi_prev;
                hi = a; f_hi = fa;
                zooming = true;
                continue;
            }
            if (std::abs(dphia) <= -c2 * dphi0) {
                a_accept = a; f_accept = fa; g_accept = g_trial;
                break;
            }
            if (dphia >= 0.0) {
                lo = a; f_lo = fa; dphi_lo = dphia;
                hi = a_prev; f_hi = f_prev;
                zooming = true;
                continue;
            }
            a_prev = a; f_prev = fa; dphi_prev = dphia;
            a = 2.0 * a;
        } else {
            // Quadratic model through (lo, f_lo, dphi_lo) and (hi, f_hi),
            // bisection when the model step leaves the bracket.
            double aj;
            const double dh = hi - lo;
            const double denom = f_hi - f_lo - dphi_lo * dh;
            if (std::isfinite(f_hi) && denom != 0.0) {
                aj = lo - 0.5 * dphi_lo * dh * dh / denom;
                const double margin = 0.1 * std::abs(dh);
                const double lo_b = std::min(lo, hi) + margin;
                const double hi_b = std::max(lo, hi) - margin;
                if (!(aj >= lo_b && aj <= hi_b)) aj = lo + 0.5 * dh;
            } else {
                aj = lo + 0.5 * dh;
            }
            const double fj = phi(aj);
            ++evals;
            const double dphij =
                std::isfinite(fj) ? detail::dot(dir, g_trial)
                                  : std::numeric_limits<double>::infinity();
            if (!std::isfinite(fj) || fj > f0 + c1 * aj * dphi0 || fj >= f_lo) {
                hi = aj; f_hi = fj;
            } else {
                if (std::abs(dphij) <= -c2 * dphi0) {
                    a_accept = aj; f_accept = fj; g_accept = g_trial;
                    break;
                }
                if (dphij * (hi - lo) >= 0.0) {
                    hi = lo; f_hi = f_lo;
                }
                lo = aj; f_lo = fj; dphi_lo = dphij;
            }
            if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
        }
    }

    if (a_accept < 0.0) return {LbfgsStatus::kStagnated, f0};

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = a_accept * dir[i];
        params[i] += s[i];
        y[i] = g_accept[i] - st.f_grad[i];
    }
    const double sy = detail::dot(s, y);
    if (sy > 1e-10 * detail::norm2(s) * detail::norm2(y)) {
        st.pairs.emplace_back(std::move(s), std::move(y));
        while (static_cast<int>(st.pairs.size()) > st.memory)
            st.pairs.pop_front();
    }
    st.f_value = f_accept;
    st.f_grad = std::move(g_accept);
    st.f_cached = true;
    return {LbfgsStatus::kOk, f_accept};
}

}  // namespace slpinn
