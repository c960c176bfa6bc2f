#pragma once

#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "slpinn/jet.hpp"

namespace slpinn {

/// Layer sizes [N0, N1, ..., NL] of a feed-forward network taking (x, t)
/// to a scalar. N0 = 2 and NL = 1 for every network in this library.
struct NetworkShape {
    std::vector<int> layers;

    NetworkShape() = default;
    explicit NetworkShape(std::vector<int> sizes) : layers(std::move(sizes)) {
        validate();
    }

    void validate() const {
        if (layers.size() < 3)
            throw std::invalid_argument("network needs at least one hidden layer");
        if (layers.front() != 2 || layers.back() != 1)
            throw std::invalid_argument("network must map (x,t) to a scalar");
        for (int n : layers)
            if (n < 1) throw std::invalid_argument("layer sizes must be positive");
    }

    int depth() const { return static_cast<int>(layers.size()) - 1; }

    /// Total parameter count in canonical order: for each layer l = 1..L,
    /// W^l row-major (N_l x N_{l-1}) followed by b^l (N_l).
    int param_count() const {
        int n = 0;
        for (std::size_t l = 1; l < layers.size(); ++l)
            n += layers[l] * layers[l - 1] + layers[l];
        return n;
    }

    int max_width() const {
        int w = 0;
        for (int n : layers) w = std::max(w, n);
        return w;
    }

    friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// Portable uniform double in [0, 1): top 53 bits of the generator output.
/// Used instead of std::uniform_real_distribution so that sampled values are
/// identical across standard library implementations.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Glorot-uniform weights (range +-sqrt(6/(fan_in+fan_out))), zero biases.
/// Deterministic per seed; draw order follows the canonical parameter order.
inline std::vector<double> init_params(const NetworkShape& shape,
                                       std::uint64_t seed) {
    shape.validate();
    std::mt19937_64 rng(seed);
    std::vector<double> params;
    params.reserve(shape.param_count());
    for (std::size_t l = 1; l < shape.layers.size(); ++l) {
        const int fan_in = shape.layers[l - 1];
        const int fan_out = shape.layers[l];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (int i = 0; i < fan_out * fan_in; ++i)
            params.push_back(bound * (2.0 * uniform01(rng) - 1.0));
        for (int i = 0; i < fan_out; ++i) params.push_back(0.0);
    }
    return params;
}

/// Per-layer activations retained by a jet-valued forward pass, laid out so
/// the reverse pass can revisit them: for each hidden layer its
/// pre-activations z_l and activations a_l, plus the input pair a_0.
struct NetWorkspace {
    std::vector<Jet> a0;                  // [2]
    std::vector<std::vector<Jet>> z, a;   // hidden layers only

    void resize(const NetworkShape& shape) {
        a0.resize(2);
        const std::size_t hidden = shape.layers.size() - 2;
        z.resize(hidden);
        a.resize(hidden);
        for (std::size_t h = 0; h < hidden; ++h) {
            z[h].resize(shape.layers[h + 1]);
            a[h].resize(shape.layers[h + 1]);
        }
    }
};

namespace detail {

inline void check_params(const NetworkShape& shape,
                         std::span<const double> params) {
    if (static_cast<int>(params.size()) != shape.param_count())
        throw std::invalid_argument("parameter vector length mismatch");
}

// Four jet components as one SIMD lane group; the layer kernels below run on
// these. Same layout as Jet, moved through memcpy to stay within the rules.
typedef double v4df __attribute__((vector_size(32), aligned(8)));
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wignored-attributes"  // vector<v4df>
using V4Buffer = std::vector<v4df>;
#pragma GCC diagnostic pop

static_assert(sizeof(Jet) == 32);

inline v4df load4(const Jet& j) {
    v4df v;
    std::memcpy(&v, &j, sizeof(Jet));
    return v;
}

inline Jet store4(v4df v) {
    Jet j;
    std::memcpy(&j, &v, sizeof(Jet));
    return j;
}

/// Jet-valued tanh on one lane group: z = (v, x, xx, t) pre-activation.
inline v4df tanh4(v4df z) {
    const double v = std::tanh(z[0]);
    const double s = 1.0 - v * v;
    return v4df{v, s * z[1], s * z[2] - 2.0 * v * s * z[1] * z[1], s * z[3]};
}

}  // namespace detail

/// Evaluate the network as a jet in (x, t): value, u_x, u_xx, u_t.
/// Hidden activations are tanh, the output layer is affine. If `ws` is
/// given, layer intermediates are stored for a subsequent backward pass.
inline Jet forward_jet(std::span<const double> params,
                       const NetworkShape& shape, double x, double t,
                       NetWorkspace* ws = nullptr) {
    detail::check_params(shape, params);
    using detail::v4df;
    const auto& L = shape.layers;
    const int depth = shape.depth();

    thread_local detail::V4Buffer cur, nxt;
    cur.resize(std::max(2, shape.max_width()));
    nxt.resize(cur.size());
    cur[0] = v4df{x, 1.0, 0.0, 0.0};
    cur[1] = v4df{t, 0.0, 0.0, 1.0};
    if (ws) {
        ws->resize(shape);
        ws->a0[0] = Jet::variable_x(x);
        ws->a0[1] = Jet::variable_t(t);
    }

    std::size_t off = 0;
    for (int l = 1; l <= depth; ++l) {
        const int n_in = L[l - 1], n_out = L[l];
        const double* W = params.data() + off;
        const double* b = W + n_out * n_in;
        const v4df* in = cur.data();
        for (int j = 0; j < n_out; ++j) {
            const double* wj = W + j * n_in;
            v4df z = {b[j], 0.0, 0.0, 0.0};
            for (int k = 0; k < n_in; ++k) z += wj[k] * in[k];
            if (l < depth) {
                if (ws) ws->z[l - 1][j] = detail::store4(z);
                nxt[j] = detail::tanh4(z);
                if (ws) ws->a[l - 1][j] = detail::store4(nxt[j]);
            } else {
                nxt[j] = z;
            }
        }
        cur.swap(nxt);
        off += static_cast<std::size_t>(n_out) * n_in + n_out;
    }
    return detail::store4(cur[0]);
}

/// Value-only forward pass (plain doubles); used for prediction and grid
/// evaluation where derivatives are not needed.
inline double forward_value(std::span<const double> params,
                            const NetworkShape& shape, double x, double t) {
    detail::check_params(shape, params);
    const auto& L = shape.layers;
    const int depth = shape.depth();
    thread_local std::vector<double> cur, nxt;
    cur.assign({x, t});
    std::size_t off = 0;
    for (int l = 1; l <= depth; ++l) {
        const int n_in = L[l - 1], n_out = L[l];
        nxt.resize(n_out);
        const double* W = params.data() + off;
        const double* b = W + n_out * n_in;
        const double* in = cur.data();
        for (int j = 0; j < n_out; ++j) {
            double z = b[j];
            const double* wj = W + j * n_in;
            for (int k = 0; k < n_in; ++k) z += wj[k] * in[k];
            nxt[j] = (l < depth) ? std::tanh(z) : z;
        }
        cur.swap(nxt);
        off += static_cast<std::size_t>(n_out) * n_in + n_out;
    }
    return cur[0];
}

namespace detail {

inline double dot4(const Jet& a, const Jet& b) {
    return a.v * b.v + a.dx * b.dx + a.dxx * b.dxx + a.dt * b.dt;
}

/// Adjoint of the jet-valued tanh rule. Given the adjoint of a = tanh(z)
/// and the forward values of z and a, returns the adjoint of z.
inline Jet tanh_backward(const Jet& z, const Jet& a, const Jet& abar) {
    const double v = a.v;
    const double s = 1.0 - v * v;
    Jet zbar;
    zbar.v = s * abar.v + (-2.0 * v * s * z.dx) * abar.dx +
             (-2.0 * v * s * z.dt) * abar.dt +
             (-2.0 * v * s * z.dxx - 2.0 * s * (1.0 - 3.0 * v * v) * z.dx * z.dx) *
                 abar.dxx;
    zbar.dx = s * abar.dx + (-4.0 * v * s * z.dx) * abar.dxx;
    zbar.dxx = s * abar.dxx;
    zbar.dt = s * abar.dt;
    return zbar;
}

inline v4df tanh_backward4(v4df z, double v, v4df abar) {
    const double s = 1.0 - v * v;
    v4df r;
    r[0] = s * abar[0] + (-2.0 * v * s * z[1]) * abar[1] +
           (-2.0 * v * s * z[3]) * abar[3] +
           (-2.0 * v * s * z[2] - 2.0 * s * (1.0 - 3.0 * v * v) * z[1] * z[1]) *
               abar[2];
    r[1] = s * abar[1] + (-4.0 * v * s * z[1]) * abar[2];
    r[2] = s * abar[2];
    r[3] = s * abar[3];
    return r;
}

}  // namespace detail

/// Reverse pass of forward_jet: given the adjoint of the output jet,
/// accumulate d(seeded scalar)/d(theta) into `grad` (+=). `ws` must hold the
/// intermediates of the matching forward evaluation.
inline void backward_params(std::span<const double> params,
                            const NetworkShape& shape, const NetWorkspace& ws,
                            const Jet& out_adjoint, std::span<double> grad) {
    detail::check_params(shape, params);
    if (grad.size() != params.size())
        throw std::invalid_argument("gradient vector length mismatch");
    using detail::v4df;
    const auto& L = shape.layers;
    const int depth = shape.depth();

    // Parameter offsets per layer.
    thread_local std::vector<std::size_t> offs;
    offs.assign(1, 0);
    for (int l = 1; l <= depth; ++l)
        offs.push_back(offs.back() + static_cast<std::size_t>(L[l]) * L[l - 1] + L[l]);

    thread_local detail::V4Buffer abar_cur, abar_prev;
    const std::size_t width = std::max(2, shape.max_width());
    abar_cur.resize(width);
    abar_prev.resize(width);
    abar_cur[0] = detail::load4(out_adjoint);

    for (int l = depth; l >= 1; --l) {
        const int n_in = L[l - 1], n_out = L[l];
        const double* W = params.data() + offs[l - 1];
        double* Wbar = grad.data() + offs[l - 1];
        double* bbar = Wbar + n_out * n_in;
        const std::vector<Jet>& a_in = (l == 1) ? ws.a0 : ws.a[l - 2];
        const Jet* ain = a_in.data();

        for (int k = 0; k < n_in; ++k) abar_prev[k] = v4df{0.0, 0.0, 0.0, 0.0};
        v4df* aprev = abar_prev.data();
        for (int j = 0; j < n_out; ++j) {
            // Post-activation adjoint -> pre-activation adjoint.
            v4df zbar = abar_cur[j];
            if (l < depth)
                zbar = detail::tanh_backward4(detail::load4(ws.z[l - 1][j]),
                                              ws.a[l - 1][j].v, zbar);
            bbar[j] += zbar[0];
            const double* wj = W + j * n_in;
            double* wbar_j = Wbar + j * n_in;
            const double zv = zbar[0], zx = zbar[1], zxx = zbar[2],
                         zt = zbar[3];
            for (int k = 0; k < n_in; ++k) {
                const Jet& a = ain[k];
                wbar_j[k] += zv * a.v + zx * a.dx + zxx * a.dxx + zt * a.dt;
                aprev[k] += wj[k] * zbar;
            }
        }
        abar_cur.swap(abar_prev);
    }
    // Input adjoints (x, t) are dropped: inputs carry no parameters.
}

}  // namespace slpinn
