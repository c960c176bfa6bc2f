#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "slpinn/jet.hpp"
#include "slpinn/network.hpp"

namespace slpinn {

/// Raised when a recorded operation leaves its domain (log of a non-positive
/// value, reciprocal of zero). The training driver maps this onto its
/// diverged-state handling.
struct TapeDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Tape;

/// Handle to one node of a Tape. Cheap to copy; valid until Tape::clear().
class TapeRef {
  public:
    TapeRef() = default;
    TapeRef(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}
    const Jet& value() const;
    Tape* tape() const { return tape_; }
    std::uint32_t id() const { return id_; }

  private:
    Tape* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

/// Ordered record of elementary jet-valued operations, with registered
/// parameter blocks as leaves. Values are computed eagerly on record; the
/// reverse sweep visits every record exactly once and accumulates
/// d(seeded scalar)/d(theta) for all registered parameters. Network
/// evaluations are recorded as one fused operation whose reverse rule is the
/// layer-by-layer pass in network.hpp.
///
/// A Tape is single-writer. Use one tape per evaluation thread and reduce
/// gradients by summation afterwards.
class Tape {
  public:
    struct BlockId {
        std::uint32_t idx = 0;
    };

    // ---- parameter leaves ------------------------------------------------

    BlockId register_params(const NetworkShape& shape,
                            std::span<const double> values) {
        detail::check_params(shape, values);
        Block b;
        b.offset = static_cast<std::uint32_t>(params_.size());
        b.count = static_cast<std::uint32_t>(values.size());
        b.shape = shape;
        params_.insert(params_.end(), values.begin(), values.end());
        blocks_.push_back(std::move(b));
        return {static_cast<std::uint32_t>(blocks_.size() - 1)};
    }

    /// Register a free vector of scalar parameters (no network structure).
    BlockId register_free_params(std::span<const double> values) {
        Block b;
        b.offset = static_cast<std::uint32_t>(params_.size());
        b.count = static_cast<std::uint32_t>(values.size());
        params_.insert(params_.end(), values.begin(), values.end());
        blocks_.push_back(std::move(b));
        return {static_cast<std::uint32_t>(blocks_.size() - 1)};
    }

    std::span<const double> block_params(BlockId id) const {
        const Block& b = blocks_.at(id.idx);
        return {params_.data() + b.offset, b.count};
    }

    /// Adjoints of one block after backward().
    std::span<const double> block_adjoint(BlockId id) const {
        const Block& b = blocks_.at(id.idx);
        if (param_adj_.size() != params_.size())
            throw std::logic_error("block_adjoint before backward");
        return {param_adj_.data() + b.offset, b.count};
    }

    std::size_t param_count() const { return params_.size(); }
    std::size_t size() const { return nodes_.size(); }

    // ---- leaves and elementary operations --------------------------------

    TapeRef constant(const Jet& j) { return push(Op::kConst, 0, 0, 0.0, j); }
    TapeRef constant(double c) { return constant(Jet::constant(c)); }

    TapeRef param(BlockId block, std::uint32_t local_index) {
        const Block& b = blocks_.at(block.idx);
        if (local_index >= b.count)
            throw std::out_of_range("param index outside block");
        const std::uint32_t g = b.offset + local_index;
        return push(Op::kParam, g, 0, 0.0, Jet::constant(params_[g]));
    }

    TapeRef add(TapeRef a, TapeRef b) {
        return push(Op::kAdd, a.id(), b.id(), 0.0, val(a) + val(b));
    }
    TapeRef sub(TapeRef a, TapeRef b) {
        return push(Op::kSub, a.id(), b.id(), 0.0, val(a) - val(b));
    }
    TapeRef mul(TapeRef a, TapeRef b) {
        return push(Op::kMul, a.id(), b.id(), 0.0, val(a) * val(b));
    }
    TapeRef neg(TapeRef a) { return push(Op::kNeg, a.id(), 0, 0.0, -val(a)); }
    TapeRef scale(TapeRef a, double c) {
        return push(Op::kScale, a.id(), 0, c, val(a) * c);
    }
    TapeRef shift(TapeRef a, double c) {
        return push(Op::kShift, a.id(), 0, c, val(a) + c);
    }
    TapeRef recip(TapeRef a) {
        if (val(a).v == 0.0) throw TapeDomainError("reciprocal of zero");
        return push(Op::kRecip, a.id(), 0, 0.0, slpinn::recip(val(a)));
    }
    TapeRef log(TapeRef a) {
        if (!(val(a).v > 0.0))
            throw TapeDomainError("log argument is non-positive");
        return push(Op::kLog, a.id(), 0, 0.0, slpinn::log(val(a)));
    }
    TapeRef tanh(TapeRef a) {
        return push(Op::kTanh, a.id(), 0, 0.0, slpinn::tanh(val(a)));
    }
    TapeRef square(TapeRef a) { return mul(a, a); }

    TapeRef extract_v(TapeRef a) {
        return push(Op::kExtractV, a.id(), 0, 0.0, slpinn::extract_v(val(a)));
    }
    TapeRef extract_dx(TapeRef a) {
        return push(Op::kExtractDx, a.id(), 0, 0.0, slpinn::extract_dx(val(a)));
    }
    TapeRef extract_dxx(TapeRef a) {
        return push(Op::kExtractDxx, a.id(), 0, 0.0, slpinn::extract_dxx(val(a)));
    }
    TapeRef extract_dt(TapeRef a) {
        return push(Op::kExtractDt, a.id(), 0, 0.0, slpinn::extract_dt(val(a)));
    }

    /// Reinterpret a network jet evaluated at (alpha(t), t) as the jet of the
    /// field (x, t) -> u(alpha(t), t): constant in x, with total t-derivative
    /// alpha_dot * u_x + u_t. Valid for shock curves with constant speed.
    TapeRef interface_value(TapeRef a, double alpha_dot) {
        const Jet& g = val(a);
        return push(Op::kInterface, a.id(), 0, alpha_dot,
                    Jet{g.v, 0.0, 0.0, alpha_dot * g.dx + g.dt});
    }

    /// Fused network evaluation: records one operation whose forward value is
    /// forward_jet and whose reverse rule is backward_params.
    TapeRef net(BlockId block, double x, double t) {
        const Block& b = blocks_.at(block.idx);
        if (b.shape.layers.empty())
            throw std::invalid_argument("block has no network shape");
        const std::uint32_t wi = acquire_workspace();
        const Jet out = forward_jet({params_.data() + b.offset, b.count},
                                    b.shape, x, t, &ws_[wi]);
        return push(Op::kNet, block.idx, wi, 0.0, out);
    }

    // ---- reverse accumulation ---------------------------------------------

    /// Seed d(node)/d(node) = `seed` on the value slot of `root` and sweep the
    /// record in reverse. Each operation is visited exactly once; parameters
    /// not reachable from `root` keep an exactly-zero adjoint.
    void backward(TapeRef root, double seed = 1.0) {
        if (root.tape() != this) throw std::logic_error("foreign tape node");
        adj_.assign(nodes_.size(), Jet{});
        param_adj_.assign(params_.size(), 0.0);
        adj_[root.id()].v = seed;
        for (std::uint32_t i = root.id() + 1; i-- > 0;) {
            const Node& n = nodes_[i];
            const Jet& o = adj_[i];
            switch (n.op) {
                case Op::kConst:
                    break;
                case Op::kParam:
                    param_adj_[n.a] += o.v;
                    break;
                case Op::kAdd:
                    adj_[n.a] = adj_[n.a] + o;
                    adj_[n.b] = adj_[n.b] + o;
                    break;
                case Op::kSub:
                    adj_[n.a] = adj_[n.a] + o;
                    adj_[n.b] = adj_[n.b] - o;
                    break;
                case Op::kNeg:
                    adj_[n.a] = adj_[n.a] - o;
                    break;
                case Op::kScale:
                    adj_[n.a] = adj_[n.a] + n.aux * o;
                    break;
                case Op::kShift:
                    adj_[n.a] = adj_[n.a] + o;
                    break;
                case Op::kMul:
                    backward_mul(n, o);
                    break;
                case Op::kRecip:
                    backward_recip(n, o);
                    break;
                case Op::kLog:
                    backward_log(n, o);
                    break;
                case Op::kTanh:
                    backward_tanh(n, o);
                    break;
                case Op::kExtractV:
                    adj_[n.a].v += o.v;
                    break;
                case Op::kExtractDx:
                    adj_[n.a].dx += o.v;
                    break;
                case Op::kExtractDxx:
                    adj_[n.a].dxx += o.v;
                    break;
                case Op::kExtractDt:
                    adj_[n.a].dt += o.v;
                    break;
                case Op::kInterface: {
                    adj_[n.a].v += o.v;
                    adj_[n.a].dx += n.aux * o.dt;
                    adj_[n.a].dt += o.dt;
                    break;
                }
                case Op::kNet: {
                    const Block& b = blocks_[n.a];
                    backward_params({params_.data() + b.offset, b.count},
                                    b.shape, ws_[n.b], o,
                                    {param_adj_.data() + b.offset, b.count});
                    break;
                }
            }
        }
    }

    /// d(root)/d(theta) for every registered parameter, in registration
    /// order. Throws if `out` does not match the registered parameter count.
    void grad_wrt_params(TapeRef root, std::span<double> out) {
        if (out.size() != params_.size())
            throw std::invalid_argument(
                "gradient length does not match parameter count: got " +
                std::to_string(out.size()) + ", expected " +
                std::to_string(params_.size()));
        backward(root);
        std::copy(param_adj_.begin(), param_adj_.end(), out.begin());
    }

    std::vector<double> grad_wrt_params(TapeRef root) {
        std::vector<double> g(params_.size());
        grad_wrt_params(root, g);
        return g;
    }

    /// Drop all nodes and parameter blocks, keeping allocated capacity.
    void clear() {
        nodes_.clear();
        params_.clear();
        blocks_.clear();
        adj_.clear();
        param_adj_.clear();
        ws_used_ = 0;
    }

    const Jet& node_value(std::uint32_t id) const { return nodes_.at(id).val; }

  private:
    enum class Op : std::uint8_t {
        kConst,
        kParam,
        kAdd,
        kSub,
        kNeg,
        kScale,
        kShift,
        kMul,
        kRecip,
        kLog,
        kTanh,
        kExtractV,
        kExtractDx,
        kExtractDxx,
        kExtractDt,
        kInterface,
        kNet,
    };

    struct Node {
        Op op;
        std::uint32_t a = 0, b = 0;
        double aux = 0.0;
        Jet val;
    };

    struct Block {
        std::uint32_t offset = 0, count = 0;
        NetworkShape shape;  // empty for free parameter blocks
    };

    const Jet& val(TapeRef r) const {
        if (r.tape() != this) throw std::logic_error("foreign tape node");
        return nodes_[r.id()].val;
    }

    TapeRef push(Op op, std::uint32_t a, std::uint32_t b, double aux, Jet v) {
        nodes_.push_back(Node{op, a, b, aux, v});
        return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    std::uint32_t acquire_workspace() {
        if (ws_used_ == ws_.size()) ws_.emplace_back();
        return static_cast<std::uint32_t>(ws_used_++);
    }

    void backward_mul(const Node& n, const Jet& o) {
        const Jet& a = nodes_[n.a].val;
        const Jet& b = nodes_[n.b].val;
        Jet& ab = adj_[n.a];
        ab.v += o.v * b.v + o.dx * b.dx + o.dxx * b.dxx + o.dt * b.dt;
        ab.dx += o.dx * b.v + 2.0 * o.dxx * b.dx;
        ab.dxx += o.dxx * b.v;
        ab.dt += o.dt * b.v;
        Jet& bb = adj_[n.b];
        bb.v += o.v * a.v + o.dx * a.dx + o.dxx * a.dxx + o.dt * a.dt;
        bb.dx += o.dx * a.v + 2.0 * o.dxx * a.dx;
        bb.dxx += o.dxx * a.v;
        bb.dt += o.dt * a.v;
    }

    void backward_recip(const Node& n, const Jet& o) {
        const Jet& b = nodes_[n.a].val;
        const double iv = 1.0 / b.v;
        const double iv2 = iv * iv, iv3 = iv2 * iv, iv4 = iv2 * iv2;
        Jet& bb = adj_[n.a];
        bb.v += -o.v * iv2 + 2.0 * o.dx * b.dx * iv3 + 2.0 * o.dt * b.dt * iv3 +
                o.dxx * (2.0 * b.dxx * iv3 - 6.0 * b.dx * b.dx * iv4);
        bb.dx += -o.dx * iv2 + 4.0 * o.dxx * b.dx * iv3;
        bb.dxx += -o.dxx * iv2;
        bb.dt += -o.dt * iv2;
    }

    void backward_log(const Node& n, const Jet& o) {
        const Jet& a = nodes_[n.a].val;
        const double iv = 1.0 / a.v;
        const double iv2 = iv * iv, iv3 = iv2 * iv;
        Jet& ab = adj_[n.a];
        ab.v += o.v * iv - o.dx * a.dx * iv2 - o.dt * a.dt * iv2 +
                o.dxx * (2.0 * a.dx * a.dx * iv3 - a.dxx * iv2);
        ab.dx += o.dx * iv - 2.0 * o.dxx * a.dx * iv2;
        ab.dxx += o.dxx * iv;
        ab.dt += o.dt * iv;
    }

    void backward_tanh(const Node& n, const Jet& o) {
        const Jet& z = nodes_[n.a].val;
        adj_[n.a] = adj_[n.a] + detail::tanh_backward(z, n.val, o);
    }

    std::vector<Node> nodes_;
    std::vector<double> params_;
    std::vector<Block> blocks_;
    std::vector<Jet> adj_;
    std::vector<double> param_adj_;
    std::vector<NetWorkspace> ws_;
    std::size_t ws_used_ = 0;
};

inline const Jet& TapeRef::value() const { return tape_->node_value(id_); }

// Operator sugar so formula code reads like the plain-jet version.
inline TapeRef operator+(TapeRef a, TapeRef b) { return a.tape()->add(a, b); }
inline TapeRef operator-(TapeRef a, TapeRef b) { return a.tape()->sub(a, b); }
inline TapeRef operator*(TapeRef a, TapeRef b) { return a.tape()->mul(a, b); }
inline TapeRef operator/(TapeRef a, TapeRef b) {
    return a.tape()->mul(a, a.tape()->recip(b));
}
inline TapeRef operator-(TapeRef a) { return a.tape()->neg(a); }
inline TapeRef operator*(TapeRef a, double c) { return a.tape()->scale(a, c); }
inline TapeRef operator*(double c, TapeRef a) { return a.tape()->scale(a, c); }
inline TapeRef operator/(TapeRef a, double c) {
    return a.tape()->scale(a, 1.0 / c);
}
inline TapeRef operator/(double c, TapeRef a) {
    return a.tape()->scale(a.tape()->recip(a), c);
}
inline TapeRef operator+(TapeRef a, double c) { return a.tape()->shift(a, c); }
inline TapeRef operator+(double c, TapeRef a) { return a.tape()->shift(a, c); }
inline TapeRef operator-(TapeRef a, double c) { return a.tape()->shift(a, -c); }
inline TapeRef operator-(double c, TapeRef a) {
    return a.tape()->shift(a.tape()->neg(a), c);
}
inline TapeRef tanh(TapeRef a) { return a.tape()->tanh(a); }
inline TapeRef log(TapeRef a) { return a.tape()->log(a); }
inline TapeRef square(TapeRef a) { return a.tape()->square(a); }
inline TapeRef recip(TapeRef a) { return a.tape()->recip(a); }
inline TapeRef extract_v(TapeRef a) { return a.tape()->extract_v(a); }
inline TapeRef extract_dx(TapeRef a) { return a.tape()->extract_dx(a); }
inline TapeRef extract_dxx(TapeRef a) { return a.tape()->extract_dxx(a); }
inline TapeRef extract_dt(TapeRef a) { return a.tape()->extract_dt(a); }

}  // namespace slpinn
