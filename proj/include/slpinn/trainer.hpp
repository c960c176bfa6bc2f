#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "slpinn/corrector.hpp"
#include "slpinn/metrics.hpp"
#include "slpinn/network.hpp"
#include "slpinn/optim.hpp"
#include "slpinn/physics.hpp"
#include "slpinn/serialize.hpp"
#include "slpinn/tape.hpp"

namespace slpinn {

enum class Method { PINN, SLPINN };

inline const char* method_name(Method m) {
    return m == Method::PINN ? "pinn" : "slpinn";
}

struct AdamSettings {
    double lr = 1e-3;
    int iters = 20000;
};

struct LbfgsSettings {
    double lr = 1.0;
    int iters = 10000;
    int memory = 10;
    double early_stop_rel_tol = 1e-12;
    int early_stop_window = 200;
};

struct Seeds {
    std::uint64_t params_left = 1, params_right = 2, sampling = 3;
};

struct RunConfig {
    ProblemSpec problem;
    NetworkShape shape{std::vector<int>{2, 20, 20, 20, 1}};
    SampleCounts counts;
    AdamSettings adam;
    LbfgsSettings lbfgs;
    Seeds seeds;
    Method method = Method::SLPINN;
    int threads = 1;

    void validate() const {
        problem.validate();
        shape.validate();
        if (adam.iters < 0 || lbfgs.iters < 0)
            throw std::invalid_argument("iteration counts must be >= 0");
        if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    }

    std::string name() const {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%s_eps%.6g_%s",
                      case_name(problem.kind), problem.eps,
                      method_name(method));
        return buf;
    }
};

enum class Phase { kAdam, kLbfgs };

struct TraceRow {
    int iteration;
    Phase phase;
    double loss_left;
    double loss_right;  // NaN for PINN
    double b_tilde;     // NaN for PINN
};

/// Raised when a run cannot continue: persistent corrector faults or a
/// non-finite loss at an accepted point. Carries the iteration index and the
/// recent b~ trajectory for diagnosis.
struct RunDivergedError : std::runtime_error {
    RunDivergedError(const std::string& what, int iteration,
                     std::vector<double> b_trajectory)
        : std::runtime_error(what),
          iteration_index(iteration),
          b_tilde_trajectory(std::move(b_trajectory)) {}
    int iteration_index;
    std::vector<double> b_tilde_trajectory;
};

struct TrainedModel {
    RunConfig config;
    std::vector<double> params_left;
    std::vector<double> params_right;  // empty for PINN
    double b_tilde = 0.0;
    std::vector<TraceRow> trace;
};

// ---- threaded objectives -----------------------------------------------------

namespace detail {

enum class TaskKind {
    kInteriorL,
    kInteriorR,
    kBoundaryShared,
    kBoundaryL,
    kBoundaryR,
    kInitialL,
    kInitialR,
    kInterface,
    kPinnInterior,
    kPinnBoundary,
    kPinnInitial,
};

struct Task {
    TaskKind kind;
    std::size_t first = 0, count = 0;
    double w_left = 0.0, w_right = 0.0;  // weight of this sum in each loss
    // per-task scratch, reused across evaluations
    Tape tape;
    std::vector<double> grad_left, grad_right;
    double value = 0.0;
};

inline constexpr std::size_t kChunk = 256;

/// Run `process(i)` over tasks [0, n) on `threads` workers. Exceptions are
/// rethrown on the caller thread after join.
template <class F>
void run_tasks(std::size_t n, int threads, F&& process) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) process(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load(std::memory_order_relaxed)) break;
            try {
                process(i);
            } catch (...) {
                {
                    std::lock_guard<std::mutex> lk(error_mu);
                    if (!error) error = std::current_exception();
                }
                failed.store(true, std::memory_order_relaxed);
                break;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Both sl-PINN side losses and their parameter gradients, evaluated from a
/// frozen snapshot of (theta_L, theta_R, b~). Work is split into fixed tasks
/// (collocation chunks plus the small boundary/initial/interface sums) whose
/// results are reduced in task order, so values are independent of the
/// thread count.
class SlObjective {
  public:
    SlObjective(const ProblemSpec& ps, const ShockCurve& shock,
                const NetworkShape& shape, const TrainingSets& sets,
                int threads)
        : ps_(ps), shock_(shock), shape_(shape), sets_(sets), threads_(threads) {
        const std::size_t np = static_cast<std::size_t>(shape_.param_count());
        auto add_task = [&](detail::TaskKind kind, std::size_t first,
                            std::size_t count, double wl, double wr) {
            auto& t = tasks_.emplace_back();
            t.kind = kind;
            t.first = first;
            t.count = count;
            t.w_left = wl;
            t.w_right = wr;
            t.grad_left.resize(np);
            t.grad_right.resize(np);
        };
        using detail::TaskKind;
        const auto chunked = [&](TaskKind kind, std::size_t total, double wl,
                                 double wr) {
            for (std::size_t f = 0; f < total; f += detail::kChunk)
                add_task(kind, f, std::min(detail::kChunk, total - f), wl, wr);
        };
        if (!sets_.interior_left.empty())
            chunked(TaskKind::kInteriorL, sets_.interior_left.size(),
                    1.0 / sets_.interior_left.size(), 0.0);
        if (!sets_.interior_right.empty())
            chunked(TaskKind::kInteriorR, sets_.interior_right.size(), 0.0,
                    1.0 / sets_.interior_right.size());
        if (!sets_.boundary_t.empty()) {
            const double wb = 1.0 / sets_.boundary_t.size();
            if (ps_.kind == CaseKind::SmoothSine) {
                add_task(TaskKind::kBoundaryShared, 0, sets_.boundary_t.size(),
                         wb, wb);
            } else {
                add_task(TaskKind::kBoundaryL, 0, sets_.boundary_t.size(), wb,
                         0.0);
                add_task(TaskKind::kBoundaryR, 0, sets_.boundary_t.size(), 0.0,
                         wb);
            }
        }
        if (!sets_.initial_left.empty())
            add_task(TaskKind::kInitialL, 0, sets_.initial_left.size(),
                     1.0 / sets_.initial_left.size(), 0.0);
        if (!sets_.initial_right.empty())
            add_task(TaskKind::kInitialR, 0, sets_.initial_right.size(), 0.0,
                     1.0 / sets_.initial_right.size());
        if (!sets_.interface_pts.empty()) {
            const double wi = 1.0 / sets_.interface_pts.size();
            add_task(TaskKind::kInterface, 0, sets_.interface_pts.size(), wi,
                     wi);
        }
    }

    SlObjective(const SlObjective&) = delete;

    struct BothEval {
        double loss_left = 0.0, loss_right = 0.0;
        std::vector<double> grad_left, grad_right;
    };

    BothEval eval_both(std::span<const double> pl, std::span<const double> pr,
                       double b_tilde) {
        detail::run_tasks(tasks_.size(), threads_, [&](std::size_t i) {
            process(tasks_[i], pl, pr, b_tilde);
        });
        BothEval e;
        const std::size_t np = static_cast<std::size_t>(shape_.param_count());
        e.grad_left.assign(np, 0.0);
        e.grad_right.assign(np, 0.0);
        for (const auto& t : tasks_) {
            if (t.w_left != 0.0) {
                e.loss_left += t.w_left * t.value;
                for (std::size_t i = 0; i < np; ++i)
                    e.grad_left[i] += t.w_left * t.grad_left[i];
            }
            if (t.w_right != 0.0) {
                e.loss_right += t.w_right * t.value;
                for (std::size_t i = 0; i < np; ++i)
                    e.grad_right[i] += t.w_right * t.grad_right[i];
            }
        }
        return e;
    }

    /// Loss of one side (the other frozen) and its gradient w.r.t. that
    /// side's parameters. Sums the same task sequence as eval_both.
    double eval_side(Side side, std::span<const double> pl,
                     std::span<const double> pr, double b_tilde,
                     std::span<double> grad_out) {
        std::vector<std::size_t> active;
        for (std::size_t i = 0; i < tasks_.size(); ++i) {
            const double w =
                side == Side::L ? tasks_[i].w_left : tasks_[i].w_right;
            if (w != 0.0) active.push_back(i);
        }
        detail::run_tasks(active.size(), threads_, [&](std::size_t k) {
            process(tasks_[active[k]], pl, pr, b_tilde);
        });
        double loss = 0.0;
        std::fill(grad_out.begin(), grad_out.end(), 0.0);
        for (std::size_t k = 0; k < active.size(); ++k) {
            const auto& t = tasks_[active[k]];
            const double w = side == Side::L ? t.w_left : t.w_right;
            const auto& g = side == Side::L ? t.grad_left : t.grad_right;
            loss += w * t.value;
            for (std::size_t i = 0; i < grad_out.size(); ++i)
                grad_out[i] += w * g[i];
        }
        return loss;
    }

    /// Mean of u~_L and u~_R over the interface set (value-only); the raw
    /// material of the b~ update.
    std::pair<double, double> interface_means(std::span<const double> pl,
                                              std::span<const double> pr,
                                              double b_tilde) const {
        if (sets_.interface_pts.empty())
            throw std::logic_error("no interface points sampled");
        double suml = 0.0, sumr = 0.0;
        for (const XT& p : sets_.interface_pts) {
            const double ad = shock_.alpha_dot(p.t);
            const double gl = forward_value(pl, shape_, p.x, p.t);
            const double gr = forward_value(pr, shape_, p.x, p.t);
            suml += gl + training_corrector_value(gl, ad, b_tilde, ps_.eps, p.x,
                                                  p.x);
            sumr += gr + training_corrector_value(gr, ad, b_tilde, ps_.eps, p.x,
                                                  p.x);
        }
        const double n = static_cast<double>(sets_.interface_pts.size());
        return {suml / n, sumr / n};
    }

    const TrainingSets& sets() const { return sets_; }

  private:
    void process(detail::Task& t, std::span<const double> pl,
                 std::span<const double> pr, double b_tilde) {
        Tape& tp = t.tape;
        tp.clear();
        const auto bl = tp.register_params(shape_, pl);
        const auto br = tp.register_params(shape_, pr);
        const CorrectorState st{b_tilde};
        TapeRef node;
        using detail::TaskKind;
        switch (t.kind) {
            case TaskKind::kInteriorL:
                node = sl_residual_sq_sum(
                    tp, bl, Side::L, ps_, shock_, st,
                    std::span(sets_.interior_left).subspan(t.first, t.count));
                break;
            case TaskKind::kInteriorR:
                node = sl_residual_sq_sum(
                    tp, br, Side::R, ps_, shock_, st,
                    std::span(sets_.interior_right).subspan(t.first, t.count));
                break;
            case TaskKind::kBoundaryShared:
            case TaskKind::kBoundaryL:
                node = sl_boundary_sq_sum(tp, bl, br, Side::L, ps_, shock_, st,
                                          sets_.boundary_t);
                break;
            case TaskKind::kBoundaryR:
                node = sl_boundary_sq_sum(tp, bl, br, Side::R, ps_, shock_, st,
                                          sets_.boundary_t);
                break;
            case TaskKind::kInitialL:
                node = sl_initial_sq_sum(tp, bl, Side::L, ps_, shock_, st,
                                         sets_.initial_left);
                break;
            case TaskKind::kInitialR:
                node = sl_initial_sq_sum(tp, br, Side::R, ps_, shock_, st,
                                         sets_.initial_right);
                break;
            case TaskKind::kInterface: {
                const InterfaceSums is = interface_sq_sums(
                    tp, bl, br, ps_, shock_, st, sets_.interface_pts);
                node = is.continuity + is.residual_mismatch;
                break;
            }
            default:
                throw std::logic_error("bad sl task");
        }
        t.value = node.value().v;
        tp.backward(node);
        const auto gl = tp.block_adjoint(bl);
        const auto gr = tp.block_adjoint(br);
        std::copy(gl.begin(), gl.end(), t.grad_left.begin());
        std::copy(gr.begin(), gr.end(), t.grad_right.begin());
    }

    ProblemSpec ps_;
    ShockCurve shock_;
    NetworkShape shape_;
    TrainingSets sets_;
    int threads_;
    std::vector<detail::Task> tasks_;
};

/// Baseline PINN loss and gradient with the same task/reduction scheme.
class PinnObjective {
  public:
    PinnObjective(const ProblemSpec& ps, const NetworkShape& shape,
                  const TrainingSets& sets, int threads)
        : ps_(ps), shape_(shape), sets_(sets), threads_(threads) {
        const std::size_t np = static_cast<std::size_t>(shape_.param_count());
        auto add_task = [&](detail::TaskKind kind, std::size_t first,
                            std::size_t count, double w) {
            auto& t = tasks_.emplace_back();
            t.kind = kind;
            t.first = first;
            t.count = count;
            t.w_left = w;
            t.grad_left.resize(np);
        };
        using detail::TaskKind;
        if (!sets_.interior.empty())
            for (std::size_t f = 0; f < sets_.interior.size();
                 f += detail::kChunk)
                add_task(TaskKind::kPinnInterior, f,
                         std::min(detail::kChunk, sets_.interior.size() - f),
                         1.0 / sets_.interior.size());
        if (!sets_.boundary_t.empty())
            add_task(TaskKind::kPinnBoundary, 0, sets_.boundary_t.size(),
                     1.0 / sets_.boundary_t.size());
        if (!sets_.initial_x.empty())
            add_task(TaskKind::kPinnInitial, 0, sets_.initial_x.size(),
                     1.0 / sets_.initial_x.size());
    }

    PinnObjective(const PinnObjective&) = delete;

    double eval(std::span<const double> params, std::span<double> grad_out) {
        detail::run_tasks(tasks_.size(), threads_, [&](std::size_t i) {
            process(tasks_[i], params);
        });
        double loss = 0.0;
        std::fill(grad_out.begin(), grad_out.end(), 0.0);
        for (const auto& t : tasks_) {
            loss += t.w_left * t.value;
            for (std::size_t i = 0; i < grad_out.size(); ++i)
                grad_out[i] += t.w_left * t.grad_left[i];
        }
        return loss;
    }

  private:
    void process(detail::Task& t, std::span<const double> params) {
        Tape& tp = t.tape;
        tp.clear();
        const auto b = tp.register_params(shape_, params);
        TapeRef node;
        using detail::TaskKind;
        switch (t.kind) {
            case TaskKind::kPinnInterior:
                node = pinn_residual_sq_sum(
                    tp, b, ps_,
                    std::span(sets_.interior).subspan(t.first, t.count));
                break;
            case TaskKind::kPinnBoundary:
                node = pinn_boundary_sq_sum(tp, b, ps_, sets_.boundary_t);
                break;
            case TaskKind::kPinnInitial:
                node = pinn_initial_sq_sum(tp, b, ps_, sets_.initial_x);
                break;
            default:
                throw std::logic_error("bad pinn task");
        }
        t.value = node.value().v;
        tp.backward(node);
        const auto g = tp.block_adjoint(b);
        std::copy(g.begin(), g.end(), t.grad_left.begin());
    }

    ProblemSpec ps_;
    NetworkShape shape_;
    TrainingSets sets_;
    int threads_;
    std::vector<detail::Task> tasks_;
};

// ---- training driver -----------------------------------------------------------

namespace detail {

inline constexpr int kMaxConsecutiveFaults = 50;

struct FaultRecovery {
    double b_init;
    int consecutive = 0;
    std::deque<double> trajectory;

    void record(double b) {
        trajectory.push_back(b);
        if (trajectory.size() > 16) trajectory.pop_front();
    }

    [[noreturn]] void give_up(int iteration, const std::string& why) const {
        throw RunDivergedError(
            "training diverged at iteration " + std::to_string(iteration) +
                ": " + why,
            iteration, {trajectory.begin(), trajectory.end()});
    }

    /// Reject the step and pull b~ halfway back toward its initialization.
    double recover(int iteration, double b, const std::string& why) {
        ++consecutive;
        if (consecutive > kMaxConsecutiveFaults) give_up(iteration, why);
        return 0.5 * (b + b_init);
    }
};

}  // namespace detail

/// Algorithm: construct the network(s), initialize b~ from the one-sided
/// initial data limits, run Adam then L-BFGS with both sides updated from a
/// frozen snapshot each iteration (Jacobi order), refresh b~ after every
/// optimizer iteration, and return the final parameters with the loss trace.
inline TrainedModel train(const RunConfig& cfg,
                          const std::function<void(const TraceRow&)>& on_iter =
                              {}) {
    cfg.validate();
    const ProblemSpec& ps = cfg.problem;
    const ShockCurve shock = ps.shock();
    const TrainingSets sets =
        sample_training_sets(ps, shock, cfg.counts, cfg.seeds.sampling);
    const auto [b_lo, b_hi] = ps.entropy_interval();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    TrainedModel model;
    model.config = cfg;
    model.params_left = init_params(cfg.shape, cfg.seeds.params_left);

    auto push_trace = [&](int iter, Phase phase, double ll, double lr,
                          double b) {
        const TraceRow row{iter, phase, ll, lr, b};
        model.trace.push_back(row);
        if (on_iter) on_iter(row);
    };

    if (cfg.method == Method::PINN) {
        PinnObjective obj(ps, cfg.shape, sets, cfg.threads);
        std::vector<double> grad(model.params_left.size());
        AdamState adam;
        adam.lr = cfg.adam.lr;
        adam.init(model.params_left.size());
        int iteration = 0;
        for (int k = 0; k < cfg.adam.iters; ++k) {
            ++iteration;
            const double loss = obj.eval(model.params_left, grad);
            if (!std::isfinite(loss))
                throw RunDivergedError("non-finite PINN loss at iteration " +
                                           std::to_string(iteration),
                                       iteration, {});
            adam_step(adam, model.params_left, grad);
            push_trace(iteration, Phase::kAdam, loss, nan, nan);
        }
        LbfgsState lb;
        lb.memory = cfg.lbfgs.memory;
        lb.lr = cfg.lbfgs.lr;
        const ValueAndGrad vg = [&](std::span<const double> x,
                                    std::span<double> g) {
            return obj.eval(x, g);
        };
        double prev_loss = std::numeric_limits<double>::infinity();
        int flat = 0;
        for (int k = 0; k < cfg.lbfgs.iters; ++k) {
            ++iteration;
            const LbfgsResult res = lbfgs_step(lb, model.params_left, vg);
            if (res.status == LbfgsStatus::kBaseNotEvaluable)
                throw RunDivergedError("non-finite PINN loss at iteration " +
                                           std::to_string(iteration),
                                       iteration, {});
            push_trace(iteration, Phase::kLbfgs, res.loss, nan, nan);
            const double improve =
                (prev_loss - res.loss) / std::max(std::abs(prev_loss), 1e-300);
            flat = improve < cfg.lbfgs.early_stop_rel_tol ? flat + 1 : 0;
            prev_loss = res.loss;
            if (flat >= cfg.lbfgs.early_stop_window) break;
        }
        return model;
    }

    // ---- sl-PINN ----
    model.params_right = init_params(cfg.shape, cfg.seeds.params_right);
    const double alpha0 = shock.alpha(0.0);
    const double b_init = init_b_tilde(initial_data(ps, alpha0, Side::L),
                                       initial_data(ps, alpha0, Side::R));
    model.b_tilde = b_init;

    SlObjective obj(ps, shock, cfg.shape, sets, cfg.threads);
    detail::FaultRecovery recovery{b_init};
    recovery.record(b_init);
    int iteration = 0;

    // b~ refresh from the just-updated parameters; faults here touch only b~.
    auto refresh_b = [&]() {
        try {
            const auto [ml, mr] = obj.interface_means(
                model.params_left, model.params_right, model.b_tilde);
            model.b_tilde = update_b_tilde(ml, mr);
        } catch (const CorrectorDomainError& e) {
            model.b_tilde =
                recovery.recover(iteration, model.b_tilde, e.what());
        }
        if (!(model.b_tilde > b_lo && model.b_tilde < b_hi))
            model.b_tilde = recovery.recover(
                iteration, model.b_tilde,
                "b~ left the entropy interval (" + std::to_string(b_lo) + ", " +
                    std::to_string(b_hi) + ")");
        recovery.record(model.b_tilde);
    };

    AdamState adam_l, adam_r;
    adam_l.lr = adam_r.lr = cfg.adam.lr;
    adam_l.init(model.params_left.size());
    adam_r.init(model.params_right.size());
    for (int k = 0; k < cfg.adam.iters; ++k) {
        ++iteration;
        SlObjective::BothEval ev;
        try {
            ev = obj.eval_both(model.params_left, model.params_right,
                               model.b_tilde);
        } catch (const CorrectorDomainError& e) {
            model.b_tilde =
                recovery.recover(iteration, model.b_tilde, e.what());
            recovery.record(model.b_tilde);
            continue;
        }
        if (!std::isfinite(ev.loss_left) || !std::isfinite(ev.loss_right))
            recovery.give_up(iteration, "non-finite sl-PINN loss");
        adam_step(adam_l, model.params_left, ev.grad_left);
        adam_step(adam_r, model.params_right, ev.grad_right);
        refresh_b();
        recovery.consecutive = 0;
        push_trace(iteration, Phase::kAdam, ev.loss_left, ev.loss_right,
                   model.b_tilde);
    }

    LbfgsState lb_l, lb_r;
    lb_l.memory = lb_r.memory = cfg.lbfgs.memory;
    lb_l.lr = lb_r.lr = cfg.lbfgs.lr;
    std::vector<double> frozen_l, frozen_r;
    double prev_loss = std::numeric_limits<double>::infinity();
    int flat = 0;
    for (int k = 0; k < cfg.lbfgs.iters; ++k) {
        ++iteration;
        frozen_l = model.params_left;
        frozen_r = model.params_right;
        const double b = model.b_tilde;
        // Trial points outside the corrector's domain count as +inf for the
        // line search; a fault at the current point is a diverged-state
        // fault handled below.
        const auto guarded = [&](Side side, std::span<const double> x,
                                 std::span<double> g) -> double {
            try {
                return side == Side::L
                           ? obj.eval_side(Side::L, x, frozen_r, b, g)
                           : obj.eval_side(Side::R, frozen_l, x, b, g);
            } catch (const CorrectorDomainError&) {
                return std::numeric_limits<double>::infinity();
            }
        };
        const ValueAndGrad vg_l = [&](std::span<const double> x,
                                      std::span<double> g) {
            return guarded(Side::L, x, g);
        };
        const ValueAndGrad vg_r = [&](std::span<const double> x,
                                      std::span<double> g) {
            return guarded(Side::R, x, g);
        };
        lb_l.f_cached = false;  // b~ and the frozen side moved underneath
        lb_r.f_cached = false;
        std::vector<double> trial_l = model.params_left;
        std::vector<double> trial_r = model.params_right;
        const LbfgsResult res_l = lbfgs_step(lb_l, trial_l, vg_l);
        const LbfgsResult res_r = lbfgs_step(lb_r, trial_r, vg_r);
        if (res_l.status == LbfgsStatus::kBaseNotEvaluable ||
            res_r.status == LbfgsStatus::kBaseNotEvaluable) {
            model.b_tilde = recovery.recover(iteration, model.b_tilde,
                                             "loss not evaluable at the "
                                             "current parameters");
            recovery.record(model.b_tilde);
            continue;
        }
        model.params_left = std::move(trial_l);
        model.params_right = std::move(trial_r);
        refresh_b();
        recovery.consecutive = 0;
        push_trace(iteration, Phase::kLbfgs, res_l.loss, res_r.loss,
                   model.b_tilde);
        const double total = res_l.loss + res_r.loss;
        const double improve =
            (prev_loss - total) / std::max(std::abs(prev_loss), 1e-300);
        flat = improve < cfg.lbfgs.early_stop_rel_tol ? flat + 1 : 0;
        prev_loss = total;
        if (flat >= cfg.lbfgs.early_stop_window) break;
    }
    return model;
}

// ---- prediction ---------------------------------------------------------------

namespace detail {

inline double sl_side_value(const TrainedModel& m, Side side,
                            double u_hat_at_shock, double x, double t,
                            double alpha_t, double alpha_dot) {
    const auto& params =
        side == Side::L ? m.params_left : m.params_right;
    const double u_hat = forward_value(params, m.config.shape, x, t);
    return u_hat + training_corrector_value(u_hat_at_shock, alpha_dot,
                                            m.b_tilde, m.config.problem.eps, x,
                                            alpha_t);
}

}  // namespace detail

/// Predicted solution: u^ for the PINN; side-restricted u~_L / u~_R for the
/// sl-PINN with the two-side average exactly on the shock curve.
inline double predict(const TrainedModel& m, double x, double t) {
    if (m.config.method == Method::PINN)
        return forward_value(m.params_left, m.config.shape, x, t);
    const ShockCurve shock = m.config.problem.shock();
    const double a = shock.alpha(t);
    const double ad = shock.alpha_dot(t);
    const double gl = forward_value(m.params_left, m.config.shape, a, t);
    const double gr = forward_value(m.params_right, m.config.shape, a, t);
    if (x < a) return detail::sl_side_value(m, Side::L, gl, x, t, a, ad);
    if (x > a) return detail::sl_side_value(m, Side::R, gr, x, t, a, ad);
    return 0.5 * (detail::sl_side_value(m, Side::L, gl, x, t, a, ad) +
                  detail::sl_side_value(m, Side::R, gr, x, t, a, ad));
}

/// Row evaluation with the per-row interface values hoisted; identical
/// results to predict() point by point.
inline void predict_row(const TrainedModel& m, std::span<const double> xs,
                        double t, std::span<double> out) {
    if (xs.size() != out.size())
        throw std::invalid_argument("predict_row size mismatch");
    if (m.config.method == Method::PINN) {
        for (std::size_t i = 0; i < xs.size(); ++i)
            out[i] = forward_value(m.params_left, m.config.shape, xs[i], t);
        return;
    }
    const ShockCurve shock = m.config.problem.shock();
    const double a = shock.alpha(t);
    const double ad = shock.alpha_dot(t);
    const double gl = forward_value(m.params_left, m.config.shape, a, t);
    const double gr = forward_value(m.params_right, m.config.shape, a, t);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        if (x < a)
            out[i] = detail::sl_side_value(m, Side::L, gl, x, t, a, ad);
        else if (x > a)
            out[i] = detail::sl_side_value(m, Side::R, gr, x, t, a, ad);
        else
            out[i] =
                0.5 * (detail::sl_side_value(m, Side::L, gl, x, t, a, ad) +
                       detail::sl_side_value(m, Side::R, gr, x, t, a, ad));
    }
}

// ---- (de)serialization -----------------------------------------------------------

inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["method"] = method_name(c.method);
    j["case"] = case_name(c.problem.kind);
    j["eps"] = c.problem.eps;
    j["u_left"] = c.problem.u_left;
    j["u_right_mag"] = c.problem.u_right_mag;
    j["t_final"] = c.problem.t_final;
    j["shape"] = c.shape.layers;
    j["counts"] = {{"n", c.counts.n},
                   {"n_boundary", c.counts.n_boundary},
                   {"n_initial", c.counts.n_initial},
                   {"n_interface", c.counts.n_interface}};
    j["adam"] = {{"lr", c.adam.lr}, {"iters", c.adam.iters}};
    j["lbfgs"] = {{"lr", c.lbfgs.lr},
                  {"iters", c.lbfgs.iters},
                  {"memory", c.lbfgs.memory},
                  {"early_stop_rel_tol", c.lbfgs.early_stop_rel_tol},
                  {"early_stop_window", c.lbfgs.early_stop_window}};
    j["seeds"] = {{"params_left", c.seeds.params_left},
                  {"params_right", c.seeds.params_right},
                  {"sampling", c.seeds.sampling}};
    j["threads"] = c.threads;
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    const std::string method = j.at("method").get<std::string>();
    if (method == "pinn")
        c.method = Method::PINN;
    else if (method == "slpinn")
        c.method = Method::SLPINN;
    else
        throw std::invalid_argument("unknown method: " + method);
    const std::string kase = j.at("case").get<std::string>();
    if (kase == "smooth_sine")
        c.problem.kind = CaseKind::SmoothSine;
    else if (kase == "riemann_steady")
        c.problem.kind = CaseKind::RiemannSteady;
    else if (kase == "riemann_moving")
        c.problem.kind = CaseKind::RiemannMoving;
    else
        throw std::invalid_argument("unknown case: " + kase);
    c.problem.eps = detail::parse_double(j.at("eps"));
    if (j.contains("u_left")) c.problem.u_left = detail::parse_double(j["u_left"]);
    if (j.contains("u_right_mag"))
        c.problem.u_right_mag = detail::parse_double(j["u_right_mag"]);
    if (j.contains("t_final"))
        c.problem.t_final = detail::parse_double(j["t_final"]);
    if (j.contains("shape"))
        c.shape = NetworkShape(j["shape"].get<std::vector<int>>());
    if (j.contains("counts")) {
        const auto& k = j["counts"];
        c.counts.n = k.at("n").get<int>();
        c.counts.n_boundary = k.value("n_boundary", c.counts.n_boundary);
        c.counts.n_initial = k.value("n_initial", c.counts.n_initial);
        c.counts.n_interface = k.value("n_interface", c.counts.n_interface);
    }
    if (j.contains("adam")) {
        c.adam.lr = detail::parse_double(j["adam"].at("lr"));
        c.adam.iters = j["adam"].at("iters").get<int>();
    }
    if (j.contains("lbfgs")) {
        const auto& k = j["lbfgs"];
        c.lbfgs.lr = detail::parse_double(k.at("lr"));
        c.lbfgs.iters = k.at("iters").get<int>();
        c.lbfgs.memory = k.value("memory", c.lbfgs.memory);
        if (k.contains("early_stop_rel_tol"))
            c.lbfgs.early_stop_rel_tol =
                detail::parse_double(k["early_stop_rel_tol"]);
        c.lbfgs.early_stop_window =
            k.value("early_stop_window", c.lbfgs.early_stop_window);
    }
    if (j.contains("seeds")) {
        const auto& k = j["seeds"];
        c.seeds.params_left = k.value("params_left", c.seeds.params_left);
        c.seeds.params_right = k.value("params_right", c.seeds.params_right);
        c.seeds.sampling = k.value("sampling", c.seeds.sampling);
    }
    c.threads = j.value("threads", c.threads);
    c.validate();
    return c;
}

inline constexpr int kCheckpointVersion = 1;

/// Checkpoint: config echo, b~, and the flat parameter vectors as hexfloat
/// strings (lossless round trip).
inline void save_model(const std::filesystem::path& path,
                       const TrainedModel& m) {
    nlohmann::json j;
    j["format_version"] = kCheckpointVersion;
    j["config"] = config_to_json(m.config);
    j["b_tilde"] = detail::hex_double(m.b_tilde);
    auto dump = [](const std::vector<double>& v) {
        std::vector<std::string> out;
        out.reserve(v.size());
        for (double x : v) out.push_back(detail::hex_double(x));
        return out;
    };
    j["params_left"] = dump(m.params_left);
    if (!m.params_right.empty()) j["params_right"] = dump(m.params_right);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << j.dump(1) << "\n";
}

inline TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    if (j.at("format_version").get<int>() != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version in " +
                                 path.string());
    TrainedModel m;
    m.config = config_from_json(j.at("config"));
    m.b_tilde = detail::parse_double(j.at("b_tilde"));
    auto parse = [](const nlohmann::json& arr) {
        std::vector<double> out;
        out.reserve(arr.size());
        for (const auto& e : arr) out.push_back(detail::parse_double(e));
        return out;
    };
    m.params_left = parse(j.at("params_left"));
    if (j.contains("params_right")) m.params_right = parse(j["params_right"]);
    const std::size_t np = static_cast<std::size_t>(m.config.shape.param_count());
    if (m.params_left.size() != np ||
        (!m.params_right.empty() && m.params_right.size() != np))
        throw std::runtime_error("checkpoint parameter count mismatch");
    return m;
}

/// Training log CSV: iteration, phase, loss_L, loss_R, b~ (empty fields for
/// the PINN's unused columns).
inline void write_trace_csv(const std::filesystem::path& path,
                            const std::vector<TraceRow>& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "iteration,phase,loss_L,loss_R,b_tilde\n";
    for (const TraceRow& r : trace) {
        out << r.iteration << ','
            << (r.phase == Phase::kAdam ? "adam" : "lbfgs") << ','
            << detail::fmt_g17(r.loss_left) << ',';
        if (!std::isnan(r.loss_right)) out << detail::fmt_g17(r.loss_right);
        out << ',';
        if (!std::isnan(r.b_tilde)) out << detail::fmt_g17(r.b_tilde);
        out << '\n';
    }
}

}  // namespace slpinn
