#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "slpinn/physics.hpp"
#include "testing_utils.hpp"

using namespace slpinn;
using namespace slpinn::testing;

namespace {

ProblemSpec smooth_spec(double eps = 1e-2) {
    ProblemSpec ps;
    ps.kind = CaseKind::SmoothSine;
    ps.eps = eps;
    return ps;
}

ProblemSpec riemann_spec(CaseKind kind, double eps, double ul, double ur) {
    ProblemSpec ps;
    ps.kind = kind;
    ps.eps = eps;
    ps.u_left = ul;
    ps.u_right_mag = ur;
    return ps;
}

}  // namespace

TEST_CASE("pde residual basics") {
    CHECK(pde_residual(Jet::constant(3.7), 1e-3) == 0.0);
    // u(x,t) = x: u_t = 0, u_xx = 0, u u_x = x
    const Jet u{0.4, 1.0, 0.0, 0.0};
    CHECK(pde_residual(u, 1e-3) == 0.4);
}

TEST_CASE("travelling viscous shock annihilates the residual") {
    // u(x,t) = c - a tanh(a (x - c t) / (2 eps)), a = (uL+uR)/2, c = (uL-uR)/2
    const double uL = 1.0, uR = 0.5, eps = 7e-3;
    const double a = 0.5 * (uL + uR), c = 0.5 * (uL - uR);
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 25; ++rep) {
        const double x = 2.0 * uniform01(rng) - 1.0;
        const double t = uniform01(rng);
        const Jet xt = Jet::variable_x(x);
        const Jet tt = Jet::variable_t(t);
        const Jet u = c - a * tanh((a / (2.0 * eps)) * (xt - c * tt));
        CHECK(std::abs(pde_residual(u, eps)) < 1e-9);
    }
}

TEST_CASE("initial data families") {
    const ProblemSpec sine = smooth_spec();
    CHECK(initial_data(sine, 0.5) == Catch::Approx(-1.0).epsilon(1e-15));
    CHECK(initial_data(sine, 0.0) == 0.0);

    const ProblemSpec rm = riemann_spec(CaseKind::RiemannMoving, 1e-3, 1.0, 0.5);
    CHECK(initial_data(rm, -0.3) == 1.0);
    CHECK(initial_data(rm, 0.3) == -0.5);
    CHECK_THROWS_AS(initial_data(rm, 0.0), std::domain_error);
    CHECK(initial_data(rm, 0.0, Side::L) == 1.0);
    CHECK(initial_data(rm, 0.0, Side::R) == -0.5);
}

TEST_CASE("sampling: counts, bounds, determinism, partition") {
    const ProblemSpec ps = riemann_spec(CaseKind::RiemannMoving, 1e-3, 1.0, 0.5);
    const ShockCurve shock = ps.shock();
    const SampleCounts counts{5000, 80, 80, 80};
    const TrainingSets a = sample_training_sets(ps, shock, counts, 11);
    const TrainingSets b = sample_training_sets(ps, shock, counts, 11);
    const TrainingSets c = sample_training_sets(ps, shock, counts, 12);

    CHECK(a.interior.size() == 5000);
    CHECK(a.boundary_t.size() == 80);
    CHECK(a.initial_x.size() == 80);
    CHECK(a.interface_pts.size() == 80);
    CHECK(a.interior_left.size() + a.interior_right.size() == 5000);
    CHECK(a.initial_left.size() + a.initial_right.size() == 80);

    for (const XT& p : a.interior) {
        CHECK(p.x > -1.0);
        CHECK(p.x < 1.0);
        CHECK(p.t > 0.0);
        CHECK(p.t <= 1.0);
        CHECK(p.x != shock.alpha(p.t));
    }
    for (const XT& p : a.interior_left) CHECK(p.x < shock.alpha(p.t));
    for (const XT& p : a.interior_right) CHECK(p.x > shock.alpha(p.t));
    for (double t : a.boundary_t) {
        CHECK(t > 0.0);
        CHECK(t <= 1.0);
    }
    for (const XT& p : a.interface_pts)
        CHECK(std::abs(p.x - p.t / 4.0) <= 1e-15);

    // bitwise determinism per seed
    CHECK(std::equal(a.interior.begin(), a.interior.end(), b.interior.begin(),
                     [](XT u, XT v) { return u.x == v.x && u.t == v.t; }));
    CHECK(a.boundary_t == b.boundary_t);
    CHECK(a.initial_x != c.initial_x);

    // the L/R partition preserves the merged multiset in order
    std::size_t il = 0, ir = 0;
    for (const XT& p : a.interior) {
        if (p.x < shock.alpha(p.t)) {
            REQUIRE(il < a.interior_left.size());
            CHECK(a.interior_left[il].x == p.x);
            ++il;
        } else {
            REQUIRE(ir < a.interior_right.size());
            CHECK(a.interior_right[ir].x == p.x);
            ++ir;
        }
    }

    const ProblemSpec steady =
        riemann_spec(CaseKind::RiemannSteady, 1e-3, 1.0, 1.0);
    const TrainingSets s =
        sample_training_sets(steady, steady.shock(), counts, 5);
    for (const XT& p : s.interface_pts) CHECK(p.x == 0.0);
}

TEST_CASE("boundary loss terms") {
    const ProblemSpec sine = smooth_spec();
    CHECK(boundary_loss_pinn(sine, 0.37, 0.37) == 0.0);
    const ProblemSpec steady =
        riemann_spec(CaseKind::RiemannSteady, 1e-3, 1.0, 1.0);
    CHECK(boundary_loss_pinn(steady, 1.0, -1.0) == 0.0);
    CHECK(boundary_loss_pinn(steady, 0.9, -1.0) ==
          Catch::Approx(0.01).epsilon(1e-12));
    CHECK(boundary_loss_slpinn(sine, Side::L, 0.2, 0.2) == 0.0);
    CHECK(boundary_loss_slpinn(steady, Side::L, 0.9, 12.3) ==
          Catch::Approx(0.01).epsilon(1e-12));
    CHECK(boundary_loss_slpinn(steady, Side::R, -7.0, -1.0) == 0.0);
}

TEST_CASE("zero network on the steady Riemann case: loss = 3") {
    const ProblemSpec ps = riemann_spec(CaseKind::RiemannSteady, 1e-3, 1.0, 1.0);
    const TrainingSets sets =
        sample_training_sets(ps, ps.shock(), SampleCounts{64, 16, 16, 16}, 3);
    const NetworkShape shape({2, 6, 1});
    const std::vector<double> zeros(shape.param_count(), 0.0);
    Tape tp;
    const auto blk = tp.register_params(shape, zeros);
    const TapeRef loss = loss_pinn(tp, blk, ps, sets);
    // interior residual 0, initial term 1, boundary term |0-1|^2 + |0+1|^2 = 2
    CHECK(loss.value().v == Catch::Approx(3.0).epsilon(1e-14));
    // the loss node is a scalar
    CHECK(loss.value().dx == 0.0);
    CHECK(loss.value().dt == 0.0);
}

TEST_CASE("losses are non-negative for random parameters") {
    const ProblemSpec ps = smooth_spec();
    const TrainingSets sets =
        sample_training_sets(ps, ps.shock(), SampleCounts{32, 8, 8, 8}, 9);
    const NetworkShape shape({2, 6, 1});
    for (int rep = 0; rep < 5; ++rep) {
        Tape tp;
        const auto blk = tp.register_params(shape, init_params(shape, rep));
        const auto blk2 =
            tp.register_params(shape, init_params(shape, 100 + rep));
        CHECK(loss_pinn(tp, blk, ps, sets).value().v >= 0.0);
        const auto sl = loss_slpinn(tp, blk, blk2, ps, ps.shock(),
                                    CorrectorState{0.0}, sets);
        CHECK(sl.loss_left.value().v >= 0.0);
        CHECK(sl.loss_right.value().v >= 0.0);
    }
}

TEST_CASE("identical sides zero the interface continuity term") {
    const ProblemSpec ps = riemann_spec(CaseKind::RiemannSteady, 1e-2, 1.0, 1.0);
    const TrainingSets sets =
        sample_training_sets(ps, ps.shock(), SampleCounts{16, 4, 4, 12}, 21);
    const NetworkShape shape({2, 6, 1});
    const auto theta = init_params(shape, 7);
    Tape tp;
    const auto bl = tp.register_params(shape, theta);
    const auto br = tp.register_params(shape, theta);
    const InterfaceSums is =
        interface_sq_sums(tp, bl, br, ps, ps.shock(), CorrectorState{0.0},
                          sets.interface_pts);
    CHECK(is.continuity.value().v == 0.0);
    CHECK(is.residual_mismatch.value().v == 0.0);
}

TEST_CASE("interface terms enter both losses identically") {
    const ProblemSpec ps = riemann_spec(CaseKind::RiemannMoving, 5e-2, 1.0, 0.5);
    const TrainingSets sets =
        sample_training_sets(ps, ps.shock(), SampleCounts{16, 4, 4, 8}, 33);
    const NetworkShape shape({2, 6, 1});
    const CorrectorState st{0.25};
    // separate evaluations from the same point set are bitwise equal, so a
    // per-side recomputation feeds both losses the identical interface terms
    double vals[2][2];
    for (int rep = 0; rep < 2; ++rep) {
        Tape tp;
        const auto bl = tp.register_params(shape, init_params(shape, 1));
        const auto br = tp.register_params(shape, init_params(shape, 2));
        const InterfaceSums is = interface_sq_sums(tp, bl, br, ps, ps.shock(),
                                                   st, sets.interface_pts);
        vals[rep][0] = is.continuity.value().v;
        vals[rep][1] = is.residual_mismatch.value().v;
    }
    CHECK(vals[0][0] == vals[1][0]);
    CHECK(vals[0][1] == vals[1][1]);
    CHECK(vals[0][1] != 0.0);
}

TEST_CASE("zero-corrector sl loss on a merged domain reproduces the PINN loss") {
    const ProblemSpec ps = smooth_spec(2e-2);
    const TrainingSets sets =
        sample_training_sets(ps, ps.shock(), SampleCounts{128, 16, 16, 8}, 17);
    // merge everything onto side L; empty side R and interface
    TrainingSets merged = sets;
    merged.interior_left = sets.interior;
    merged.interior_right.clear();
    merged.initial_left = sets.initial_x;
    merged.initial_right.clear();
    merged.interface_pts.clear();

    const NetworkShape shape({2, 8, 1});
    const auto theta = init_params(shape, 99);
    Tape tp;
    const auto bp = tp.register_params(shape, theta);
    const double pinn = loss_pinn(tp, bp, ps, sets).value().v;

    Tape tp2;
    const auto bl = tp2.register_params(shape, theta);
    const auto br = tp2.register_params(shape, theta);
    const auto sl = loss_slpinn(tp2, bl, br, ps, ps.shock(),
                                CorrectorState{0.0}, merged,
                                /*use_corrector=*/false);
    CHECK(rel_err(sl.loss_left.value().v, pinn) < 1e-12);
}

TEST_CASE("loss scales homogeneously") {
    const ProblemSpec ps = smooth_spec();
    const TrainingSets sets =
        sample_training_sets(ps, ps.shock(), SampleCounts{32, 8, 8, 8}, 2);
    const NetworkShape shape({2, 6, 1});
    Tape tp;
    const auto blk = tp.register_params(shape, init_params(shape, 3));
    const TapeRef loss = loss_pinn(tp, blk, ps, sets);
    const TapeRef scaled = loss * 7.25;
    CHECK(rel_err(scaled.value().v, 7.25 * loss.value().v) < 1e-12);
}

namespace {

double sl_loss_value(Side side, const ProblemSpec& ps, const TrainingSets& sets,
                     const NetworkShape& shape, const std::vector<double>& tl,
                     const std::vector<double>& tr, double b_tilde) {
    Tape tp;
    const auto bl = tp.register_params(shape, tl);
    const auto br = tp.register_params(shape, tr);
    const auto sl =
        loss_slpinn(tp, bl, br, ps, ps.shock(), CorrectorState{b_tilde}, sets);
    return (side == Side::L ? sl.loss_left : sl.loss_right).value().v;
}

}  // namespace

TEST_CASE("loss gradients match finite differences") {
    std::mt19937_64 rng(55);
    const NetworkShape shape({2, 6, 1});
    const std::size_t np = static_cast<std::size_t>(shape.param_count());

    for (const ProblemSpec& ps :
         {smooth_spec(3e-2),
          riemann_spec(CaseKind::RiemannMoving, 5e-2, 1.0, 0.5)}) {
        const double b0 = ps.riemann() ? 0.25 : 0.0;
        const TrainingSets sets = sample_training_sets(
            ps, ps.shock(), SampleCounts{24, 6, 6, 6}, 1234);
        const auto tl = init_params(shape, 41);
        const auto tr = init_params(shape, 42);

        Tape tp;
        const auto bp = tp.register_params(shape, tl);
        const TapeRef lp = loss_pinn(tp, bp, ps, sets);
        const auto gp = tp.grad_wrt_params(lp);
        std::uniform_int_distribution<std::size_t> pick(0, np - 1);
        for (int rep = 0; rep < 10; ++rep) {
            const std::size_t k = pick(rng);
            const double fd = fd_grad_coord(
                [&](const std::vector<double>& th) {
                    Tape s;
                    const auto b = s.register_params(shape, th);
                    return loss_pinn(s, b, ps, sets).value().v;
                },
                tl, k);
            CHECK(rel_err(gp[k], fd, 1e-6) < 1e-4);
        }

        // each side's sl loss w.r.t. its own parameters
        Tape ts;
        const auto bl = ts.register_params(shape, tl);
        const auto br = ts.register_params(shape, tr);
        const auto sl = loss_slpinn(ts, bl, br, ps, ps.shock(),
                                    CorrectorState{b0}, sets);
        ts.backward(sl.loss_left);
        const std::vector<double> gl(ts.block_adjoint(bl).begin(),
                                     ts.block_adjoint(bl).end());
        ts.backward(sl.loss_right);
        const std::vector<double> gr(ts.block_adjoint(br).begin(),
                                     ts.block_adjoint(br).end());
        for (int rep = 0; rep < 10; ++rep) {
            const std::size_t k = pick(rng);
            const double fdl = fd_grad_coord(
                [&](const std::vector<double>& th) {
                    return sl_loss_value(Side::L, ps, sets, shape, th, tr, b0);
                },
                tl, k);
            CHECK(rel_err(gl[k], fdl, 1e-6) < 1e-4);
            const double fdr = fd_grad_coord(
                [&](const std::vector<double>& th) {
                    return sl_loss_value(Side::R, ps, sets, shape, tl, th, b0);
                },
                tr, k);
            CHECK(rel_err(gr[k], fdr, 1e-6) < 1e-4);
        }
    }
}
