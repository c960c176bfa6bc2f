#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "slpinn/metrics.hpp"
#include "testing_utils.hpp"

using namespace slpinn;
using namespace slpinn::testing;

namespace {

SolutionGrid make_grid(int nx, int nt,
                       const std::function<double(double, double)>& f,
                       CaseKind kind = CaseKind::SmoothSine) {
    SolutionGrid g;
    g.kind = kind;
    g.eps = 1e-2;
    g.nx = nx;
    g.nt = nt;
    g.dx = 2.0 / (nx - 1);
    g.dt = 1.0 / (nt - 1);
    g.t_final = 1.0;
    if (kind != CaseKind::SmoothSine) {
        g.u_left = 1.0;
        g.u_right_mag = 1.0;
    }
    g.x_nodes.resize(nx);
    for (int i = 0; i < nx; ++i) g.x_nodes[i] = -1.0 + i * g.dx;
    g.t_nodes.resize(nt);
    for (int j = 0; j < nt; ++j) g.t_nodes[j] = static_cast<double>(j) / (nt - 1);
    g.values.resize(static_cast<std::size_t>(nx) * nt);
    for (int j = 0; j < nt; ++j)
        for (int i = 0; i < nx; ++i)
            g.values[static_cast<std::size_t>(j) * nx + i] =
                f(g.x_nodes[i], g.t_nodes[j]);
    return g;
}

}  // namespace

TEST_CASE("error field basics") {
    const SolutionGrid ref =
        make_grid(51, 11, [](double x, double t) { return x * t; });
    const SolutionGrid zero =
        error_field(ref, [](double x, double t) { return x * t; });
    for (double v : zero.values) CHECK(v == 0.0);

    const SolutionGrid shifted =
        error_field(ref, [](double x, double t) { return x * t + 0.5; });
    for (double v : shifted.values)
        CHECK(v == Catch::Approx(-0.5).margin(1e-15));

    // antisymmetry of the difference
    const SolutionGrid other =
        make_grid(51, 11, [](double x, double t) { return x - t; });
    const SolutionGrid ab =
        error_field(ref, [&](double x, double t) { return x - t; });
    const SolutionGrid ba =
        error_field(other, [&](double x, double t) { return x * t; });
    for (std::size_t i = 0; i < ab.values.size(); ++i)
        CHECK(ab.values[i] == -ba.values[i]);
}

TEST_CASE("row evaluator variant matches the pointwise one") {
    const SolutionGrid ref =
        make_grid(31, 7, [](double x, double t) { return std::sin(x + t); });
    const auto f = [](double x, double t) { return 0.3 * x - t; };
    const SolutionGrid a = error_field(ref, f);
    const SolutionGrid b = error_field_rows(
        ref, [&](std::span<const double> xs, double t, std::span<double> out) {
            for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i], t);
        });
    CHECK(a.values == b.values);
}

TEST_CASE("spatial L2 norm") {
    std::vector<double> c(101, 0.3);
    CHECK(rel_err(l2_space(c, 2.0 / 100), 0.3 * std::sqrt(2.0)) < 1e-13);

    std::vector<double> xs(2001);
    for (int i = 0; i < 2001; ++i) xs[i] = -1.0 + i * (2.0 / 2000);
    CHECK(std::abs(l2_space(xs, 2.0 / 2000) - std::sqrt(2.0 / 3.0)) < 1e-6);

    const std::vector<double> z(11, 0.0);
    CHECK(l2_space(z, 0.2) == 0.0);
}

TEST_CASE("space-time L2 norm") {
    const SolutionGrid c = make_grid(21, 21, [](double, double) { return -0.7; });
    CHECK(rel_err(l2_space_time(c), 0.7 * std::sqrt(2.0)) < 1e-13);

    const SolutionGrid lin = make_grid(11, 2001, [](double, double t) { return t; });
    CHECK(std::abs(l2_space_time(lin) - std::sqrt(2.0 / 3.0)) < 1e-6);

    const SolutionGrid z = make_grid(11, 11, [](double, double) { return 0.0; });
    CHECK(l2_space_time(z) == 0.0);
}

TEST_CASE("max norm") {
    std::vector<double> c(11, -0.4);
    CHECK(linf_space(c) == 0.4);
    std::vector<double> xs(21);
    for (int i = 0; i < 21; ++i) xs[i] = -1.0 + i * 0.1;
    CHECK(linf_space(xs) == 1.0);
    std::vector<double> spike(31, 0.0);
    spike[17] = 0.7;
    CHECK(linf_space(spike) == 0.7);
}

TEST_CASE("norm axioms on random fields") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> a = random_vector(rng, 41), b = random_vector(rng, 41);
        const double dx = 2.0 / 40;
        const double c = 3.7;
        std::vector<double> ca(41), apb(41);
        for (int i = 0; i < 41; ++i) {
            ca[i] = c * a[i];
            apb[i] = a[i] + b[i];
        }
        CHECK(rel_err(l2_space(ca, dx), c * l2_space(a, dx)) < 1e-12);
        CHECK(l2_space(apb, dx) <=
              l2_space(a, dx) + l2_space(b, dx) + 1e-12);
        CHECK(l2_space(a, dx) > 0.0);
    }
}

TEST_CASE("trapezoid L2 converges at second order") {
    const auto norm_of = [](int nx) {
        std::vector<double> v(nx);
        const double dx = 2.0 / (nx - 1);
        for (int i = 0; i < nx; ++i) {
            const double x = -1.0 + i * dx;
            v[i] = x * x;
        }
        return l2_space(v, dx);
    };
    const double exact = std::sqrt(2.0 / 5.0);
    const double e1 = std::abs(norm_of(101) - exact);
    const double e2 = std::abs(norm_of(201) - exact);
    CHECK(std::log2(e1 / e2) > 1.9);
}

TEST_CASE("error report with layer-excluded diagnostics") {
    ProblemSpec ps;
    ps.kind = CaseKind::RiemannSteady;
    ps.eps = 1e-2;
    ps.u_left = ps.u_right_mag = 1.0;
    // error concentrated at the shock; excluded variant must drop it
    const SolutionGrid e = make_grid(
        401, 5,
        [&](double x, double) { return std::abs(x) < 0.05 ? 1.0 : 1e-4; },
        CaseKind::RiemannSteady);
    const ErrorReport r = compute_error_report(e, ps);
    REQUIRE(r.linf_by_time.size() == 4);
    CHECK(r.linf_by_time[0].first == 0.25);
    CHECK(r.linf_by_time[3].first == 1.0);
    CHECK(r.linf_by_time[0].second == 1.0);
    REQUIRE(r.has_layer_excluded);
    // radius = 20 eps / (uL+uR) = 0.1 swallows the |x| < 0.05 spike
    CHECK(r.linf_by_time_excluded[0].second == Catch::Approx(1e-4));
    CHECK(r.l2_space_time_excluded < r.l2_space_time);

    const auto path =
        std::filesystem::temp_directory_path() / "slpinn_report_test.csv";
    write_error_report_csv(path, r);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "metric,t,value");
    std::getline(in, line);
    CHECK(line.rfind("l2_space_time,,", 0) == 0);
    std::filesystem::remove(path);
}
