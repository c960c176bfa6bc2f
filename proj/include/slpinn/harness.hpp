#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "slpinn/metrics.hpp"
#include "slpinn/reference.hpp"
#include "slpinn/trainer.hpp"

namespace slpinn {

namespace fs = std::filesystem;

/// A list of runs plus the reference-solver settings they share. Outputs are
/// a pure function of this structure and the code version.
struct ExperimentSuite {
    std::string name = "suite";
    std::vector<RunConfig> runs;
    int ref_nt = 201;
    double ref_dx = 0.0;  // 0 = resolve per run from eps
    double ref_dt = 0.0;  // 0 = resolve from the stability bound

    void validate() const {
        std::set<std::string> names;
        for (const RunConfig& r : runs) {
            r.validate();
            if (!names.insert(r.name()).second)
                throw std::invalid_argument(
                    "duplicate (case, eps, method) in suite: " + r.name());
        }
    }
};

// ---- reference resolution and caching ----------------------------------------

/// Desk-scale grid spacing: 2.5e-4, refined to eps/2 once the layer would
/// otherwise be unresolved; snapped so that (x_max - x_min)/dx is integral.
inline double reference_dx(const ProblemSpec& ps) {
    const double want = std::min(2.5e-4, ps.eps / 2.0);
    const int half = static_cast<int>(std::ceil(1.0 / want));
    return 2.0 / (2 * half);
}

inline double reference_dt(const ProblemSpec& ps, double dx) {
    return 0.9 * fd_max_stable_dt(ps, dx);
}

inline fs::path default_cache_dir() {
    if (const char* env = std::getenv("SLPINN_CACHE")) return fs::path(env);
    return fs::path("slpinn_cache");
}

/// Load the cached reference for this exact request or solve and cache it.
/// A cached grid is served only when every header field matches the request.
inline SolutionGrid get_reference(const fs::path& cache_dir,
                                  const ProblemSpec& ps, double dx, double dt,
                                  int nt_out) {
    const double dt_eff = fd_effective_dt(ps.t_final, nt_out, dt);
    const int nx = static_cast<int>(std::llround(2.0 / dx)) + 1;
    const double dx_eff = 2.0 / (nx - 1);
    char name[256];
    std::snprintf(name, sizeof(name),
                  "ref_%s_eps%.17g_uL%.17g_uR%.17g_dx%.17g_dt%.17g_T%.17g_nt%d.bin",
                  case_name(ps.kind), ps.eps, ps.riemann() ? ps.u_left : 0.0,
                  ps.riemann() ? ps.u_right_mag : 0.0, dx_eff, dt_eff,
                  ps.t_final, nt_out);
    const fs::path path = cache_dir / name;
    if (fs::exists(path)) {
        const SolutionGrid g = read_grid(path);
        const bool match =
            g.kind == ps.kind && g.eps == ps.eps && g.dx == dx_eff &&
            g.dt == dt_eff && g.t_final == ps.t_final && g.nx == nx &&
            g.nt == nt_out &&
            g.u_left == (ps.riemann() ? ps.u_left : 0.0) &&
            g.u_right_mag == (ps.riemann() ? ps.u_right_mag : 0.0);
        if (match) return g;
        // stale or foreign file: fall through and regenerate
    }
    SolutionGrid g = solve_fd(ps, dx, dt, nt_out);
    fs::create_directories(cache_dir);
    const fs::path tmp = path.string() + ".tmp";
    write_grid(tmp, g);
    fs::rename(tmp, path);
    return g;
}

// ---- suite (de)serialization ---------------------------------------------------

inline nlohmann::json suite_to_json(const ExperimentSuite& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["reference"] = {{"nt", s.ref_nt}, {"dx", s.ref_dx}, {"dt", s.ref_dt}};
    j["runs"] = nlohmann::json::array();
    for (const RunConfig& r : s.runs) j["runs"].push_back(config_to_json(r));
    return j;
}

inline ExperimentSuite suite_from_json(const nlohmann::json& j) {
    ExperimentSuite s;
    s.name = j.value("name", s.name);
    if (j.contains("reference")) {
        const auto& r = j["reference"];
        s.ref_nt = r.value("nt", s.ref_nt);
        s.ref_dx = r.value("dx", s.ref_dx);
        s.ref_dt = r.value("dt", s.ref_dt);
    }
    for (const auto& rj : j.at("runs")) s.runs.push_back(config_from_json(rj));
    s.validate();
    return s;
}

inline ExperimentSuite load_suite(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open suite file " + path.string());
    nlohmann::json j;
    in >> j;
    return suite_from_json(j);
}

// ---- presets -------------------------------------------------------------------

namespace detail {

inline RunConfig preset_run(CaseKind kind, double eps, double u_left,
                            double u_right_mag, Method method,
                            std::uint64_t pair_index) {
    RunConfig c;
    c.problem.kind = kind;
    c.problem.eps = eps;
    c.problem.u_left = u_left;
    c.problem.u_right_mag = u_right_mag;
    c.method = method;
    // One sampling stream per (case, eps) pair so PINN and sl-PINN train on
    // the same point sets; distinct parameter seeds per run.
    c.seeds.sampling = 9000 + pair_index;
    c.seeds.params_left = 1000 + 2 * pair_index;
    c.seeds.params_right = 1001 + 2 * pair_index;
    return c;
}

}  // namespace detail

/// "paper-small": the full table matrix at the published settings
/// (4x20 networks, N=5000, Adam 20k then L-BFGS 10k).
/// "ci": two fast smooth-case runs (N=1000, Adam 2k, L-BFGS 500) for
/// round-trip and determinism checks.
inline ExperimentSuite make_preset(const std::string& name) {
    constexpr double pi = std::numbers::pi;
    ExperimentSuite s;
    s.name = name;
    std::uint64_t pair = 0;
    if (name == "paper-small") {
        for (double eps : {1e-1 / pi, 1e-2 / pi, 1e-3 / pi}) {
            for (Method m : {Method::PINN, Method::SLPINN})
                s.runs.push_back(detail::preset_run(CaseKind::SmoothSine, eps,
                                                    1.0, 1.0, m, pair));
            ++pair;
        }
        for (double eps : {1.0 / 500, 1.0 / 1000, 1.0 / 5000, 1.0 / 10000}) {
            for (Method m : {Method::PINN, Method::SLPINN})
                s.runs.push_back(detail::preset_run(CaseKind::RiemannSteady,
                                                    eps, 1.0, 1.0, m, pair));
            ++pair;
        }
        for (double eps : {1.0 / 500, 1.0 / 1000, 1.0 / 5000, 1.0 / 10000}) {
            for (Method m : {Method::PINN, Method::SLPINN})
                s.runs.push_back(detail::preset_run(CaseKind::RiemannMoving,
                                                    eps, 1.0, 0.5, m, pair));
            ++pair;
        }
    } else if (name == "ci") {
        for (Method m : {Method::PINN, Method::SLPINN}) {
            RunConfig c = detail::preset_run(CaseKind::SmoothSine, 1e-2 / pi,
                                             1.0, 1.0, m, 0);
            c.counts.n = 1000;
            c.adam.iters = 2000;
            c.lbfgs.iters = 500;
            s.runs.push_back(c);
        }
    } else {
        throw std::invalid_argument("unknown preset: " + name +
                                    " (expected paper-small or ci)");
    }
    s.validate();
    return s;
}

// ---- artifacts ------------------------------------------------------------------

/// Two-columns-per-time slice CSV: x plus, per requested time, predicted
/// and/or reference values (and their difference when both are present).
inline void write_slices_csv(const fs::path& path,
                             std::span<const double> xs,
                             std::span<const double> times,
                             const TrainedModel* model,
                             const SolutionGrid* grid) {
    if (!model && !grid)
        throw std::invalid_argument("slice needs a model or a grid");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "x";
    for (double t : times) {
        if (model) out << ",pred_t" << detail::fmt_g17(t);
        if (grid) out << ",ref_t" << detail::fmt_g17(t);
        if (model && grid) out << ",err_t" << detail::fmt_g17(t);
    }
    out << "\n";
    std::vector<std::vector<double>> pred(times.size());
    std::vector<int> rows(times.size(), -1);
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (grid) rows[k] = grid->time_index(times[k]);
        if (model) {
            pred[k].resize(xs.size());
            predict_row(*model, xs, times[k], pred[k]);
        }
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out << detail::fmt_g17(xs[i]);
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (model) out << ',' << detail::fmt_g17(pred[k][i]);
            if (grid) out << ',' << detail::fmt_g17(grid->value(rows[k], i));
            if (model && grid)
                out << ','
                    << detail::fmt_g17(grid->value(rows[k], i) - pred[k][i]);
        }
        out << "\n";
    }
}

struct TableRow {
    std::string kase;
    double eps;
    std::string method;
    ErrorReport report;
};

inline void write_table_csv(const fs::path& path,
                            const std::vector<TableRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "case,eps,method,l2_space_time,linf_t0.25,linf_t0.5,linf_t0.75,"
           "linf_t1.0\n";
    for (const TableRow& r : rows) {
        out << r.kase << ',' << detail::fmt_g17(r.eps) << ',' << r.method;
        out << ',' << detail::fmt_g17(r.report.l2_space_time);
        for (const auto& [t, v] : r.report.linf_by_time)
            out << ',' << detail::fmt_g17(v);
        out << '\n';
    }
}

/// Rebuild a suite table from per-run artifact directories (config.json +
/// error_report.csv), in directory-name order.
inline std::vector<TableRow> collect_table_rows(const fs::path& outdir) {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(outdir))
        if (e.is_directory() && fs::exists(e.path() / "error_report.csv") &&
            fs::exists(e.path() / "config.json"))
            dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    std::vector<TableRow> rows;
    for (const fs::path& dir : dirs) {
        nlohmann::json cj;
        std::ifstream(dir / "config.json") >> cj;
        const RunConfig cfg = config_from_json(cj);
        TableRow row{case_name(cfg.problem.kind), cfg.problem.eps,
                     method_name(cfg.method), {}};
        std::ifstream in(dir / "error_report.csv");
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            if (c1 == std::string::npos || c2 == std::string::npos) continue;
            const std::string metric = line.substr(0, c1);
            const std::string tstr = line.substr(c1 + 1, c2 - c1 - 1);
            const double value = std::strtod(line.c_str() + c2 + 1, nullptr);
            if (metric == "l2_space_time")
                row.report.l2_space_time = value;
            else if (metric == "linf")
                row.report.linf_by_time.emplace_back(
                    std::strtod(tstr.c_str(), nullptr), value);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---- suite execution --------------------------------------------------------------

struct RunArtifacts {
    TrainedModel model;
    ErrorReport report;
};

/// Train one run, evaluate it against the given reference, and write its
/// artifact files into `dir`.
inline RunArtifacts execute_run(const RunConfig& cfg, const SolutionGrid& ref,
                                const fs::path& dir) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "config.json");
        out << config_to_json(cfg).dump(1) << "\n";
    }
    RunArtifacts a;
    a.model = train(cfg);
    save_model(dir / "checkpoint.json", a.model);
    write_trace_csv(dir / "train_log.csv", a.model.trace);
    const SolutionGrid err = error_field_rows(
        ref, [&](std::span<const double> xs, double t, std::span<double> out) {
            predict_row(a.model, xs, t, out);
        });
    a.report = compute_error_report(err, cfg.problem);
    write_error_report_csv(dir / "error_report.csv", a.report);
    const double times[] = {0.25, 0.5, 0.75, 1.0};
    write_slices_csv(dir / "slices.csv", ref.x_nodes, times, &a.model, &ref);
    return a;
}

/// Run every configuration of the suite: resolve (and cache) references,
/// train, evaluate, and emit per-run artifacts plus the suite table CSV.
/// Returns the number of failed runs; failed run directories contain a
/// FAILED marker with the error text and whatever artifacts were produced.
inline int run_suite(const ExperimentSuite& suite, const fs::path& outdir,
                     const fs::path& cache_dir, int threads = 0) {
    suite.validate();
    fs::create_directories(outdir);
    {
        std::ofstream out(outdir / "suite.json");
        out << suite_to_json(suite).dump(1) << "\n";
    }
    std::vector<TableRow> rows;
    int failures = 0;
    for (const RunConfig& base : suite.runs) {
        RunConfig cfg = base;
        if (threads > 0) cfg.threads = threads;
        const fs::path dir = outdir / cfg.name();
        std::printf("[%s] reference...", cfg.name().c_str());
        std::fflush(stdout);
        try {
            const double dx =
                suite.ref_dx > 0.0 ? suite.ref_dx : reference_dx(cfg.problem);
            const double dt =
                suite.ref_dt > 0.0 ? suite.ref_dt : reference_dt(cfg.problem, dx);
            const SolutionGrid ref =
                get_reference(cache_dir, cfg.problem, dx, dt, suite.ref_nt);
            std::printf(" training...");
            std::fflush(stdout);
            const RunArtifacts a = execute_run(cfg, ref, dir);
            rows.push_back({case_name(cfg.problem.kind), cfg.problem.eps,
                            method_name(cfg.method), a.report});
            std::printf(" done (L2L2 = %.3g)\n", a.report.l2_space_time);
        } catch (const std::exception& e) {
            ++failures;
            fs::create_directories(dir);
            std::ofstream marker(dir / "FAILED");
            marker << e.what() << "\n";
            std::printf(" FAILED (%s)\n", e.what());
        }
        std::fflush(stdout);
    }
    write_table_csv(outdir / "table.csv", rows);
    return failures;
}

}  // namespace slpinn
