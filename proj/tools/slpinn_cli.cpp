// Experiment driver: train PINN / sl-PINN runs against cached
// finite-difference references and emit table, slice and log CSVs.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slpinn/harness.hpp"

namespace {

slpinn::CaseKind parse_case(const std::string& s) {
    if (s == "smooth_sine") return slpinn::CaseKind::SmoothSine;
    if (s == "riemann_steady") return slpinn::CaseKind::RiemannSteady;
    if (s == "riemann_moving") return slpinn::CaseKind::RiemannMoving;
    throw CLI::ValidationError(
        "case must be smooth_sine, riemann_steady or riemann_moving");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"singular-layer PINN experiments for viscous Burgers"};
    app.require_subcommand(1);

    // ---- run ----
    auto* run = app.add_subcommand("run", "execute an experiment suite");
    std::string suite_path, preset, out_dir = "out";
    std::string cache_dir = slpinn::default_cache_dir().string();
    int threads = 0;
    run->add_option("--suite", suite_path, "suite JSON file");
    run->add_option("--preset", preset, "builtin suite: paper-small or ci");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--cache", cache_dir,
                    "reference cache directory (env SLPINN_CACHE)");
    run->add_option("--threads", threads,
                    "worker threads per run (0 = per-run config)");

    // ---- reference ----
    auto* ref = app.add_subcommand(
        "reference", "generate a finite-difference reference grid");
    std::string ref_case = "smooth_sine", ref_out = "reference.bin";
    double ref_eps = 1e-2, ref_ul = 1.0, ref_ur = 1.0;
    double ref_dx = 0.0, ref_dt = 0.0;
    int ref_nt = 201;
    ref->add_option("--case", ref_case, "problem case")->required();
    ref->add_option("--eps", ref_eps, "viscosity")->required();
    ref->add_option("--u-left", ref_ul, "Riemann left state");
    ref->add_option("--u-right", ref_ur, "Riemann right state magnitude");
    ref->add_option("--dx", ref_dx, "grid spacing (0 = auto)");
    ref->add_option("--dt", ref_dt, "time step (0 = auto stable)");
    ref->add_option("--nt", ref_nt, "stored snapshots");
    ref->add_option("--out", ref_out, "output grid file");

    // ---- slice ----
    auto* slice = app.add_subcommand(
        "slice", "sample u(x, t_i) rows from a model and/or grid into CSV");
    std::string slice_model, slice_grid, slice_out = "slices.csv";
    std::vector<double> slice_times;
    int slice_nx = 2001;
    slice->add_option("--model", slice_model, "model checkpoint JSON");
    slice->add_option("--grid", slice_grid, "reference grid file");
    slice->add_option("--times", slice_times, "times to sample")
        ->required()
        ->delimiter(',');
    slice->add_option("--nx", slice_nx,
                      "x resolution when no grid supplies nodes");
    slice->add_option("--out", slice_out, "output CSV");

    // ---- table ----
    auto* table = app.add_subcommand(
        "table", "rebuild the suite table CSV from run artifacts");
    std::string table_dir = "out";
    table->add_option("--dir", table_dir, "suite output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (suite_path.empty() == preset.empty()) {
                std::cerr << "run: give exactly one of --suite or --preset\n";
                return 2;
            }
            const slpinn::ExperimentSuite suite =
                suite_path.empty() ? slpinn::make_preset(preset)
                                   : slpinn::load_suite(suite_path);
            const int failures =
                slpinn::run_suite(suite, out_dir, cache_dir, threads);
            if (failures > 0) {
                std::cerr << failures << " run(s) failed; see FAILED markers in "
                          << out_dir << "\n";
                return 1;
            }
            std::cout << "wrote " << out_dir << "/table.csv\n";
        } else if (*ref) {
            slpinn::ProblemSpec ps;
            ps.kind = parse_case(ref_case);
            ps.eps = ref_eps;
            ps.u_left = ref_ul;
            ps.u_right_mag = ref_ur;
            ps.validate();
            const double dx = ref_dx > 0.0 ? ref_dx : slpinn::reference_dx(ps);
            const double dt =
                ref_dt > 0.0 ? ref_dt : slpinn::reference_dt(ps, dx);
            try {
                const slpinn::SolutionGrid g = slpinn::solve_fd(ps, dx, dt, ref_nt);
                slpinn::write_grid(ref_out, g);
                std::cout << "wrote " << ref_out << " (nx=" << g.nx
                          << ", nt=" << g.nt << ", dt=" << g.dt << ")\n";
            } catch (const slpinn::StabilityError& e) {
                std::cerr << "refused: " << e.what() << "\n";
                return 1;
            }
        } else if (*slice) {
            if (slice_model.empty() && slice_grid.empty()) {
                std::cerr << "slice: give --model and/or --grid\n";
                return 2;
            }
            std::optional<slpinn::TrainedModel> model;
            std::optional<slpinn::SolutionGrid> grid;
            if (!slice_model.empty())
                model = slpinn::load_model(slice_model);
            if (!slice_grid.empty()) grid = slpinn::read_grid(slice_grid);
            const double t_final =
                grid ? grid->t_final : model->config.problem.t_final;
            for (double t : slice_times)
                if (t < 0.0 || t > t_final)
                    throw std::invalid_argument(
                        "slice time outside [0, T]: " + std::to_string(t));
            std::vector<double> xs;
            if (grid) {
                xs = grid->x_nodes;
            } else {
                xs.resize(slice_nx);
                for (int i = 0; i < slice_nx; ++i)
                    xs[i] = (2.0 * i - (slice_nx - 1)) / (slice_nx - 1);
            }
            slpinn::write_slices_csv(slice_out, xs, slice_times,
                                     model ? &*model : nullptr,
                                     grid ? &*grid : nullptr);
            std::cout << "wrote " << slice_out << "\n";
        } else if (*table) {
            const auto rows = slpinn::collect_table_rows(table_dir);
            slpinn::write_table_csv(slpinn::fs::path(table_dir) / "table.csv",
                                    rows);
            std::cout << "wrote " << table_dir << "/table.csv (" << rows.size()
                      << " rows)\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
