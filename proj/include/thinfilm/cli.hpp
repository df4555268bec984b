#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thinfilm/appendix_a.hpp"
#include "thinfilm/config.hpp"
#include "thinfilm/diagnostics.hpp"
#include "thinfilm/io.hpp"
#include "thinfilm/quasistatic.hpp"
#include "thinfilm/time_stepper.hpp"
#include "thinfilm/transient.hpp"

namespace thinfilm {

enum ExitCode : int { kExitOk = 0, kExitIo = 1, kExitConfig = 2, kExitNumerical = 3 };

inline RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

/// Named ridge set-ups: the strong limit with n = |∇h|^θ and the transient
/// model with constant contact-line mobility n0.
inline RunConfig ridge_preset(const std::string& name)
{
    RunConfig c;
    RidgeGeometry g;
    g.L = 1.0;
    g.H = 8.0;
    g.delta = 0.1;
    g.refinement = 2;
    c.degree = 2;
    c.volume = std::sqrt(2.0) / 6.0 * g.L * g.L * g.L * g.H;
    c.physics.s = 1.0;
    c.mobility.bulk_law = PowerLaw{1.0, 2.0};
    c.stepper.scheme = Scheme::Rich2;
    c.output.snapshot_every = 25;
    c.stepper.snapshot_every = 25;
    c.w_min = 0.02;
    const std::map<std::string, double> strong{{"strong-theta0", 0.0}, {"strong-theta1", 1.0}, {"strong-theta-1", -1.0}};
    const std::map<std::string, double> transient{
        {"transient-n0-0.1", 0.1}, {"transient-n0-1", 1.0}, {"transient-n0-10", 10.0}};
    if (auto it = strong.find(name); it != strong.end()) {
        c.model = ModelKind::Strong;
        c.physics.eps_line = 0.02;
        c.mobility.theta = it->second;
        c.stepper.tau = 0.005;
        c.stepper.t_end = 20.0;
        g.refinement = 3;
    } else if (auto jt = transient.find(name); jt != transient.end()) {
        c.model = ModelKind::Transient;
        c.mobility.n0 = jt->second;
        c.stepper.scheme = Scheme::Semi1;
        c.stepper.tau = 0.005;
        c.stepper.t_end = 10.0;
    } else {
        throw ConfigError("unknown ridge preset '" + name + "'");
    }
    c.geometry = g;
    c.stepper.solver = c.model;
    c.output.dir = "ridge-" + name;
    return c;
}

inline std::vector<std::string> ridge_preset_names()
{
    return {"strong-theta0",    "strong-theta1",  "strong-theta-1",
            "transient-n0-0.1", "transient-n0-1", "transient-n0-10"};
}

/// Result of a trajectory run together with its monitored series.
struct TrajectoryOutcome {
    RunSummary summary;
    ScalarSeries series;
};

/// Runs `cfg` from its initial state, streaming CSV, VTK snapshots and the
/// manifest into cfg.output.dir.
inline TrajectoryOutcome run_trajectory(const RunConfig& cfg, const std::string& command, std::ostream& log)
{
    namespace fs = std::filesystem;
    const fs::path dir = cfg.output.dir;
    fs::create_directories(dir);
    const AleState initial = make_initial_state(cfg);
    const bool ridge = cfg.is_ridge();

    TrajectoryOutcome out;
    RunSinks sinks;
    sinks.on_step = [&](int step, const AleState& s) { out.series.push_back(monitor(s, cfg.physics, step, ridge)); };
    if (cfg.output.vtk) {
        sinks.on_snapshot = [&](int step, const AleState& s) {
            std::ostringstream name;
            name << "snapshot_" << std::setw(6) << std::setfill('0') << step << ".vtk";
            std::optional<Eigen::VectorXd> pi;
            if (cfg.model != ModelKind::Strong) {
                try {
                    pi = step1_solve(s, cfg.physics, cfg.mobility, cfg.stepper.tau, cfg.model).pi;
                } catch (const std::exception&) {
                    pi.reset();
                }
            }
            write_vtk(s, dir / name.str(), pi ? &*pi : nullptr);
        };
    }
    if (ridge && cfg.w_min > 0.0) {
        sinks.stop_check = [&](const AleState& s) -> std::optional<std::string> {
            const double w = ridge_width(s).width;
            if (w < cfg.w_min)
                return "ridge width " + format_number(w) + " below w_min";
            return std::nullopt;
        };
    }

    out.summary = run(initial, cfg.stepper, cfg.physics, cfg.mobility, cfg.step_options(), sinks);
    if (cfg.output.csv)
        write_csv(out.series, dir / "series.csv");
    Json extra;
    extra["steps"] = out.summary.steps;
    extra["t_final"] = out.summary.final_state.t;
    extra["events"] = events_to_json(out.summary.events);
    write_json(make_manifest(to_json(cfg), command, to_string(out.summary.reason), extra), dir / "manifest.json");
    log << command << ": " << out.summary.steps << " steps, t = " << format_number(out.summary.final_state.t)
        << ", exit " << to_string(out.summary.reason) << '\n';
    return out;
}

inline int exit_code_for(ExitReason r)
{
    return (r == ExitReason::Feasibility || r == ExitReason::MeshTangled) ? kExitNumerical : kExitOk;
}

inline void print_table(std::ostream& os, const EocTable& t)
{
    os << "# " << t.title << '\n' << to_csv(t);
}

/// Mesh hierarchy of the configured geometry: `levels` spaces starting at
/// the configured refinement, each the uniform refinement of the previous.
inline std::vector<std::shared_ptr<const FeSpace>> space_hierarchy(const RunConfig& cfg, int levels)
{
    std::vector<std::shared_ptr<const FeSpace>> spaces;
    auto mesh = make_space(cfg)->mesh_ptr();
    for (int l = 0; l < levels; ++l) {
        if (l > 0)
            mesh = std::make_shared<const ReferenceMesh>(refine_uniform(*mesh));
        spaces.push_back(std::make_shared<const FeSpace>(mesh, cfg.degree));
    }
    return spaces;
}

/// Minimum nodal stationary height on the unit disc for each in-plane gravity.
struct FeasibilityRow {
    double g_x;
    double min_h;
};

inline std::vector<FeasibilityRow> feasibility_sweep(const std::vector<double>& gxs, int refinement, int degree,
                                                     double volume)
{
    auto mesh = std::make_shared<const ReferenceMesh>(build_disc_mesh(refinement, degree));
    auto space = std::make_shared<const FeSpace>(mesh, degree);
    const Eigen::VectorXd psi = space->identity_map();
    std::vector<FeasibilityRow> rows;
    for (double g : gxs) {
        PhysicsParams p;
        p.g_x = {g, 0.0};
        rows.push_back({g, min_nodal(stationary_shape(*space, psi, volume, p).h)});
    }
    return rows;
}

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Thin-film free boundary solver with moving contact lines"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto* run_cmd = app.add_subcommand("run", "Run a trajectory from a JSON config");
    run_cmd->add_option("config", config_path, "Config file")->required();
    run_cmd->add_option("--out", out_dir, "Override output.dir");

    int levels = 3;
    std::string norm_name = "l2";
    auto* eoc_space_cmd = app.add_subcommand("eoc-space", "Spatial self-convergence under uniform refinement");
    eoc_space_cmd->add_option("config", config_path, "Config file")->required();
    eoc_space_cmd->add_option("--levels", levels, "Compared levels (a finer reference level is added)")
        ->check(CLI::Range(2, 8));
    eoc_space_cmd->add_option("--norm", norm_name, "l2 or max")->check(CLI::IsMember({"l2", "max"}));
    eoc_space_cmd->add_option("--out", out_dir, "Override output.dir");

    int ref_divisor = 16;
    std::string ref_scheme = "RICH3";
    auto* eoc_time_cmd = app.add_subcommand("eoc-time", "Temporal self-convergence under step bisection");
    eoc_time_cmd->add_option("config", config_path, "Config file")->required();
    eoc_time_cmd->add_option("--levels", levels, "Number of step sizes tau, tau/2, ...")->check(CLI::Range(2, 10));
    eoc_time_cmd->add_option("--ref-divisor", ref_divisor, "Reference step = finest tau / divisor")
        ->check(CLI::PositiveNumber);
    eoc_time_cmd->add_option("--ref-scheme", ref_scheme, "Scheme of the reference run");
    eoc_time_cmd->add_option("--norm", norm_name, "l2 or max")->check(CLI::IsMember({"l2", "max"}));
    eoc_time_cmd->add_option("--out", out_dir, "Override output.dir");

    std::string mu = "x2";
    int degree = 1;
    std::vector<int> refinements{2, 3, 4, 5, 6};
    auto* appendix_cmd = app.add_subcommand("appendix-a", "1D degenerate elliptic convergence study");
    appendix_cmd->add_option("--mu", mu, "x2 or 1+x2")->check(CLI::IsMember({"x2", "1+x2"}));
    appendix_cmd->add_option("--degree", degree, "Polynomial degree")->check(CLI::Range(1, 3));
    appendix_cmd->add_option("--refinements", refinements, "Refinement levels r (2^r cells)");

    int refinement = 3;
    int sweep_degree = 2;
    std::vector<double> gxs{2, 4, 6, 8, 10};
    auto* feas_cmd = app.add_subcommand("feasibility-sweep", "Stationary shapes on the unit disc under in-plane gravity");
    feas_cmd->add_option("--refinement", refinement)->check(CLI::NonNegativeNumber);
    feas_cmd->add_option("--degree", sweep_degree)->check(CLI::Range(1, 3));
    feas_cmd->add_option("--gx", gxs, "In-plane gravity values");

    std::string preset = "strong-theta0";
    double t_end = -1.0;
    int ridge_refinement = -1;
    auto* ridge_cmd = app.add_subcommand("ridge", "Ridge instability presets");
    ridge_cmd->add_option("--preset", preset)->check(CLI::IsMember(ridge_preset_names()));
    ridge_cmd->add_option("--t-end", t_end, "Override the end time");
    ridge_cmd->add_option("--refinement", ridge_refinement, "Override the refinement");
    ridge_cmd->add_option("--out", out_dir, "Override output.dir");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitConfig;
    }

    try {
        if (*run_cmd) {
            RunConfig cfg = load_config(config_path);
            if (!out_dir.empty())
                cfg.output.dir = out_dir;
            return exit_code_for(run_trajectory(cfg, "run", out).summary.reason);
        }

        if (*eoc_space_cmd || *eoc_time_cmd) {
            RunConfig cfg = load_config(config_path);
            if (!out_dir.empty())
                cfg.output.dir = out_dir;
            const NormKind norm = norm_name == "max" ? NormKind::Max : NormKind::L2;
            EocTable table;
            if (*eoc_space_cmd) {
                const auto spaces = space_hierarchy(cfg, levels + 1);
                table = eoc_space(
                    spaces, [&](std::shared_ptr<const FeSpace> s) { return make_initial_state(cfg, std::move(s)); },
                    cfg.stepper, cfg.physics, cfg.mobility, cfg.step_options(), norm);
            } else {
                std::vector<double> taus;
                for (int i = 0; i < levels; ++i)
                    taus.push_back(cfg.stepper.tau / (1 << i));
                table = eoc_time(make_initial_state(cfg), cfg.stepper, cfg.physics, cfg.mobility, cfg.step_options(),
                                 taus, taus.back() / ref_divisor, parse_scheme(ref_scheme), norm);
            }
            print_table(out, table);
            out << "mean slope " << format_number(table.mean_slope()) << '\n';
            std::filesystem::create_directories(cfg.output.dir);
            const std::string stem = *eoc_space_cmd ? "eoc_space" : "eoc_time";
            write_csv(table, std::filesystem::path(cfg.output.dir) / (stem + ".csv"));
            bool all_valid = true;
            for (const auto& r : table.rows)
                all_valid = all_valid && r.valid;
            write_json(make_manifest(to_json(cfg), stem, all_valid ? "completed" : "invalid_rows"),
                       std::filesystem::path(cfg.output.dir) / (stem + "_manifest.json"));
            return all_valid ? kExitOk : kExitNumerical;
        }

        if (*appendix_cmd) {
            const MuKind kind = mu == "x2" ? MuKind::Degenerate : MuKind::Regular;
            EocTable table;
            table.title = "appendix-a mu=" + mu + " P" + std::to_string(degree);
            for (const auto& r : appendix_a_oracle(kind, degree, refinements))
                table.rows.push_back({"cells=" + std::to_string(r.n_cells), r.error, r.eoc, true});
            print_table(out, table);
            return kExitOk;
        }

        if (*feas_cmd) {
            out << "g_x,min_h\n";
            for (const auto& r : feasibility_sweep(gxs, refinement, sweep_degree, 1.0))
                out << format_number(r.g_x) << ',' << format_number(r.min_h) << '\n';
            return kExitOk;
        }

        if (*ridge_cmd) {
            RunConfig cfg = ridge_preset(preset);
            if (t_end >= 0.0)
                cfg.stepper.t_end = t_end;
            if (ridge_refinement >= 0)
                std::get<RidgeGeometry>(cfg.geometry).refinement = ridge_refinement;
            if (!out_dir.empty())
                cfg.output.dir = out_dir;
            cfg.validate();
            const TrajectoryOutcome r = run_trajectory(cfg, "ridge " + preset, out);
            std::vector<double> t, w;
            const double w0 = r.series.empty() ? 0.0 : r.series.rows().front().ridge_width.value_or(0.0);
            for (const auto& row : r.series.rows()) {
                if (row.ridge_width && *row.ridge_width <= 0.5 * w0) {
                    t.push_back(row.t);
                    w.push_back(*row.ridge_width);
                }
            }
            const RidgeWidth pinch = ridge_width(r.summary.final_state, 256);
            out << "final width " << format_number(pinch.width) << " at y = " << format_number(pinch.y_phys) << '\n';
            const FitModel model = cfg.mobility.theta > 0.0 && cfg.model == ModelKind::Strong ? FitModel::Exponential
                                                                                                : FitModel::Power;
            const FitResult fit = fit_power_exponent(t, w, model);
            if (fit.ok)
                out << (model == FitModel::Power ? "power exponent " : "exponential rate ") << format_number(fit.exponent)
                    << " (R^2 = " << format_number(fit.r2) << ")\n";
            else
                out << "fit rejected: " << fit.reason << '\n';
            return exit_code_for(r.summary.reason);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericalEvent& e) {
        err << "numerical event: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitConfig;
}

} // namespace thinfilm
