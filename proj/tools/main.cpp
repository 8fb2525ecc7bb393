#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adsrc/direct_recovery.hpp"
#include "adsrc/errors.hpp"
#include "adsrc/harness.hpp"
#include "adsrc/kernels.hpp"

namespace {

using namespace adsrc;
namespace fs = std::filesystem;

SpaceMesh mesh_for(const ProblemConfig& config, double dx) {
    return config.dim == 1 ? build_interval_mesh(config.domain_length, dx)
                           : build_square_mesh(config.domain_length, dx);
}

SourceModel sources_from_config(const ToolConfig& tc, const SpaceMesh& mesh,
                                const TimeGrid& grid) {
    std::vector<std::vector<double>> series;
    for (const auto& spec : tc.source_amplitudes)
        series.push_back(sample_amplitude([&](double t) { return spec.value(t); }, grid));
    std::vector<double> times(grid.n_steps + 1);
    for (int n = 0; n <= grid.n_steps; ++n) times[n] = grid.time(n);
    return make_source_model(tc.source_locations, times, series, tc.problem, mesh, false);
}

void write_manifest(const fs::path& dir, const nlohmann::json& extra) {
    nlohmann::json m = extra;
    m["version"] = "0.1.0";
    m["kernel_backend"] = kernels::backend_name();
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write manifest.json");
    out << m.dump(2) << '\n';
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, bool fine,
                 bool dump_field) {
    const auto tc = parse_tool_config(config_path);
    const double dx = fine ? tc.dx_fine : tc.dx_inv;
    const double dt = fine ? tc.dt_fine : tc.dt_inv;
    const auto mesh = mesh_for(tc.problem, dx);
    const auto grid = make_time_grid(0.0, tc.problem.horizon, dt);
    const auto sources = sources_from_config(tc, mesh, grid);
    SimulateOptions opts;
    opts.keep_full_field = dump_field;
    const auto trace = simulate(tc.problem, mesh, sources, grid, opts);
    write_trace_dir(out_dir, trace, mesh, tc.problem);
    if (dump_field) {
        // debugging dump: one row per time step, one column per node
        std::vector<std::vector<double>> rows;
        for (std::size_t n = 0; n < trace.full_field.size(); ++n) {
            std::vector<double> row{grid.time(static_cast<int>(n))};
            row.insert(row.end(), trace.full_field[n].begin(), trace.full_field[n].end());
            rows.push_back(std::move(row));
        }
        std::string header = "t";
        for (int i = 0; i < mesh.n_nodes(); ++i) header += ",n" + std::to_string(i);
        write_csv(fs::path(out_dir) / "field.csv", header, rows);
    }
    write_manifest(out_dir, {{"command", "simulate"}, {"fine", fine}, {"dx", dx}, {"dt", dt}});
    std::cout << "wrote trace (" << trace.values.size() << " steps, "
              << trace.boundary_index.size() << " boundary nodes) to " << out_dir << "\n";
    return 0;
}

int cmd_invert_lm(const std::string& config_path, const std::string& data_dir,
                  const std::string& out_dir) {
    const auto tc = parse_tool_config(config_path);
    const auto mesh = mesh_for(tc.problem, tc.dx_inv);
    const auto loaded = read_trace_dir(data_dir, mesh);
    const auto& grid = loaded.trace.grid;

    if (tc.init_locations.size() != tc.source_locations.size() ||
        tc.init_amplitudes.size() != tc.source_locations.size())
        throw ConfigError("invert-lm: init.x and init.lambda must list one entry per source");

    LmParams init;
    init.locations = tc.init_locations;
    for (std::size_t k = 0; k < tc.init_amplitudes.size(); ++k) {
        const auto& spec = tc.init_amplitudes[k];
        if (spec.kind == "scale") {
            const auto& truth = tc.source_amplitudes[k];
            init.amplitudes.push_back(sample_amplitude(
                [&](double t) { return spec.a * truth.value(t); }, grid));
        } else {
            init.amplitudes.push_back(
                sample_amplitude([&](double t) { return spec.value(t); }, grid));
        }
    }

    LmSchedule schedule = tc.lm;
    const auto result = run_lm(init, loaded.trace, schedule, tc.problem, mesh, grid);

    fs::create_directories(out_dir);
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < result.final.locations.size(); ++k)
            rows.push_back({static_cast<double>(k), result.final.locations[k][0],
                            result.final.locations[k][1]});
        write_csv(fs::path(out_dir) / "locations.csv", "source,x,y", rows);
    }
    {
        std::vector<std::vector<double>> rows;
        for (int n = 0; n <= grid.n_steps; ++n) {
            std::vector<double> row{grid.time(n)};
            for (const auto& amp : result.final.amplitudes) row.push_back(amp[n]);
            rows.push_back(std::move(row));
        }
        std::string header = "t";
        for (std::size_t k = 0; k < result.final.amplitudes.size(); ++k)
            header += ",lambda" + std::to_string(k);
        write_csv(fs::path(out_dir) / "amplitude.csv", header, rows);
    }
    {
        std::vector<std::vector<double>> rows;
        for (const auto& rec : result.history)
            rows.push_back({static_cast<double>(rec.iteration), rec.residual_norm, rec.beta_x,
                            rec.beta_lambda});
        write_csv(fs::path(out_dir) / "history.csv", "iteration,residual,beta_x,beta_lambda",
                  rows);
    }
    const char* stop = "max_iters";
    if (result.stop_reason == StopReason::discrepancy) stop = "discrepancy";
    if (result.stop_reason == StopReason::stagnation) stop = "stagnation";
    if (result.stop_reason == StopReason::aborted) stop = "aborted";
    write_manifest(out_dir, {{"command", "invert-lm"},
                             {"stop_reason", stop},
                             {"iterations", result.history.size()},
                             {"wall_time_seconds", result.wall_time_seconds}});
    std::cout << "recovered " << result.final.locations.size() << " source(s); history of "
              << result.history.size() << " iterates written to " << out_dir << "\n";
    return 0;
}

int cmd_invert_direct(const std::string& config_path, const std::string& data_dir,
                      const std::string& out_dir, const std::string& mode) {
    const auto tc = parse_tool_config(config_path);
    const auto mesh = mesh_for(tc.problem, tc.dx_inv);
    const auto loaded = read_trace_dir(data_dir, mesh);
    const auto& trace = loaded.trace;
    fs::create_directories(out_dir);
    nlohmann::json meta{{"command", "invert-direct"}, {"mode", mode}};

    auto write_locations = [&](const std::vector<Point>& pts) {
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < pts.size(); ++k)
            rows.push_back({static_cast<double>(k), pts[k][0], pts[k][1]});
        write_csv(fs::path(out_dir) / "locations.csv", "source,x,y", rows);
    };

    if (mode == "moments") {
        const int n = static_cast<int>(tc.source_locations.size());
        const auto moments = harmonic_moments(trace, tc.problem, mesh, 2 * n);
        const auto prony = prony_recover(moments, n);
        std::vector<Point> pts;
        for (const auto& z : prony.nodes) pts.push_back({z.real(), z.imag()});
        write_locations(pts);
        std::vector<std::vector<double>> mrows;
        for (std::size_t k = 0; k < moments.values.size(); ++k)
            mrows.push_back({static_cast<double>(k), moments.values[k].real(),
                             moments.values[k].imag()});
        write_csv(fs::path(out_dir) / "moments.csv", "degree,re,im", mrows);
    } else if (mode == "single") {
        const auto est = recover_location_single(trace, tc.problem, mesh);
        write_locations({est.location});
        meta["raw"] = {est.raw[0], est.raw[1]};
    } else if (mode == "amplitude") {
        const auto est = recover_location_single(trace, tc.problem, mesh);
        const double sigma =
            tc.direct_sigma > 0.0 ? tc.direct_sigma : default_laplace_abscissa(tc.problem);
        const double radius = tc.direct_band_radius > 0.0
                                  ? tc.direct_band_radius
                                  : default_band_radius(std::max(tc.noise_delta, 1e-4));
        const double t_ext = tc.t_ext > 0.0
                                 ? tc.t_ext
                                 : (tc.problem.reaction > 0.0
                                        ? std::log(1e8) / tc.problem.reaction
                                        : 2.0 * tc.problem.horizon);
        const double dt_ext = trace.grid.dt();
        const int n_ext = std::max(1, static_cast<int>(std::ceil(t_ext / dt_ext)));
        const TimeGrid grid_ext{tc.problem.horizon, tc.problem.horizon + n_ext * dt_ext, n_ext};
        const auto ext = extend_in_time(tc.problem, mesh, trace.final_snapshot,
                                        grid_ext.t_end - grid_ext.t0, grid_ext);
        const auto amp = recover_amplitude(trace, ext, est.location, tc.problem, mesh, sigma,
                                           radius, tc.direct_n_freq);
        write_locations({est.location});
        std::vector<std::vector<double>> rows;
        for (int n = 0; n <= amp.grid.n_steps; ++n)
            rows.push_back({amp.grid.time(n), amp.time_samples[n]});
        write_csv(fs::path(out_dir) / "amplitude.csv", "t,value", rows);
        meta["sigma"] = sigma;
        meta["band_radius"] = radius;
        meta["imag_residue"] = amp.imag_residue;
        meta["tail_truncated"] = amp.tail_truncated;
    } else {
        throw ConfigError("invert-direct: unknown mode '" + mode + "'");
    }
    write_manifest(out_dir, meta);
    std::cout << "direct inversion (" << mode << ") written to " << out_dir << "\n";
    return 0;
}

int cmd_experiment(const std::string& example, const std::vector<double>& noise, int runs,
                   unsigned seed, double scale, const std::string& method, int threads,
                   const std::string& out_dir) {
    ExperimentSpec spec;
    spec.example = example_from_name(example);
    if (!noise.empty()) spec.noise_levels = noise;
    spec.n_runs = runs;
    spec.base_seed = seed;
    spec.resolution_scale = scale;
    spec.threads = threads;
    if (method == "lm")
        spec.method = InversionMethod::lm;
    else if (method == "direct")
        spec.method = InversionMethod::direct;
    else if (method == "both")
        spec.method = InversionMethod::both;
    else
        throw ConfigError("experiment: unknown method '" + method + "'");

    const auto report = run_example(spec);
    emit_outputs(report, out_dir);
    std::cout << "example " << report.example << ": location slope "
              << report.location_fit.slope << ", amplitude slope "
              << report.amplitude_fit.slope << " (" << report.wall_time_seconds
              << " s); outputs in " << out_dir << "\n";
    for (const auto& f : report.failures) std::cout << "  failed run: " << f << "\n";
    return 0;
}

int cmd_rates(const std::string& in_csv, const std::string& out_csv) {
    const auto rows = parse_errors_csv(in_csv);
    std::ofstream out(out_csv);
    if (!out) throw IoError("cannot write " + out_csv);
    out << "method,quantity,slope,intercept,r_squared\n";
    std::vector<std::string> methods;
    for (const auto& r : rows)
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
            methods.push_back(r.method);
    for (const auto& m : methods) {
        std::vector<std::pair<double, double>> loc, amp;
        for (const auto& r : rows) {
            if (r.method != m || !(r.delta > 0.0)) continue;
            if (r.loc_mean > 0.0) loc.emplace_back(r.delta, r.loc_mean);
            if (r.amp_mean > 0.0) amp.emplace_back(r.delta, r.amp_mean);
        }
        if (loc.size() >= 3) {
            const auto fit = rate_fit(loc);
            out << m << ",location," << format_double(fit.slope) << ','
                << format_double(fit.intercept) << ',' << format_double(fit.r_squared) << '\n';
        }
        if (amp.size() >= 3) {
            const auto fit = rate_fit(amp);
            out << m << ",amplitude," << format_double(fit.slope) << ','
                << format_double(fit.intercept) << ',' << format_double(fit.r_squared) << '\n';
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"advection-diffusion point-source simulation and recovery toolkit"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_dir, mode = "single", example = "ex1i";
    std::string method = "lm", in_csv, out_csv;
    bool fine = false, dump_field = false;
    int runs = 10, threads = 0;
    unsigned seed = 1;
    double scale = 1.0;
    std::vector<double> noise;

    auto* sim = app.add_subcommand("simulate", "forward solve, boundary trace to CSV");
    sim->add_option("--config", config_path)->required();
    sim->add_option("--out", out_dir)->required();
    sim->add_flag("--fine", fine, "use the fine (data-generation) grids");
    sim->add_flag("--field", dump_field, "also dump the full space-time field (field.csv)");

    auto* ilm = app.add_subcommand("invert-lm", "Levenberg-Marquardt inversion of a trace");
    ilm->add_option("--config", config_path)->required();
    ilm->add_option("--data", data_dir)->required();
    ilm->add_option("--out", out_dir)->required();

    auto* idr = app.add_subcommand("invert-direct", "algebraic (reciprocity-gap) inversion");
    idr->add_option("--config", config_path)->required();
    idr->add_option("--data", data_dir)->required();
    idr->add_option("--out", out_dir)->required();
    idr->add_option("--mode", mode)->check(CLI::IsMember({"moments", "single", "amplitude"}));

    auto* exp = app.add_subcommand("experiment", "noise sweep with error statistics and rates");
    exp->add_option("--example", example)
        ->check(CLI::IsMember({"ex1i", "ex1ii", "ex2i", "ex2ii", "ex3", "ex4", "direct2d"}));
    exp->add_option("--noise", noise, "relative noise levels, e.g. 0.00125 0.0025 0.005");
    exp->add_option("--runs", runs);
    exp->add_option("--seed", seed);
    exp->add_option("--scale", scale, "grid coarsening factor (1 = reference resolution)");
    exp->add_option("--method", method)->check(CLI::IsMember({"lm", "direct", "both"}));
    exp->add_option("--threads", threads);
    exp->add_option("--out", out_dir)->required();

    auto* rat = app.add_subcommand("rates", "log-log slope fit of an errors.csv");
    rat->add_option("--in", in_csv)->required();
    rat->add_option("--out", out_csv)->required();

    try {
        app.parse(argc, argv);
        if (sim->parsed()) return cmd_simulate(config_path, out_dir, fine, dump_field);
        if (ilm->parsed()) return cmd_invert_lm(config_path, data_dir, out_dir);
        if (idr->parsed()) return cmd_invert_direct(config_path, data_dir, out_dir, mode);
        if (exp->parsed())
            return cmd_experiment(example, noise, runs, seed, scale, method, threads, out_dir);
        if (rat->parsed()) return cmd_rates(in_csv, out_csv);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
