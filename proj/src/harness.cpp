#include "adsrc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "adsrc/direct_recovery.hpp"
#include "adsrc/errors.hpp"
#include "adsrc/kernels.hpp"
#include "adsrc/parallel.hpp"
#include "adsrc/quadrature.hpp"
#include "adsrc/rng.hpp"

namespace adsrc {

ExampleId example_from_name(const std::string& name) {
    if (name == "ex1i") return ExampleId::ex1i;
    if (name == "ex1ii") return ExampleId::ex1ii;
    if (name == "ex2i") return ExampleId::ex2i;
    if (name == "ex2ii") return ExampleId::ex2ii;
    if (name == "ex3") return ExampleId::ex3;
    if (name == "ex4") return ExampleId::ex4;
    if (name == "direct2d") return ExampleId::direct2d;
    throw ConfigError("unknown example '" + name + "'");
}

std::string example_name(ExampleId id) {
    switch (id) {
        case ExampleId::ex1i: return "ex1i";
        case ExampleId::ex1ii: return "ex1ii";
        case ExampleId::ex2i: return "ex2i";
        case ExampleId::ex2ii: return "ex2ii";
        case ExampleId::ex3: return "ex3";
        case ExampleId::ex4: return "ex4";
        case ExampleId::direct2d: return "direct2d";
    }
    throw ConfigError("unknown example id");
}

ExampleSetup example_setup(ExampleId id, double resolution_scale) {
    if (!(resolution_scale >= 1.0))
        throw ConfigError("example setup: resolution_scale must be >= 1");
    ExampleSetup s;
    s.id = id;
    s.config.horizon = 2.0;
    s.config.domain_length = 1.0;
    s.config.reaction = 1.0;
    s.config.advection = {0.0, 0.0};

    const bool one_d = (id == ExampleId::ex1i || id == ExampleId::ex1ii);
    s.config.dim = one_d ? 1 : 2;
    // reference grids: dt = dx, data at 4x the inversion resolution; keeping
    // the 4:1 ratio under coarsening preserves the mesh nesting
    const int base_inv = one_d ? 250 : 50;
    s.cells_inv = std::max(4, static_cast<int>(std::lround(base_inv / resolution_scale)));
    s.cells_fine = 4 * s.cells_inv;

    s.lm.gamma_x = 0.8;
    s.lm.gamma_lambda = 0.8;
    s.lm.beta_x0 = 1.0;
    s.lm.max_iters = 100;

    switch (id) {
        case ExampleId::ex1i:
            s.locations = {{0.5, 0.0}};
            s.amplitudes = {parse_amplitude_spec("exp:0.5:5")};
            s.lm.beta_lambda0 = 5.0;
            s.init_locations = {{0.4, 0.0}};
            s.init_amplitudes = {parse_amplitude_spec("scale:0.8")};
            s.config.support_end = 1.0;
            s.config.obs_start = 1.5;
            s.approximate_support = true;
            break;
        case ExampleId::ex1ii:
            s.locations = {{0.5, 0.0}};
            s.amplitudes = {parse_amplitude_spec("ind:1:1")};
            s.lm.beta_lambda0 = 2.0;
            s.init_locations = {{0.0, 0.0}};  // clamped to the admissible interior
            s.init_amplitudes = {parse_amplitude_spec("zero")};
            s.config.support_end = 1.0;
            s.config.obs_start = 1.5;
            break;
        case ExampleId::ex2i:
            s.locations = {{0.5, 0.5}};
            s.amplitudes = {parse_amplitude_spec("exp:0.5:5")};
            s.lm.beta_lambda0 = 50.0;
            s.init_locations = {{0.4, 0.4}};
            s.init_amplitudes = {parse_amplitude_spec("scale:0.8")};
            s.config.support_end = 1.0;
            s.config.obs_start = 1.5;
            s.approximate_support = true;
            break;
        case ExampleId::ex2ii:
            s.locations = {{0.5, 0.5}};
            s.amplitudes = {parse_amplitude_spec("ind:1:1")};
            s.lm.beta_lambda0 = 50.0;
            s.init_locations = {{0.0, 0.0}};
            s.init_amplitudes = {parse_amplitude_spec("zero")};
            s.config.support_end = 1.0;
            s.config.obs_start = 1.5;
            break;
        case ExampleId::ex3:
            s.locations = {{0.25, 0.25}, {0.75, 0.75}};
            s.amplitudes = {parse_amplitude_spec("exp:0.5:5"), parse_amplitude_spec("exp:0.25:4")};
            s.lm.beta_lambda0 = 50.0;
            s.init_locations = {{0.2, 0.2}, {0.8, 0.8}};
            s.init_amplitudes = {parse_amplitude_spec("scale:0.8"),
                                 parse_amplitude_spec("scale:0.8")};
            s.config.support_end = 1.0;
            s.config.obs_start = 1.5;
            s.approximate_support = true;
            break;
        case ExampleId::ex4:
            s.locations = {{0.25, 0.25}, {0.75, 0.75}};
            s.amplitudes = {parse_amplitude_spec("ind:1:0.6666666666666666"),
                            parse_amplitude_spec("ind:1:1.3333333333333333")};
            s.lm.beta_lambda0 = 50.0;
            s.init_locations = {{0.0, 0.0}, {0.0, 0.0}};
            s.init_amplitudes = {parse_amplitude_spec("zero"), parse_amplitude_spec("ind:1:3")};
            s.config.support_end = 1.4;
            s.config.obs_start = 1.7;
            break;
        case ExampleId::direct2d:
            s.config.reaction = 0.0;  // moment probes need mu + |A|^2/4 = 0
            s.locations = {{0.25, 0.25}, {0.75, 0.75}};
            s.amplitudes = {parse_amplitude_spec("exp:0.5:5"), parse_amplitude_spec("exp:0.25:4")};
            s.lm.beta_lambda0 = 50.0;
            s.init_locations = {{0.2, 0.2}, {0.8, 0.8}};
            s.init_amplitudes = {parse_amplitude_spec("scale:0.8"),
                                 parse_amplitude_spec("scale:0.8")};
            s.config.support_end = 1.0;
            s.config.obs_start = 1.5;
            s.approximate_support = true;
            break;
    }
    return s;
}

BoundaryTrace make_noisy(const BoundaryTrace& trace, double delta, unsigned seed) {
    if (delta < 0.0) throw ConfigError("make_noisy: delta must be >= 0");
    if (delta == 0.0) return trace;
    BoundaryTrace noisy = trace;
    const double sigma = delta * trace.sup_norm();
    for (std::size_t n = 0; n < noisy.values.size(); ++n)
        for (std::size_t c = 0; c < noisy.values[n].size(); ++c)
            noisy.values[n][c] += sigma * counter_gaussian(seed, n, c);
    return noisy;
}

RateFit rate_fit(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 3) throw std::invalid_argument("rate_fit: need at least 3 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& [d, e] : pairs) {
        if (!(d > 0.0) || !(e > 0.0))
            throw std::invalid_argument("rate_fit: values must be positive");
        const double x = std::log(d), y = std::log(e);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double n = static_cast<double>(pairs.size());
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    const double cxy = sxy - sx * sy / n;
    RateFit fit;
    fit.slope = cxy / vx;
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.r_squared = vy > 0.0 ? (cxy * cxy) / (vx * vy) : 1.0;
    return fit;
}

// ---------------------------------------------------------------------------
// Error metrics
// ---------------------------------------------------------------------------

std::vector<int> best_permutation(const std::vector<Point>& estimate,
                                  const std::vector<Point>& truth, int dim) {
    const int n = static_cast<int>(truth.size());
    std::vector<int> perm(n), best(n);
    std::iota(perm.begin(), perm.end(), 0);
    best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (int k = 0; k < n; ++k) {
            const double dx = estimate[k][0] - truth[perm[k]][0];
            const double dy = dim == 2 ? estimate[k][1] - truth[perm[k]][1] : 0.0;
            cost += std::hypot(dx, dy);
        }
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double location_error(const std::vector<Point>& estimate, const std::vector<Point>& truth,
                      int dim) {
    const auto perm = best_permutation(estimate, truth, dim);
    double err = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const double dx = estimate[k][0] - truth[perm[k]][0];
        const double dy = dim == 2 ? estimate[k][1] - truth[perm[k]][1] : 0.0;
        err += std::hypot(dx, dy);
    }
    return err;
}

double amplitude_l1_error(const std::vector<std::vector<double>>& estimate,
                          const std::vector<std::vector<double>>& truth,
                          const std::vector<int>& perm, double dt) {
    double err = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        std::vector<double> diff(estimate[k].size());
        for (std::size_t n = 0; n < diff.size(); ++n)
            diff[n] = std::abs(estimate[k][n] - truth[perm[k]][n]);
        err += trapezoid(diff, dt);
    }
    return err;
}

double amplitude_l2_relative(const std::vector<std::vector<double>>& estimate,
                             const std::vector<std::vector<double>>& truth,
                             const std::vector<int>& perm, double dt) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        std::vector<double> d2(estimate[k].size()), t2(estimate[k].size());
        for (std::size_t n = 0; n < d2.size(); ++n) {
            const double d = estimate[k][n] - truth[perm[k]][n];
            d2[n] = d * d;
            t2[n] = truth[perm[k]][n] * truth[perm[k]][n];
        }
        num += trapezoid(d2, dt);
        den += trapezoid(t2, dt);
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

namespace {

struct RunOutcome {
    bool ok = false;
    std::string failure;
    double loc_error = std::numeric_limits<double>::quiet_NaN();
    double amp_l1 = std::numeric_limits<double>::quiet_NaN();
    double amp_l2rel = std::numeric_limits<double>::quiet_NaN();
    RunHistory history;
};

struct MethodAccumulator {
    std::vector<std::vector<RunOutcome>> cell;  // [delta][seed]
};

std::vector<std::vector<double>> truth_samples(const ExampleSetup& setup, const TimeGrid& grid) {
    std::vector<std::vector<double>> out;
    for (const auto& amp : setup.amplitudes)
        out.push_back(sample_amplitude([&](double t) { return amp.value(t); }, grid));
    return out;
}

LmParams initial_params(const ExampleSetup& setup, const SpaceMesh& mesh, const TimeGrid& grid,
                        const std::vector<std::vector<double>>& truth) {
    LmParams init;
    const double margin = 2.0 * mesh.mesh_size;
    for (auto x : setup.init_locations) {
        x[0] = std::clamp(x[0], margin, setup.config.domain_length - margin);
        if (setup.config.dim == 2)
            x[1] = std::clamp(x[1], margin, setup.config.domain_length - margin);
        init.locations.push_back(x);
    }
    for (std::size_t k = 0; k < setup.init_amplitudes.size(); ++k) {
        const auto& spec = setup.init_amplitudes[k];
        if (spec.kind == "scale") {
            auto series = truth[k];
            kernels::scale(spec.a, series.data(), series.size());
            init.amplitudes.push_back(std::move(series));
        } else {
            init.amplitudes.push_back(
                sample_amplitude([&](double t) { return spec.value(t); }, grid));
        }
    }
    return init;
}

double weight_sum_sqrt(const SpaceMesh& mesh, const TimeGrid& grid) {
    const auto bq = boundary_quadrature(mesh);
    const auto wt = trapezoid_weights(grid.n_steps + 1, grid.dt());
    double bw = 0.0;
    for (double w : bq.weights) bw += w;
    double tw = 0.0;
    for (double w : wt) tw += w;
    return std::sqrt(bw * tw);
}

RunOutcome lm_run(const ExampleSetup& setup, const SpaceMesh& mesh, const TimeGrid& grid,
                  const BoundaryTrace& noisy, const LmParams& init, const LmSchedule& base,
                  double delta, unsigned seed, double noise_norm,
                  const std::vector<std::vector<double>>& truth) {
    RunOutcome out;
    out.history.delta = delta;
    out.history.seed = seed;
    LmSchedule schedule = base;
    schedule.stop_rule = delta > 0.0 ? StopRule::discrepancy : StopRule::max_iters;
    schedule.noise_norm = noise_norm;
    schedule.record_iterates = true;

    const double dt = grid.dt();
    const int dim = setup.config.dim;
    try {
        const auto result = run_lm(init, noisy, schedule, setup.config, mesh, grid);
        for (const auto& rec : result.history) {
            const auto perm = best_permutation(rec.params.locations, setup.locations, dim);
            RunHistoryRow row;
            row.iteration = rec.iteration;
            row.residual = rec.residual_norm;
            row.loc_error = location_error(rec.params.locations, setup.locations, dim);
            row.amp_error = amplitude_l1_error(rec.params.amplitudes, truth, perm, dt);
            row.beta_x = rec.beta_x;
            row.beta_lambda = rec.beta_lambda;
            out.history.rows.push_back(row);
        }
        const auto perm = best_permutation(result.final.locations, setup.locations, dim);
        out.loc_error = location_error(result.final.locations, setup.locations, dim);
        out.amp_l1 = amplitude_l1_error(result.final.amplitudes, truth, perm, dt);
        out.amp_l2rel = amplitude_l2_relative(result.final.amplitudes, truth, perm, dt);
        out.ok = result.stop_reason != StopReason::aborted;
        if (!out.ok) out.failure = "lm aborted (no monotone step)";
    } catch (const std::exception& e) {
        out.ok = false;
        out.failure = e.what();
    }
    return out;
}

RunOutcome direct_run(const ExampleSetup& setup, const SpaceMesh& mesh,
                      const BoundaryTrace& noisy_with_clean_snapshot, double delta,
                      const std::vector<std::vector<double>>& truth) {
    RunOutcome out;
    const auto& config = setup.config;
    const int n_src = static_cast<int>(setup.locations.size());
    try {
        if (n_src == 1) {
            const auto est = recover_location_single(noisy_with_clean_snapshot, config, mesh);
            out.loc_error = location_error({est.location}, setup.locations, config.dim);

            // amplitude: Laplace band inversion around the recovered location
            const double t_ext = config.reaction > 0.0
                                     ? std::log(1e8) / config.reaction
                                     : 2.0 * config.horizon;
            const double dt_ext = noisy_with_clean_snapshot.grid.dt();
            const int n_ext = std::max(1, static_cast<int>(std::ceil(t_ext / dt_ext)));
            const TimeGrid grid_ext{config.horizon, config.horizon + n_ext * dt_ext, n_ext};
            const auto ext =
                extend_in_time(config, mesh, noisy_with_clean_snapshot.final_snapshot,
                               grid_ext.t_end - grid_ext.t0, grid_ext);
            const double sigma = default_laplace_abscissa(config);
            const double radius = default_band_radius(std::max(delta, 1e-4));
            const int n_freq = std::min(2401, 2 * static_cast<int>(std::lround(5.0 * radius)) + 1);
            const auto amp = recover_amplitude(noisy_with_clean_snapshot, ext, est.location,
                                               config, mesh, sigma, radius, n_freq);
            const std::vector<int> identity{0};
            out.amp_l1 = amplitude_l1_error({amp.time_samples}, truth, identity,
                                            noisy_with_clean_snapshot.grid.dt());
            out.amp_l2rel = amplitude_l2_relative({amp.time_samples}, truth, identity,
                                                  noisy_with_clean_snapshot.grid.dt());
        } else {
            const auto moments =
                harmonic_moments(noisy_with_clean_snapshot, config, mesh, 2 * n_src);
            const auto prony = prony_recover(moments, n_src);
            std::vector<Point> est;
            for (const auto& z : prony.nodes) est.push_back({z.real(), z.imag()});
            out.loc_error = location_error(est, setup.locations, config.dim);
            // multi-source amplitude separation is out of scope
        }
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.failure = e.what();
    }
    return out;
}

ErrorRow aggregate_row(const std::string& method, double delta,
                       const std::vector<RunOutcome>& runs) {
    ErrorRow row;
    row.method = method;
    row.delta = delta;
    std::vector<double> loc, amp, amp2;
    for (const auto& r : runs) {
        if (!r.ok) continue;
        loc.push_back(r.loc_error);
        if (std::isfinite(r.amp_l1)) amp.push_back(r.amp_l1);
        if (std::isfinite(r.amp_l2rel)) amp2.push_back(r.amp_l2rel);
    }
    row.n_ok = static_cast<int>(loc.size());
    auto mean_stderr = [](const std::vector<double>& v, double& mean, double& se) {
        if (v.empty()) {
            mean = se = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        if (v.size() < 2) {
            se = 0.0;
            return;
        }
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= (v.size() - 1);
        se = std::sqrt(var / v.size());
    };
    mean_stderr(loc, row.loc_mean, row.loc_stderr);
    mean_stderr(amp, row.amp_mean, row.amp_stderr);
    double dummy;
    mean_stderr(amp2, row.amp_l2rel_mean, dummy);
    return row;
}

}  // namespace

ErrorReport run_example(const ExperimentSpec& spec) {
    const auto t_start = std::chrono::steady_clock::now();
    ExperimentSpec run_spec = spec;
    if (run_spec.seeds.empty()) {
        run_spec.seeds.resize(run_spec.n_runs);
        std::iota(run_spec.seeds.begin(), run_spec.seeds.end(), run_spec.base_seed);
    }
    if (static_cast<int>(run_spec.seeds.size()) != run_spec.n_runs)
        throw ConfigError("run_example: n_runs must equal the number of seeds");
    for (double d : run_spec.noise_levels)
        if (d < 0.0) throw ConfigError("run_example: noise levels must be >= 0");

    const auto setup = example_setup(run_spec.example, run_spec.resolution_scale);
    const auto& config = setup.config;

    const auto fine_mesh = config.dim == 1
                               ? build_interval_mesh(config.domain_length, setup.dx_fine())
                               : build_square_mesh(config.domain_length, setup.dx_fine());
    const auto inv_mesh = config.dim == 1
                              ? build_interval_mesh(config.domain_length, setup.dx_inv())
                              : build_square_mesh(config.domain_length, setup.dx_inv());
    const auto fine_grid = make_time_grid(0.0, config.horizon, setup.dx_fine());
    const auto inv_grid = make_time_grid(0.0, config.horizon, setup.dx_inv());

    // exact data on the fine pair, then restriction (the inverse-crime split)
    const auto fine_truth = truth_samples(setup, fine_grid);
    std::vector<double> fine_times(fine_grid.n_steps + 1);
    for (int n = 0; n <= fine_grid.n_steps; ++n) fine_times[n] = fine_grid.time(n);
    const auto sources = make_source_model(setup.locations, fine_times, fine_truth, config,
                                           fine_mesh, false);
    const auto clean_fine = simulate(config, fine_mesh, sources, fine_grid);
    const auto clean_inv = restrict_trace(clean_fine, fine_mesh, inv_mesh, inv_grid);

    const auto inv_truth = truth_samples(setup, inv_grid);
    const double sup = clean_inv.sup_norm();
    const double wsum = weight_sum_sqrt(inv_mesh, inv_grid);

    const bool with_lm =
        run_spec.method == InversionMethod::lm || run_spec.method == InversionMethod::both;
    const bool with_direct =
        run_spec.method == InversionMethod::direct || run_spec.method == InversionMethod::both;

    LmParams init;
    LmSchedule schedule = run_spec.lm_override ? *run_spec.lm_override : setup.lm;
    if (with_lm) init = initial_params(setup, inv_mesh, inv_grid, inv_truth);

    const std::size_t n_delta = run_spec.noise_levels.size();
    const std::size_t n_seed = run_spec.seeds.size();
    MethodAccumulator lm_acc, direct_acc;
    if (with_lm) lm_acc.cell.assign(n_delta, std::vector<RunOutcome>(n_seed));
    if (with_direct) direct_acc.cell.assign(n_delta, std::vector<RunOutcome>(n_seed));

    parallel_for(
        n_delta * n_seed,
        [&](std::size_t idx) {
            const std::size_t di = idx / n_seed;
            const std::size_t si = idx % n_seed;
            const double delta = run_spec.noise_levels[di];
            const unsigned seed = run_spec.seeds[si];
            const auto noisy = make_noisy(clean_inv, delta, seed);
            if (with_lm)
                lm_acc.cell[di][si] = lm_run(setup, inv_mesh, inv_grid, noisy, init, schedule,
                                             delta, seed, delta * sup * wsum, inv_truth);
            if (with_direct)
                direct_acc.cell[di][si] =
                    direct_run(setup, inv_mesh, noisy, delta, inv_truth);
        },
        run_spec.threads);

    ErrorReport report;
    report.example = example_name(run_spec.example);
    report.resolution_scale = run_spec.resolution_scale;
    report.deltas = run_spec.noise_levels;
    report.seeds = run_spec.seeds;

    auto collect = [&](const std::string& method, const MethodAccumulator& acc) {
        for (std::size_t di = 0; di < n_delta; ++di) {
            report.rows.push_back(
                aggregate_row(method, run_spec.noise_levels[di], acc.cell[di]));
            for (std::size_t si = 0; si < n_seed; ++si) {
                const auto& r = acc.cell[di][si];
                if (!r.ok)
                    report.failures.push_back(method + " delta=" +
                                              format_double(run_spec.noise_levels[di]) +
                                              " seed=" + std::to_string(run_spec.seeds[si]) +
                                              ": " + r.failure);
                if (!r.history.rows.empty()) report.histories.push_back(r.history);
            }
        }
    };
    if (with_lm) collect("lm", lm_acc);
    if (with_direct) collect("direct", direct_acc);

    // log-log fits on the positive-noise rows of the primary method
    const std::string primary = with_lm ? "lm" : "direct";
    std::vector<std::pair<double, double>> loc_pairs, amp_pairs;
    for (const auto& row : report.rows) {
        if (row.method != primary || !(row.delta > 0.0) || row.n_ok == 0) continue;
        if (row.loc_mean > 0.0) loc_pairs.emplace_back(row.delta, row.loc_mean);
        if (std::isfinite(row.amp_mean) && row.amp_mean > 0.0)
            amp_pairs.emplace_back(row.delta, row.amp_mean);
    }
    if (loc_pairs.size() >= 3) report.location_fit = rate_fit(loc_pairs);
    if (amp_pairs.size() >= 3) report.amplitude_fit = rate_fit(amp_pairs);

    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

// ---------------------------------------------------------------------------
// Outputs
// ---------------------------------------------------------------------------

namespace {

const char* kErrorsHeader =
    "delta,loc_mean,loc_stderr,amp_mean,amp_stderr,amp_l2rel_mean,n_ok,method";

}  // namespace

void emit_outputs(const ErrorReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    {
        std::ofstream out(out_dir / "errors.csv");
        if (!out) throw IoError("cannot write errors.csv");
        out << kErrorsHeader << '\n';
        for (const auto& r : report.rows)
            out << format_double(r.delta) << ',' << format_double(r.loc_mean) << ','
                << format_double(r.loc_stderr) << ',' << format_double(r.amp_mean) << ','
                << format_double(r.amp_stderr) << ',' << format_double(r.amp_l2rel_mean) << ','
                << r.n_ok << ',' << r.method << '\n';
    }
    {
        std::vector<std::vector<double>> rows;
        for (const auto& h : report.histories)
            for (const auto& row : h.rows)
                rows.push_back({h.delta, static_cast<double>(h.seed),
                                static_cast<double>(row.iteration), row.residual, row.loc_error,
                                row.amp_error, row.beta_x, row.beta_lambda});
        write_csv(out_dir / "history.csv",
                  "delta,seed,iteration,residual,loc_error,amp_error,beta_x,beta_lambda", rows);
    }
    {
        std::ofstream out(out_dir / "rates.csv");
        if (!out) throw IoError("cannot write rates.csv");
        out << "quantity,slope,intercept,r_squared\n";
        out << "location," << format_double(report.location_fit.slope) << ','
            << format_double(report.location_fit.intercept) << ','
            << format_double(report.location_fit.r_squared) << '\n';
        out << "amplitude," << format_double(report.amplitude_fit.slope) << ','
            << format_double(report.amplitude_fit.intercept) << ','
            << format_double(report.amplitude_fit.r_squared) << '\n';
    }
    {
        std::ofstream out(out_dir / "plot.gp");
        if (!out) throw IoError("cannot write plot.gp");
        out << "# gnuplot script: reconstruction overview (" << report.example << ")\n"
            << "set datafile separator ','\n"
            << "set terminal pngcairo size 1500,500\n"
            << "set output 'report.png'\n"
            << "set multiplot layout 1,3\n"
            << "set key top right\n"
            << "set title 'recovered amplitude (first run)'\n"
            << "# amplitude overlay written by the CLI when amplitude series are emitted\n"
            << "plot 'history.csv' every ::1 using 3:6 with lines title 'amp L1 error'\n"
            << "set title 'error vs iteration'\n"
            << "set logscale y\n"
            << "plot 'history.csv' every ::1 using 3:5 with lines title 'location', \\\n"
            << "     'history.csv' every ::1 using 3:6 with lines title 'amplitude'\n"
            << "set title 'error vs noise level'\n"
            << "set logscale xy\n"
            << "plot 'errors.csv' every ::1 using 1:2 with linespoints title 'location', \\\n"
            << "     'errors.csv' every ::1 using 1:4 with linespoints title 'amplitude'\n"
            << "unset multiplot\n";
    }
    {
        nlohmann::json manifest;
        manifest["example"] = report.example;
        manifest["resolution_scale"] = report.resolution_scale;
        manifest["noise_levels"] = report.deltas;
        manifest["seeds"] = report.seeds;
        manifest["wall_time_seconds"] = report.wall_time_seconds;
        manifest["kernel_backend"] = kernels::backend_name();
        manifest["version"] = "0.1.0";
        manifest["failures"] = report.failures;
        manifest["rates"] = {
            {"location",
             {{"slope", report.location_fit.slope},
              {"intercept", report.location_fit.intercept},
              {"r_squared", report.location_fit.r_squared}}},
            {"amplitude",
             {{"slope", report.amplitude_fit.slope},
              {"intercept", report.amplitude_fit.intercept},
              {"r_squared", report.amplitude_fit.r_squared}}}};
        std::ofstream out(out_dir / "manifest.json");
        if (!out) throw IoError("cannot write manifest.json");
        out << manifest.dump(2) << '\n';
    }
}

std::vector<ErrorRow> parse_errors_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty errors.csv");
    if (line != kErrorsHeader) throw IoError("errors.csv: unexpected header");
    std::vector<ErrorRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ErrorRow row;
        std::istringstream ss(line);
        std::string cell;
        auto next = [&]() {
            if (!std::getline(ss, cell, ',')) throw IoError("errors.csv: short row");
            return cell;
        };
        row.delta = std::stod(next());
        row.loc_mean = std::stod(next());
        row.loc_stderr = std::stod(next());
        row.amp_mean = std::stod(next());
        row.amp_stderr = std::stod(next());
        row.amp_l2rel_mean = std::stod(next());
        row.n_ok = std::stoi(next());
        row.method = next();
        rows.push_back(row);
    }
    return rows;
}

}  // namespace adsrc
