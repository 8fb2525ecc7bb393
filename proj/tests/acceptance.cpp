// Acceptance suite: one pass/fail line per criterion, exit code 0 only if
// every selected criterion holds. --criterion N or N-M selects a subset;
// --full runs the noise sweeps at the reference grids instead of the
// quarter-resolution smoke variant.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "adsrc/direct_recovery.hpp"
#include "adsrc/harness.hpp"
#include "adsrc/kernels.hpp"
#include "adsrc/quadrature.hpp"

using namespace adsrc;
using Complex = std::complex<double>;

namespace {

struct Gate {
    int selected_lo = 1, selected_hi = 11;
    bool full = false;
    int n_pass = 0, n_fail = 0;

    bool wants(int k) const { return k >= selected_lo && k <= selected_hi; }

    void report(int k, bool pass, const std::string& detail) {
        std::cout << "criterion " << k << ": " << (pass ? "PASS" : "FAIL") << " - " << detail
                  << std::endl;
        (pass ? n_pass : n_fail) += 1;
    }
};

double now_seconds(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

SourceModel example_sources(const ExampleSetup& setup, const SpaceMesh& mesh,
                            const TimeGrid& grid) {
    std::vector<double> times(grid.n_steps + 1);
    for (int n = 0; n <= grid.n_steps; ++n) times[n] = grid.time(n);
    std::vector<std::vector<double>> series;
    for (const auto& amp : setup.amplitudes) {
        std::vector<double> s(grid.n_steps + 1);
        for (int n = 0; n <= grid.n_steps; ++n) s[n] = amp.value(times[n]);
        series.push_back(std::move(s));
    }
    return make_source_model(setup.locations, times, series, setup.config, mesh, false);
}

// --------------------------------------------------------------------------
// 1. forward solver versus the eigen-expansion oracle, with refinement order
// --------------------------------------------------------------------------
void criterion_1(Gate& gate) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto setup = example_setup(ExampleId::ex1i);
    double worst_solve = 0.0;
    std::vector<double> errors;
    for (int level = 0; level < 3; ++level) {
        const double h = 1e-3 / (1 << level);
        const auto mesh = build_interval_mesh(1.0, h);
        const auto grid = make_time_grid(0.0, 2.0, h);
        const auto sources = example_sources(setup, mesh, grid);
        const auto solve_start = std::chrono::steady_clock::now();
        const auto trace = simulate(setup.config, mesh, sources, grid);
        worst_solve = std::max(worst_solve, now_seconds(solve_start));

        const auto left = spectral_reference_series(setup.config, sources, {0.0, 0.0}, grid, 2000);
        const auto right = spectral_reference_series(setup.config, sources, {1.0, 0.0}, grid, 2000);
        const auto wt = trapezoid_weights(grid.n_steps + 1, grid.dt());
        double num = 0.0, den = 0.0;
        for (int n = 0; n <= grid.n_steps; ++n) {
            const double dl = trace.values[n][0] - left[n];
            const double dr = trace.values[n][1] - right[n];
            num += wt[n] * (dl * dl + dr * dr);
            den += wt[n] * (left[n] * left[n] + right[n] * right[n]);
        }
        errors.push_back(std::sqrt(num / den));
    }
    const double order1 = std::log2(errors[0] / errors[1]);
    const double order2 = std::log2(errors[1] / errors[2]);
    const bool pass = errors[0] <= 0.01 && errors[1] < errors[0] && errors[2] < errors[1] &&
                      order1 >= 0.8 && order2 >= 0.8 && worst_solve <= 60.0;
    gate.report(1, pass,
                "trace vs oracle rel L2 = " + fmt(errors[0]) + " (<= 0.01), refinement orders " +
                    fmt(order1) + ", " + fmt(order2) + " (>= 0.8), slowest solve " +
                    fmt(worst_solve) + " s (<= 60); total " + fmt(now_seconds(t0)) + " s");
}

// --------------------------------------------------------------------------
// 2. discrete mass balance for pure diffusion in 2D
// --------------------------------------------------------------------------
void criterion_2(Gate& gate) {
    ProblemConfig config;
    config.dim = 2;
    config.domain_length = 1.0;
    config.reaction = 0.0;
    config.horizon = 1.0;
    config.support_end = 0.5;
    config.obs_start = 0.75;
    const auto mesh = build_square_mesh(1.0, 0.05);
    const auto grid = make_time_grid(0.0, 1.0, 0.05);
    std::vector<double> times(grid.n_steps + 1), series(grid.n_steps + 1);
    for (int n = 0; n <= grid.n_steps; ++n) {
        times[n] = grid.time(n);
        series[n] = 1.0 + 0.5 * std::sin(9.0 * times[n]);
    }
    const auto sources = make_source_model({{0.5, 0.5}}, times, {series}, config, mesh, false);
    SimulateOptions opts;
    opts.keep_full_field = true;
    const auto trace = simulate(config, mesh, sources, grid, opts);

    const auto ops = assemble_operators(mesh, config.advection, config.reaction);
    const std::vector<double> ones(mesh.n_nodes(), 1.0);
    double worst = 0.0;
    for (int n = 0; n < grid.n_steps; ++n) {
        const auto m0 = spmv(ops.mass, trace.full_field[n]);
        const auto m1 = spmv(ops.mass, trace.full_field[n + 1]);
        const double before = kernels::dot(ones.data(), m0.data(), ones.size());
        const double after = kernels::dot(ones.data(), m1.data(), ones.size());
        const double injected = grid.dt() * amplitude_at(sources, 0, grid.time(n + 1));
        worst = std::max(worst, std::abs(after - before - injected) /
                                    std::max(1.0, std::abs(after)));
    }
    gate.report(2, worst <= 1e-10,
                "worst relative mass-balance defect " + fmt(worst) + " (<= 1e-10)");
}

// --------------------------------------------------------------------------
// 3. adjoint exactness on the reference 2D inversion grid
// --------------------------------------------------------------------------
void criterion_3(Gate& gate) {
    const auto setup = example_setup(ExampleId::ex2i);
    const auto mesh = build_square_mesh(1.0, setup.dx_inv());
    const auto grid = make_time_grid(0.0, 2.0, setup.dx_inv());
    const LmWorkspace ws(setup.config, mesh, grid);

    std::vector<double> lambda(grid.n_steps + 1);
    for (int n = 0; n <= grid.n_steps; ++n)
        lambda[n] = setup.amplitudes[0].value(grid.time(n));
    LmParams params{{{0.5, 0.5}}, {lambda}};

    const std::size_t res_size = (grid.n_steps + 1) * mesh.boundary_nodes.size();
    const std::size_t lam_size = grid.n_steps + 1;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    auto rand_vec = [&](std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) x = dist(rng);
        return v;
    };

    double worst_dot = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto dl = rand_vec(lam_size);
        const auto r = rand_vec(res_size);
        const auto jd = ws.apply_jacobian_lambda(params, {dl});
        const auto jtr = ws.apply_jacobian_lambda_adjoint(params, r);
        const double lhs = kernels::dot(jd.data(), r.data(), res_size);
        const double rhs = kernels::dot(dl.data(), jtr[0].data(), lam_size);
        worst_dot = std::max(worst_dot, std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300));
    }

    // gradient of the misfit against central differences
    const auto data = simulate(setup.config, mesh, example_sources(setup, mesh, grid), grid);
    LmParams off{{{0.45, 0.45}}, {lambda}};
    for (auto& v : off.amplitudes[0]) v *= 0.9;
    const auto r0 = ws.residual(off, data);
    const auto grad = ws.apply_jacobian_lambda_adjoint(off, r0);
    auto misfit = [&](const LmParams& q) {
        const auto rr = ws.residual(q, data);
        return 0.5 * kernels::dot(rr.data(), rr.data(), rr.size());
    };
    double worst_grad = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        const auto dir = rand_vec(lam_size);
        const double gdir = kernels::dot(grad[0].data(), dir.data(), lam_size);
        for (double step : {1e-4, 1e-5}) {
            LmParams qp = off, qm = off;
            for (std::size_t i = 0; i < lam_size; ++i) {
                qp.amplitudes[0][i] += step * dir[i];
                qm.amplitudes[0][i] -= step * dir[i];
            }
            const double fd = (misfit(qp) - misfit(qm)) / (2.0 * step);
            worst_grad = std::max(worst_grad, std::abs(fd - gdir) / std::abs(gdir));
        }
    }
    const bool pass = worst_dot <= 1e-8 && worst_grad <= 1e-4;
    gate.report(3, pass,
                "dot-test worst rel " + fmt(worst_dot) + " (<= 1e-8), gradient-vs-FD worst rel " +
                    fmt(worst_grad) + " (<= 1e-4)");
}

// --------------------------------------------------------------------------
// 4. Hankel-pencil recovery: exact moments and mesh data
// --------------------------------------------------------------------------
void criterion_4(Gate& gate) {
    // synthetic part
    const Complex z1(0.25, 0.25), z2(0.75, 0.75);
    const Complex c1(0.1, 0.0), c2(0.2, 0.0);
    MomentSequence synth;
    for (int k = 0; k < 4; ++k)
        synth.values.push_back(c1 * std::pow(z1, k) + c2 * std::pow(z2, k));
    const auto exact = prony_recover(synth, 2);
    const double synth_err =
        std::max({std::abs(exact.nodes[0] - z1), std::abs(exact.nodes[1] - z2),
                  std::abs(exact.weights[0] - c1), std::abs(exact.weights[1] - c2)});

    // mesh part at the reference grids (fine data, coarse inversion)
    const auto setup = example_setup(ExampleId::direct2d);
    const auto fine_mesh = build_square_mesh(1.0, setup.dx_fine());
    const auto fine_grid = make_time_grid(0.0, 2.0, setup.dx_fine());
    const auto inv_mesh = build_square_mesh(1.0, setup.dx_inv());
    const auto inv_grid = make_time_grid(0.0, 2.0, setup.dx_inv());
    const auto fine = simulate(setup.config, fine_mesh,
                               example_sources(setup, fine_mesh, fine_grid), fine_grid);
    const auto data = restrict_trace(fine, fine_mesh, inv_mesh, inv_grid);
    const auto moments = harmonic_moments(data, setup.config, inv_mesh, 4);
    const auto prony = prony_recover(moments, 2);
    const double h_inv = setup.dx_inv();
    const double mesh_err = std::max(std::abs(prony.nodes[0] - z1), std::abs(prony.nodes[1] - z2));

    const bool pass = synth_err <= 1e-10 && mesh_err <= 3.0 * h_inv;
    gate.report(4, pass,
                "synthetic recovery error " + fmt(synth_err) + " (<= 1e-10), mesh-data location error " +
                    fmt(mesh_err) + " (<= 3h = " + fmt(3.0 * h_inv) + ")");
}

// --------------------------------------------------------------------------
// 5. reciprocity-gap identity with refinement order
// --------------------------------------------------------------------------
void criterion_5(Gate& gate) {
    const auto setup = example_setup(ExampleId::ex1i);
    const double exact = 0.1 * (1.0 - std::exp(-10.0)) * std::exp(0.5);
    std::vector<double> errors;
    for (double h : {4e-3, 2e-3, 1e-3}) {
        const auto mesh = build_interval_mesh(1.0, h);
        const auto grid = make_time_grid(0.0, 2.0, h);
        const auto trace = simulate(setup.config, mesh, example_sources(setup, mesh, grid), grid);
        const auto gap =
            reciprocity_gap(trace, make_exp_probe(setup.config, {1.0, 0.0}), setup.config, mesh);
        errors.push_back(std::abs(gap.real() - exact));
    }
    const double rel_fine = errors[2] / exact;
    const double order1 = std::log2(errors[0] / errors[1]);
    const double order2 = std::log2(errors[1] / errors[2]);
    const bool pass = rel_fine <= 0.01 && errors[1] < errors[0] && errors[2] < errors[1] &&
                      order1 >= 0.8 && order2 >= 0.8;
    gate.report(5, pass,
                "fine-grid relative gap error " + fmt(rel_fine) + " (<= 0.01), orders " +
                    fmt(order1) + ", " + fmt(order2) + " (>= 0.8)");
}

// --------------------------------------------------------------------------
// 6. Laplace-domain boundary identity at real abscissas
// --------------------------------------------------------------------------
void criterion_6(Gate& gate) {
    const auto setup = example_setup(ExampleId::ex1i);
    const double h = 1e-3;
    const auto mesh = build_interval_mesh(1.0, h);
    const auto grid = make_time_grid(0.0, 2.0, h);
    const auto trace = simulate(setup.config, mesh, example_sources(setup, mesh, grid), grid);
    const double t_ext = std::log(1e8) / setup.config.reaction;
    const int n_ext = static_cast<int>(std::ceil(t_ext / 0.01));
    const TimeGrid ext_grid{2.0, 2.0 + 0.01 * n_ext, n_ext};
    const auto ext = extend_in_time(setup.config, mesh, trace.final_snapshot,
                                    ext_grid.t_end - ext_grid.t0, ext_grid);

    double worst = 0.0;
    bool truncated = false;
    for (int k = 0; k < 5; ++k) {
        const Complex z(2.0 + k, 0.0);
        const auto probe = make_laplace_probe(setup.config, {1.0, 0.0}, z, {0.5, 0.0});
        const auto f = laplace_boundary_functional(trace, ext, probe, setup.config, mesh);
        const Complex hat = 0.5 * (1.0 - std::exp(-(z + 5.0) * 2.0)) / (z + 5.0);
        worst = std::max(worst, std::abs(f.value - hat) / std::abs(hat));
        truncated = truncated || f.tail_truncated;
    }
    gate.report(6, worst <= 0.02 && !truncated,
                "worst relative transform error over 5 abscissas " + fmt(worst) + " (<= 0.02)");
}

// --------------------------------------------------------------------------
// 7. Levenberg-Marquardt reproduction of the 1D benchmark
// --------------------------------------------------------------------------
void criterion_7(Gate& gate) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentSpec spec;
    spec.example = ExampleId::ex1i;
    spec.noise_levels = {0.005};
    spec.n_runs = 10;
    spec.resolution_scale = 1.0;
    spec.method = InversionMethod::lm;
    spec.threads = 2;
    const auto report = run_example(spec);

    bool monotone = true;
    for (const auto& h : report.histories) {
        const double slack = 1e-12 * std::max(1.0, h.rows.front().residual);
        for (std::size_t k = 1; k < h.rows.size(); ++k)
            monotone = monotone && h.rows[k].residual <= h.rows[k - 1].residual + slack;
    }
    // noise-free consistency at the same grids: one run suffices (no seed enters)
    ExperimentSpec clean = spec;
    clean.noise_levels = {0.0};
    clean.n_runs = 1;
    clean.seeds = {1};
    LmSchedule capped = example_setup(ExampleId::ex1i).lm;
    capped.max_iters = 60;
    clean.lm_override = capped;
    const auto clean_report = run_example(clean);
    const double h_inv = example_setup(ExampleId::ex1i).dx_inv();
    const double clean_loc = clean_report.rows.at(0).loc_mean;

    const double wall = now_seconds(t0);
    const auto& row = report.rows.at(0);
    const bool pass = report.failures.empty() && row.n_ok == 10 && row.loc_mean <= 1e-2 &&
                      row.amp_l2rel_mean <= 0.15 && monotone && clean_loc <= 2.0 * h_inv &&
                      wall <= 600.0;
    gate.report(7, pass,
                "mean location L1 error " + fmt(row.loc_mean) + " (<= 0.01), amplitude rel L2 " +
                    fmt(row.amp_l2rel_mean) + " (<= 0.15), residuals monotone: " +
                    (monotone ? "yes" : "no") + ", noise-free location error " + fmt(clean_loc) +
                    " (<= 2h = " + fmt(2.0 * h_inv) + "), wall " + fmt(wall) + " s (<= 600)");
}

// --------------------------------------------------------------------------
// 8-10. noise sweeps: rates, Hoelder degradation, stability ordering
// --------------------------------------------------------------------------
struct SweepResults {
    ErrorReport ex2i, ex3;
    std::vector<ErrorReport> all;  // every example swept (ordering criterion)
    double wall = 0.0;
};

SweepResults run_sweeps(bool full) {
    const auto t0 = std::chrono::steady_clock::now();
    SweepResults out;
    ExperimentSpec spec;
    spec.noise_levels = {0.00125, 0.0025, 0.005, 0.01, 0.02};
    spec.n_runs = 10;
    spec.resolution_scale = full ? 1.0 : 4.0;
    spec.method = InversionMethod::lm;
    spec.threads = 2;

    // the smoke gate sweeps every benchmark example; the reference-grid run
    // is limited to the three the rate criteria pin, to stay inside budget
    std::vector<ExampleId> ids{ExampleId::ex1i, ExampleId::ex2i, ExampleId::ex3};
    if (!full) {
        ids.push_back(ExampleId::ex1ii);
        ids.push_back(ExampleId::ex2ii);
        ids.push_back(ExampleId::ex4);
    }
    for (const auto id : ids) {
        spec.example = id;
        auto report = run_example(spec);
        if (id == ExampleId::ex2i) out.ex2i = report;
        if (id == ExampleId::ex3) out.ex3 = report;
        out.all.push_back(std::move(report));
    }
    out.wall = now_seconds(t0);
    return out;
}

void criteria_8_to_10(Gate& gate) {
    const bool full = gate.full;
    const auto sweeps = run_sweeps(full);

    if (gate.wants(8)) {
        const double lo = full ? 0.7 : 0.5;
        const double hi = full ? 1.3 : 1.5;
        const double budget = full ? 7200.0 : 600.0;
        const double slope = sweeps.ex2i.location_fit.slope;
        const bool pass = slope >= lo && slope <= hi && sweeps.ex2i.failures.empty() &&
                          sweeps.wall <= budget;
        gate.report(8, pass,
                    std::string(full ? "reference" : "quarter-resolution") +
                        " location slope " + fmt(slope) + " (in [" + fmt(lo) + ", " + fmt(hi) +
                        "]), sweep wall " + fmt(sweeps.wall) + " s (<= " + fmt(budget) + ")");
    }
    if (gate.wants(9)) {
        const double slope3 = sweeps.ex3.location_fit.slope;
        const double slope2 = sweeps.ex2i.location_fit.slope;
        const bool pass =
            slope3 >= 0.2 && slope3 <= 0.8 && slope3 < slope2 && sweeps.ex3.failures.empty();
        gate.report(9, pass,
                    "two-source location slope " + fmt(slope3) +
                        " (in [0.2, 0.8]) vs single-source " + fmt(slope2) + " (strictly smaller)");
    }
    if (gate.wants(10)) {
        bool pass = true;
        std::string detail;
        for (const auto& rep : sweeps.all) {
            const double ls = rep.location_fit.slope;
            const double as = rep.amplitude_fit.slope;
            pass = pass && as < ls;
            // growth-rate register: the amplitude error grows strictly slower
            // across the sweep than the location error does
            const auto& first = rep.rows.front();
            const auto& last = rep.rows.back();
            const double amp_growth = last.amp_mean / first.amp_mean;
            const double loc_growth = last.loc_mean / first.loc_mean;
            pass = pass && amp_growth < loc_growth;
            detail += rep.example + ": amp slope " + fmt(as) + " < loc slope " + fmt(ls) +
                      ", growth " + fmt(amp_growth) + " < " + fmt(loc_growth) + "; ";
        }
        gate.report(10, pass, detail);
    }
}

// --------------------------------------------------------------------------
// 11. band-limited amplitude inversion on analytic transform data
// --------------------------------------------------------------------------
void criterion_11(Gate& gate) {
    const double sigma = 2.0;
    auto hat = [&](double tau) {
        const Complex z(sigma, tau);
        return 0.5 * (1.0 - std::exp(-(z + 5.0) * 2.0)) / (z + 5.0);
    };
    auto lambda = [](double t) { return 0.5 * std::exp(-5.0 * t); };
    const TimeGrid grid{0.0, 2.0, 2000};

    auto window_error = [&](double radius) {
        const int n_freq = 1201;
        std::vector<double> freqs(n_freq);
        std::vector<Complex> values(n_freq);
        const double dtau = 2.0 * radius / (n_freq - 1);
        for (int j = 0; j < n_freq; ++j) {
            freqs[j] = -radius + j * dtau;
            values[j] = hat(freqs[j]);
        }
        const auto rec = invert_band_limited(freqs, values, sigma, grid);
        double num = 0.0, den = 0.0;
        for (int n = 0; n <= grid.n_steps; ++n) {
            const double t = grid.time(n);
            if (t < 0.05 || t > 1.5) continue;
            const double d = rec[n] - lambda(t);
            num += d * d;
            den += lambda(t) * lambda(t);
        }
        return std::sqrt(num / den);
    };

    bool monotone = true;
    double prev = 1e300, at60 = 0.0;
    for (double radius : {15.0, 30.0, 60.0, 120.0}) {
        const double err = window_error(radius);
        monotone = monotone && err < prev;
        prev = err;
        if (radius == 60.0) at60 = err;
    }
    const bool pass = monotone && at60 <= 0.05;
    gate.report(11, pass,
                "error monotone in R: " + std::string(monotone ? "yes" : "no") +
                    "; windowed rel L2 at R=60 is " + fmt(at60) +
                    " (<= 0.05 required; the t=0 jump of the amplitude caps band-limited "
                    "reconstruction at O(1/R), so this level is not attainable with the "
                    "specified inversion formula)");
}

}  // namespace

int main(int argc, char** argv) {
    Gate gate;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--full") == 0) {
            gate.full = true;
        } else if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            const std::string arg = argv[++i];
            const auto dash = arg.find('-');
            if (dash == std::string::npos) {
                gate.selected_lo = gate.selected_hi = std::stoi(arg);
            } else {
                gate.selected_lo = std::stoi(arg.substr(0, dash));
                gate.selected_hi = std::stoi(arg.substr(dash + 1));
            }
        } else {
            std::cerr << "usage: acceptance [--criterion N | --criterion N-M] [--full]\n";
            return 2;
        }
    }

    try {
        if (gate.wants(1)) criterion_1(gate);
        if (gate.wants(2)) criterion_2(gate);
        if (gate.wants(3)) criterion_3(gate);
        if (gate.wants(4)) criterion_4(gate);
        if (gate.wants(5)) criterion_5(gate);
        if (gate.wants(6)) criterion_6(gate);
        if (gate.wants(7)) criterion_7(gate);
        if (gate.wants(8) || gate.wants(9) || gate.wants(10)) criteria_8_to_10(gate);
        if (gate.wants(11)) criterion_11(gate);
    } catch (const std::exception& e) {
        std::cout << "acceptance run failed with an exception: " << e.what() << std::endl;
        return 1;
    }

    std::cout << gate.n_pass << " passed, " << gate.n_fail << " failed" << std::endl;
    return gate.n_fail == 0 ? 0 : 1;
}
