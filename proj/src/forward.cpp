#include "adsrc/forward.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "adsrc/errors.hpp"
#include "adsrc/kernels.hpp"
#include "adsrc/quadrature.hpp"

namespace adsrc {

TimeGrid make_time_grid(double t0, double t_end, double dt) {
    if (!(t_end > t0) || !(dt > 0.0)) throw ConfigError("time grid: need t_end > t0 and dt > 0");
    const double span = t_end - t0;
    const int n = static_cast<int>(std::lround(span / dt));
    if (n < 1 || std::abs(n * dt - span) > 1e-12 * span)
        throw ConfigError("time grid: dt does not divide the horizon");
    return TimeGrid{t0, t_end, n};
}

double BoundaryTrace::sup_norm() const {
    double s = 0.0;
    for (const auto& row : values)
        for (double v : row) s = std::max(s, std::abs(v));
    return s;
}

// ---------------------------------------------------------------------------
// Backward Euler stepping with a per-run cached factorization
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kBandedStorageCap = 256u << 20;  // bytes

class StepSolver {
public:
    StepSolver(const SparseMatrix& system, const ProblemConfig& config,
               const std::optional<SolveOptions>& user) {
        if (user) {
            opts_ = *user;
            if (opts_.method == SolveMethod::direct_lu)
                lu_ = std::make_unique<BandedLu>(system);
            else
                matrix_ = &system;
            return;
        }
        // constant system matrix: a banded factorization paid once wins when it fits
        if (BandedLu::predicted_bytes(system) <= kBandedStorageCap) {
            lu_ = std::make_unique<BandedLu>(system);
        } else {
            opts_ = default_solve_options(config.dim, config.has_advection());
            matrix_ = &system;
        }
    }

    std::vector<double> solve(std::span<const double> rhs) const {
        if (lu_) return lu_->solve(rhs);
        return solve_linear(*matrix_, rhs, opts_);
    }

private:
    std::unique_ptr<BandedLu> lu_;
    const SparseMatrix* matrix_ = nullptr;
    SolveOptions opts_;
};

std::vector<double> boundary_row(const std::vector<int>& index, std::span<const double> field) {
    std::vector<double> row(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) row[i] = field[index[i]];
    return row;
}

BoundaryTrace march(const ProblemConfig& config, const SpaceMesh& mesh, const TimeGrid& grid,
                    std::vector<double> state,
                    const std::function<void(int, std::vector<double>&)>& add_step_load,
                    const SimulateOptions& options) {
    const auto ops = assemble_operators(mesh, config.advection, config.reaction);
    const SparseMatrix system = add_scaled(ops.mass, ops.spatial, grid.dt());
    const StepSolver solver(system, config, options.solver);

    BoundaryTrace trace;
    trace.grid = grid;
    trace.boundary_index = mesh.boundary_nodes;
    trace.values.reserve(grid.n_steps + 1);
    trace.values.push_back(boundary_row(trace.boundary_index, state));
    if (options.keep_full_field) trace.full_field.push_back(state);

    for (int n = 1; n <= grid.n_steps; ++n) {
        auto rhs = spmv(ops.mass, state);
        add_step_load(n, rhs);
        state = solver.solve(rhs);
        trace.values.push_back(boundary_row(trace.boundary_index, state));
        if (options.keep_full_field) trace.full_field.push_back(state);
    }
    trace.final_snapshot = std::move(state);
    return trace;
}

}  // namespace

BoundaryTrace simulate(const ProblemConfig& config, const SpaceMesh& mesh,
                       const SourceModel& sources, const TimeGrid& grid,
                       const SimulateOptions& options) {
    validate(config);
    if (mesh.dim != config.dim) throw ConfigError("simulate: mesh/config dimension mismatch");

    std::vector<std::vector<double>> loads;
    loads.reserve(sources.n_sources);
    for (const auto& x : sources.locations) loads.push_back(point_source_load(mesh, x));

    const double dt = grid.dt();
    auto add_load = [&](int n, std::vector<double>& rhs) {
        const double t = grid.time(n);
        for (int k = 0; k < sources.n_sources; ++k) {
            const double a = dt * amplitude_at(sources, k, t);
            if (a != 0.0) kernels::axpy(a, loads[k].data(), rhs.data(), rhs.size());
        }
    };
    return march(config, mesh, grid, initial_values(config, mesh), add_load, options);
}

BoundaryTrace extend_in_time(const ProblemConfig& config, const SpaceMesh& mesh,
                             std::span<const double> snapshot, double t_ext,
                             const TimeGrid& grid_ext, const SimulateOptions& options) {
    if (static_cast<int>(snapshot.size()) != mesh.n_nodes())
        throw std::invalid_argument("extend_in_time: snapshot size mismatch");
    if (std::abs((grid_ext.t_end - grid_ext.t0) - t_ext) > 1e-12 * std::max(1.0, t_ext))
        throw ConfigError("extend_in_time: grid span differs from t_ext");
    auto no_load = [](int, std::vector<double>&) {};
    return march(config, mesh, grid_ext, std::vector<double>(snapshot.begin(), snapshot.end()),
                 no_load, options);
}

// ---------------------------------------------------------------------------
// Spectral oracle (A = 0, box domain, Neumann eigenpairs)
// ---------------------------------------------------------------------------

namespace {

struct Mode {
    double eigenvalue;  // rho_m (+ rho_n in 2D)
    double weight_eval;  // phi(x_eval)
    std::vector<double> weight_src;  // phi(x_k) per source
};

std::vector<Mode> build_modes(const ProblemConfig& config, const SourceModel& sources,
                              const Point& x_eval, int n_modes) {
    const double L = config.domain_length;
    auto axis_phi = [&](int m, double x) {
        const double norm = m == 0 ? std::sqrt(1.0 / L) : std::sqrt(2.0 / L);
        return norm * std::cos(m * std::numbers::pi * x / L);
    };
    auto axis_rho = [&](int m) {
        const double w = m * std::numbers::pi / L;
        return w * w;
    };

    std::vector<Mode> modes;
    if (config.dim == 1) {
        modes.reserve(n_modes);
        for (int m = 0; m < n_modes; ++m) {
            Mode mode;
            mode.eigenvalue = axis_rho(m);
            mode.weight_eval = axis_phi(m, x_eval[0]);
            for (const auto& xk : sources.locations) mode.weight_src.push_back(axis_phi(m, xk[0]));
            modes.push_back(std::move(mode));
        }
    } else {
        modes.reserve(static_cast<std::size_t>(n_modes) * n_modes);
        for (int mx = 0; mx < n_modes; ++mx)
            for (int my = 0; my < n_modes; ++my) {
                Mode mode;
                mode.eigenvalue = axis_rho(mx) + axis_rho(my);
                mode.weight_eval = axis_phi(mx, x_eval[0]) * axis_phi(my, x_eval[1]);
                for (const auto& xk : sources.locations)
                    mode.weight_src.push_back(axis_phi(mx, xk[0]) * axis_phi(my, xk[1]));
                modes.push_back(std::move(mode));
            }
    }
    return modes;
}

void require_spectral_preconditions(const ProblemConfig& config) {
    if (config.has_advection())
        throw std::invalid_argument("spectral reference: only valid for A = 0");
    if (!config.initial_condition.empty())
        throw std::invalid_argument("spectral reference: zero initial condition only");
}

}  // namespace

double spectral_reference(const ProblemConfig& config, const SourceModel& sources,
                          const Point& x_eval, double t, int n_modes) {
    require_spectral_preconditions(config);
    if (t < 0.0) throw std::invalid_argument("spectral reference: t must be >= 0");
    if (t == 0.0) return 0.0;
    const auto modes = build_modes(config, sources, x_eval, n_modes);

    double value = 0.0;
    for (const auto& mode : modes) {
        const double a = mode.eigenvalue + config.reaction;
        for (int k = 0; k < sources.n_sources; ++k) {
            const double coeff = mode.weight_eval * mode.weight_src[k];
            if (coeff == 0.0) continue;
            const auto integrand = [&](double s) {
                return std::exp(-a * (t - s)) * amplitude_at(sources, k, s);
            };
            value += coeff * integrate_adaptive(integrand, 0.0, t, 1e-10);
        }
    }
    return value;
}

namespace {

// int_0^1 e^{-x u} du and int_0^1 e^{-x u} u du, stable near x = 0
double conv_weight_const(double x) {
    if (x < 1e-4) return 1.0 - 0.5 * x + x * x / 6.0;
    return -std::expm1(-x) / x;
}
double conv_weight_linear(double x) {
    if (x < 1e-3) return 0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0;
    return (-std::expm1(-x) - x * std::exp(-x)) / (x * x);
}

// exact convolution increment over [t0, t1] of e^{-a (t1-s)} against the
// piecewise-linear amplitude, split at its sample points
double convolution_increment(const SourceModel& sources, int k, double a, double t0, double t1) {
    std::vector<double> cuts{t0};
    for (double ts : sources.amplitude_times)
        if (ts > t0 + 1e-15 && ts < t1 - 1e-15) cuts.push_back(ts);
    cuts.push_back(t1);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a0 = cuts[i], a1 = cuts[i + 1];
        const double len = a1 - a0;
        if (len <= 0.0) continue;
        const double l0 = amplitude_at(sources, k, a0);
        const double l1 = amplitude_at(sources, k, a1);
        // substitute s = a1 - len*u, then weight by the remaining decay to t1
        const double x = a * len;
        const double incr =
            len * (l1 * conv_weight_const(x) + (l0 - l1) * conv_weight_linear(x));
        total += std::exp(-a * (t1 - a1)) * incr;
    }
    return total;
}

bool step_has_interior_samples(const SourceModel& sources, double t0, double t1) {
    const auto& ts = sources.amplitude_times;
    auto it = std::upper_bound(ts.begin(), ts.end(), t0 + 1e-15);
    return it != ts.end() && *it < t1 - 1e-15;
}

}  // namespace

std::vector<double> spectral_reference_series(const ProblemConfig& config,
                                              const SourceModel& sources, const Point& x_eval,
                                              const TimeGrid& grid, int n_modes) {
    require_spectral_preconditions(config);
    const auto modes = build_modes(config, sources, x_eval, n_modes);
    const double dt = grid.dt();
    const std::size_t n_modes_total = modes.size();

    // per-mode, per-source running convolution I(t^{n+1}) = e^{-a dt} I(t^n) + increment;
    // increments are exact for the piecewise-linear amplitude model. The
    // per-mode decay and convolution weights depend only on a*dt and are
    // hoisted out of the time loop.
    std::vector<double> decay(n_modes_total), w_const(n_modes_total), w_linear(n_modes_total);
    for (std::size_t m = 0; m < n_modes_total; ++m) {
        const double a = modes[m].eigenvalue + config.reaction;
        decay[m] = std::exp(-a * dt);
        w_const[m] = conv_weight_const(a * dt);
        w_linear[m] = conv_weight_linear(a * dt);
    }

    std::vector<double> conv(n_modes_total * sources.n_sources, 0.0);
    std::vector<double> out(grid.n_steps + 1, 0.0);
    for (int n = 1; n <= grid.n_steps; ++n) {
        const double t1 = grid.time(n);
        const double t0 = t1 - dt;
        double value = 0.0;
        for (int k = 0; k < sources.n_sources; ++k) {
            if (step_has_interior_samples(sources, t0, t1)) {
                for (std::size_t m = 0; m < n_modes_total; ++m) {
                    const double a = modes[m].eigenvalue + config.reaction;
                    double& ik = conv[m * sources.n_sources + k];
                    ik = decay[m] * ik + convolution_increment(sources, k, a, t0, t1);
                    value += modes[m].weight_eval * modes[m].weight_src[k] * ik;
                }
            } else {
                const double l0 = amplitude_at(sources, k, t0);
                const double l1 = amplitude_at(sources, k, t1);
                for (std::size_t m = 0; m < n_modes_total; ++m) {
                    double& ik = conv[m * sources.n_sources + k];
                    ik = decay[m] * ik + dt * (l1 * w_const[m] + (l0 - l1) * w_linear[m]);
                    value += modes[m].weight_eval * modes[m].weight_src[k] * ik;
                }
            }
        }
        out[n] = value;
    }
    return out;
}

double freespace_kernel(const ProblemConfig& config, const Point& x_src,
                        const std::function<double(double)>& lambda, const Point& x, double t) {
    const int d = config.dim;
    double dx = x[0] - x_src[0];
    double dy = d == 2 ? x[1] - x_src[1] : 0.0;
    const double dist_sq = dx * dx + dy * dy;
    if (dist_sq == 0.0) throw std::invalid_argument("freespace kernel: x must differ from x_src");
    if (!(t > 0.0)) throw std::invalid_argument("freespace kernel: t must be > 0");

    const double tau0 = -config.advection_norm_sq() / 4.0 - config.reaction;
    const double drift = 0.5 * (config.advection[0] * dx + (d == 2 ? config.advection[1] * dy : 0.0));
    const double prefactor = std::exp(drift) / std::pow(4.0 * std::numbers::pi, 0.5 * d);

    const auto integrand = [&](double r) {
        if (r <= 0.0) return 0.0;
        const double gauss = std::exp(tau0 * r * r - dist_sq / (4.0 * r * r));
        const double amp = lambda(t - r * r);
        return d == 1 ? gauss * amp : gauss * amp / r;
    };
    const double integral = integrate_adaptive(integrand, 0.0, std::sqrt(t), 1e-10);
    return prefactor * 2.0 * integral;
}

// ---------------------------------------------------------------------------
// Fine-to-coarse restriction
// ---------------------------------------------------------------------------

namespace {

int matching_node(const SpaceMesh& fine, const Point& x) {
    const int n = fine.cells_per_side;
    const double h = fine.domain_length / n;
    const int i = static_cast<int>(std::lround(x[0] / h));
    const int j = fine.dim == 2 ? static_cast<int>(std::lround(x[1] / h)) : 0;
    if (i < 0 || i > n || j < 0 || j > n)
        throw ConfigError("restrict_trace: coarse node outside fine mesh");
    const int id = fine.dim == 2 ? j * (n + 1) + i : i;
    const Point& p = fine.node_coords[id];
    if (std::abs(p[0] - x[0]) > 1e-9 || std::abs(p[1] - x[1]) > 1e-9)
        throw ConfigError("restrict_trace: coarse nodes are not a subset of fine nodes");
    return id;
}

}  // namespace

BoundaryTrace restrict_trace(const BoundaryTrace& fine, const SpaceMesh& fine_mesh,
                             const SpaceMesh& coarse_mesh, const TimeGrid& coarse_grid) {
    BoundaryTrace out;
    out.grid = coarse_grid;
    out.boundary_index = coarse_mesh.boundary_nodes;

    // column map: coarse boundary node -> fine trace column
    std::vector<int> col(coarse_mesh.boundary_nodes.size());
    for (std::size_t c = 0; c < col.size(); ++c) {
        const int fine_id = matching_node(fine_mesh, coarse_mesh.node_coords[out.boundary_index[c]]);
        const auto it = std::lower_bound(fine.boundary_index.begin(), fine.boundary_index.end(),
                                         fine_id);
        if (it == fine.boundary_index.end() || *it != fine_id)
            throw ConfigError("restrict_trace: coarse boundary node missing from fine boundary");
        col[c] = static_cast<int>(it - fine.boundary_index.begin());
    }

    const double fdt = fine.grid.dt();
    out.values.reserve(coarse_grid.n_steps + 1);
    for (int n = 0; n <= coarse_grid.n_steps; ++n) {
        const double t = coarse_grid.time(n);
        const double pos = (t - fine.grid.t0) / fdt;
        const int i0 = std::clamp(static_cast<int>(std::floor(pos)), 0, fine.grid.n_steps);
        const int i1 = std::min(i0 + 1, fine.grid.n_steps);
        const double w = std::clamp(pos - i0, 0.0, 1.0);
        std::vector<double> row(col.size());
        for (std::size_t c = 0; c < col.size(); ++c)
            row[c] = (1.0 - w) * fine.values[i0][col[c]] + w * fine.values[i1][col[c]];
        out.values.push_back(std::move(row));
    }

    out.final_snapshot.resize(coarse_mesh.n_nodes());
    for (int i = 0; i < coarse_mesh.n_nodes(); ++i)
        out.final_snapshot[i] = fine.final_snapshot[matching_node(fine_mesh,
                                                                  coarse_mesh.node_coords[i])];
    return out;
}

}  // namespace adsrc
