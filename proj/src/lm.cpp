#include "adsrc/lm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "adsrc/errors.hpp"
#include "adsrc/kernels.hpp"
#include "adsrc/quadrature.hpp"

namespace adsrc {

// ---------------------------------------------------------------------------
// Workspace
// ---------------------------------------------------------------------------

struct LmWorkspace::Impl {
    ProblemConfig config;
    SpaceMesh mesh;
    TimeGrid grid;

    Operators ops;
    SparseMatrix system;       // M + dt S
    BandedLu lu;               // forward factorization
    BandedLu lu_t;             // transpose factorization for the adjoint sweep
    BoundaryQuadrature bq;
    std::vector<double> time_weights;     // trapezoid, n_steps+1
    std::vector<double> sqrt_weights;     // per residual entry (time-major)
    std::vector<double> u0;

    Impl(const ProblemConfig& cfg, const SpaceMesh& msh, const TimeGrid& g)
        : config(cfg),
          mesh(msh),
          grid(g),
          ops(assemble_operators(msh, cfg.advection, cfg.reaction)),
          system(add_scaled(ops.mass, ops.spatial, g.dt())),
          lu(system),
          lu_t(transpose(system)),
          bq(boundary_quadrature(msh)),
          time_weights(trapezoid_weights(g.n_steps + 1, g.dt())),
          u0(initial_values(cfg, msh)) {
        validate(cfg);
        sqrt_weights.resize(static_cast<std::size_t>(g.n_steps + 1) * bq.weights.size());
        for (int n = 0; n <= g.n_steps; ++n)
            for (std::size_t c = 0; c < bq.weights.size(); ++c)
                sqrt_weights[n * bq.weights.size() + c] =
                    std::sqrt(time_weights[n] * bq.weights[c]);
    }

    std::size_t residual_size() const {
        return static_cast<std::size_t>(grid.n_steps + 1) * bq.weights.size();
    }

    /// Weighted boundary trace of one backward Euler sweep.
    std::vector<double> weighted_forward(const std::vector<Point>& locations,
                                         const std::vector<std::vector<double>>& lambdas,
                                         bool with_initial) const {
        const std::size_t nb = bq.weights.size();
        std::vector<std::vector<double>> loads;
        loads.reserve(locations.size());
        for (const auto& x : locations) loads.push_back(point_source_load(mesh, x));

        std::vector<double> out(residual_size(), 0.0);
        std::vector<double> state = with_initial ? u0 : std::vector<double>(mesh.n_nodes(), 0.0);
        for (std::size_t c = 0; c < nb; ++c)
            out[c] = sqrt_weights[c] * state[bq.boundary_index[c]];
        const double dt = grid.dt();
        for (int n = 1; n <= grid.n_steps; ++n) {
            auto rhs = spmv(ops.mass, state);
            for (std::size_t k = 0; k < locations.size(); ++k) {
                const double a = dt * lambdas[k][n];
                if (a != 0.0) kernels::axpy(a, loads[k].data(), rhs.data(), rhs.size());
            }
            state = lu.solve(rhs);
            for (std::size_t c = 0; c < nb; ++c)
                out[n * nb + c] = sqrt_weights[n * nb + c] * state[bq.boundary_index[c]];
        }
        return out;
    }

    std::vector<double> weighted_data(const BoundaryTrace& data) const {
        const std::size_t nb = bq.weights.size();
        if (data.boundary_index != bq.boundary_index)
            throw std::invalid_argument("lm: data boundary does not match the mesh");
        if (data.grid.n_steps != grid.n_steps ||
            std::abs(data.grid.t0 - grid.t0) > 1e-12 ||
            std::abs(data.grid.t_end - grid.t_end) > 1e-12)
            throw std::invalid_argument("lm: data grid does not match the inversion grid");
        std::vector<double> out(residual_size());
        for (int n = 0; n <= grid.n_steps; ++n)
            for (std::size_t c = 0; c < nb; ++c)
                out[n * nb + c] = sqrt_weights[n * nb + c] * data.values[n][c];
        return out;
    }

    Point clamp_interior(Point x) const {
        const double margin = 2.0 * mesh.mesh_size;
        x[0] = std::clamp(x[0], margin, config.domain_length - margin);
        if (config.dim == 2) x[1] = std::clamp(x[1], margin, config.domain_length - margin);
        return x;
    }
};

LmWorkspace::LmWorkspace(const ProblemConfig& config, const SpaceMesh& mesh, const TimeGrid& grid)
    : impl_(std::make_unique<Impl>(config, mesh, grid)) {}
LmWorkspace::~LmWorkspace() = default;
LmWorkspace::LmWorkspace(LmWorkspace&&) noexcept = default;

const ProblemConfig& LmWorkspace::config() const { return impl_->config; }
const SpaceMesh& LmWorkspace::mesh() const { return impl_->mesh; }
const TimeGrid& LmWorkspace::grid() const { return impl_->grid; }

double LmWorkspace::noise_norm_for(double noise_sigma) const {
    double sum = 0.0;
    for (double s : impl_->sqrt_weights) sum += s * s;
    return noise_sigma * std::sqrt(sum);
}

std::vector<double> LmWorkspace::residual(const LmParams& params,
                                          const BoundaryTrace& data) const {
    auto r = impl_->weighted_forward(params.locations, params.amplitudes, true);
    const auto d = impl_->weighted_data(data);
    kernels::axpy(-1.0, d.data(), r.data(), r.size());
    return r;
}

LmWorkspace::JacobianX LmWorkspace::jacobian_x(const LmParams& params, double fd_step) const {
    const int dim = impl_->config.dim;
    const int n_cols = dim * static_cast<int>(params.locations.size());
    JacobianX jac;
    jac.columns.resize(n_cols);
    jac.one_sided.assign(n_cols, false);
    const double margin = 2.0 * impl_->mesh.mesh_size;
    const double lo = margin, hi = impl_->config.domain_length - margin;

    for (int col = 0; col < n_cols; ++col) {
        const int k = col / dim, axis = col % dim;
        auto shifted = [&](double delta) {
            auto locs = params.locations;
            locs[k][axis] += delta;
            return impl_->weighted_forward(locs, params.amplitudes, true);
        };
        const double x = params.locations[k][axis];
        double hp = fd_step, hm = fd_step;
        if (x + fd_step > hi) hp = 0.0;  // one-sided fallback at the wall
        if (x - fd_step < lo) hm = 0.0;
        if (hp == 0.0 && hm == 0.0)
            throw NumericalError("jacobian_x: no admissible perturbation");
        jac.one_sided[col] = (hp == 0.0 || hm == 0.0);
        auto up = shifted(hp);
        auto dn = shifted(-hm);
        const double scale = 1.0 / (hp + hm);
        std::vector<double> column(up.size());
        for (std::size_t i = 0; i < up.size(); ++i) column[i] = (up[i] - dn[i]) * scale;
        jac.columns[col] = std::move(column);
    }
    return jac;
}

std::vector<double> LmWorkspace::apply_jacobian_lambda(
    const LmParams& params, const std::vector<std::vector<double>>& dlambda) const {
    return impl_->weighted_forward(params.locations, dlambda, false);
}

std::vector<std::vector<double>> LmWorkspace::apply_jacobian_lambda_adjoint(
    const LmParams& params, const std::vector<double>& r) const {
    const auto& im = *impl_;
    const std::size_t nb = im.bq.weights.size();
    const int n_steps = im.grid.n_steps;
    const double dt = im.grid.dt();
    const int n_src = static_cast<int>(params.locations.size());

    std::vector<std::vector<double>> out(n_src,
                                         std::vector<double>(n_steps + 1, 0.0));
    std::vector<double> q(im.mesh.n_nodes(), 0.0);
    for (int n = n_steps; n >= 1; --n) {
        auto rhs = spmv(im.ops.mass, q);  // mass is symmetric
        for (std::size_t c = 0; c < nb; ++c)
            rhs[im.bq.boundary_index[c]] += im.sqrt_weights[n * nb + c] * r[n * nb + c];
        q = im.lu_t.solve(rhs);
        for (int k = 0; k < n_src; ++k)
            out[k][n] = dt * evaluate_field(im.mesh, q, params.locations[k]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gauss-Newton step, matrix-free CG in parameter space
// ---------------------------------------------------------------------------

namespace {

struct ParamVec {
    std::vector<double> v;  // x block (d*N) then lambda block (N*(n_steps+1))
};

}  // namespace

LmParams LmWorkspace::lm_step(const LmParams& params, const BoundaryTrace& data, double beta_x,
                              double beta_lambda, const LmSchedule& schedule) const {
    const auto& im = *impl_;
    const int dim = im.config.dim;
    const int n_src = static_cast<int>(params.locations.size());
    const int nx = dim * n_src;
    const int nt = im.grid.n_steps + 1;
    const std::size_t n_param = static_cast<std::size_t>(nx) + static_cast<std::size_t>(n_src) * nt;

    const double fd = schedule.fd_step > 0.0 ? schedule.fd_step : im.mesh.mesh_size / 4.0;
    const auto r0 = residual(params, data);
    const auto jx = jacobian_x(params, fd);
    const auto& wt = im.time_weights;

    auto split_lambda = [&](const std::vector<double>& p) {
        std::vector<std::vector<double>> dl(n_src, std::vector<double>(nt));
        for (int k = 0; k < n_src; ++k)
            for (int n = 0; n < nt; ++n) dl[k][n] = p[nx + k * nt + n];
        return dl;
    };

    // y = J p (residual space)
    auto apply_j = [&](const std::vector<double>& p) {
        auto y = apply_jacobian_lambda(params, split_lambda(p));
        for (int c = 0; c < nx; ++c)
            if (p[c] != 0.0) kernels::axpy(p[c], jx.columns[c].data(), y.data(), y.size());
        return y;
    };
    // g = J^T y (parameter space)
    auto apply_jt = [&](const std::vector<double>& y) {
        std::vector<double> g(n_param, 0.0);
        for (int c = 0; c < nx; ++c)
            g[c] = kernels::dot(jx.columns[c].data(), y.data(), y.size());
        const auto gl = apply_jacobian_lambda_adjoint(params, y);
        for (int k = 0; k < n_src; ++k)
            for (int n = 0; n < nt; ++n) g[nx + k * nt + n] = gl[k][n];
        return g;
    };
    // normal operator (J^T J + regularization)
    auto apply_normal = [&](const std::vector<double>& p) {
        auto g = apply_jt(apply_j(p));
        for (int c = 0; c < nx; ++c) g[c] += beta_x * p[c];
        for (int k = 0; k < n_src; ++k)
            for (int n = 0; n < nt; ++n) {
                const std::size_t i = nx + k * nt + n;
                g[i] += beta_lambda * wt[n] * p[i];
            }
        return g;
    };

    // rhs = -J^T r0
    auto rhs = apply_jt(r0);
    kernels::scale(-1.0, rhs.data(), rhs.size());

    // Preconditioner. The x-block diagonal comes from the explicit columns.
    // The forward map is invariant under time shifts, so every lambda column
    // is a shifted copy of one impulse response per source; correlating those
    // responses reconstructs the lambda block of J^T J without further
    // solves. Where the dense factorization is affordable the block is used
    // whole (the rest of the normal operator is a rank-2dN coupling, so CG
    // then finishes in a few iterations); otherwise its diagonal serves as a
    // Jacobi scaling.
    std::vector<double> dinv_x(nx);
    for (int c = 0; c < nx; ++c)
        dinv_x[c] = 1.0 / (kernels::dot(jx.columns[c].data(), jx.columns[c].data(),
                                        jx.columns[c].size()) +
                           beta_x);

    const std::size_t nb = r0.size() / nt;
    const int n_lam = n_src * nt;
    std::vector<std::vector<double>> resp(n_src);  // weighted unit-impulse responses
    for (int k = 0; k < n_src; ++k) {
        std::vector<std::vector<double>> impulse(n_src, std::vector<double>(nt, 0.0));
        impulse[k][1] = 1.0;
        resp[k] = apply_jacobian_lambda(params, impulse);
    }
    // scale out sqrt(w_t) so response entries carry sqrt(w_b) only
    std::vector<std::vector<double>> raw = resp;
    for (int k = 0; k < n_src; ++k)
        for (int j = 1; j < nt; ++j) {
            const double inv = 1.0 / std::sqrt(wt[j]);
            for (std::size_t c = 0; c < nb; ++c) raw[k][j * nb + c] *= inv;
        }

    const bool block_precond = n_lam <= 320;
    std::vector<double> chol;          // lambda-block Cholesky factor, row-major lower
    std::vector<double> dinv_lam;      // fallback Jacobi scaling
    if (block_precond) {
        // prefix-summed correlations: S[k][l][lag][L] folded into entries
        std::vector<double> g(static_cast<std::size_t>(n_lam) * n_lam, 0.0);
        const double dt = im.grid.dt();
        for (int k = 0; k < n_src; ++k)
            for (int l = 0; l < n_src; ++l)
                for (int lag = 0; lag < nt - 1; ++lag) {
                    // C(p) = sum_c raw_k^p raw_l^{p+lag}; entries share prefixes
                    double prefix = 0.0;
                    std::vector<double> s_of_len(nt, 0.0);
                    std::vector<double> c_of_len(nt, 0.0);
                    for (int p = 1; p + lag < nt; ++p) {
                        const double corr = kernels::dot(raw[k].data() + p * nb,
                                                         raw[l].data() + (p + lag) * nb, nb);
                        prefix += corr;
                        s_of_len[p] = prefix;
                        c_of_len[p] = corr;
                    }
                    // entry (k, n), (l, m) with n - m = lag, n = max
                    for (int n = lag + 1; n < nt; ++n) {
                        const int m = n - lag;
                        const int len = nt - n;
                        if (len < 1) continue;
                        const double val = dt * s_of_len[len] - 0.5 * dt * c_of_len[len];
                        g[static_cast<std::size_t>(k * nt + n) * n_lam + (l * nt + m)] = val;
                        g[static_cast<std::size_t>(l * nt + m) * n_lam + (k * nt + n)] = val;
                    }
                }
        for (int k = 0; k < n_src; ++k)
            for (int n = 0; n < nt; ++n) {
                const std::size_t i = static_cast<std::size_t>(k * nt + n);
                g[i * n_lam + i] += beta_lambda * wt[n];
            }
        // dense Cholesky (SPD by the Tikhonov term)
        chol.assign(g.begin(), g.end());
        for (int i = 0; i < n_lam; ++i) {
            for (int j = 0; j <= i; ++j) {
                double s = chol[static_cast<std::size_t>(i) * n_lam + j];
                for (int c = 0; c < j; ++c)
                    s -= chol[static_cast<std::size_t>(i) * n_lam + c] *
                         chol[static_cast<std::size_t>(j) * n_lam + c];
                if (i == j) {
                    if (s <= 0.0)
                        throw SolverError("lm_step: preconditioner not positive definite", 0.0);
                    chol[static_cast<std::size_t>(i) * n_lam + i] = std::sqrt(s);
                } else {
                    chol[static_cast<std::size_t>(i) * n_lam + j] =
                        s / chol[static_cast<std::size_t>(j) * n_lam + j];
                }
            }
        }
    } else {
        dinv_lam.resize(n_lam);
        for (int k = 0; k < n_src; ++k) {
            std::vector<double> energy(nt, 0.0);  // |raw response|^2 per offset
            for (int p = 1; p < nt; ++p)
                energy[p] = kernels::dot(raw[k].data() + p * nb, raw[k].data() + p * nb, nb);
            for (int n = 0; n < nt; ++n) {
                double e = 0.0;
                for (int p = 1; n >= 1 && p <= nt - n; ++p) e += wt[p + n - 1] * energy[p];
                dinv_lam[k * nt + n] = 1.0 / std::max(e + beta_lambda * wt[n], 1e-300);
            }
        }
    }

    auto apply_precond = [&](const std::vector<double>& r) {
        std::vector<double> z(n_param);
        for (int c = 0; c < nx; ++c) z[c] = dinv_x[c] * r[c];
        if (block_precond) {
            // forward/backward triangular solves on the lambda block
            std::vector<double> y(n_lam);
            for (int i = 0; i < n_lam; ++i) {
                double s = r[nx + i];
                for (int j = 0; j < i; ++j)
                    s -= chol[static_cast<std::size_t>(i) * n_lam + j] * y[j];
                y[i] = s / chol[static_cast<std::size_t>(i) * n_lam + i];
            }
            for (int i = n_lam - 1; i >= 0; --i) {
                double s = y[i];
                for (int j = i + 1; j < n_lam; ++j)
                    s -= chol[static_cast<std::size_t>(j) * n_lam + i] * z[nx + j];
                z[nx + i] = s / chol[static_cast<std::size_t>(i) * n_lam + i];
            }
        } else {
            for (int i = 0; i < n_lam; ++i) z[nx + i] = dinv_lam[i] * r[nx + i];
        }
        return z;
    };

    // preconditioned CG
    std::vector<double> x(n_param, 0.0), res = rhs, p(n_param), ap;
    const double rhs_norm = std::sqrt(kernels::dot(rhs.data(), rhs.data(), n_param));
    if (rhs_norm > 0.0) {
        const double tol = schedule.gn_solver.rel_tol * rhs_norm;
        auto z = apply_precond(res);
        p = z;
        double rz = kernels::dot(res.data(), z.data(), n_param);
        double rnorm = rhs_norm;
        int it = 0;
        for (; it < schedule.gn_solver.max_iter && rnorm > tol; ++it) {
            ap = apply_normal(p);
            const double pap = kernels::dot(p.data(), ap.data(), n_param);
            if (pap <= 0.0) throw SolverError("lm_step: normal operator not SPD", rnorm / rhs_norm);
            const double alpha = rz / pap;
            kernels::axpy(alpha, p.data(), x.data(), n_param);
            kernels::axpy(-alpha, ap.data(), res.data(), n_param);
            rnorm = std::sqrt(kernels::dot(res.data(), res.data(), n_param));
            if (rnorm <= tol) break;
            z = apply_precond(res);
            const double rz_next = kernels::dot(res.data(), z.data(), n_param);
            kernels::axpby(1.0, z.data(), rz_next / rz, p.data(), n_param);
            rz = rz_next;
        }
        if (rnorm > tol)
            throw SolverError("lm_step: Gauss-Newton CG did not converge", rnorm / rhs_norm);
    }

    LmParams next = params;
    for (int k = 0; k < n_src; ++k) {
        for (int axis = 0; axis < dim; ++axis) next.locations[k][axis] += x[k * dim + axis];
        next.locations[k] = im.clamp_interior(next.locations[k]);
        for (int n = 0; n < nt; ++n) next.amplitudes[k][n] += x[nx + k * nt + n];
    }
    return next;
}

// ---------------------------------------------------------------------------
// Free functions and the full iteration
// ---------------------------------------------------------------------------

std::vector<double> residual(const LmParams& params, const BoundaryTrace& data,
                             const ProblemConfig& config, const SpaceMesh& mesh,
                             const TimeGrid& grid) {
    return LmWorkspace(config, mesh, grid).residual(params, data);
}

std::vector<double> apply_jacobian_lambda(const LmParams& params,
                                          const std::vector<std::vector<double>>& dlambda,
                                          const ProblemConfig& config, const SpaceMesh& mesh,
                                          const TimeGrid& grid) {
    return LmWorkspace(config, mesh, grid).apply_jacobian_lambda(params, dlambda);
}

std::vector<std::vector<double>> apply_jacobian_lambda_adjoint(const LmParams& params,
                                                               const std::vector<double>& r,
                                                               const ProblemConfig& config,
                                                               const SpaceMesh& mesh,
                                                               const TimeGrid& grid) {
    return LmWorkspace(config, mesh, grid).apply_jacobian_lambda_adjoint(params, r);
}

ReconstructionResult run_lm(const LmParams& init, const BoundaryTrace& data,
                            const LmSchedule& schedule, const ProblemConfig& config,
                            const SpaceMesh& mesh, const TimeGrid& grid) {
    if (init.locations.size() != init.amplitudes.size() || init.locations.empty())
        throw ConfigError("run_lm: inconsistent initial parameters");
    const auto t_start = std::chrono::steady_clock::now();
    LmWorkspace ws(config, mesh, grid);

    ReconstructionResult result;
    LmParams params = init;
    double beta_x = schedule.beta_x0;
    double beta_lambda = schedule.beta_lambda0;
    auto rnorm_of = [&](const LmParams& p) {
        const auto r = ws.residual(p, data);
        return std::sqrt(kernels::dot(r.data(), r.data(), r.size()));
    };

    double rnorm = rnorm_of(params);
    // slack for accept/reject: residuals at the roundoff floor may fluctuate
    const double monotone_slack = 1e-12 * std::max(1.0, rnorm);
    auto record = [&](int iteration) {
        IterateRecord rec;
        rec.iteration = iteration;
        rec.residual_norm = rnorm;
        rec.beta_x = beta_x;
        rec.beta_lambda = beta_lambda;
        if (schedule.record_iterates) rec.params = params;
        result.history.push_back(std::move(rec));
    };

    result.stop_reason = StopReason::max_iters;
    bool state_recorded = false;
    for (int k = 0; k < schedule.max_iters; ++k) {
        record(k);
        state_recorded = true;

        if (schedule.stop_rule == StopRule::discrepancy && schedule.noise_norm > 0.0 &&
            rnorm <= schedule.eta * schedule.noise_norm) {
            result.stop_reason = StopReason::discrepancy;
            break;
        }

        bool accepted = false;
        bool any_solver_failure = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            bool solver_failed = false;
            LmParams candidate;
            double candidate_norm = 0.0;
            try {
                candidate = ws.lm_step(params, data, beta_x, beta_lambda, schedule);
                candidate_norm = rnorm_of(candidate);
            } catch (const SolverError&) {
                solver_failed = true;
                any_solver_failure = true;
            }
            if (!solver_failed && candidate_norm <= rnorm + monotone_slack) {
                params = std::move(candidate);
                rnorm = candidate_norm;
                accepted = true;
                state_recorded = false;
            } else if (attempt == 0) {
                beta_x *= 2.0;  // one doubling retry restores non-increase
                beta_lambda *= 2.0;
            }
        }
        if (!accepted) {
            // repeated solver failure is a hard abort; otherwise the iterate
            // reached its attainable residual floor and the last (best) state
            // stands as the result
            result.stop_reason =
                any_solver_failure ? StopReason::aborted : StopReason::stagnation;
            break;
        }
        beta_x *= schedule.gamma_x;
        beta_lambda *= schedule.gamma_lambda;
    }
    if (!state_recorded) record(static_cast<int>(result.history.size()));

    result.final = std::move(params);
    result.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

}  // namespace adsrc
