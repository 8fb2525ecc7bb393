#pragma once

#include <memory>
#include <vector>

#include "adsrc/forward.hpp"

namespace adsrc {

/// Unknowns of the inverse problem: locations plus one amplitude degree of
/// freedom per inversion time step and source (piecewise linear in time).
struct LmParams {
    std::vector<Point> locations;
    std::vector<std::vector<double>> amplitudes;  // n_sources x (n_steps+1)
};

enum class StopRule { max_iters, discrepancy };

struct LmSchedule {
    double beta_x0 = 1.0;
    double beta_lambda0 = 5.0;
    double gamma_x = 0.8;
    double gamma_lambda = 0.8;
    int max_iters = 100;
    double fd_step = 0.0;  // 0: use h/4
    SolveOptions gn_solver{SolveMethod::cg, 1e-6, 300};
    StopRule stop_rule = StopRule::max_iters;
    double eta = 1.1;          // discrepancy safety factor
    double noise_norm = 0.0;   // weighted noise level for the discrepancy rule
    bool record_iterates = true;
};

// stagnation: no residual decrease even after the doubling retry (the iterate
// sits at its attainable floor); aborted: the step solver failed twice.
enum class StopReason { max_iters, discrepancy, stagnation, aborted };

struct IterateRecord {
    int iteration = 0;
    double residual_norm = 0.0;
    double beta_x = 0.0;
    double beta_lambda = 0.0;
    LmParams params;  // populated when record_iterates is set
};

struct ReconstructionResult {
    LmParams final;
    std::vector<IterateRecord> history;
    StopReason stop_reason = StopReason::max_iters;
    double wall_time_seconds = 0.0;
};

/// Cached discrete operators for repeated forward/adjoint solves on one
/// (config, mesh, grid) triple. All LM operations below run through it.
class LmWorkspace {
public:
    LmWorkspace(const ProblemConfig& config, const SpaceMesh& mesh, const TimeGrid& grid);
    ~LmWorkspace();
    LmWorkspace(LmWorkspace&&) noexcept;

    /// Residual r = weighted(F(params) - data); |r|^2 approximates the squared
    /// L^2((0,T) x boundary) misfit.
    std::vector<double> residual(const LmParams& params, const BoundaryTrace& data) const;

    struct JacobianX {
        std::vector<std::vector<double>> columns;  // d*N columns, residual-shaped
        std::vector<bool> one_sided;               // fallback used near the wall
    };
    /// Central finite differences of the residual in the locations.
    JacobianX jacobian_x(const LmParams& params, double fd_step) const;

    /// F is affine in the amplitudes: J_lambda dlambda is the weighted trace of
    /// one forward solve with sources dlambda and zero initial condition.
    std::vector<double> apply_jacobian_lambda(const LmParams& params,
                                              const std::vector<std::vector<double>>& dlambda) const;

    /// Exact transpose of the discrete forward map: backward sweep with the
    /// boundary-weighted load, sampled at the source locations.
    std::vector<std::vector<double>> apply_jacobian_lambda_adjoint(
        const LmParams& params, const std::vector<double>& r) const;

    /// One Gauss-Newton/Tikhonov step: solves
    /// (J^T J + diag(beta_x I, beta_lambda W)) d = -J^T r matrix-free by CG and
    /// returns the updated, interior-clamped parameters.
    LmParams lm_step(const LmParams& params, const BoundaryTrace& data, double beta_x,
                     double beta_lambda, const LmSchedule& schedule) const;

    const ProblemConfig& config() const;
    const SpaceMesh& mesh() const;
    const TimeGrid& grid() const;
    double noise_norm_for(double noise_sigma) const;  // sigma * sqrt(sum of weights)

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Free-function forms of the operations above (each builds a workspace).
std::vector<double> residual(const LmParams& params, const BoundaryTrace& data,
                             const ProblemConfig& config, const SpaceMesh& mesh,
                             const TimeGrid& grid);
std::vector<double> apply_jacobian_lambda(const LmParams& params,
                                          const std::vector<std::vector<double>>& dlambda,
                                          const ProblemConfig& config, const SpaceMesh& mesh,
                                          const TimeGrid& grid);
std::vector<std::vector<double>> apply_jacobian_lambda_adjoint(const LmParams& params,
                                                               const std::vector<double>& r,
                                                               const ProblemConfig& config,
                                                               const SpaceMesh& mesh,
                                                               const TimeGrid& grid);

/// Full Levenberg-Marquardt iteration with geometric regularization decay,
/// monotonicity safeguard (one doubling retry) and early stopping.
ReconstructionResult run_lm(const LmParams& init, const BoundaryTrace& data,
                            const LmSchedule& schedule, const ProblemConfig& config,
                            const SpaceMesh& mesh, const TimeGrid& grid);

}  // namespace adsrc
