#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "adsrc/fem.hpp"

namespace adsrc {

struct TimeGrid {
    double t0 = 0.0;
    double t_end = 1.0;
    int n_steps = 1;

    double dt() const { return (t_end - t0) / n_steps; }
    double time(int n) const { return t0 + n * dt(); }
};

/// Grid from a step size; n_steps*dt must reproduce the span to 1e-12 relative.
TimeGrid make_time_grid(double t0, double t_end, double dt);

/// Boundary nodal values of the field at every step plus the final snapshot.
struct BoundaryTrace {
    TimeGrid grid;
    std::vector<int> boundary_index;
    std::vector<std::vector<double>> values;  // (n_steps+1) x n_boundary
    std::vector<double> final_snapshot;       // all nodes at t_end
    std::vector<std::vector<double>> full_field;  // retained only on request

    double sup_norm() const;
};

struct SimulateOptions {
    bool keep_full_field = false;
    std::optional<SolveOptions> solver;  // default: cached banded LU when affordable
};

/// Backward Euler propagation: (M + dt S) u^{n+1} = M u^n + dt sum_k lambda_k(t^{n+1}) b_k.
BoundaryTrace simulate(const ProblemConfig& config, const SpaceMesh& mesh,
                       const SourceModel& sources, const TimeGrid& grid,
                       const SimulateOptions& options = {});

/// Source-free continuation from a final-time snapshot on (T, T + t_ext).
BoundaryTrace extend_in_time(const ProblemConfig& config, const SpaceMesh& mesh,
                             std::span<const double> snapshot, double t_ext,
                             const TimeGrid& grid_ext, const SimulateOptions& options = {});

/// Neumann eigen-expansion reference for A = 0 on the box: per mode, the time
/// convolution with the amplitude is evaluated by adaptive quadrature
/// (absolute tolerance 1e-10). n_modes counts modes per axis.
double spectral_reference(const ProblemConfig& config, const SourceModel& sources,
                          const Point& x_eval, double t, int n_modes);

/// Same expansion evaluated at every grid time by marching the per-mode
/// convolutions; each step integrates the piecewise-linear amplitude exactly,
/// so this is an independent route from the pointwise quadrature above.
std::vector<double> spectral_reference_series(const ProblemConfig& config,
                                              const SourceModel& sources, const Point& x_eval,
                                              const TimeGrid& grid, int n_modes);

/// Free-space advection-diffusion kernel response of a single source,
/// integrated after the substitution s -> t - r^2 that removes the endpoint
/// singularity. Valid for x != x_src.
double freespace_kernel(const ProblemConfig& config, const Point& x_src,
                        const std::function<double(double)>& lambda, const Point& x, double t);

/// Restrict a fine-grid trace to a coarser mesh/grid: linear interpolation in
/// time, nodal restriction in space (coarse nodes must be fine nodes).
BoundaryTrace restrict_trace(const BoundaryTrace& fine, const SpaceMesh& fine_mesh,
                             const SpaceMesh& coarse_mesh, const TimeGrid& coarse_grid);

}  // namespace adsrc
