#pragma once

#include <optional>
#include <vector>

#include "adsrc/mesh.hpp"
#include "adsrc/sparse.hpp"

namespace adsrc {

/// Model problem data: d/dt u - div(grad u) + A.grad u + mu u = sum_k lambda_k(t) delta_{x_k}
/// on an interval (0,l) or square (0,L)^2 with homogeneous Neumann walls.
struct ProblemConfig {
    int dim = 1;
    double domain_length = 1.0;
    Point advection{0.0, 0.0};  // constant velocity A, first dim entries used
    double reaction = 0.0;      // mu
    double horizon = 1.0;       // T
    double support_end = 0.5;   // T0: sources inactive on (T0, T)
    double obs_start = 0.75;    // T1 in (T0, T)
    std::vector<double> initial_condition;  // nodal samples; empty means zero

    double advection_norm_sq() const {
        return advection[0] * advection[0] + (dim == 2 ? advection[1] * advection[1] : 0.0);
    }
    bool has_advection() const { return advection_norm_sq() > 0.0; }
};

void validate(const ProblemConfig& config);

/// N point sources: interior locations plus per-source amplitude samples on a
/// shared time grid (linear interpolation between samples, zero outside).
struct SourceModel {
    int n_sources = 0;
    std::vector<Point> locations;
    std::vector<double> amplitude_times;
    std::vector<std::vector<double>> amplitudes;
};

/// Validates interior distance (>= 2h from the walls) and, when
/// enforce_support is set, that samples beyond T0 vanish to 1e-12.
SourceModel make_source_model(std::vector<Point> locations, std::vector<double> amplitude_times,
                              std::vector<std::vector<double>> amplitudes,
                              const ProblemConfig& config, const SpaceMesh& mesh,
                              bool enforce_support = false);

double amplitude_at(const SourceModel& sources, int k, double t);

struct Operators {
    SparseMatrix mass;       // int phi_i phi_j
    SparseMatrix stiffness;  // int grad phi_i . grad phi_j
    SparseMatrix advection;  // int (A . grad phi_j) phi_i
    SparseMatrix spatial;    // stiffness + advection + mu * mass
};

/// P1 Galerkin operators with the natural (Neumann) boundary: no wall terms.
Operators assemble_operators(const SpaceMesh& mesh, const Point& advection, double reaction);

/// Transposition pairing of a Dirac at x0 with the P1 basis: entries phi_i(x0),
/// the barycentric coordinates of x0 in its containing element (sum to one).
std::vector<double> point_source_load(const SpaceMesh& mesh, const Point& x0);

struct BoundaryQuadrature {
    std::vector<int> boundary_index;  // node ids, ascending
    SparseMatrix boundary_mass;       // diagonal trapezoid weights, boundary-local ordering
    std::vector<double> weights;      // the diagonal, for convenience
};

/// Trapezoid quadrature on the boundary: v' W v approximates the integral of
/// v^2 over the walls (in 1D the two endpoints carry unit weights).
BoundaryQuadrature boundary_quadrature(const SpaceMesh& mesh);

/// P1 interpolation of nodal coefficients at a point of the closed domain.
double evaluate_field(const SpaceMesh& mesh, std::span<const double> coeffs, const Point& x);

std::vector<double> initial_values(const ProblemConfig& config, const SpaceMesh& mesh);

}  // namespace adsrc
