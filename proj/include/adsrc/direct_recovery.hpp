#pragma once

#include <complex>
#include <string>
#include <vector>

#include "adsrc/forward.hpp"
#include "adsrc/probes.hpp"

namespace adsrc {

/// Reciprocity pairing of boundary data with a steady caloric probe:
///   R(v) = int_0^T oint u (d_nu v + (A.nu) v) dsigma dt + int_Omega u(.,T) v dx
/// which equals sum_j (int_0^T lambda_j) v(x_j). Boundary integral by edge
/// trapezoid x time trapezoid; volume term by mass-matrix pairing.
std::complex<double> reciprocity_gap(const BoundaryTrace& trace, const CaloricProbe& probe,
                                     const ProblemConfig& config, const SpaceMesh& mesh);

struct LocationEstimate {
    Point location;  // clamped to the closed domain
    Point raw;       // unclamped value
};

/// Single-source location from exponential probe ratios per axis:
/// R(v_{+e_i}) / R(v_{-e_i}) = exp(2 kappa x_i), kappa = sqrt(mu + |A|^2/4).
LocationEstimate recover_location_single(const BoundaryTrace& trace, const ProblemConfig& config,
                                         const SpaceMesh& mesh);

/// The pure inversion step of the above, for synthetic functional values.
Point single_location_from_gaps(const std::array<std::complex<double>, 2>& gap_plus,
                                const std::array<std::complex<double>, 2>& gap_minus,
                                double kappa, int dim);

/// One-dimensional location for the drift-compatible case mu = -A^2/4, via the
/// affine probe ratio R(x e^{-Ax/2}) / R(e^{-Ax/2}).
LocationEstimate recover_location_1d(const BoundaryTrace& trace, const ProblemConfig& config,
                                     const SpaceMesh& mesh);

struct MomentSequence {
    std::vector<std::complex<double>> values;  // G_0 .. G_{K-1}
    std::string probe_family;
};

/// Complex harmonic moments G_k = sum_j c_j z_j^k from drift-weighted monomial
/// probes (d = 2, mu + |A|^2/4 = 0), z_j = (x_j)_1 + i (x_j)_2.
MomentSequence harmonic_moments(const BoundaryTrace& trace, const ProblemConfig& config,
                                const SpaceMesh& mesh, int moment_count);

struct PronyResult {
    std::vector<std::complex<double>> nodes;    // z_j, sorted by (re, im)
    std::vector<std::complex<double>> weights;  // c_j
};

/// Hankel-pencil solve of sum_j c_j z_j^k = G_k. Needs K >= 2N and a
/// numerically nonsingular Hankel matrix (sigma_min/sigma_max >= 1e-10).
PronyResult prony_recover(const MomentSequence& moments, int n_sources);

struct LaplaceFunctionalResult {
    std::complex<double> value;
    bool tail_truncated;  // extension too short for the e^{-mu t_ext} <= 1e-8 bound
};

/// Boundary functional of the time-Laplace-transformed data at the probe
/// frequency z: oint w_hat_z (d_nu v_z + (A.nu) v_z) dsigma, where w_hat_z is
/// the transform of the trace on (0,T) plus the continuation tail. Equals
/// sum_k lambda_hat_k(z) v_z(x_k) + int u0 v_z up to discretization and tail
/// truncation.
LaplaceFunctionalResult laplace_boundary_functional(const BoundaryTrace& trace,
                                                    const BoundaryTrace& ext_trace,
                                                    const CaloricProbe& probe,
                                                    const ProblemConfig& config,
                                                    const SpaceMesh& mesh);

struct AmplitudeEstimate {
    double sigma = 0.0;
    std::vector<double> frequencies;                // tau_j on [-R, R]
    std::vector<std::complex<double>> hat_values;   // lambda_hat(sigma + i tau_j)
    TimeGrid grid;
    std::vector<double> time_samples;               // reconstructed lambda
    double imag_residue = 0.0;                      // max |Im| discarded, diagnostic
    bool tail_truncated = false;
};

struct AmplitudeOptions {
    bool average_directions = false;  // average over +/- coordinate axes
};

/// Band-limited amplitude reconstruction for a single source at x_hat:
/// lambda_hat on the band sigma + i[-R, R] via the Laplace functional with the
/// probe normalized to v_z(x_hat) = 1, then
///   lambda(t) = Re[(e^{sigma t}/2pi) int_{-R}^{R} e^{i tau t} lambda_hat dtau]
/// by trapezoid on n_freq uniform frequencies (n_freq odd).
AmplitudeEstimate recover_amplitude(const BoundaryTrace& trace, const BoundaryTrace& ext_trace,
                                    const Point& x_hat, const ProblemConfig& config,
                                    const SpaceMesh& mesh, double sigma, double band_radius,
                                    int n_freq, const AmplitudeOptions& options = {});

/// Pure inversion kernel of recover_amplitude, for synthetic transform data.
std::vector<double> invert_band_limited(const std::vector<double>& frequencies,
                                        const std::vector<std::complex<double>>& hat_values,
                                        double sigma, const TimeGrid& grid,
                                        double* imag_residue = nullptr);

/// Default Laplace abscissa sigma = 1 + |mu| + |A|^2/4.
double default_laplace_abscissa(const ProblemConfig& config);

/// Band radius min(c1 ln(1/gamma)^2, r_max) balancing noise amplification
/// against truncation.
double default_band_radius(double noise_scale, double c1 = 1.0, double r_max = 200.0);

}  // namespace adsrc
