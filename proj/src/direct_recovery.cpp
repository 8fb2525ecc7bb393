#include "adsrc/direct_recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "adsrc/errors.hpp"
#include "adsrc/quadrature.hpp"

namespace adsrc {

namespace {

using Complex = std::complex<double>;

int trace_column(const BoundaryTrace& trace, int node_id) {
    const auto it =
        std::lower_bound(trace.boundary_index.begin(), trace.boundary_index.end(), node_id);
    if (it == trace.boundary_index.end() || *it != node_id)
        throw std::invalid_argument("boundary pairing: node missing from trace");
    return static_cast<int>(it - trace.boundary_index.begin());
}

/// Per-column coefficients of the boundary quadrature of w -> oint w * flux dsigma,
/// so that the integral is sum_col coeff[col] * w[col].
std::vector<Complex> flux_pairing_coefficients(const BoundaryTrace& trace,
                                               const CaloricProbe& probe,
                                               const ProblemConfig& config,
                                               const SpaceMesh& mesh) {
    std::vector<Complex> coeff(trace.boundary_index.size(), Complex(0.0, 0.0));
    if (mesh.dim == 1) {
        for (const auto& e : mesh.boundary_edges)
            coeff[trace_column(trace, e.a)] +=
                probe.flux(config, mesh.node_coords[e.a], e.normal);
        return coeff;
    }
    for (const auto& e : mesh.boundary_edges) {
        const Point& pa = mesh.node_coords[e.a];
        const Point& pb = mesh.node_coords[e.b];
        const double half_len = 0.5 * std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
        coeff[trace_column(trace, e.a)] += half_len * probe.flux(config, pa, e.normal);
        coeff[trace_column(trace, e.b)] += half_len * probe.flux(config, pb, e.normal);
    }
    return coeff;
}

double trace_functional_scale(const BoundaryTrace& trace, const ProblemConfig& config) {
    const double perimeter = config.dim == 1 ? 2.0 : 4.0 * config.domain_length;
    return trace.sup_norm() * config.horizon * perimeter;
}

}  // namespace

std::complex<double> reciprocity_gap(const BoundaryTrace& trace, const CaloricProbe& probe,
                                     const ProblemConfig& config, const SpaceMesh& mesh) {
    if (!probe.is_steady())
        throw std::invalid_argument("reciprocity_gap: probe must be steady (z = 0)");
    if (trace.final_snapshot.empty())
        throw std::invalid_argument("reciprocity_gap: trace carries no final snapshot");

    const auto coeff = flux_pairing_coefficients(trace, probe, config, mesh);
    const auto wt = trapezoid_weights(trace.values.size(), trace.grid.dt());
    Complex boundary(0.0, 0.0);
    for (std::size_t n = 0; n < trace.values.size(); ++n) {
        Complex row(0.0, 0.0);
        for (std::size_t c = 0; c < coeff.size(); ++c) row += coeff[c] * trace.values[n][c];
        boundary += wt[n] * row;
    }

    // volume term: (probe at nodes)^T M u(.,T)
    const auto ops = assemble_operators(mesh, config.advection, config.reaction);
    const auto mu_t = spmv(ops.mass, trace.final_snapshot);
    Complex volume(0.0, 0.0);
    for (int i = 0; i < mesh.n_nodes(); ++i)
        volume += probe.value(config, mesh.node_coords[i]) * mu_t[i];

    return boundary + volume;
}

Point single_location_from_gaps(const std::array<std::complex<double>, 2>& gap_plus,
                                const std::array<std::complex<double>, 2>& gap_minus,
                                double kappa, int dim) {
    if (!(kappa > 0.0))
        throw std::invalid_argument("location from gaps: kappa must be positive");
    Point x{0.0, 0.0};
    for (int axis = 0; axis < dim; ++axis) {
        const Complex ratio = gap_plus[axis] / gap_minus[axis];
        if (!(ratio.real() > 0.0))
            throw NumericalError("location from gaps: nonpositive probe ratio");
        x[axis] = std::log(ratio.real()) / (2.0 * kappa);
    }
    return x;
}

LocationEstimate recover_location_single(const BoundaryTrace& trace, const ProblemConfig& config,
                                         const SpaceMesh& mesh) {
    const double kappa_sq = config.reaction + config.advection_norm_sq() / 4.0;
    if (!(kappa_sq > 0.0))
        throw ConfigError(
            "recover_location_single: mu + |A|^2/4 must be positive (use the polynomial path)");
    const double kappa = std::sqrt(kappa_sq);
    const double threshold = 1e-12 * std::max(1.0, trace_functional_scale(trace, config));

    std::array<Complex, 2> plus{}, minus{};
    for (int axis = 0; axis < config.dim; ++axis) {
        Point dir{0.0, 0.0};
        dir[axis] = 1.0;
        plus[axis] = reciprocity_gap(trace, make_exp_probe(config, dir), config, mesh);
        dir[axis] = -1.0;
        minus[axis] = reciprocity_gap(trace, make_exp_probe(config, dir), config, mesh);
        if (std::abs(plus[axis]) < threshold || std::abs(minus[axis]) < threshold)
            throw NumericalError("recover_location_single: amplitude integral vanishes");
    }

    LocationEstimate est;
    est.raw = single_location_from_gaps(plus, minus, kappa, config.dim);
    est.location = est.raw;
    for (int axis = 0; axis < config.dim; ++axis)
        est.location[axis] = std::clamp(est.location[axis], 0.0, config.domain_length);
    return est;
}

LocationEstimate recover_location_1d(const BoundaryTrace& trace, const ProblemConfig& config,
                                     const SpaceMesh& mesh) {
    if (config.dim != 1) throw ConfigError("recover_location_1d: one-dimensional domains only");
    const Complex denom =
        reciprocity_gap(trace, make_affine_probe(config, 0), config, mesh);
    const double threshold = 1e-12 * std::max(1.0, trace_functional_scale(trace, config));
    if (std::abs(denom) < threshold)
        throw NumericalError("recover_location_1d: amplitude integral vanishes");
    const Complex num = reciprocity_gap(trace, make_affine_probe(config, 1), config, mesh);
    LocationEstimate est;
    est.raw = {(num / denom).real(), 0.0};
    est.location = {std::clamp(est.raw[0], 0.0, config.domain_length), 0.0};
    return est;
}

MomentSequence harmonic_moments(const BoundaryTrace& trace, const ProblemConfig& config,
                                const SpaceMesh& mesh, int moment_count) {
    if (config.dim != 2) throw ConfigError("harmonic_moments: two-dimensional domains only");
    MomentSequence seq;
    seq.probe_family = "drift-weighted complex monomials";
    seq.values.reserve(moment_count);
    for (int k = 0; k < moment_count; ++k)
        seq.values.push_back(
            reciprocity_gap(trace, make_poly_probe(config, k), config, mesh));
    return seq;
}

// ---------------------------------------------------------------------------
// Prony / Hankel-pencil solve (small dense complex linear algebra)
// ---------------------------------------------------------------------------

namespace {

using CMatrix = std::vector<std::vector<Complex>>;

std::vector<Complex> solve_dense_complex(CMatrix a, std::vector<Complex> b) {
    const int n = static_cast<int>(b.size());
    for (int j = 0; j < n; ++j) {
        int p = j;
        for (int i = j + 1; i < n; ++i)
            if (std::abs(a[i][j]) > std::abs(a[p][j])) p = i;
        if (std::abs(a[p][j]) == 0.0)
            throw NumericalError("complex solve: singular matrix");
        std::swap(a[j], a[p]);
        std::swap(b[j], b[p]);
        for (int i = j + 1; i < n; ++i) {
            const Complex l = a[i][j] / a[j][j];
            for (int c = j; c < n; ++c) a[i][c] -= l * a[j][c];
            b[i] -= l * b[j];
        }
    }
    std::vector<Complex> x(n);
    for (int i = n - 1; i >= 0; --i) {
        Complex s = b[i];
        for (int c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

/// Singular values by one-sided Jacobi (Hestenes) on the columns; n is tiny.
std::vector<double> singular_values(CMatrix a) {
    const int n = static_cast<int>(a.size());
    // work on columns
    CMatrix col(n, std::vector<Complex>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) col[j][i] = a[i][j];
    auto cdot = [&](int p, int q) {
        Complex s(0.0, 0.0);
        for (int i = 0; i < n; ++i) s += std::conj(col[p][i]) * col[q][i];
        return s;
    };
    for (int sweep = 0; sweep < 30; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double app = cdot(p, p).real();
                const double aqq = cdot(q, q).real();
                const Complex apq = cdot(p, q);
                off = std::max(off, std::abs(apq));
                if (std::abs(apq) <= 1e-300) continue;
                // rotate columns p, q to zero the Gram off-diagonal
                const Complex phase = apq / std::abs(apq);
                const double tau = (aqq - app) / (2.0 * std::abs(apq));
                const double t = (tau >= 0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < n; ++i) {
                    const Complex vp = col[p][i], vq = col[q][i];
                    col[p][i] = c * vp - s * std::conj(phase) * vq;
                    col[q][i] = s * phase * vp + c * vq;
                }
            }
        const double scale = std::sqrt(std::abs(cdot(0, 0).real()) + 1e-300);
        if (off <= 1e-15 * scale * scale) break;
    }
    std::vector<double> sv(n);
    for (int p = 0; p < n; ++p) sv[p] = std::sqrt(std::max(cdot(p, p).real(), 0.0));
    std::sort(sv.rbegin(), sv.rend());
    return sv;
}

/// Durand-Kerner roots of a monic polynomial with coefficients c (ascending,
/// without the leading 1): p(z) = z^n + c_{n-1} z^{n-1} + ... + c_0.
std::vector<Complex> polynomial_roots(const std::vector<Complex>& c) {
    const int n = static_cast<int>(c.size());
    auto eval = [&](Complex z) {
        Complex v(1.0, 0.0);
        for (int i = n - 1; i >= 0; --i) v = v * z + c[i];
        return v;
    };
    std::vector<Complex> r(n);
    const Complex seed(0.4, 0.9);
    r[0] = seed;
    for (int i = 1; i < n; ++i) r[i] = r[i - 1] * seed;
    for (int it = 0; it < 500; ++it) {
        double moved = 0.0;
        for (int i = 0; i < n; ++i) {
            Complex denom(1.0, 0.0);
            for (int j = 0; j < n; ++j)
                if (j != i) denom *= r[i] - r[j];
            const Complex delta = eval(r[i]) / denom;
            r[i] -= delta;
            moved = std::max(moved, std::abs(delta));
        }
        if (moved < 1e-15) break;
    }
    return r;
}

}  // namespace

PronyResult prony_recover(const MomentSequence& moments, int n_sources) {
    const int n = n_sources;
    const int k_count = static_cast<int>(moments.values.size());
    if (n < 1) throw std::invalid_argument("prony_recover: need at least one source");
    if (k_count < 2 * n)
        throw std::invalid_argument("prony_recover: need at least 2N moments");
    const auto& g = moments.values;

    CMatrix hankel(n, std::vector<Complex>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) hankel[i][j] = g[i + j];
    const auto sv = singular_values(hankel);
    if (!(sv.front() > 0.0) || sv.back() / sv.front() < 1e-10)
        throw NumericalError("prony_recover: sources collapsed or N overestimated");

    std::vector<Complex> nodes;
    if (n == 1) {
        nodes = {g[1] / g[0]};
    } else {
        // Prony polynomial: sum_m a_m G_{s+m} = -G_{s+n}
        std::vector<Complex> rhs(n);
        for (int s = 0; s < n; ++s) rhs[s] = -g[s + n];
        const auto a = solve_dense_complex(hankel, rhs);
        nodes = polynomial_roots(a);
    }

    // weights by Vandermonde least squares over all K moments
    CMatrix normal(n, std::vector<Complex>(n, Complex(0.0, 0.0)));
    std::vector<Complex> rhs(n, Complex(0.0, 0.0));
    std::vector<Complex> pw(n, Complex(1.0, 0.0));
    for (int k = 0; k < k_count; ++k) {
        for (int i = 0; i < n; ++i) {
            rhs[i] += std::conj(pw[i]) * g[k];
            for (int j = 0; j < n; ++j) normal[i][j] += std::conj(pw[i]) * pw[j];
        }
        for (int i = 0; i < n; ++i) pw[i] *= nodes[i];
    }
    auto weights = solve_dense_complex(normal, rhs);

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (nodes[a].real() != nodes[b].real()) return nodes[a].real() < nodes[b].real();
        return nodes[a].imag() < nodes[b].imag();
    });
    PronyResult result;
    for (int i : order) {
        result.nodes.push_back(nodes[i]);
        result.weights.push_back(weights[i]);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Laplace-domain functionals and band-limited amplitude inversion
// ---------------------------------------------------------------------------

namespace {

bool tail_bound_satisfied(const ProblemConfig& config, const BoundaryTrace& ext_trace) {
    const double t_ext = ext_trace.grid.t_end - ext_trace.grid.t0;
    if (config.reaction <= 0.0) return false;
    return std::exp(-config.reaction * t_ext) <= 1e-8;
}

}  // namespace

LaplaceFunctionalResult laplace_boundary_functional(const BoundaryTrace& trace,
                                                    const BoundaryTrace& ext_trace,
                                                    const CaloricProbe& probe,
                                                    const ProblemConfig& config,
                                                    const SpaceMesh& mesh) {
    if (trace.boundary_index != ext_trace.boundary_index)
        throw std::invalid_argument("laplace functional: trace/extension boundary mismatch");
    const Complex z = probe.frequency;

    // w_hat per boundary column: trapezoid of e^{-zt} u over (0,T) then the tail
    std::vector<Complex> what(trace.boundary_index.size(), Complex(0.0, 0.0));
    const auto accumulate = [&](const BoundaryTrace& part) {
        const auto wt = trapezoid_weights(part.values.size(), part.grid.dt());
        for (std::size_t n = 0; n < part.values.size(); ++n) {
            const Complex damp = std::exp(-z * part.grid.time(static_cast<int>(n))) * wt[n];
            for (std::size_t c = 0; c < what.size(); ++c) what[c] += damp * part.values[n][c];
        }
    };
    accumulate(trace);
    accumulate(ext_trace);

    const auto coeff = flux_pairing_coefficients(trace, probe, config, mesh);
    Complex value(0.0, 0.0);
    for (std::size_t c = 0; c < what.size(); ++c) value += coeff[c] * what[c];
    return {value, !tail_bound_satisfied(config, ext_trace)};
}

std::vector<double> invert_band_limited(const std::vector<double>& frequencies,
                                        const std::vector<std::complex<double>>& hat_values,
                                        double sigma, const TimeGrid& grid,
                                        double* imag_residue) {
    if (frequencies.size() != hat_values.size() || frequencies.size() < 2)
        throw std::invalid_argument("invert_band_limited: frequency/value size mismatch");
    const double dtau = frequencies[1] - frequencies[0];
    std::vector<double> wtau(frequencies.size(), dtau);
    wtau.front() = 0.5 * dtau;
    wtau.back() = 0.5 * dtau;

    std::vector<double> out(grid.n_steps + 1);
    double residue = 0.0;
    for (int n = 0; n <= grid.n_steps; ++n) {
        const double t = grid.time(n);
        Complex s(0.0, 0.0);
        for (std::size_t j = 0; j < frequencies.size(); ++j)
            s += wtau[j] * std::exp(Complex(0.0, frequencies[j] * t)) * hat_values[j];
        s *= std::exp(sigma * t) / (2.0 * std::numbers::pi);
        out[n] = s.real();
        residue = std::max(residue, std::abs(s.imag()));
    }
    if (imag_residue) *imag_residue = residue;
    return out;
}

AmplitudeEstimate recover_amplitude(const BoundaryTrace& trace, const BoundaryTrace& ext_trace,
                                    const Point& x_hat, const ProblemConfig& config,
                                    const SpaceMesh& mesh, double sigma, double band_radius,
                                    int n_freq, const AmplitudeOptions& options) {
    if (!(band_radius > 0.0)) throw ConfigError("recover_amplitude: R must be positive");
    if (n_freq < 3 || n_freq % 2 == 0)
        throw ConfigError("recover_amplitude: n_freq must be odd and >= 3");
    if (!point_in_domain(mesh, x_hat))
        throw ConfigError("recover_amplitude: x_hat outside the domain");

    std::vector<Point> directions;
    if (options.average_directions) {
        directions.push_back({1.0, 0.0});
        directions.push_back({-1.0, 0.0});
        if (config.dim == 2) {
            directions.push_back({0.0, 1.0});
            directions.push_back({0.0, -1.0});
        }
    } else {
        directions.push_back({1.0, 0.0});
    }

    AmplitudeEstimate est;
    est.sigma = sigma;
    est.grid = trace.grid;
    est.frequencies.resize(n_freq);
    est.hat_values.assign(n_freq, Complex(0.0, 0.0));
    const double dtau = 2.0 * band_radius / (n_freq - 1);
    for (int j = 0; j < n_freq; ++j) {
        est.frequencies[j] = -band_radius + j * dtau;
        const Complex z(sigma, est.frequencies[j]);
        Complex acc(0.0, 0.0);
        for (const auto& dir : directions) {
            const auto probe = make_laplace_probe(config, dir, z, x_hat);
            const auto fn = laplace_boundary_functional(trace, ext_trace, probe, config, mesh);
            acc += fn.value;
            est.tail_truncated = est.tail_truncated || fn.tail_truncated;
        }
        est.hat_values[j] = acc / static_cast<double>(directions.size());
    }
    est.time_samples =
        invert_band_limited(est.frequencies, est.hat_values, sigma, est.grid, &est.imag_residue);
    return est;
}

double default_laplace_abscissa(const ProblemConfig& config) {
    return 1.0 + std::abs(config.reaction) + config.advection_norm_sq() / 4.0;
}

double default_band_radius(double noise_scale, double c1, double r_max) {
    const double gamma = std::clamp(noise_scale, 1e-12, 0.5);
    const double lg = std::log(1.0 / gamma);
    return std::min(c1 * lg * lg, r_max);
}

}  // namespace adsrc
