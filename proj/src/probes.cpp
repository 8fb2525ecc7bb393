#include "adsrc/probes.hpp"

#include <cmath>

#include "adsrc/errors.hpp"

namespace adsrc {

namespace {

using Complex = std::complex<double>;

Complex drift_factor(const ProblemConfig& config, const CaloricProbe& p, const Point& x) {
    double e = -0.5 * config.advection[0] * (x[0] - p.anchor[0]);
    if (config.dim == 2) e += -0.5 * config.advection[1] * (x[1] - p.anchor[1]);
    return std::exp(e);
}

void require_compatible(const ProblemConfig& config, ProbeKind kind) {
    const double shift = config.reaction + config.advection_norm_sq() / 4.0;
    if ((kind == ProbeKind::poly_probe || kind == ProbeKind::affine_1d) && std::abs(shift) > 1e-12)
        throw ConfigError("caloric probe: this kind requires mu + |A|^2/4 = 0");
}

}  // namespace

std::complex<double> probe_kappa(const ProblemConfig& config, std::complex<double> z) {
    return std::sqrt(Complex(config.reaction + config.advection_norm_sq() / 4.0, 0.0) + z);
}

CaloricProbe make_exp_probe(const ProblemConfig& config, const Point& direction,
                            std::complex<double> z, const Point& anchor) {
    const double norm = std::hypot(direction[0], config.dim == 2 ? direction[1] : 0.0);
    if (norm == 0.0) throw ConfigError("caloric probe: direction must be nonzero");
    CaloricProbe p;
    p.kind = ProbeKind::exp_probe;
    p.direction = {direction[0] / norm, config.dim == 2 ? direction[1] / norm : 0.0};
    p.frequency = z;
    p.anchor = anchor;
    p.kappa = probe_kappa(config, z);
    return p;
}

CaloricProbe make_laplace_probe(const ProblemConfig& config, const Point& direction,
                                std::complex<double> z, const Point& anchor) {
    CaloricProbe p = make_exp_probe(config, direction, z, anchor);
    p.kind = ProbeKind::laplace_probe;
    return p;
}

CaloricProbe make_poly_probe(const ProblemConfig& config, int degree, const Point& anchor) {
    if (config.dim != 2) throw ConfigError("poly probe: two-dimensional domains only");
    if (degree < 0) throw ConfigError("poly probe: degree must be >= 0");
    require_compatible(config, ProbeKind::poly_probe);
    CaloricProbe p;
    p.kind = ProbeKind::poly_probe;
    p.degree = degree;
    p.anchor = anchor;
    return p;
}

CaloricProbe make_affine_probe(const ProblemConfig& config, int degree, const Point& anchor) {
    if (config.dim != 1) throw ConfigError("affine probe: one-dimensional domains only");
    if (degree != 0 && degree != 1) throw ConfigError("affine probe: degree must be 0 or 1");
    require_compatible(config, ProbeKind::affine_1d);
    CaloricProbe p;
    p.kind = ProbeKind::affine_1d;
    p.degree = degree;
    p.anchor = anchor;
    return p;
}

std::complex<double> CaloricProbe::value(const ProblemConfig& config, const Point& x) const {
    const Complex drift = drift_factor(config, *this, x);
    switch (kind) {
        case ProbeKind::exp_probe:
        case ProbeKind::laplace_probe: {
            Complex arg = kappa * ((x[0] - anchor[0]) * direction[0]);
            if (config.dim == 2) arg += kappa * ((x[1] - anchor[1]) * direction[1]);
            return drift * std::exp(arg);
        }
        case ProbeKind::poly_probe: {
            const Complex zeta(x[0] - anchor[0], x[1] - anchor[1]);
            return drift * std::pow(zeta, degree);
        }
        case ProbeKind::affine_1d:
            return drift * (degree == 0 ? 1.0 : x[0] - anchor[0]);
    }
    return {};
}

std::array<std::complex<double>, 2> CaloricProbe::gradient(const ProblemConfig& config,
                                                           const Point& x) const {
    const Complex v = value(config, x);
    const Complex half_a0 = -0.5 * config.advection[0];
    const Complex half_a1 = -0.5 * (config.dim == 2 ? config.advection[1] : 0.0);
    switch (kind) {
        case ProbeKind::exp_probe:
        case ProbeKind::laplace_probe:
            return {v * (half_a0 + kappa * direction[0]), v * (half_a1 + kappa * direction[1])};
        case ProbeKind::poly_probe: {
            const Complex drift = drift_factor(config, *this, x);
            const Complex zeta(x[0] - anchor[0], x[1] - anchor[1]);
            const Complex dz = degree == 0
                                   ? Complex(0.0, 0.0)
                                   : static_cast<double>(degree) * std::pow(zeta, degree - 1);
            return {v * half_a0 + drift * dz, v * half_a1 + drift * dz * Complex(0.0, 1.0)};
        }
        case ProbeKind::affine_1d: {
            const Complex drift = drift_factor(config, *this, x);
            return {v * half_a0 + (degree == 1 ? drift : Complex(0.0, 0.0)), Complex(0.0, 0.0)};
        }
    }
    return {};
}

std::complex<double> CaloricProbe::flux(const ProblemConfig& config, const Point& x,
                                        const Point& normal) const {
    const auto g = gradient(config, x);
    Complex f = g[0] * normal[0];
    double an = config.advection[0] * normal[0];
    if (config.dim == 2) {
        f += g[1] * normal[1];
        an += config.advection[1] * normal[1];
    }
    return f + an * value(config, x);
}

}  // namespace adsrc
