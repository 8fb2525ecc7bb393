#pragma once

#include <array>
#include <complex>

#include "adsrc/fem.hpp"

namespace adsrc {

enum class ProbeKind { exp_probe, poly_probe, laplace_probe, affine_1d };

/// Closed-form solutions v of the shifted adjoint equation
///   -div(grad v) - A.grad v + mu v + z v = 0,
/// used to pair boundary data against interior source information.
///
/// All kinds share the drift factor e^{-A.(x-anchor)/2}:
///  - exp_probe / laplace_probe: core exp(kappa w.(x-anchor)),
///    kappa = sqrt(mu + |A|^2/4 + z) (principal branch), any z;
///  - poly_probe (d=2): core ((x1-a1) + i(x2-a2))^degree, needs mu + |A|^2/4 = 0, z = 0;
///  - affine_1d (d=1): core (x-a)^degree, degree 0 or 1, same compatibility condition.
struct CaloricProbe {
    ProbeKind kind = ProbeKind::exp_probe;
    Point direction{1.0, 0.0};
    std::complex<double> frequency{0.0, 0.0};  // z
    int degree = 0;
    Point anchor{0.0, 0.0};
    std::complex<double> kappa{0.0, 0.0};

    std::complex<double> value(const ProblemConfig& config, const Point& x) const;
    std::array<std::complex<double>, 2> gradient(const ProblemConfig& config, const Point& x) const;
    /// d_nu v + (A.nu) v at x for outward normal nu.
    std::complex<double> flux(const ProblemConfig& config, const Point& x, const Point& normal) const;

    bool is_steady() const { return frequency == std::complex<double>(0.0, 0.0); }
};

CaloricProbe make_exp_probe(const ProblemConfig& config, const Point& direction,
                            std::complex<double> z = {0.0, 0.0}, const Point& anchor = {0.0, 0.0});
CaloricProbe make_laplace_probe(const ProblemConfig& config, const Point& direction,
                                std::complex<double> z, const Point& anchor);
CaloricProbe make_poly_probe(const ProblemConfig& config, int degree,
                             const Point& anchor = {0.0, 0.0});
CaloricProbe make_affine_probe(const ProblemConfig& config, int degree,
                               const Point& anchor = {0.0, 0.0});

/// sqrt(mu + |A|^2/4 + z), principal branch.
std::complex<double> probe_kappa(const ProblemConfig& config, std::complex<double> z);

}  // namespace adsrc
