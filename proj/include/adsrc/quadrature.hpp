#pragma once

#include <functional>
#include <vector>

namespace adsrc {

/// Adaptive Simpson integration of f over [a, b] to absolute tolerance abs_tol.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth = 48);

/// Trapezoid weights for a uniform grid with n_points samples and spacing dt.
std::vector<double> trapezoid_weights(std::size_t n_points, double dt);

/// Trapezoid value of samples on a uniform grid.
double trapezoid(const std::vector<double>& samples, double dt);

}  // namespace adsrc
