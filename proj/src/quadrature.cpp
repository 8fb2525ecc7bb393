#include "adsrc/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace adsrc {

namespace {

double simpson_recurse(const std::function<double(double)>& f, double a, double b, double fa,
                       double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth) {
    if (!(abs_tol > 0.0)) throw std::invalid_argument("integrate_adaptive: tolerance must be > 0");
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_recurse(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

std::vector<double> trapezoid_weights(std::size_t n_points, double dt) {
    if (n_points == 0) return {};
    if (n_points == 1) return {0.0};
    std::vector<double> w(n_points, dt);
    w.front() = 0.5 * dt;
    w.back() = 0.5 * dt;
    return w;
}

double trapezoid(const std::vector<double>& samples, double dt) {
    if (samples.size() < 2) return 0.0;
    double s = 0.5 * (samples.front() + samples.back());
    for (std::size_t i = 1; i + 1 < samples.size(); ++i) s += samples[i];
    return s * dt;
}

}  // namespace adsrc
