#include "adsrc/kernels.hpp"

namespace adsrc::kernels::scalar {

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double weighted_dot(const double* w, const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * y[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpby(double a, const double* x, double b, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void scale(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void csr_spmv(std::size_t n_rows, const int* row_offsets, const int* col_indices,
              const double* values, const double* x, double* y) {
    for (std::size_t r = 0; r < n_rows; ++r) {
        double s = 0.0;
        for (int k = row_offsets[r]; k < row_offsets[r + 1]; ++k)
            s += values[k] * x[col_indices[k]];
        y[r] = s;
    }
}

}  // namespace adsrc::kernels::scalar
