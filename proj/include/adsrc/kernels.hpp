#pragma once

#include <cstddef>

// Data-parallel inner loops used by the sparse solvers and time steppers.
// Scalar reference implementations live in kernels::scalar; SIMD variants are
// selected at runtime through the dispatched function pointers below and are
// equivalence-tested against the scalar path.

namespace adsrc::kernels {

using DotFn = double (*)(const double*, const double*, std::size_t);
using WeightedDotFn = double (*)(const double*, const double*, const double*, std::size_t);
using AxpyFn = void (*)(double, const double*, double*, std::size_t);
using AxpbyFn = void (*)(double, const double*, double, double*, std::size_t);
using ScaleFn = void (*)(double, double*, std::size_t);
using CsrSpmvFn = void (*)(std::size_t, const int*, const int*, const double*,
                           const double*, double*);

namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
double weighted_dot(const double* w, const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);          // y += a*x
void axpby(double a, const double* x, double b, double* y, std::size_t n);  // y = a*x + b*y
void scale(double a, double* x, std::size_t n);
void csr_spmv(std::size_t n_rows, const int* row_offsets, const int* col_indices,
              const double* values, const double* x, double* y);
}  // namespace scalar

#ifdef ADSRC_ENABLE_AVX2
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
double weighted_dot(const double* w, const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void axpby(double a, const double* x, double b, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
void csr_spmv(std::size_t n_rows, const int* row_offsets, const int* col_indices,
              const double* values, const double* x, double* y);
}  // namespace avx2
#endif

// Runtime-dispatched entry points. Set once at startup from CPU feature bits.
extern DotFn dot;
extern WeightedDotFn weighted_dot;
extern AxpyFn axpy;
extern AxpbyFn axpby;
extern ScaleFn scale;
extern CsrSpmvFn csr_spmv;

/// Name of the selected backend ("avx2" or "scalar"); recorded in run manifests.
const char* backend_name();

/// Force a backend by name (tests only). Returns false if unavailable.
bool force_backend(const char* name);

}  // namespace adsrc::kernels
