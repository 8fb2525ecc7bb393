#pragma once

#include <cstddef>
#include <span>
#include <tuple>
#include <vector>

namespace adsrc {

/// Compressed sparse row matrix. Within each row the column indices are
/// strictly increasing; row_offsets has n_rows+1 entries ending at nnz.
struct SparseMatrix {
    int n_rows = 0;
    int n_cols = 0;
    std::vector<int> row_offsets;
    std::vector<int> col_indices;
    std::vector<double> values;

    int nnz() const { return static_cast<int>(values.size()); }
};

enum class SolveMethod { direct_lu, cg, bicgstab };

struct SolveOptions {
    SolveMethod method = SolveMethod::direct_lu;
    double rel_tol = 1e-10;
    int max_iter = 10000;
};

using Triplet = std::tuple<int, int, double>;

/// Build canonical CSR from (row, col, value) triplets; duplicates are summed.
SparseMatrix csr_from_triplets(const std::vector<Triplet>& entries, int n_rows, int n_cols);

std::vector<double> spmv(const SparseMatrix& m, std::span<const double> x);

/// y = m^T x without forming the transpose.
std::vector<double> spmv_transpose(const SparseMatrix& m, std::span<const double> x);

SparseMatrix transpose(const SparseMatrix& m);

/// a + s*b for identically-sized matrices (pattern union).
SparseMatrix add_scaled(const SparseMatrix& a, const SparseMatrix& b, double s);

/// Banded LU with partial pivoting; factors once, solves many right-hand sides.
/// The bandwidth is detected from the sparsity pattern.
class BandedLu {
public:
    explicit BandedLu(const SparseMatrix& m);
    std::vector<double> solve(std::span<const double> b) const;
    int bandwidth_lower() const { return kl_; }
    int bandwidth_upper() const { return ku_; }
    /// Storage the factorization needs, in bytes, for a given matrix.
    static std::size_t predicted_bytes(const SparseMatrix& m);

private:
    int n_ = 0, kl_ = 0, ku_ = 0, ldab_ = 0;
    std::vector<double> ab_;   // band storage, column-major
    std::vector<int> piv_;
};

/// Solve m x = b with the requested method. Iterative methods use a Jacobi
/// preconditioner. Throws SolverError on non-convergence (carrying the achieved
/// residual) and FactorizationError on singular pivots.
std::vector<double> solve_linear(const SparseMatrix& m, std::span<const double> b,
                                 const SolveOptions& opts);

/// Method choice used by the forward solver: direct LU in 1D, CG for symmetric
/// 2D systems (A = 0), BiCGStab otherwise.
SolveOptions default_solve_options(int dim, bool has_advection);

}  // namespace adsrc
