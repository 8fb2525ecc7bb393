#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "adsrc/errors.hpp"
#include "adsrc/fem.hpp"
#include "adsrc/kernels.hpp"
#include "adsrc/mesh.hpp"
#include "adsrc/sparse.hpp"

using namespace adsrc;

namespace {

double nrm2(const std::vector<double>& v) {
    return std::sqrt(kernels::dot(v.data(), v.data(), v.size()));
}

SparseMatrix stiffness_1d_two_elements() {
    // hand assembly of (1/h)[[1,-1],[-1,1]] per element, h = 0.5
    std::vector<Triplet> t;
    const double k = 2.0;
    for (int e = 0; e < 2; ++e) {
        t.emplace_back(e, e, k);
        t.emplace_back(e + 1, e + 1, k);
        t.emplace_back(e, e + 1, -k);
        t.emplace_back(e + 1, e, -k);
    }
    return csr_from_triplets(t, 3, 3);
}

}  // namespace

TEST_CASE("csr_from_triplets canonicalizes") {
    SUBCASE("identity") {
        const auto m = csr_from_triplets({{0, 0, 1.0}, {1, 1, 1.0}}, 2, 2);
        CHECK(m.row_offsets == std::vector<int>{0, 1, 2});
        CHECK(m.col_indices == std::vector<int>{0, 1});
        CHECK(m.values == std::vector<double>{1.0, 1.0});
    }
    SUBCASE("duplicates are summed") {
        const auto m = csr_from_triplets({{0, 0, 1.0}, {0, 0, 2.0}}, 1, 1);
        CHECK(m.values == std::vector<double>{3.0});
    }
    SUBCASE("1D stiffness on two elements is the expected tridiagonal") {
        const auto m = stiffness_1d_two_elements();
        CHECK(m.values == std::vector<double>{2.0, -2.0, -2.0, 4.0, -2.0, -2.0, 2.0});
        CHECK(m.row_offsets == std::vector<int>{0, 2, 5, 7});
    }
    SUBCASE("out-of-range index throws") {
        CHECK_THROWS_AS(csr_from_triplets({{0, 2, 1.0}}, 2, 2), std::invalid_argument);
        CHECK_THROWS_AS(csr_from_triplets({{-1, 0, 1.0}}, 2, 2), std::invalid_argument);
    }
    SUBCASE("invariants hold on a scrambled input") {
        const auto m = csr_from_triplets({{1, 3, 1.0}, {0, 2, 2.0}, {1, 0, 3.0}, {0, 0, 4.0}},
                                         2, 4);
        REQUIRE(m.row_offsets.size() == 3);
        CHECK(m.row_offsets.back() == m.nnz());
        for (int r = 0; r < m.n_rows; ++r)
            for (int k = m.row_offsets[r] + 1; k < m.row_offsets[r + 1]; ++k)
                CHECK(m.col_indices[k] > m.col_indices[k - 1]);
    }
}

TEST_CASE("spmv basics") {
    const auto id = csr_from_triplets({{0, 0, 1.0}, {1, 1, 1.0}}, 2, 2);
    CHECK(spmv(id, std::vector<double>{3.0, 4.0}) == std::vector<double>{3.0, 4.0});

    const auto zero = csr_from_triplets({}, 3, 3);
    CHECK(spmv(zero, std::vector<double>{1.0, 2.0, 3.0}) == std::vector<double>{0.0, 0.0, 0.0});

    // constants lie in the stiffness kernel
    const auto k = stiffness_1d_two_elements();
    const auto y = spmv(k, std::vector<double>{1.0, 1.0, 1.0});
    for (double v : y) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));

    CHECK_THROWS_AS(spmv(id, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("spmv is linear") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const auto mesh = build_square_mesh(1.0, 0.125);
    const auto ops = assemble_operators(mesh, {0.3, -0.2}, 0.7);
    const int n = mesh.n_nodes();
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = dist(rng);
    for (auto& v : y) v = dist(rng);
    const double a = 1.7, b = -0.6;
    std::vector<double> axby(n);
    for (int i = 0; i < n; ++i) axby[i] = a * x[i] + b * y[i];
    const auto lhs = spmv(ops.spatial, axby);
    const auto mx = spmv(ops.spatial, x);
    const auto my = spmv(ops.spatial, y);
    for (int i = 0; i < n; ++i)
        CHECK(lhs[i] == doctest::Approx(a * mx[i] + b * my[i]).epsilon(1e-12));
}

TEST_CASE("solve_linear all methods on small systems") {
    const auto id = csr_from_triplets({{0, 0, 1.0}, {1, 1, 1.0}}, 2, 2);
    const auto diag = csr_from_triplets({{0, 0, 2.0}, {1, 1, 4.0}}, 2, 2);
    const auto spd = csr_from_triplets({{0, 0, 4.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 3.0}}, 2, 2);
    for (auto method : {SolveMethod::direct_lu, SolveMethod::cg, SolveMethod::bicgstab}) {
        SolveOptions opts;
        opts.method = method;
        auto x = solve_linear(id, std::vector<double>{5.0, -1.0}, opts);
        CHECK(x[0] == doctest::Approx(5.0));
        CHECK(x[1] == doctest::Approx(-1.0));
        x = solve_linear(diag, std::vector<double>{2.0, 4.0}, opts);
        CHECK(x[0] == doctest::Approx(1.0));
        CHECK(x[1] == doctest::Approx(1.0));
        // closed-form 2x2 inverse
        x = solve_linear(spd, std::vector<double>{1.0, 2.0}, opts);
        CHECK(x[0] == doctest::Approx(1.0 / 11.0).epsilon(1e-9));
        CHECK(x[1] == doctest::Approx(7.0 / 11.0).epsilon(1e-9));
    }
}

TEST_CASE("solver failure paths") {
    SUBCASE("singular matrix under direct_lu") {
        const auto sing =
            csr_from_triplets({{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}}, 2, 2);
        SolveOptions opts;
        opts.method = SolveMethod::direct_lu;
        CHECK_THROWS_AS(solve_linear(sing, std::vector<double>{1.0, 0.0}, opts),
                        FactorizationError);
    }
    SUBCASE("iteration cap carries the achieved residual") {
        const auto mesh = build_interval_mesh(1.0, 0.01);
        const auto ops = assemble_operators(mesh, {0.0, 0.0}, 0.0);
        const auto system = add_scaled(ops.mass, ops.stiffness, 0.01);
        std::vector<double> b(mesh.n_nodes(), 1.0);
        SolveOptions opts;
        opts.method = SolveMethod::cg;
        opts.max_iter = 2;
        opts.rel_tol = 1e-14;
        try {
            solve_linear(system, b, opts);
            FAIL("expected SolverError");
        } catch (const SolverError& e) {
            CHECK(e.achieved_residual > 0.0);
            CHECK(std::isfinite(e.achieved_residual));
        }
    }
}

TEST_CASE("solve then multiply reproduces b on randomized SPD systems") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    int trials = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const double h = 1.0 / (4 + static_cast<int>(rng() % 28));
        const bool two_d = (rng() & 1u) != 0;
        const auto mesh = two_d ? build_square_mesh(1.0, std::max(h, 1.0 / 16))
                                : build_interval_mesh(1.0, h);
        const auto ops = assemble_operators(mesh, {0.0, 0.0}, 0.5);
        const auto system = add_scaled(ops.mass, ops.spatial, 0.05);
        for (int k = 0; k < 2; ++k, ++trials) {
            std::vector<double> b(mesh.n_nodes());
            for (auto& v : b) v = dist(rng);
            SolveOptions opts;
            opts.method = (rep & 1) ? SolveMethod::cg : SolveMethod::direct_lu;
            const auto x = solve_linear(system, b, opts);
            auto r = spmv(system, x);
            kernels::axpby(1.0, b.data(), -1.0, r.data(), r.size());
            CHECK(nrm2(r) <= opts.rel_tol * nrm2(b) * 1.000001);
        }
    }
    CHECK(trials >= 100);
}

TEST_CASE("banded LU survives pivoting and asymmetric systems") {
    // asymmetric advection-dominated system solved by both LU and BiCGStab
    const auto mesh = build_interval_mesh(1.0, 0.02);
    const auto ops = assemble_operators(mesh, {4.0, 0.0}, 0.3);
    const auto system = add_scaled(ops.mass, ops.spatial, 0.02);
    std::vector<double> b(mesh.n_nodes());
    for (int i = 0; i < mesh.n_nodes(); ++i) b[i] = std::sin(7.0 * i);
    SolveOptions lu_opts;
    lu_opts.method = SolveMethod::direct_lu;
    SolveOptions bi_opts;
    bi_opts.method = SolveMethod::bicgstab;
    const auto x_lu = solve_linear(system, b, lu_opts);
    const auto x_bi = solve_linear(system, b, bi_opts);
    for (std::size_t i = 0; i < x_lu.size(); ++i)
        CHECK(x_lu[i] == doctest::Approx(x_bi[i]).epsilon(1e-6));

    // a matrix that needs a row swap at the first pivot
    const auto piv = csr_from_triplets(
        {{0, 0, 1e-30}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}}, 2, 2);
    const auto x = BandedLu(piv).solve(std::vector<double>{1.0, 2.0});
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(1.0));
}

TEST_CASE("transpose and spmv_transpose agree") {
    const auto mesh = build_square_mesh(1.0, 0.25);
    const auto ops = assemble_operators(mesh, {0.4, 0.1}, 0.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> x(mesh.n_nodes());
    for (auto& v : x) v = dist(rng);
    const auto t = transpose(ops.advection);
    const auto y1 = spmv(t, x);
    const auto y2 = spmv_transpose(ops.advection, x);
    for (std::size_t i = 0; i < y1.size(); ++i)
        CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-13));
}

TEST_CASE("default solver choice follows the matrix structure") {
    CHECK(default_solve_options(1, false).method == SolveMethod::direct_lu);
    CHECK(default_solve_options(1, true).method == SolveMethod::direct_lu);
    CHECK(default_solve_options(2, false).method == SolveMethod::cg);
    CHECK(default_solve_options(2, true).method == SolveMethod::bicgstab);
}
