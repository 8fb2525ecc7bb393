#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "adsrc/errors.hpp"
#include "adsrc/fem.hpp"
#include "adsrc/kernels.hpp"
#include "adsrc/mesh.hpp"

using namespace adsrc;

namespace {

double quadratic_form(const SparseMatrix& m, const std::vector<double>& u,
                      const std::vector<double>& v) {
    const auto mv = spmv(m, v);
    return kernels::dot(u.data(), mv.data(), u.size());
}

std::vector<double> nodal_samples(const SpaceMesh& mesh,
                                  const std::function<double(double, double)>& f) {
    std::vector<double> out(mesh.n_nodes());
    for (int i = 0; i < mesh.n_nodes(); ++i)
        out[i] = f(mesh.node_coords[i][0], mesh.node_coords[i][1]);
    return out;
}

}  // namespace

TEST_CASE("interval mesh construction") {
    const auto m = build_interval_mesh(1.0, 0.5);
    REQUIRE(m.n_nodes() == 3);
    CHECK(m.node_coords[1][0] == doctest::Approx(0.5));
    CHECK(m.n_elements() == 2);
    CHECK(m.boundary_nodes == std::vector<int>{0, 2});

    CHECK(build_interval_mesh(1.0, 4e-3).n_nodes() == 251);
    CHECK_THROWS_AS(build_interval_mesh(1.0, 0.3), ConfigError);
    CHECK_THROWS_AS(build_interval_mesh(1.0, -0.1), ConfigError);
    CHECK_THROWS_AS(build_interval_mesh(1.0, 1.5), ConfigError);
}

TEST_CASE("square mesh construction") {
    const auto m = build_square_mesh(1.0, 0.5);
    CHECK(m.n_nodes() == 9);
    CHECK(m.n_elements() == 8);
    CHECK(build_square_mesh(1.0, 2e-2).n_nodes() == 51 * 51);

    // triangle areas partition the square
    for (double h : {0.5, 0.25, 0.125}) {
        const auto mesh = build_square_mesh(1.0, h);
        double total = 0.0;
        for (const auto& e : mesh.elements) {
            const Point& a = mesh.node_coords[e[0]];
            const Point& b = mesh.node_coords[e[1]];
            const Point& c = mesh.node_coords[e[2]];
            total += 0.5 * std::abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
    }

    // every boundary edge has an outward unit normal
    for (const auto& e : m.boundary_edges) {
        CHECK(std::hypot(e.normal[0], e.normal[1]) == doctest::Approx(1.0));
        const Point& mid = m.node_coords[e.a];
        const double push_x = mid[0] + 0.1 * e.normal[0];
        const double push_y = mid[1] + 0.1 * e.normal[1];
        CHECK((push_x < -1e-9 || push_x > 1.0 + 1e-9 || push_y < -1e-9 || push_y > 1.0 + 1e-9));
    }
}

TEST_CASE("assembled operators match hand results in 1D") {
    const auto mesh = build_interval_mesh(1.0, 0.5);
    const auto ops = assemble_operators(mesh, {0.0, 0.0}, 0.0);
    CHECK(ops.spatial.values == std::vector<double>{2.0, -2.0, -2.0, 4.0, -2.0, -2.0, 2.0});

    // consistent P1 mass: row sums are the lumped nodal volumes
    const auto row_sums = spmv(ops.mass, std::vector<double>(3, 1.0));
    CHECK(row_sums[0] == doctest::Approx(0.25));
    CHECK(row_sums[1] == doctest::Approx(0.5));
    CHECK(row_sums[2] == doctest::Approx(0.25));
    CHECK(ops.mass.values[0] == doctest::Approx(2.0 * 0.5 / 6.0));
}

TEST_CASE("operator identities on meshes in both dimensions") {
    for (int dim : {1, 2}) {
        const double mu = 0.8;
        const Point a{0.0, 0.0};
        const auto mesh =
            dim == 1 ? build_interval_mesh(1.0, 0.1) : build_square_mesh(1.0, 0.2);
        const auto ops = assemble_operators(mesh, a, mu);
        const std::vector<double> ones(mesh.n_nodes(), 1.0);

        // grad(const) = 0: spatial * 1 = mu * mass * 1
        const auto s1 = spmv(ops.spatial, ones);
        const auto m1 = spmv(ops.mass, ones);
        for (int i = 0; i < mesh.n_nodes(); ++i)
            CHECK(s1[i] == doctest::Approx(mu * m1[i]).epsilon(1e-12));

        // stiffness annihilates constants exactly
        const auto k1 = spmv(ops.stiffness, ones);
        for (double v : k1) CHECK(std::abs(v) < 1e-13);

        // total mass equals the domain measure
        CHECK(kernels::dot(ones.data(), m1.data(), ones.size()) ==
              doctest::Approx(1.0).epsilon(1e-13));

        // mass is SPD (Gershgorin-cheap check: positive quadratic form on randoms)
        std::mt19937_64 rng(2 + dim);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (int rep = 0; rep < 10; ++rep) {
            std::vector<double> x(mesh.n_nodes());
            for (auto& v : x) v = dist(rng);
            CHECK(quadratic_form(ops.mass, x, x) > 0.0);
        }
    }
}

TEST_CASE("advection pairing reduces to a wall term") {
    // u' B v + v' B u = oint (A.nu) u v, exactly for P1; the trapezoid wall
    // quadrature of the product adds an O(h^2) error.
    const Point a{0.7, -0.4};
    auto f_u = [](double x, double y) { return std::sin(std::numbers::pi * x) * std::cos(y); };
    auto f_v = [](double x, double y) { return x * x + 0.5 * y; };
    double prev_err = 0.0;
    for (int level = 0; level < 3; ++level) {
        const double h = 0.1 / (1 << level);
        const auto mesh = build_square_mesh(1.0, h);
        const auto ops = assemble_operators(mesh, a, 0.0);
        const auto u = nodal_samples(mesh, f_u);
        const auto v = nodal_samples(mesh, f_v);
        const double lhs = quadratic_form(ops.advection, u, v) +
                           quadratic_form(ops.advection, v, u);
        double wall = 0.0;
        for (const auto& e : mesh.boundary_edges) {
            const double an = a[0] * e.normal[0] + a[1] * e.normal[1];
            const Point& pa = mesh.node_coords[e.a];
            const Point& pb = mesh.node_coords[e.b];
            const double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
            wall += 0.5 * len * an *
                    (u[e.a] * v[e.a] + u[e.b] * v[e.b]);
        }
        const double err = std::abs(lhs - wall);
        if (level > 0) CHECK(err < prev_err / 3.2);  // second order
        prev_err = err;
    }
}

TEST_CASE("point source load is a barycentric pairing") {
    const auto mesh = build_interval_mesh(1.0, 0.5);
    CHECK(point_source_load(mesh, {0.5, 0.0}) == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(point_source_load(mesh, {0.25, 0.0}) == std::vector<double>{0.5, 0.5, 0.0});
    CHECK_THROWS_AS(point_source_load(mesh, {1.5, 0.0}), std::invalid_argument);

    const auto square = build_square_mesh(1.0, 0.25);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int rep = 0; rep < 25; ++rep) {
        const Point x{dist(rng), dist(rng)};
        const auto load = point_source_load(square, x);
        double sum = 0.0;
        int support = 0;
        for (double v : load) {
            CHECK(v >= 0.0);
            sum += v;
            if (v > 0.0) ++support;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(support <= 3);
    }
}

TEST_CASE("boundary quadrature") {
    const auto interval = build_interval_mesh(1.0, 0.25);
    const auto q1 = boundary_quadrature(interval);
    CHECK(q1.weights == std::vector<double>{1.0, 1.0});

    const auto square = build_square_mesh(1.0, 0.25);
    const auto q2 = boundary_quadrature(square);
    double perimeter = 0.0;
    for (double w : q2.weights) perimeter += w;
    CHECK(perimeter == doctest::Approx(4.0).epsilon(1e-13));

    // O(h^2) convergence of the trapezoid rule on a fixed smooth trace
    auto g = [](double x, double y) { return std::exp(x) * std::cos(2.0 * y) + y; };
    // exact wall integral of g^2 via dense 1D Simpson on each side
    auto side_integral = [&](const std::function<double(double)>& f) {
        const int n = 4000;
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = static_cast<double>(i) / n, b = static_cast<double>(i + 1) / n;
            const double m = 0.5 * (a + b);
            s += (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
        }
        return s;
    };
    const double exact =
        side_integral([&](double t) { return g(t, 0.0) * g(t, 0.0); }) +
        side_integral([&](double t) { return g(t, 1.0) * g(t, 1.0); }) +
        side_integral([&](double t) { return g(0.0, t) * g(0.0, t); }) +
        side_integral([&](double t) { return g(1.0, t) * g(1.0, t); });
    double prev_err = 0.0;
    for (int level = 0; level < 3; ++level) {
        const auto mesh = build_square_mesh(1.0, 0.1 / (1 << level));
        const auto q = boundary_quadrature(mesh);
        double approx = 0.0;
        for (std::size_t c = 0; c < q.boundary_index.size(); ++c) {
            const Point& p = mesh.node_coords[q.boundary_index[c]];
            approx += q.weights[c] * g(p[0], p[1]) * g(p[0], p[1]);
        }
        const double err = std::abs(approx - exact);
        if (level > 0) CHECK(err < prev_err / 3.2);
        prev_err = err;
    }
}

TEST_CASE("evaluate_field interpolates") {
    const auto mesh = build_interval_mesh(1.0, 0.2);
    const std::vector<double> constant(mesh.n_nodes(), 3.25);
    CHECK(evaluate_field(mesh, constant, {0.37, 0.0}) == doctest::Approx(3.25));

    auto affine = nodal_samples(mesh, [](double x, double) { return 2.0 * x + 1.0; });
    CHECK(evaluate_field(mesh, affine, {0.3, 0.0}) == doctest::Approx(1.6));
    for (int i = 0; i < mesh.n_nodes(); ++i)
        CHECK(evaluate_field(mesh, affine, mesh.node_coords[i]) == doctest::Approx(affine[i]));

    const auto square = build_square_mesh(1.0, 0.25);
    auto plane = nodal_samples(square, [](double x, double y) { return 1.5 * x - 0.7 * y + 2.0; });
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const Point x{dist(rng), dist(rng)};
        CHECK(evaluate_field(square, plane, x) ==
              doctest::Approx(1.5 * x[0] - 0.7 * x[1] + 2.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(evaluate_field(square, plane, {1.2, 0.5}), std::invalid_argument);
}

TEST_CASE("source model validation") {
    ProblemConfig config;
    config.dim = 1;
    config.horizon = 2.0;
    config.support_end = 1.0;
    config.obs_start = 1.5;
    const auto mesh = build_interval_mesh(1.0, 0.05);
    const std::vector<double> times{0.0, 0.5, 1.0, 1.5, 2.0};

    CHECK_THROWS_AS(make_source_model({{0.05, 0.0}}, times, {{1, 1, 0, 0, 0}}, config, mesh),
                    ConfigError);
    CHECK_NOTHROW(make_source_model({{0.5, 0.0}}, times, {{1, 1, 0, 0, 0}}, config, mesh, true));
    CHECK_THROWS_AS(make_source_model({{0.5, 0.0}}, times, {{1, 1, 0, 0.2, 0}}, config, mesh,
                                      true),
                    ConfigError);

    const auto s = make_source_model({{0.5, 0.0}}, times, {{1, 1, 0, 0, 0}}, config, mesh);
    CHECK(amplitude_at(s, 0, 0.25) == doctest::Approx(1.0));
    CHECK(amplitude_at(s, 0, 0.75) == doctest::Approx(0.5));
    CHECK(amplitude_at(s, 0, 3.0) == doctest::Approx(0.0));
}
