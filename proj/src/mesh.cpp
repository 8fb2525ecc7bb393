#include "adsrc/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "adsrc/errors.hpp"

namespace adsrc {

namespace {

int near_integer_cells(double length, double h, const char* what) {
    if (h <= 0.0 || h >= length)
        throw ConfigError(std::string(what) + ": mesh size must satisfy 0 < h < length");
    const double ratio = length / h;
    const int n = static_cast<int>(std::lround(ratio));
    if (n < 1 || std::abs(ratio - n) > 1e-6 * ratio)
        throw ConfigError(std::string(what) + ": length/h = " + std::to_string(ratio) +
                          " is not near an integer");
    return n;
}

}  // namespace

SpaceMesh build_interval_mesh(double length, double h) {
    const int n = near_integer_cells(length, h, "build_interval_mesh");
    SpaceMesh mesh;
    mesh.dim = 1;
    mesh.domain_length = length;
    mesh.cells_per_side = n;
    mesh.mesh_size = length / n;
    mesh.node_coords.resize(n + 1);
    for (int i = 0; i <= n; ++i) mesh.node_coords[i] = {i * length / n, 0.0};
    mesh.node_coords[n] = {length, 0.0};
    mesh.elements.resize(n);
    for (int i = 0; i < n; ++i) mesh.elements[i] = {i, i + 1, -1};
    mesh.boundary_nodes = {0, n};
    mesh.boundary_edges = {{0, 0, {-1.0, 0.0}}, {n, n, {1.0, 0.0}}};
    return mesh;
}

SpaceMesh build_square_mesh(double side, double h) {
    const int n = near_integer_cells(side, h, "build_square_mesh");
    const int ns = n + 1;
    SpaceMesh mesh;
    mesh.dim = 2;
    mesh.domain_length = side;
    mesh.cells_per_side = n;
    mesh.mesh_size = side / n;
    mesh.node_coords.resize(static_cast<std::size_t>(ns) * ns);
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            mesh.node_coords[static_cast<std::size_t>(j) * ns + i] = {i * side / n, j * side / n};

    auto id = [ns](int i, int j) { return j * ns + i; };
    mesh.elements.reserve(static_cast<std::size_t>(2) * n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            // diagonal from (i,j) to (i+1,j+1)
            mesh.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            mesh.elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }

    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            if (i == 0 || i == n || j == 0 || j == n) mesh.boundary_nodes.push_back(id(i, j));

    for (int i = 0; i < n; ++i) mesh.boundary_edges.push_back({id(i, 0), id(i + 1, 0), {0.0, -1.0}});
    for (int j = 0; j < n; ++j) mesh.boundary_edges.push_back({id(n, j), id(n, j + 1), {1.0, 0.0}});
    for (int i = n; i > 0; --i) mesh.boundary_edges.push_back({id(i, n), id(i - 1, n), {0.0, 1.0}});
    for (int j = n; j > 0; --j) mesh.boundary_edges.push_back({id(0, j), id(0, j - 1), {-1.0, 0.0}});
    return mesh;
}

bool point_in_domain(const SpaceMesh& mesh, const Point& x, double tol) {
    const double L = mesh.domain_length;
    if (x[0] < -tol || x[0] > L + tol) return false;
    if (mesh.dim == 2 && (x[1] < -tol || x[1] > L + tol)) return false;
    return true;
}

namespace {

std::array<double, 3> triangle_barycentric(const SpaceMesh& mesh, int elem, const Point& x) {
    const auto& e = mesh.elements[elem];
    const Point& p0 = mesh.node_coords[e[0]];
    const Point& p1 = mesh.node_coords[e[1]];
    const Point& p2 = mesh.node_coords[e[2]];
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    const double l1 = ((x[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (x[1] - p0[1])) / det;
    const double l2 = ((p1[0] - p0[0]) * (x[1] - p0[1]) - (x[0] - p0[0]) * (p1[1] - p0[1])) / det;
    return {1.0 - l1 - l2, l1, l2};
}

}  // namespace

int find_containing_element(const SpaceMesh& mesh, const Point& x, std::array<double, 3>& bary) {
    if (!point_in_domain(mesh, x))
        throw std::invalid_argument("find_containing_element: point outside domain");
    const int n = mesh.cells_per_side;
    const double hc = mesh.domain_length / n;
    const double tol = 1e-12;

    if (mesh.dim == 1) {
        int ci = std::min(static_cast<int>(std::floor(x[0] / hc)), n - 1);
        // prefer the lower-index neighbor when x sits on a shared node
        for (int e = std::max(0, ci - 1); e <= ci; ++e) {
            const double xa = mesh.node_coords[mesh.elements[e][0]][0];
            const double xi = (x[0] - xa) / hc;
            if (xi >= -tol && xi <= 1.0 + tol) {
                bary = {1.0 - xi, xi, 0.0};
                return e;
            }
        }
        throw std::invalid_argument("find_containing_element: lookup failed");
    }

    int ci = std::min(std::max(static_cast<int>(std::floor(x[0] / hc)), 0), n - 1);
    int cj = std::min(std::max(static_cast<int>(std::floor(x[1] / hc)), 0), n - 1);
    int best = -1;
    for (int j = std::max(0, cj - 1); j <= cj && best < 0; ++j)
        for (int i = std::max(0, ci - 1); i <= ci && best < 0; ++i)
            for (int half = 0; half < 2 && best < 0; ++half) {
                const int e = 2 * (j * n + i) + half;
                const auto b = triangle_barycentric(mesh, e, x);
                if (b[0] >= -tol && b[1] >= -tol && b[2] >= -tol) {
                    bary = b;
                    best = e;
                }
            }
    if (best < 0) throw std::invalid_argument("find_containing_element: lookup failed");
    return best;
}

}  // namespace adsrc
