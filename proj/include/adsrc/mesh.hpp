#pragma once

#include <array>
#include <vector>

namespace adsrc {

using Point = std::array<double, 2>;  // y unused in 1D

/// Uniform triangulation of an interval (0,l) or square (0,L)^2.
/// Square cells are all cut along the lower-left to upper-right diagonal so
/// meshes are bit-reproducible.
struct SpaceMesh {
    int dim = 1;
    double domain_length = 1.0;
    double mesh_size = 0.0;
    int cells_per_side = 0;
    std::vector<Point> node_coords;
    std::vector<std::array<int, 3>> elements;  // third index -1 for segments

    std::vector<int> boundary_nodes;  // ascending node ids
    struct BoundaryEdge {
        int a, b;
        Point normal;  // outward unit normal
    };
    std::vector<BoundaryEdge> boundary_edges;  // 2D; in 1D the two endpoint "edges" with a==b

    int n_nodes() const { return static_cast<int>(node_coords.size()); }
    int n_elements() const { return static_cast<int>(elements.size()); }
};

SpaceMesh build_interval_mesh(double length, double h);
SpaceMesh build_square_mesh(double side, double h);

/// Lowest-index element containing x (ties on shared faces resolved by index order).
/// Returns the element index and barycentric coordinates of x in it.
int find_containing_element(const SpaceMesh& mesh, const Point& x, std::array<double, 3>& bary);

bool point_in_domain(const SpaceMesh& mesh, const Point& x, double tol = 1e-12);

}  // namespace adsrc
