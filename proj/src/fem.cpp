#include "adsrc/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "adsrc/errors.hpp"

namespace adsrc {

void validate(const ProblemConfig& config) {
    if (config.dim != 1 && config.dim != 2) throw ConfigError("config: dim must be 1 or 2");
    if (config.domain_length <= 0.0) throw ConfigError("config: domain_length must be > 0");
    if (config.horizon <= 0.0) throw ConfigError("config: horizon T must be > 0");
    if (!(config.support_end > 0.0 && config.support_end < config.horizon))
        throw ConfigError("config: need 0 < T0 < T");
    if (!(config.obs_start > config.support_end && config.obs_start < config.horizon))
        throw ConfigError("config: need T0 < T1 < T");
}

SourceModel make_source_model(std::vector<Point> locations, std::vector<double> amplitude_times,
                              std::vector<std::vector<double>> amplitudes,
                              const ProblemConfig& config, const SpaceMesh& mesh,
                              bool enforce_support) {
    if (locations.size() != amplitudes.size())
        throw ConfigError("source model: one amplitude series per location required");
    if (!std::is_sorted(amplitude_times.begin(), amplitude_times.end()))
        throw ConfigError("source model: amplitude grid must be sorted");
    const double margin = 2.0 * mesh.mesh_size;
    const double L = config.domain_length;
    for (const auto& x : locations) {
        bool interior = x[0] >= margin && x[0] <= L - margin;
        if (config.dim == 2) interior = interior && x[1] >= margin && x[1] <= L - margin;
        if (!interior)
            throw ConfigError("source model: location closer than 2h to the boundary");
    }
    for (const auto& series : amplitudes) {
        if (series.size() != amplitude_times.size())
            throw ConfigError("source model: amplitude series length mismatch");
        if (enforce_support)
            for (std::size_t i = 0; i < series.size(); ++i)
                if (amplitude_times[i] > config.support_end && std::abs(series[i]) > 1e-12)
                    throw ConfigError("source model: amplitude not supported in [0, T0]");
    }
    SourceModel s;
    s.n_sources = static_cast<int>(locations.size());
    s.locations = std::move(locations);
    s.amplitude_times = std::move(amplitude_times);
    s.amplitudes = std::move(amplitudes);
    return s;
}

double amplitude_at(const SourceModel& sources, int k, double t) {
    const auto& ts = sources.amplitude_times;
    const auto& ys = sources.amplitudes[k];
    if (ts.empty() || t < ts.front() - 1e-14 || t > ts.back() + 1e-14) return 0.0;
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    if (it == ts.begin()) return ys.front();
    if (it == ts.end()) return ys.back();
    const std::size_t i = static_cast<std::size_t>(it - ts.begin());
    const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    return (1.0 - w) * ys[i - 1] + w * ys[i];
}

Operators assemble_operators(const SpaceMesh& mesh, const Point& advection, double reaction) {
    std::vector<Triplet> tm, tk, tb;
    const int n = mesh.n_nodes();

    if (mesh.dim == 1) {
        for (const auto& e : mesh.elements) {
            const int a = e[0], b = e[1];
            const double h = mesh.node_coords[b][0] - mesh.node_coords[a][0];
            const double m_d = 2.0 * h / 6.0, m_o = h / 6.0;
            tm.emplace_back(a, a, m_d);
            tm.emplace_back(b, b, m_d);
            tm.emplace_back(a, b, m_o);
            tm.emplace_back(b, a, m_o);
            const double k = 1.0 / h;
            tk.emplace_back(a, a, k);
            tk.emplace_back(b, b, k);
            tk.emplace_back(a, b, -k);
            tk.emplace_back(b, a, -k);
            // int (A phi_j') phi_i over the element
            const double c = 0.5 * advection[0];
            tb.emplace_back(a, a, -c);
            tb.emplace_back(a, b, c);
            tb.emplace_back(b, a, -c);
            tb.emplace_back(b, b, c);
        }
    } else {
        for (const auto& e : mesh.elements) {
            const Point& p0 = mesh.node_coords[e[0]];
            const Point& p1 = mesh.node_coords[e[1]];
            const Point& p2 = mesh.node_coords[e[2]];
            const double det =
                (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
            const double area = 0.5 * det;  // elements stored counterclockwise
            // grad phi_i = (b_i, c_i) / (2 area), cyclic differences
            const double gb[3] = {p1[1] - p2[1], p2[1] - p0[1], p0[1] - p1[1]};
            const double gc[3] = {p2[0] - p1[0], p0[0] - p2[0], p1[0] - p0[0]};
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double kij = (gb[i] * gb[j] + gc[i] * gc[j]) / (4.0 * area);
                    tk.emplace_back(e[i], e[j], kij);
                    const double mij = area / 12.0 * (i == j ? 2.0 : 1.0);
                    tm.emplace_back(e[i], e[j], mij);
                    const double adv_j = (advection[0] * gb[j] + advection[1] * gc[j]) / (2.0 * area);
                    tb.emplace_back(e[i], e[j], adv_j * area / 3.0);
                }
        }
    }

    Operators ops;
    ops.mass = csr_from_triplets(tm, n, n);
    ops.stiffness = csr_from_triplets(tk, n, n);
    ops.advection = csr_from_triplets(tb, n, n);
    ops.spatial = add_scaled(add_scaled(ops.stiffness, ops.advection, 1.0), ops.mass, reaction);
    return ops;
}

std::vector<double> point_source_load(const SpaceMesh& mesh, const Point& x0) {
    std::array<double, 3> bary;
    const int e = find_containing_element(mesh, x0, bary);
    std::vector<double> load(mesh.n_nodes(), 0.0);
    const auto& el = mesh.elements[e];
    const int nv = mesh.dim == 1 ? 2 : 3;
    for (int v = 0; v < nv; ++v) load[el[v]] += std::max(bary[v], 0.0);
    return load;
}

BoundaryQuadrature boundary_quadrature(const SpaceMesh& mesh) {
    BoundaryQuadrature q;
    q.boundary_index = mesh.boundary_nodes;
    const int nb = static_cast<int>(q.boundary_index.size());
    std::vector<double> w(mesh.n_nodes(), 0.0);
    if (mesh.dim == 1) {
        w[mesh.boundary_nodes.front()] = 1.0;
        w[mesh.boundary_nodes.back()] = 1.0;
    } else {
        for (const auto& e : mesh.boundary_edges) {
            const Point& pa = mesh.node_coords[e.a];
            const Point& pb = mesh.node_coords[e.b];
            const double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
            w[e.a] += 0.5 * len;
            w[e.b] += 0.5 * len;
        }
    }
    std::vector<Triplet> t;
    q.weights.resize(nb);
    for (int i = 0; i < nb; ++i) {
        q.weights[i] = w[q.boundary_index[i]];
        t.emplace_back(i, i, q.weights[i]);
    }
    q.boundary_mass = csr_from_triplets(t, nb, nb);
    return q;
}

double evaluate_field(const SpaceMesh& mesh, std::span<const double> coeffs, const Point& x) {
    if (static_cast<int>(coeffs.size()) != mesh.n_nodes())
        throw std::invalid_argument("evaluate_field: coefficient size mismatch");
    std::array<double, 3> bary;
    const int e = find_containing_element(mesh, x, bary);
    const auto& el = mesh.elements[e];
    double v = bary[0] * coeffs[el[0]] + bary[1] * coeffs[el[1]];
    if (mesh.dim == 2) v += bary[2] * coeffs[el[2]];
    return v;
}

std::vector<double> initial_values(const ProblemConfig& config, const SpaceMesh& mesh) {
    if (config.initial_condition.empty()) return std::vector<double>(mesh.n_nodes(), 0.0);
    if (static_cast<int>(config.initial_condition.size()) != mesh.n_nodes())
        throw ConfigError("initial condition: nodal sample count does not match the mesh");
    return config.initial_condition;
}

}  // namespace adsrc
