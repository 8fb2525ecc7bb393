#include "adsrc/config_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "adsrc/errors.hpp"

namespace adsrc {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: cannot parse number '" + s + "' for " + what);
    }
}

class ConfigReader {
public:
    explicit ConfigReader(KeyValueMap kv) : kv_(std::move(kv)) {}

    std::optional<std::string> find(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return std::nullopt;
        return it->second;
    }
    std::string required(const std::string& key) const {
        const auto v = find(key);
        if (!v) throw ConfigError("config: missing key '" + key + "'");
        return *v;
    }
    double number(const std::string& key) const { return to_double(required(key), key); }
    double number_or(const std::string& key, double fallback) const {
        const auto v = find(key);
        return v ? to_double(*v, key) : fallback;
    }
    int integer_or(const std::string& key, int fallback) const {
        return static_cast<int>(number_or(key, fallback));
    }

private:
    KeyValueMap kv_;
};

Point parse_point(const std::string& text, int dim) {
    const auto parts = split(text, ',');
    if (static_cast<int>(parts.size()) != dim)
        throw ConfigError("config: point '" + text + "' does not have " + std::to_string(dim) +
                          " coordinates");
    Point p{0.0, 0.0};
    for (int i = 0; i < dim; ++i) p[i] = to_double(parts[i], "point coordinate");
    return p;
}

}  // namespace

KeyValueMap parse_key_values(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config file " + file.string());
    KeyValueMap kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: malformed line '" + line + "'");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

double AmplitudeSpec::value(double t) const {
    if (kind == "exp") return a * std::exp(-b * t);
    if (kind == "ind") return t <= b + 1e-12 ? a : 0.0;  // left-continuous at the jump
    if (kind == "zero") return 0.0;
    throw ConfigError("amplitude spec: kind '" + kind + "' has no pointwise value");
}

AmplitudeSpec parse_amplitude_spec(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.empty()) throw ConfigError("amplitude spec: empty");
    AmplitudeSpec spec;
    spec.kind = parts[0];
    if (spec.kind == "zero") return spec;
    if (spec.kind == "scale") {
        if (parts.size() != 2) throw ConfigError("amplitude spec: scale needs one factor");
        spec.a = to_double(parts[1], "amplitude scale");
        return spec;
    }
    if (spec.kind == "exp" || spec.kind == "ind") {
        if (parts.size() != 3)
            throw ConfigError("amplitude spec '" + text + "': expected kind:a:b");
        spec.a = to_double(parts[1], "amplitude parameter");
        spec.b = to_double(parts[2], "amplitude parameter");
        return spec;
    }
    throw ConfigError("amplitude spec: unknown kind '" + spec.kind + "'");
}

ToolConfig parse_tool_config(const std::filesystem::path& file) {
    const ConfigReader r(parse_key_values(file));
    ToolConfig tc;
    tc.problem.dim = r.integer_or("dim", 1);
    tc.problem.domain_length = r.number("domain");
    if (const auto a = r.find("A")) {
        const auto parts = split(*a, ',');
        if (static_cast<int>(parts.size()) > tc.problem.dim)
            throw ConfigError("config: advection has more components than dim");
        for (std::size_t i = 0; i < parts.size(); ++i)
            tc.problem.advection[i] = to_double(parts[i], "A");
    }
    tc.problem.reaction = r.number_or("mu", 0.0);
    tc.problem.horizon = r.number("T");
    tc.problem.support_end = r.number_or("T0", 0.5 * tc.problem.horizon);
    tc.problem.obs_start = r.number_or("T1", 0.75 * tc.problem.horizon);
    tc.dx_fine = r.number("dx_fine");
    tc.dt_fine = r.number_or("dt_fine", tc.dx_fine);
    tc.dx_inv = r.number("dx_inv");
    tc.dt_inv = r.number_or("dt_inv", tc.dx_inv);

    for (const auto& item : split(r.required("sources"), ';')) {
        if (item.empty()) continue;
        const auto at = item.find('@');
        if (at == std::string::npos)
            throw ConfigError("config: source '" + item + "' must look like loc @ kind:a:b");
        tc.source_locations.push_back(parse_point(trim(item.substr(0, at)), tc.problem.dim));
        tc.source_amplitudes.push_back(parse_amplitude_spec(trim(item.substr(at + 1))));
    }
    if (tc.source_locations.empty()) throw ConfigError("config: no sources given");

    if (const auto init = r.find("init.x"))
        for (const auto& item : split(*init, ';'))
            if (!item.empty()) tc.init_locations.push_back(parse_point(item, tc.problem.dim));
    if (const auto init = r.find("init.lambda"))
        for (const auto& item : split(*init, ';'))
            if (!item.empty()) tc.init_amplitudes.push_back(parse_amplitude_spec(item));

    tc.lm.beta_x0 = r.number_or("lm.beta_x0", 1.0);
    tc.lm.beta_lambda0 = r.number_or("lm.beta_lambda0", 5.0);
    tc.lm.gamma_x = r.number_or("lm.gamma_x", 0.8);
    tc.lm.gamma_lambda = r.number_or("lm.gamma_lambda", 0.8);
    tc.lm.max_iters = r.integer_or("lm.max_iters", 100);
    tc.lm.fd_step = r.number_or("lm.fd_step", 0.0);
    tc.lm.eta = r.number_or("lm.eta", 1.1);
    tc.lm.noise_norm = r.number_or("lm.noise_norm", 0.0);
    if (const auto rule = r.find("lm.stop_rule")) {
        if (*rule == "discrepancy")
            tc.lm.stop_rule = StopRule::discrepancy;
        else if (*rule == "max_iters")
            tc.lm.stop_rule = StopRule::max_iters;
        else
            throw ConfigError("config: unknown lm.stop_rule '" + *rule + "'");
    }

    tc.direct_sigma = r.number_or("direct.sigma", 0.0);
    tc.direct_band_radius = r.number_or("direct.R", 0.0);
    tc.direct_n_freq = r.integer_or("direct.n_freq", 1201);
    tc.t_ext = r.number_or("direct.t_ext", 0.0);
    tc.noise_delta = r.number_or("noise.delta", 0.0);
    tc.seed = static_cast<unsigned>(r.integer_or("noise.seed", 0));

    validate(tc.problem);
    return tc;
}

std::vector<double> sample_amplitude(const std::function<double(double)>& fn,
                                     const TimeGrid& grid) {
    std::vector<double> out(grid.n_steps + 1);
    for (int n = 0; n <= grid.n_steps; ++n) out[n] = fn(grid.time(n));
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::filesystem::path& file, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write " + file.string());
    out << header << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + file.string());
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& file,
                                          std::string* header) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty csv " + file.string());
    if (header) *header = trim(line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        std::vector<double> row;
        for (const auto& cell : split(line, ','))
            row.push_back(cell == "nan" ? std::nan("") : to_double(cell, "csv cell"));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_trace_dir(const std::filesystem::path& dir, const BoundaryTrace& trace,
                     const SpaceMesh& mesh, const ProblemConfig& config) {
    std::filesystem::create_directories(dir);
    {
        std::vector<std::vector<double>> rows;
        rows.reserve(trace.values.size());
        for (std::size_t n = 0; n < trace.values.size(); ++n) {
            std::vector<double> row;
            row.push_back(trace.grid.time(static_cast<int>(n)));
            row.insert(row.end(), trace.values[n].begin(), trace.values[n].end());
            rows.push_back(std::move(row));
        }
        std::string header = "t";
        for (std::size_t c = 0; c < trace.boundary_index.size(); ++c)
            header += ",b" + std::to_string(c);
        write_csv(dir / "trace.csv", header, rows);
    }
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t c = 0; c < trace.boundary_index.size(); ++c) {
            const Point& p = mesh.node_coords[trace.boundary_index[c]];
            rows.push_back({static_cast<double>(c), static_cast<double>(trace.boundary_index[c]),
                            p[0], p[1]});
        }
        write_csv(dir / "boundary_nodes.csv", "column,node,x,y", rows);
    }
    {
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < mesh.n_nodes(); ++i)
            rows.push_back({static_cast<double>(i), mesh.node_coords[i][0],
                            mesh.node_coords[i][1], trace.final_snapshot[i]});
        write_csv(dir / "snapshot.csv", "node,x,y,value", rows);
    }
    {
        std::vector<std::vector<double>> rows{{static_cast<double>(config.dim),
                                               config.domain_length, trace.grid.t0,
                                               trace.grid.t_end,
                                               static_cast<double>(trace.grid.n_steps)}};
        write_csv(dir / "grid.csv", "dim,domain,t0,t_end,n_steps", rows);
    }
}

LoadedTrace read_trace_dir(const std::filesystem::path& dir, const SpaceMesh& mesh) {
    LoadedTrace loaded;
    auto grid_rows = read_csv(dir / "grid.csv");
    if (grid_rows.size() != 1 || grid_rows[0].size() != 5)
        throw IoError("grid.csv: malformed");
    loaded.trace.grid =
        TimeGrid{grid_rows[0][2], grid_rows[0][3], static_cast<int>(grid_rows[0][4])};

    auto node_rows = read_csv(dir / "boundary_nodes.csv");
    for (const auto& row : node_rows)
        loaded.trace.boundary_index.push_back(static_cast<int>(row[1]));
    if (loaded.trace.boundary_index != mesh.boundary_nodes)
        throw ConfigError("trace dir: boundary nodes do not match the mesh");

    auto rows = read_csv(dir / "trace.csv");
    if (static_cast<int>(rows.size()) != loaded.trace.grid.n_steps + 1)
        throw IoError("trace.csv: row count does not match the grid");
    for (auto& row : rows) {
        if (row.size() != loaded.trace.boundary_index.size() + 1)
            throw IoError("trace.csv: column count mismatch");
        loaded.trace.values.emplace_back(row.begin() + 1, row.end());
    }

    auto snap = read_csv(dir / "snapshot.csv");
    if (static_cast<int>(snap.size()) != mesh.n_nodes())
        throw IoError("snapshot.csv: node count mismatch");
    loaded.trace.final_snapshot.resize(mesh.n_nodes());
    for (const auto& row : snap)
        loaded.trace.final_snapshot[static_cast<int>(row[0])] = row[3];
    return loaded;
}

}  // namespace adsrc
