#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adsrc/fem.hpp"
#include "adsrc/forward.hpp"
#include "adsrc/lm.hpp"

namespace adsrc {

/// Flat key=value text file; '#' starts a comment.
using KeyValueMap = std::map<std::string, std::string>;

KeyValueMap parse_key_values(const std::filesystem::path& file);

/// Analytic amplitude description: "exp:a:b" is a*e^{-bt}, "ind:a:c" is
/// a*1_{[0,c]} (sampled left-continuously), "zero", "scale:s" rescales the true
/// amplitude (initial guesses only).
struct AmplitudeSpec {
    std::string kind;  // exp | ind | zero | scale
    double a = 0.0;
    double b = 0.0;
    double value(double t) const;
};

AmplitudeSpec parse_amplitude_spec(const std::string& text);

/// Everything a CLI run needs, parsed from one config file.
struct ToolConfig {
    ProblemConfig problem;
    double dx_fine = 0.0, dt_fine = 0.0;
    double dx_inv = 0.0, dt_inv = 0.0;
    std::vector<Point> source_locations;
    std::vector<AmplitudeSpec> source_amplitudes;
    LmSchedule lm;
    std::vector<Point> init_locations;
    std::vector<AmplitudeSpec> init_amplitudes;
    double direct_sigma = 0.0;  // 0: default abscissa
    double direct_band_radius = 0.0;
    int direct_n_freq = 1201;
    double t_ext = 0.0;  // 0: from the e^{-mu t_ext} <= 1e-8 rule
    double noise_delta = 0.0;
    unsigned seed = 0;
};

ToolConfig parse_tool_config(const std::filesystem::path& file);

/// Sample an analytic amplitude on a grid (n_steps+1 samples).
std::vector<double> sample_amplitude(const std::function<double(double)>& fn,
                                     const TimeGrid& grid);

// --- trace/data directory serialization -----------------------------------

void write_trace_dir(const std::filesystem::path& dir, const BoundaryTrace& trace,
                     const SpaceMesh& mesh, const ProblemConfig& config);

struct LoadedTrace {
    BoundaryTrace trace;
};

LoadedTrace read_trace_dir(const std::filesystem::path& dir, const SpaceMesh& mesh);

// --- generic CSV helpers ----------------------------------------------------

void write_csv(const std::filesystem::path& file, const std::string& header,
               const std::vector<std::vector<double>>& rows);

std::vector<std::vector<double>> read_csv(const std::filesystem::path& file,
                                          std::string* header = nullptr);

std::string format_double(double v);

}  // namespace adsrc
