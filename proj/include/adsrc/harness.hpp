#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adsrc/config_io.hpp"
#include "adsrc/forward.hpp"
#include "adsrc/lm.hpp"

namespace adsrc {

enum class ExampleId { ex1i, ex1ii, ex2i, ex2ii, ex3, ex4, direct2d };
enum class InversionMethod { lm, direct, both };

ExampleId example_from_name(const std::string& name);
std::string example_name(ExampleId id);

/// Embedded benchmark definitions: problem data, reference grid sizes, LM
/// hyperparameters and initial guesses. resolution_scale coarsens both grids
/// by (about) that factor for smoke runs; 1 is the reference resolution.
struct ExampleSetup {
    ExampleId id{};
    ProblemConfig config;
    int cells_fine = 0;  // dx = L / cells, dt = dx
    int cells_inv = 0;
    std::vector<Point> locations;
    std::vector<AmplitudeSpec> amplitudes;
    LmSchedule lm;
    std::vector<Point> init_locations;
    std::vector<AmplitudeSpec> init_amplitudes;  // "scale" entries rescale the truth
    bool approximate_support = false;  // exponential amplitudes never vanish on (T0,T)

    double dx_fine() const { return config.domain_length / cells_fine; }
    double dx_inv() const { return config.domain_length / cells_inv; }
};

ExampleSetup example_setup(ExampleId id, double resolution_scale = 1.0);

struct ExperimentSpec {
    ExampleId example = ExampleId::ex1i;
    std::vector<double> noise_levels{0.00125, 0.0025, 0.005, 0.01, 0.02};
    int n_runs = 10;
    std::vector<unsigned> seeds;  // size n_runs; filled from base seed when empty
    unsigned base_seed = 1;
    double resolution_scale = 1.0;
    InversionMethod method = InversionMethod::lm;
    std::optional<LmSchedule> lm_override;
    int threads = 0;
};

struct ErrorRow {
    std::string method;  // "lm" or "direct"
    double delta = 0.0;
    double loc_mean = 0.0, loc_stderr = 0.0;
    double amp_mean = 0.0, amp_stderr = 0.0;  // L1 errors; NaN when not recovered
    double amp_l2rel_mean = 0.0;
    int n_ok = 0;
};

struct RateFit {
    double slope = 0.0, intercept = 0.0, r_squared = 0.0;
};

struct RunHistoryRow {
    int iteration = 0;
    double residual = 0.0, loc_error = 0.0, amp_error = 0.0;
    double beta_x = 0.0, beta_lambda = 0.0;
};

struct RunHistory {
    double delta = 0.0;
    unsigned seed = 0;
    std::vector<RunHistoryRow> rows;
};

struct ErrorReport {
    std::string example;
    double resolution_scale = 1.0;
    std::vector<double> deltas;
    std::vector<unsigned> seeds;
    std::vector<ErrorRow> rows;
    RateFit location_fit, amplitude_fit;
    std::vector<RunHistory> histories;
    std::vector<std::string> failures;  // per-run failure notes, empty when all ran
    double wall_time_seconds = 0.0;
};

/// Perturb every boundary sample by N(0, (delta * sup)^2) draws from the
/// counter-based generator keyed by (seed, step, column); the final snapshot
/// stays clean. delta = 0 returns the input bit-for-bit.
BoundaryTrace make_noisy(const BoundaryTrace& trace, double delta, unsigned seed);

/// Ordinary least squares of ln(error) against ln(delta).
RateFit rate_fit(const std::vector<std::pair<double, double>>& pairs);

ErrorReport run_example(const ExperimentSpec& spec);

/// errors.csv, history.csv, rates.csv, plot.gp and manifest.json.
void emit_outputs(const ErrorReport& report, const std::filesystem::path& out_dir);

std::vector<ErrorRow> parse_errors_csv(const std::filesystem::path& file);

// --- error metrics ----------------------------------------------------------

/// Relabeling that matches estimates to the truth (minimal summed distance).
std::vector<int> best_permutation(const std::vector<Point>& estimate,
                                  const std::vector<Point>& truth, int dim);

double location_error(const std::vector<Point>& estimate, const std::vector<Point>& truth,
                      int dim);

double amplitude_l1_error(const std::vector<std::vector<double>>& estimate,
                          const std::vector<std::vector<double>>& truth,
                          const std::vector<int>& perm, double dt);

double amplitude_l2_relative(const std::vector<std::vector<double>>& estimate,
                             const std::vector<std::vector<double>>& truth,
                             const std::vector<int>& perm, double dt);

}  // namespace adsrc
