#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bpsv/diagnostics.hpp"

namespace bpsv {

/**
 * One batch run, read from a JSON document:
 *
 *   {"mode": "torus" | "plane", "l": 2,
 *    "vortices": [[[x, y], ...], ...]   (one list per component)  or  "vortices_file": "path.json",
 *    "torus": {"Lx", "Ly", "nx", "ny"},  "plane": {"R", "nx", "ny", "mu"},
 *    "solver": {"tol", "residual_tol", "max_outer"},
 *    "diagnostics": {"flux", "K", "uniqueness", "decay": [r1, r2], "symmetric"},
 *    "output": "dir", "seed": 0}
 *
 * Unknown keys are rejected so typos do not silently fall back to defaults.
 */
struct RunConfig {
    VortexSpec spec;
    double mu = 1.0;
    SolverOptions solver;
    bool flux = true;
    bool K = true;
    int uniqueness_trials = 0;
    std::optional<std::pair<double, double>> decay_window;
    bool symmetric = false;
    std::string output = "out";
    std::uint64_t seed = 0;
};

/// Throws Error(Parse) naming the offending line or key; `base_dir` resolves "vortices_file".
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Sweepable parameters. "R" keeps the grid spacing fixed (nx, ny rescaled to the nearest even count).
void set_sweep_parameter(RunConfig& config, const std::string& name, double value);

/// Human-readable gate report. Throws Error(WrongDomain) for planar configs.
std::string format_gate_report(const GateReport& gate);

struct RunSummary {
    SolveResult result;
    DiagnosticsReport report;
    double flux_err_max = 0.0;     ///< max_j |∫F_j - 4πN_j| / (4π max(1, N_j))
    double K_err_max = 0.0;        ///< max_j |∫e^{u_j} - K_j| / K_j; NaN on the plane
    double decay_rate = 0.0;       ///< NaN when no window is configured
    std::vector<std::string> failures;
};

/**
 * Solve, run the enabled diagnostics and, when `out_dir` is non-empty, write
 * the artifacts: exp_u_<j>, F_<j>, w_<j> dumps, history.csv, diagnostics.json
 * and decay.csv. Propagates Error(Gate) and NotConvergedError (after writing
 * history.csv and the partial w dumps).
 */
RunSummary execute_run(const RunConfig& config, const std::filesystem::path& out_dir);

}  // namespace bpsv
