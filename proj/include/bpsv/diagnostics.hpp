#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "bpsv/periodic_solver.hpp"
#include "bpsv/planar_solver.hpp"

namespace bpsv {

/// Every threshold the diagnostics compare against; echoed into each report.
struct Tolerances {
    double gradient = 1e-10;
    double residual = 1e-8;
    double flux_torus = 5e-3;      ///< relative to 4π max(N_j, 1)
    double flux_plane = 1e-2;
    double K_identity = 1e-3;      ///< relative to K_j
    double multistart = 1e-6;
    double symmetric = 1e-10;
    double symmetric_profile = 1e-3;
    double decay_min = 0.8;
    double decay_max = 1.1;
    double decay_gradient = 0.15;

    nlohmann::json to_json() const;
};

struct ReconstructedFields {
    FieldSet q_abs;  ///< |q_{j1}| = e^{u_j/2}
    FieldSet F;      ///< (l+1) - e^{u_j} - Σ_i e^{u_i}
};

/// Throws Error(NotConverged) for a non-converged result.
ReconstructedFields reconstruct_fields(const SolveResult& result);

/// ∫F_j for each component.
std::vector<double> check_flux(const SolveResult& result);

/// ∫e^{u_j} - K_j per component. Throws Error(WrongDomain) for planar results.
std::vector<double> check_K_identity(const SolveResult& result, const PeriodicProblem& problem);

/// Gaussian white-noise initial field (amplitude 1) per component.
FieldSet random_initial_fields(const Grid& grid, int l, std::uint64_t seed);

/// Solves from `trials` random starts; max pairwise max-norm distance of u.
double check_uniqueness(const PeriodicProblem& problem, int trials, std::uint64_t seed,
                        const SolverOptions& options = {});
double check_uniqueness(const PlanarProblem& problem, int trials, std::uint64_t seed,
                        const SolverOptions& options = {});

struct SymmetricReduction {
    double inter_component = 0.0;  ///< max_{i,j} max|u_i - u_j|
    double scalar_profile = 0.0;   ///< max|u_i - u_s|, u_s from Δu = (l+1)(e^u - 1) + 4πΣδ
    SolveResult system;
    SolveResult scalar;
};

/// All components carry the same vortex list `shared`.
SymmetricReduction check_symmetric_reduction(int l, const std::vector<Point>& shared,
                                             const std::variant<TorusGeometry, PlanarTruncation>& domain,
                                             const SolverOptions& options = {}, double mu = 1.0);

struct DiagnosticsReport {
    std::vector<double> flux;
    std::vector<double> flux_expected;
    std::optional<std::vector<double>> K_residuals;
    std::vector<double> residuals;
    std::optional<DecayFit> decay;
    std::optional<double> multistart_delta;
    std::optional<double> symmetric_delta;
    Tolerances tolerances;
    bool periodic = true;
    std::vector<double> K;  ///< periodic only; scales K_residuals

    /// Names of the checks that miss their tolerance; empty when all pass.
    std::vector<std::string> failures() const;
    nlohmann::json to_json() const;
};

}  // namespace bpsv
