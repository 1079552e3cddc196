#pragma once

#include <memory>
#include <vector>

#include "bpsv/background.hpp"
#include "bpsv/coupling.hpp"
#include "bpsv/functional.hpp"
#include "bpsv/solve_result.hpp"

namespace bpsv {

struct GateReport {
    bool admissible = false;
    double threshold = 0.0;          ///< (l+1)|Ω|/(4π)
    std::vector<int> counts;
    std::vector<double> margins;     ///< threshold - N_j
    std::vector<double> K;           ///< forced values of ∫e^{u_j}
    bool K_positive = false;         ///< all K_j > 0
    bool count_condition = false;    ///< max N_j < threshold
};

/**
 * Existence gate on the torus. Integrating the system forces ∫e^{u_j} = K_j,
 * so `admissible` is all K_j > 0. The count condition max N_j < threshold is
 * implied by it and coincides with it when all N_j are equal; both are reported.
 */
GateReport existence_condition(const VortexSpec& spec);

/**
 * Doubly periodic problem in the Cholesky variables w = L^{-1} v:
 * Δw = Lᵀ U - b with b = L^{-1} a, a_j = (l+1) - 4πN_j/|Ω|.
 */
class PeriodicProblem {
public:
    /// Builds the default periodic background.
    explicit PeriodicProblem(VortexSpec spec);
    PeriodicProblem(VortexSpec spec, BackgroundData background);

    const VortexSpec& spec() const noexcept { return spec_; }
    const CouplingData& coupling() const noexcept { return mixing_->coupling(); }
    const BackgroundData& background() const noexcept { return background_; }
    const GateReport& gate() const noexcept { return gate_; }
    const std::vector<double>& a() const noexcept { return a_; }
    const std::vector<double>& b() const noexcept { return b_; }
    const std::vector<double>& K() const noexcept { return gate_.K; }
    const VortexFunctional& functional() const noexcept { return *functional_; }
    const Grid& grid() const noexcept { return functional_->grid(); }
    double area() const noexcept { return grid().area(); }

private:
    void init();

    VortexSpec spec_;
    BackgroundData background_;
    GateReport gate_;
    std::shared_ptr<const CholeskyMixing> mixing_;
    std::vector<double> a_, b_;
    std::shared_ptr<const VortexFunctional> functional_;
};

double energy(const PeriodicProblem& problem, const FieldSet& w);
FieldSet gradient(const PeriodicProblem& problem, const FieldSet& w);
FieldSet hessian_vector(const PeriodicProblem& problem, const FieldSet& w, const FieldSet& s);

/**
 * Strictly convex minimization of I(w). Throws Error(Gate) when the existence
 * condition fails (unless options.force) and NotConvergedError when the
 * iteration stops short of tol / residual_tol.
 */
SolveResult minimize(const PeriodicProblem& problem, const FieldSet& w0, const SolverOptions& options = {});
SolveResult minimize(const PeriodicProblem& problem, const SolverOptions& options = {});

/// Strong-form residual of Δv = AU - a, one field per component.
FieldSet periodic_residual(const PeriodicProblem& problem, const FieldSet& v, const FieldSet& exp_u);

}  // namespace bpsv
