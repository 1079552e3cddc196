#pragma once

#include <memory>
#include <vector>

#include "bpsv/background.hpp"
#include "bpsv/coupling.hpp"
#include "bpsv/functional.hpp"
#include "bpsv/solve_result.hpp"

namespace bpsv {

/**
 * Full-plane problem truncated to [-R,R]^2 with w = 0 on the edge:
 * Δw = Lᵀ(U - 1) + h, h = L^{-1} g.
 *
 * The background is the tapered planar profile; μ starts at the requested
 * value and is doubled until max h̃ <= 1/2 with h̃ = A^{-1} g.
 */
class PlanarProblem {
public:
    explicit PlanarProblem(VortexSpec spec, double mu = 1.0);
    PlanarProblem(VortexSpec spec, double mu, Taper taper);

    const VortexSpec& spec() const noexcept { return spec_; }
    const CouplingData& coupling() const noexcept { return mixing_->coupling(); }
    const BackgroundData& background() const noexcept { return background_; }
    const FieldSet& h() const noexcept { return h_; }
    const FieldSet& h_tilde() const noexcept { return h_tilde_; }
    double mu() const noexcept { return background_.mu; }
    const Taper& taper() const noexcept { return taper_; }
    double R() const noexcept { return grid().Lx / 2.0; }
    const VortexFunctional& functional() const noexcept { return *functional_; }
    const Grid& grid() const noexcept { return functional_->grid(); }

private:
    VortexSpec spec_;
    Taper taper_;
    BackgroundData background_;
    std::shared_ptr<const CholeskyMixing> mixing_;
    FieldSet h_, h_tilde_;
    std::shared_ptr<const VortexFunctional> functional_;
};

double planar_energy(const PlanarProblem& problem, const FieldSet& w);
FieldSet planar_gradient(const PlanarProblem& problem, const FieldSet& w);
FieldSet planar_hessian_vector(const PlanarProblem& problem, const FieldSet& w, const FieldSet& s);

/// Residual of Δw = Lᵀ(U - 1) + h on interior nodes.
FieldSet planar_residual(const PlanarProblem& problem, const FieldSet& w, const FieldSet& exp_u);

/// Throws NotConvergedError when the iteration stops short of tolerance.
SolveResult planar_minimize(const PlanarProblem& problem, const SolverOptions& options = {});
SolveResult planar_minimize(const PlanarProblem& problem, const FieldSet& w0, const SolverOptions& options = {});

struct DecaySample {
    double r = 0.0;
    double log_usq = 0.0;     ///< ln Σ u_i²
    double log_gradsq = 0.0;  ///< ln Σ |∇u_i|²
};

struct DecayFit {
    double r1 = 0.0, r2 = 0.0;
    double rate = 0.0;        ///< ln Σu² ≈ log_C - rate |x|
    double log_C = 0.0;
    double grad_rate = 0.0;   ///< same fit for Σ|∇u|²
    double grad_log_C = 0.0;
    std::vector<DecaySample> samples;
};

/**
 * Least-squares fit of ln Σ u_i² and ln Σ |∇u_i|² against |x| over the annulus
 * r1 <= |x| <= r2. Gradients use fourth-order central differences.
 * Throws Error(Domain) if r2 >= R - 2 and Error(Underflow) if any sample of
 * Σ u_i² falls below 1e2 machine epsilon.
 */
DecayFit decay_rate(const SolveResult& result, double r1, double r2);

}  // namespace bpsv
