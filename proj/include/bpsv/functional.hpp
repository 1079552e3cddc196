#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bpsv/coupling.hpp"
#include "bpsv/grid.hpp"

namespace bpsv {

/// Pointwise linear map v = T w with T T^T the coupling matrix of the system.
class Mixing {
public:
    virtual ~Mixing() = default;
    virtual int components() const noexcept = 0;
    virtual void v_from_w(std::span<const double> w, std::span<double> v) const = 0;
    virtual void apply_transpose(std::span<const double> x, std::span<double> y) const = 0;
    /// Largest eigenvalue of T Tᵀ.
    virtual double max_eigenvalue() const noexcept = 0;
};

/// T = L, the closed-form Cholesky factor of A = I + 11^T.
class CholeskyMixing final : public Mixing {
public:
    explicit CholeskyMixing(CouplingData coupling) : coupling_(std::move(coupling)) {}
    int components() const noexcept override { return coupling_.l(); }
    void v_from_w(std::span<const double> w, std::span<double> v) const override { coupling_.v_from_w(w, v); }
    void apply_transpose(std::span<const double> x, std::span<double> y) const override { coupling_.apply_LT(x, y); }
    double max_eigenvalue() const noexcept override { return coupling_.eigenvalues().front(); }
    const CouplingData& coupling() const noexcept { return coupling_; }

private:
    CouplingData coupling_;
};

/// One component with coupling constant kappa: T = sqrt(kappa).
class ScalarMixing final : public Mixing {
public:
    explicit ScalarMixing(double kappa);
    int components() const noexcept override { return 1; }
    void v_from_w(std::span<const double> w, std::span<double> v) const override { v[0] = root_ * w[0]; }
    void apply_transpose(std::span<const double> x, std::span<double> y) const override { y[0] = root_ * x[0]; }
    double max_eigenvalue() const noexcept override { return root_ * root_; }
    double root() const noexcept { return root_; }

private:
    double root_;
};

/**
 * I(w) = ∫ ½Σ|∇w_j|² + Σ_i [E_i e^{v_i} - ρ(E_i + v_i)] + Σ_j λ_j w_j,  v = T w.
 *
 * Periodic problems use ρ = 0, λ_j = -b_j; planar problems ρ = 1, λ_j = h_j.
 * Gradient (L² Riesz representative): -Δw + Tᵀ(E e^{v} - ρ) + λ.
 */
class VortexFunctional {
public:
    VortexFunctional(std::shared_ptr<const FieldOperators> ops, std::shared_ptr<const Mixing> mixing,
                     FieldSet exp_u0, double offset, FieldSet linear);

    struct Linearization {
        FieldSet U;  ///< E_i e^{v_i}
    };

    int components() const noexcept { return mixing_->components(); }
    const FieldOperators& ops() const noexcept { return *ops_; }
    const Grid& grid() const noexcept { return ops_->grid(); }
    const Mixing& mixing() const noexcept { return *mixing_; }

    /// Throws Error(Diverged) if any v_i exceeds 700.
    double energy(const FieldSet& w) const;
    FieldSet gradient(const FieldSet& w) const;
    Linearization linearize(const FieldSet& w) const;
    /// -Δs + Tᵀ(U ⊙ T s)
    FieldSet hessian_vector(const Linearization& lin, const FieldSet& s) const;
    FieldSet hessian_vector(const FieldSet& w, const FieldSet& s) const;
    /// (-Δ + shift)^{-1} per component, shift = largest eigenvalue of T Tᵀ.
    FieldSet precondition(const FieldSet& r) const;

    FieldSet v_from_w(const FieldSet& w) const;
    FieldSet exp_u(const FieldSet& w) const;

private:
    void check(const FieldSet& w) const;

    std::shared_ptr<const FieldOperators> ops_;
    std::shared_ptr<const Mixing> mixing_;
    FieldSet exp_u0_;
    double offset_;
    FieldSet linear_;
    double shift_;
};

struct SolverOptions {
    double tol = 1e-10;           ///< gradient L² norm
    double residual_tol = 1e-8;   ///< PDE residual, discrete L²
    int max_outer = 200;
    int max_cg = 400;
    double armijo = 1e-4;
    double max_step = 50.0;       ///< cap on max|Δw| per outer step
    bool force = false;           ///< periodic: run even when the existence gate fails
};

struct IterationRecord {
    int iter = 0;
    double energy = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;            ///< line-search step taken after this record (0 on the last)
    int cg_iterations = 0;
    std::vector<double> means;    ///< component means of w
};

struct MinimizeOutcome {
    FieldSet w;
    std::vector<IterationRecord> history;
    bool converged = false;
    std::string failure;
};

/// Truncated Newton with preconditioned CG and Armijo backtracking. Never
/// throws for non-convergence; the caller inspects `converged`.
MinimizeOutcome newton_krylov(const VortexFunctional& functional, FieldSet w0, const SolverOptions& options);

}  // namespace bpsv
