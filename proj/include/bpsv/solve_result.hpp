#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bpsv/error.hpp"
#include "bpsv/functional.hpp"
#include "bpsv/grid.hpp"

namespace bpsv {

/**
 * Output of a solve. u_j = u0_j + v_j is singular at the vortex centers, so
 * the primitive stored quantity is e^{u_j}; `u` holds u_j away from centers
 * and the regular part on nodes flagged in `center_mask`.
 */
struct SolveResult {
    Boundary boundary = Boundary::Periodic;
    Grid grid;
    int l = 0;
    std::vector<int> counts;

    FieldSet w, v, u, exp_u;
    std::vector<std::vector<std::uint8_t>> center_mask;

    std::vector<IterationRecord> history;
    int iterations = 0;
    double grad_norm = 0.0;
    /// Discrete L² norm of the strong-form residual over all components.
    double residual = 0.0;
    double residual_max = 0.0;
    std::vector<double> residual_components;
    bool converged = false;
    std::string failure;
};

/// Carries the partial result when a solve stops without converging.
class NotConvergedError : public Error {
public:
    NotConvergedError(const std::string& what, std::shared_ptr<const SolveResult> partial)
        : Error(ErrorCode::NotConverged, what), partial_(std::move(partial)) {}
    const std::shared_ptr<const SolveResult>& partial() const noexcept { return partial_; }

private:
    std::shared_ptr<const SolveResult> partial_;
};

/// Max over components and non-center nodes of |a.u - b.u|.
double max_u_distance(const SolveResult& a, const SolveResult& b);

}  // namespace bpsv
