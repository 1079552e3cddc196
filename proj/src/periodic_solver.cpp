#include "bpsv/periodic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace bpsv {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

const TorusGeometry& torus_of(const VortexSpec& spec) {
    const auto* torus = std::get_if<TorusGeometry>(&spec.domain);
    if (!torus) throw Error(ErrorCode::WrongDomain, "periodic solver requires a torus domain");
    return *torus;
}

std::string describe_gate(const GateReport& gate) {
    std::ostringstream msg;
    msg.precision(10);
    msg << "existence condition violated: need K_j = |Ω| - 4πN_j + 4π/(l+1) ΣN_i > 0 for all j"
        << " (threshold (l+1)|Ω|/(4π) = " << gate.threshold << "); K = (";
    for (std::size_t j = 0; j < gate.K.size(); ++j) msg << (j ? ", " : "") << gate.K[j];
    msg << ")";
    return msg.str();
}

}  // namespace

GateReport existence_condition(const VortexSpec& spec) {
    spec.validate();
    const double area = torus_of(spec).area();
    const int l = spec.l;
    GateReport gate;
    gate.counts = spec.counts();
    gate.threshold = (l + 1.0) * area / kFourPi;
    const int total = spec.total_count();
    const int nmax = gate.counts.empty() ? 0 : *std::max_element(gate.counts.begin(), gate.counts.end());
    gate.K_positive = true;
    for (int j = 0; j < l; ++j) {
        gate.margins.push_back(gate.threshold - gate.counts[j]);
        const double k = area - kFourPi * gate.counts[j] + kFourPi / (l + 1.0) * total;
        gate.K.push_back(k);
        if (!(k > 0.0)) gate.K_positive = false;
    }
    gate.count_condition = nmax < gate.threshold;
    gate.admissible = gate.K_positive;
    return gate;
}

PeriodicProblem::PeriodicProblem(VortexSpec spec) : spec_(std::move(spec)) {
    background_ = periodic_background(spec_);
    init();
}

PeriodicProblem::PeriodicProblem(VortexSpec spec, BackgroundData background)
    : spec_(std::move(spec)), background_(std::move(background)) {
    init();
}

void PeriodicProblem::init() {
    spec_.validate();
    const double area = torus_of(spec_).area();
    gate_ = existence_condition(spec_);
    mixing_ = std::make_shared<CholeskyMixing>(CouplingData(spec_.l));
    const Grid grid = spec_.grid();
    if (background_.exp_u0.size() != static_cast<std::size_t>(spec_.l) || !(background_.exp_u0[0].grid() == grid))
        throw Error(ErrorCode::Shape, "background does not match the problem grid");

    a_.resize(spec_.l);
    for (int j = 0; j < spec_.l; ++j) a_[j] = (spec_.l + 1.0) - kFourPi * gate_.counts[j] / area;
    b_ = coupling().w_from_v(a_);

    FieldSet linear;
    for (int j = 0; j < spec_.l; ++j) linear.emplace_back(grid, -b_[j]);
    functional_ = std::make_shared<VortexFunctional>(make_operators(grid), mixing_, background_.exp_u0, 0.0,
                                                     std::move(linear));
}

double energy(const PeriodicProblem& problem, const FieldSet& w) { return problem.functional().energy(w); }

FieldSet gradient(const PeriodicProblem& problem, const FieldSet& w) { return problem.functional().gradient(w); }

FieldSet hessian_vector(const PeriodicProblem& problem, const FieldSet& w, const FieldSet& s) {
    return problem.functional().hessian_vector(w, s);
}

FieldSet periodic_residual(const PeriodicProblem& problem, const FieldSet& v, const FieldSet& exp_u) {
    const auto& ops = problem.functional().ops();
    const int l = problem.spec().l;
    const std::size_t n = problem.grid().size();
    FieldSet res;
    for (int j = 0; j < l; ++j) {
        auto r = ops.laplacian(v[j]);
        for (std::size_t k = 0; k < n; ++k) {
            double total = 0.0;
            for (int i = 0; i < l; ++i) total += exp_u[i][k];
            r[k] -= exp_u[j][k] + total - problem.a()[j];
        }
        res.push_back(std::move(r));
    }
    return res;
}

SolveResult minimize(const PeriodicProblem& problem, const SolverOptions& options) {
    return minimize(problem, zero_fields(problem.grid(), problem.spec().l), options);
}

SolveResult minimize(const PeriodicProblem& problem, const FieldSet& w0, const SolverOptions& options) {
    if (!problem.gate().admissible && !options.force) throw Error(ErrorCode::Gate, describe_gate(problem.gate()));
    const auto& fn = problem.functional();
    auto outcome = newton_krylov(fn, w0, options);

    auto result = std::make_shared<SolveResult>();
    result->boundary = Boundary::Periodic;
    result->grid = problem.grid();
    result->l = problem.spec().l;
    result->counts = problem.gate().counts;
    result->history = std::move(outcome.history);
    result->iterations = result->history.empty() ? 0 : result->history.back().iter;
    result->grad_norm = result->history.empty() ? 0.0 : result->history.back().grad_norm;
    result->failure = outcome.failure;
    result->w = std::move(outcome.w);
    result->v = fn.v_from_w(result->w);
    result->exp_u = zero_fields(result->grid, result->l);
    result->u = zero_fields(result->grid, result->l);
    const auto& bg = problem.background();
    for (int j = 0; j < result->l; ++j)
        for (std::size_t k = 0; k < result->grid.size(); ++k) {
            const double v = result->v[j][k];
            result->exp_u[j][k] = bg.exp_u0[j][k] * std::exp(std::min(v, 700.0));
            result->u[j][k] = bg.u0[j][k] + v;
        }
    result->center_mask = bg.center_mask;

    const auto res = periodic_residual(problem, result->v, result->exp_u);
    result->residual = norm(fn.ops(), res);
    result->residual_max = max_abs(res);
    for (const auto& r : res) result->residual_components.push_back(std::sqrt(fn.ops().inner(r, r)));
    result->converged = outcome.converged && result->residual <= options.residual_tol;
    if (!result->converged) {
        std::ostringstream msg;
        msg << "periodic solve did not converge after " << result->iterations << " iterations: "
            << (outcome.failure.empty() ? "PDE residual above tolerance" : outcome.failure)
            << " (gradient norm " << result->grad_norm << ", residual " << result->residual << ")";
        throw NotConvergedError(msg.str(), result);
    }
    return std::move(*result);
}

double max_u_distance(const SolveResult& a, const SolveResult& b) {
    if (!(a.grid == b.grid) || a.l != b.l) throw Error(ErrorCode::Shape, "results live on different grids");
    double m = 0.0;
    for (int j = 0; j < a.l; ++j)
        for (std::size_t k = 0; k < a.grid.size(); ++k) {
            if (a.center_mask[j][k] || b.center_mask[j][k]) continue;
            m = std::max(m, std::abs(a.u[j][k] - b.u[j][k]));
        }
    return m;
}

}  // namespace bpsv
