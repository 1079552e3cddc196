#include "bpsv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace bpsv {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

double max_masked_difference(const ScalarField2D& a, const ScalarField2D& b, const std::vector<std::uint8_t>& mask) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (!mask[k]) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

// Scalar solve Δu = κ(e^u - 1)·[plane] or κe^u - a·[torus], plus 4πΣδ, for the shared list.
SolveResult solve_scalar(int l, const std::vector<Point>& shared,
                         const std::variant<TorusGeometry, PlanarTruncation>& domain, const SolverOptions& options,
                         double mu) {
    const double kappa = l + 1.0;
    VortexSpec spec{1, {shared}, domain};
    spec.validate();
    const Grid grid = spec.grid();
    auto mixing = std::make_shared<ScalarMixing>(kappa);

    BackgroundData bg;
    FieldSet linear;
    double offset = 0.0;
    if (spec.is_torus()) {
        bg = periodic_background(spec);
        const double a = kappa - kFourPi * static_cast<double>(shared.size()) / grid.area();
        linear.emplace_back(grid, -a / mixing->root());
    } else {
        bg = tapered_planar_background(spec, mu, default_taper(spec));
        linear.push_back(scaled({bg.g[0]}, 1.0 / mixing->root())[0]);
        offset = 1.0;
    }
    VortexFunctional fn(make_operators(grid), mixing, bg.exp_u0, offset, linear);
    auto outcome = newton_krylov(fn, zero_fields(grid, 1), options);

    SolveResult out;
    out.boundary = grid.boundary;
    out.grid = grid;
    out.l = 1;
    out.counts = spec.counts();
    out.history = std::move(outcome.history);
    out.iterations = out.history.empty() ? 0 : out.history.back().iter;
    out.grad_norm = out.history.empty() ? 0.0 : out.history.back().grad_norm;
    out.converged = outcome.converged;
    out.failure = outcome.failure;
    out.w = std::move(outcome.w);
    out.v = fn.v_from_w(out.w);
    out.exp_u = fn.exp_u(out.w);
    out.u = zero_fields(grid, 1);
    for (std::size_t k = 0; k < grid.size(); ++k) out.u[0][k] = bg.u0[0][k] + out.v[0][k];
    out.center_mask = bg.center_mask;
    if (!out.converged)
        throw NotConvergedError("scalar reference solve did not converge: " + out.failure,
                                std::make_shared<SolveResult>(out));
    return out;
}

}  // namespace

nlohmann::json Tolerances::to_json() const {
    return {{"gradient", gradient},
            {"residual", residual},
            {"flux_torus", flux_torus},
            {"flux_plane", flux_plane},
            {"K_identity", K_identity},
            {"multistart", multistart},
            {"symmetric", symmetric},
            {"symmetric_profile", symmetric_profile},
            {"decay_min", decay_min},
            {"decay_max", decay_max},
            {"decay_gradient", decay_gradient}};
}

ReconstructedFields reconstruct_fields(const SolveResult& result) {
    if (!result.converged) throw Error(ErrorCode::NotConverged, "refusing to reconstruct fields from a non-converged solve");
    const int l = result.l;
    ReconstructedFields out{zero_fields(result.grid, l), zero_fields(result.grid, l)};
    for (std::size_t k = 0; k < result.grid.size(); ++k) {
        double total = 0.0;
        for (int i = 0; i < l; ++i) total += result.exp_u[i][k];
        for (int j = 0; j < l; ++j) {
            out.q_abs[j][k] = std::sqrt(result.exp_u[j][k]);
            out.F[j][k] = (l + 1.0) - result.exp_u[j][k] - total;
        }
    }
    return out;
}

std::vector<double> check_flux(const SolveResult& result) {
    const auto fields = reconstruct_fields(result);
    std::vector<double> flux;
    for (const auto& f : fields.F) flux.push_back(integrate(f));
    return flux;
}

std::vector<double> check_K_identity(const SolveResult& result, const PeriodicProblem& problem) {
    if (result.boundary != Boundary::Periodic) throw Error(ErrorCode::WrongDomain, "the K identity holds on the torus only");
    if (!(result.grid == problem.grid()) || result.l != problem.spec().l)
        throw Error(ErrorCode::Shape, "result does not belong to this problem");
    std::vector<double> r;
    for (int j = 0; j < result.l; ++j) r.push_back(integrate(result.exp_u[j]) - problem.K()[j]);
    return r;
}

FieldSet random_initial_fields(const Grid& grid, int l, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    FieldSet w = zero_fields(grid, l);
    for (auto& f : w)
        for (auto& x : f.values()) x = normal(rng);
    return w;
}

namespace {

template <class Problem, class Solve>
double multistart(const Problem& problem, int trials, std::uint64_t seed, Solve&& solve) {
    if (trials < 2) throw Error(ErrorCode::InvalidArgument, "uniqueness check needs at least two starts");
    std::vector<SolveResult> results;
    for (int t = 0; t < trials; ++t)
        results.push_back(solve(random_initial_fields(problem.grid(), problem.spec().l, seed + t)));
    double delta = 0.0;
    for (std::size_t a = 0; a < results.size(); ++a)
        for (std::size_t b = a + 1; b < results.size(); ++b) delta = std::max(delta, max_u_distance(results[a], results[b]));
    return delta;
}

}  // namespace

double check_uniqueness(const PeriodicProblem& problem, int trials, std::uint64_t seed, const SolverOptions& options) {
    return multistart(problem, trials, seed, [&](const FieldSet& w0) { return minimize(problem, w0, options); });
}

double check_uniqueness(const PlanarProblem& problem, int trials, std::uint64_t seed, const SolverOptions& options) {
    return multistart(problem, trials, seed, [&](const FieldSet& w0) { return planar_minimize(problem, w0, options); });
}

SymmetricReduction check_symmetric_reduction(int l, const std::vector<Point>& shared,
                                             const std::variant<TorusGeometry, PlanarTruncation>& domain,
                                             const SolverOptions& options, double mu) {
    VortexSpec spec{l, std::vector<std::vector<Point>>(l, shared), domain};
    SymmetricReduction out;
    double system_mu = mu;
    if (spec.is_torus()) {
        out.system = minimize(PeriodicProblem(spec), options);
    } else {
        PlanarProblem problem(spec, mu);
        system_mu = problem.mu();
        out.system = planar_minimize(problem, options);
    }
    out.scalar = solve_scalar(l, shared, domain, options, system_mu);

    for (int i = 0; i < l; ++i) {
        for (int j = i + 1; j < l; ++j)
            out.inter_component = std::max(
                out.inter_component, max_masked_difference(out.system.u[i], out.system.u[j], out.system.center_mask[i]));
        out.scalar_profile = std::max(out.scalar_profile,
                                      max_masked_difference(out.system.u[i], out.scalar.u[0], out.system.center_mask[i]));
    }
    return out;
}

std::vector<std::string> DiagnosticsReport::failures() const {
    std::vector<std::string> f;
    const double flux_tol = periodic ? tolerances.flux_torus : tolerances.flux_plane;
    for (std::size_t j = 0; j < flux.size(); ++j) {
        const double scale = kFourPi * std::max(1.0, flux_expected[j] / kFourPi);
        if (!(std::abs(flux[j] - flux_expected[j]) <= flux_tol * scale)) {
            f.push_back("flux");
            break;
        }
    }
    if (K_residuals)
        for (std::size_t j = 0; j < K_residuals->size(); ++j)
            if (!(std::abs((*K_residuals)[j]) <= tolerances.K_identity * (j < K.size() ? std::abs(K[j]) : 1.0))) {
                f.push_back("K_identity");
                break;
            }
    double total = 0.0;
    for (double r : residuals) total += r * r;
    if (!(std::sqrt(total) <= tolerances.residual)) f.push_back("residual");
    if (decay) {
        if (!(decay->rate >= tolerances.decay_min && decay->rate <= tolerances.decay_max)) f.push_back("decay_rate");
        if (!(std::abs(decay->grad_rate - decay->rate) <= tolerances.decay_gradient)) f.push_back("decay_gradient");
    }
    if (multistart_delta && !(*multistart_delta <= tolerances.multistart)) f.push_back("multistart");
    if (symmetric_delta && !(*symmetric_delta <= tolerances.symmetric)) f.push_back("symmetric");
    return f;
}

nlohmann::json DiagnosticsReport::to_json() const {
    nlohmann::json j;
    j["flux"] = flux;
    j["flux_expected"] = flux_expected;
    j["K_residuals"] = K_residuals ? nlohmann::json(*K_residuals) : nlohmann::json(nullptr);
    j["residuals"] = residuals;
    if (decay)
        j["decay"] = {{"r1", decay->r1},
                      {"r2", decay->r2},
                      {"rate", decay->rate},
                      {"log_C", decay->log_C},
                      {"grad_rate", decay->grad_rate},
                      {"grad_log_C", decay->grad_log_C}};
    else
        j["decay"] = nullptr;
    j["multistart_delta"] = multistart_delta ? nlohmann::json(*multistart_delta) : nlohmann::json(nullptr);
    j["symmetric_delta"] = symmetric_delta ? nlohmann::json(*symmetric_delta) : nlohmann::json(nullptr);
    j["tolerances"] = tolerances.to_json();
    return j;
}

}  // namespace bpsv
