#include "bpsv/planar_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bpsv {

namespace {

const PlanarTruncation& box_of(const VortexSpec& spec) {
    const auto* box = std::get_if<PlanarTruncation>(&spec.domain);
    if (!box) throw Error(ErrorCode::WrongDomain, "planar solver requires a truncated-plane domain");
    return *box;
}

}  // namespace

PlanarProblem::PlanarProblem(VortexSpec spec, double mu) : PlanarProblem(spec, mu, default_taper(spec)) {}

PlanarProblem::PlanarProblem(VortexSpec spec, double mu, Taper taper) : spec_(std::move(spec)), taper_(taper) {
    spec_.validate();
    box_of(spec_);
    if (!(mu > 0.0)) throw Error(ErrorCode::Domain, "planar background needs mu > 0");
    mixing_ = std::make_shared<CholeskyMixing>(CouplingData(spec_.l));
    const int l = spec_.l;

    // Escalate μ until h̃ = A^{-1} g <= 1/2 everywhere.
    for (int attempt = 0;; ++attempt) {
        background_ = tapered_planar_background(spec_, mu, taper_);
        const Grid& grid = background_.g[0].grid();
        h_tilde_ = zero_fields(grid, l);
        double total_max = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            double total = 0.0;
            for (int i = 0; i < l; ++i) total += background_.g[i][k];
            for (int i = 0; i < l; ++i) {
                const double ht = (l * background_.g[i][k] - (total - background_.g[i][k])) / (l + 1.0);
                h_tilde_[i][k] = ht;
                total_max = std::max(total_max, ht);
            }
        }
        if (total_max <= 0.5) break;
        if (attempt >= 40) throw Error(ErrorCode::Domain,
                        "could not bound h~ by 1/2 by enlarging mu; the background taper is too steep, enlarge R");
        mu *= 2.0;
    }

    const Grid grid = spec_.grid();
    h_ = zero_fields(grid, l);
    std::vector<double> gk(l), hk(l);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        for (int i = 0; i < l; ++i) gk[i] = background_.g[i][k];
        coupling().w_from_v(gk, hk);
        for (int i = 0; i < l; ++i) h_[i][k] = hk[i];
    }
    functional_ = std::make_shared<VortexFunctional>(make_operators(grid), mixing_, background_.exp_u0, 1.0, h_);
}

double planar_energy(const PlanarProblem& problem, const FieldSet& w) { return problem.functional().energy(w); }

FieldSet planar_gradient(const PlanarProblem& problem, const FieldSet& w) { return problem.functional().gradient(w); }

FieldSet planar_hessian_vector(const PlanarProblem& problem, const FieldSet& w, const FieldSet& s) {
    return problem.functional().hessian_vector(w, s);
}

FieldSet planar_residual(const PlanarProblem& problem, const FieldSet& w, const FieldSet& exp_u) {
    const auto& ops = problem.functional().ops();
    const int l = problem.spec().l;
    const std::size_t n = problem.grid().size();
    FieldSet res;
    for (int j = 0; j < l; ++j) res.push_back(ops.laplacian(w[j]));
    std::vector<double> x(l), y(l);
    for (std::size_t k = 0; k < n; ++k) {
        for (int i = 0; i < l; ++i) x[i] = exp_u[i][k] - 1.0;
        problem.coupling().apply_LT(x, y);
        for (int j = 0; j < l; ++j) res[j][k] -= y[j] + problem.h()[j][k];
    }
    return res;
}

SolveResult planar_minimize(const PlanarProblem& problem, const SolverOptions& options) {
    return planar_minimize(problem, zero_fields(problem.grid(), problem.spec().l), options);
}

SolveResult planar_minimize(const PlanarProblem& problem, const FieldSet& w0, const SolverOptions& options) {
    const auto& fn = problem.functional();
    auto outcome = newton_krylov(fn, w0, options);

    auto result = std::make_shared<SolveResult>();
    result->boundary = Boundary::Dirichlet;
    result->grid = problem.grid();
    result->l = problem.spec().l;
    result->counts = problem.spec().counts();
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

    const auto res = planar_residual(problem, result->w, result->exp_u);
    result->residual = norm(fn.ops(), res);
    result->residual_max = max_abs(res);
    for (const auto& r : res) result->residual_components.push_back(std::sqrt(fn.ops().inner(r, r)));
    result->converged = outcome.converged && result->residual <= options.residual_tol;
    if (!result->converged) {
        std::ostringstream msg;
        msg << "planar solve did not converge after " << result->iterations << " iterations: "
            << (outcome.failure.empty() ? "PDE residual above tolerance" : outcome.failure)
            << " (gradient norm " << result->grad_norm << ", residual " << result->residual << ")";
        throw NotConvergedError(msg.str(), result);
    }
    return std::move(*result);
}

namespace {

struct LineFit {
    double slope, intercept;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

}  // namespace

DecayFit decay_rate(const SolveResult& result, double r1, double r2) {
    if (result.boundary != Boundary::Dirichlet)
        throw Error(ErrorCode::WrongDomain, "decay fits apply to planar results");
    const Grid& grid = result.grid;
    const double R = grid.Lx / 2.0;
    if (!(r1 >= 0.0 && r2 > r1)) throw Error(ErrorCode::Domain, "decay window needs 0 <= r1 < r2");
    if (r2 >= R - 2.0) throw Error(ErrorCode::Domain, "decay window must stay two units inside the box (r2 < R - 2)");

    // u on the full node lattice, zero on the edge.
    const int nx = grid.nx, ny = grid.ny;
    auto u_at = [&](int j, int i, int k) -> double {
        if (i < 0 || k < 0 || i >= nx || k >= ny) return 0.0;
        return result.u[j][static_cast<std::size_t>(k) * nx + i];
    };
    auto masked = [&](int i, int k) {
        for (int dk = -2; dk <= 2; ++dk)
            for (int di = -2; di <= 2; ++di) {
                const int ii = i + di, kk = k + dk;
                if (ii < 0 || kk < 0 || ii >= nx || kk >= ny) continue;
                for (int j = 0; j < result.l; ++j)
                    if (result.center_mask[j][static_cast<std::size_t>(kk) * nx + ii]) return true;
            }
        return false;
    };

    DecayFit fit;
    fit.r1 = r1;
    fit.r2 = r2;
    const double floor = 1e2 * std::numeric_limits<double>::epsilon();
    std::vector<double> rs, lu, lg;
    for (int k = 0; k < ny; ++k)
        for (int i = 0; i < nx; ++i) {
            const double r = std::hypot(grid.x(i), grid.y(k));
            if (r < r1 || r > r2 || masked(i, k)) continue;
            double usq = 0.0, gsq = 0.0;
            for (int j = 0; j < result.l; ++j) {
                const double u = u_at(j, i, k);
                const double dx = (-u_at(j, i + 2, k) + 8.0 * u_at(j, i + 1, k) - 8.0 * u_at(j, i - 1, k) +
                                   u_at(j, i - 2, k)) / (12.0 * grid.hx);
                const double dy = (-u_at(j, i, k + 2) + 8.0 * u_at(j, i, k + 1) - 8.0 * u_at(j, i, k - 1) +
                                   u_at(j, i, k - 2)) / (12.0 * grid.hy);
                usq += u * u;
                gsq += dx * dx + dy * dy;
            }
            if (usq < floor || gsq < floor) {
                std::ostringstream msg;
                msg << "decay window is underflow-dominated: Σu² = " << usq << " at |x| = " << r
                    << "; move the window inward";
                throw Error(ErrorCode::Underflow, msg.str());
            }
            rs.push_back(r);
            lu.push_back(std::log(usq));
            lg.push_back(std::log(gsq));
            fit.samples.push_back({r, lu.back(), lg.back()});
        }
    if (rs.size() < 3) throw Error(ErrorCode::Domain, "decay window contains fewer than three grid samples");
    const auto fu = least_squares(rs, lu);
    const auto fg = least_squares(rs, lg);
    fit.rate = -fu.slope;
    fit.log_C = fu.intercept;
    fit.grad_rate = -fg.slope;
    fit.grad_log_C = fg.intercept;
    std::sort(fit.samples.begin(), fit.samples.end(), [](const auto& a, const auto& b) { return a.r < b.r; });
    return fit;
}

}  // namespace bpsv
