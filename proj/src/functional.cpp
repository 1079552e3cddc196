#include "bpsv/functional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bpsv/error.hpp"

namespace bpsv {

namespace {

constexpr double kOverflowGuard = 700.0;

/// Gather component values at node k into buf.
inline void gather(const FieldSet& f, std::size_t k, std::span<double> buf) {
    for (std::size_t c = 0; c < f.size(); ++c) buf[c] = f[c][k];
}

std::vector<double> component_means(const FieldSet& w) {
    std::vector<double> m;
    m.reserve(w.size());
    for (const auto& f : w) m.push_back(f.mean());
    return m;
}

}  // namespace

ScalarMixing::ScalarMixing(double kappa) {
    if (!(kappa > 0.0)) throw Error(ErrorCode::Domain, "scalar coupling constant must be positive");
    root_ = std::sqrt(kappa);
}

VortexFunctional::VortexFunctional(std::shared_ptr<const FieldOperators> ops, std::shared_ptr<const Mixing> mixing,
                                   FieldSet exp_u0, double offset, FieldSet linear)
    : ops_(std::move(ops)),
      mixing_(std::move(mixing)),
      exp_u0_(std::move(exp_u0)),
      offset_(offset),
      linear_(std::move(linear)),
      shift_(mixing_->max_eigenvalue()) {
    const auto l = static_cast<std::size_t>(mixing_->components());
    if (exp_u0_.size() != l || linear_.size() != l)
        throw Error(ErrorCode::Shape, "functional data must have one field per component");
    for (std::size_t c = 0; c < l; ++c)
        if (!(exp_u0_[c].grid() == ops_->grid()) || !(linear_[c].grid() == ops_->grid()))
            throw Error(ErrorCode::Shape, "functional data grid mismatch");
}

void VortexFunctional::check(const FieldSet& w) const {
    if (w.size() != static_cast<std::size_t>(components()))
        throw Error(ErrorCode::Shape, "expected " + std::to_string(components()) + " fields");
    for (const auto& f : w)
        if (!(f.grid() == grid())) throw Error(ErrorCode::Shape, "field grid mismatch");
}

double VortexFunctional::energy(const FieldSet& w) const {
    check(w);
    const int l = components();
    std::vector<double> wk(l), vk(l);
    double pointwise = 0.0;
    for (std::size_t k = 0; k < grid().size(); ++k) {
        gather(w, k, wk);
        mixing_->v_from_w(wk, vk);
        for (int i = 0; i < l; ++i) {
            const double v = vk[i];
            if (v > kOverflowGuard) {
                std::ostringstream msg;
                msg << "iterate diverged: v_" << i + 1 << " = " << v << " overflows exp(); use a smaller step";
                throw Error(ErrorCode::Diverged, msg.str());
            }
            const double e = exp_u0_[i][k];
            if (offset_ == 0.0)
                pointwise += e * std::exp(v);
            else
                pointwise += e * std::expm1(v) - offset_ * v + (1.0 - offset_) * e;
            pointwise += linear_[i][k] * wk[i];
        }
    }
    double grad_energy = 0.0;
    for (const auto& f : w) grad_energy -= 0.5 * ops_->inner(f, ops_->laplacian(f));
    return grad_energy + pointwise * grid().cell_area();
}

FieldSet VortexFunctional::v_from_w(const FieldSet& w) const {
    check(w);
    const int l = components();
    FieldSet v = zeros_like(w);
    std::vector<double> wk(l), vk(l);
    for (std::size_t k = 0; k < grid().size(); ++k) {
        gather(w, k, wk);
        mixing_->v_from_w(wk, vk);
        for (int i = 0; i < l; ++i) v[i][k] = vk[i];
    }
    return v;
}

FieldSet VortexFunctional::exp_u(const FieldSet& w) const {
    FieldSet u = v_from_w(w);
    for (int i = 0; i < components(); ++i)
        for (std::size_t k = 0; k < grid().size(); ++k) u[i][k] = exp_u0_[i][k] * std::exp(u[i][k]);
    return u;
}

FieldSet VortexFunctional::gradient(const FieldSet& w) const {
    check(w);
    const int l = components();
    FieldSet g = zeros_like(w);
    std::vector<double> wk(l), vk(l), yk(l);
    for (std::size_t k = 0; k < grid().size(); ++k) {
        gather(w, k, wk);
        mixing_->v_from_w(wk, vk);
        for (int i = 0; i < l; ++i) {
            if (vk[i] > kOverflowGuard) throw Error(ErrorCode::Diverged, "iterate diverged: exp() overflow in gradient");
            vk[i] = exp_u0_[i][k] * std::exp(vk[i]) - offset_;
        }
        mixing_->apply_transpose(vk, yk);
        for (int i = 0; i < l; ++i) g[i][k] = yk[i] + linear_[i][k];
    }
    for (int i = 0; i < l; ++i) {
        const auto lap = ops_->laplacian(w[i]);
        for (std::size_t k = 0; k < grid().size(); ++k) g[i][k] -= lap[k];
    }
    return g;
}

VortexFunctional::Linearization VortexFunctional::linearize(const FieldSet& w) const {
    return {exp_u(w)};
}

FieldSet VortexFunctional::hessian_vector(const Linearization& lin, const FieldSet& s) const {
    check(s);
    const int l = components();
    FieldSet out = zeros_like(s);
    std::vector<double> sk(l), tk(l), yk(l);
    for (std::size_t k = 0; k < grid().size(); ++k) {
        gather(s, k, sk);
        mixing_->v_from_w(sk, tk);
        for (int i = 0; i < l; ++i) tk[i] *= lin.U[i][k];
        mixing_->apply_transpose(tk, yk);
        for (int i = 0; i < l; ++i) out[i][k] = yk[i];
    }
    for (int i = 0; i < l; ++i) {
        const auto lap = ops_->laplacian(s[i]);
        for (std::size_t k = 0; k < grid().size(); ++k) out[i][k] -= lap[k];
    }
    return out;
}

FieldSet VortexFunctional::hessian_vector(const FieldSet& w, const FieldSet& s) const {
    return hessian_vector(linearize(w), s);
}

FieldSet VortexFunctional::precondition(const FieldSet& r) const {
    FieldSet z;
    z.reserve(r.size());
    for (const auto& f : r) z.push_back(ops_->shifted_inverse(f, shift_));
    return z;
}

namespace {

struct CgResult {
    FieldSet x;
    int iterations = 0;
};

CgResult preconditioned_cg(const VortexFunctional& fn, const VortexFunctional::Linearization& lin,
                           const FieldSet& rhs, double target, int max_iter) {
    const auto& ops = fn.ops();
    FieldSet x = zeros_like(rhs);
    FieldSet r = rhs;
    FieldSet z = fn.precondition(r);
    FieldSet p = z;
    double rz = inner(ops, r, z);
    int k = 0;
    for (; k < max_iter; ++k) {
        const FieldSet hp = fn.hessian_vector(lin, p);
        const double curvature = inner(ops, p, hp);
        if (!(curvature > 0.0) || !std::isfinite(curvature)) {
            if (k == 0) x = z;
            break;
        }
        const double alpha = rz / curvature;
        axpy(alpha, p, x);
        axpy(-alpha, hp, r);
        if (norm(ops, r) <= target) {
            ++k;
            break;
        }
        z = fn.precondition(r);
        const double rz_next = inner(ops, r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t c = 0; c < p.size(); ++c) {
            auto ps = p[c].values();
            auto zs = z[c].values();
            for (std::size_t i = 0; i < ps.size(); ++i) ps[i] = zs[i] + beta * ps[i];
        }
    }
    return {std::move(x), k};
}

/// Scale d so that max|d| <= limit.
void limit_step(FieldSet& d, double limit) {
    const double m = max_abs(d);
    if (m > limit) d = scaled(d, limit / m);
}

double safe_energy(const VortexFunctional& fn, const FieldSet& w) {
    try {
        return fn.energy(w);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Diverged) return std::numeric_limits<double>::infinity();
        throw;
    }
}

}  // namespace

MinimizeOutcome newton_krylov(const VortexFunctional& fn, FieldSet w0, const SolverOptions& options) {
    if (!(options.tol > 0.0)) throw Error(ErrorCode::Domain, "tolerance must be positive");
    const auto& ops = fn.ops();
    MinimizeOutcome out;
    out.w = std::move(w0);

    for (int iter = 0;; ++iter) {
        IterationRecord rec;
        rec.iter = iter;
        rec.means = component_means(out.w);
        FieldSet g;
        try {
            rec.energy = fn.energy(out.w);
            g = fn.gradient(out.w);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Diverged) throw;
            out.failure = e.what();
            return out;
        }
        rec.grad_norm = norm(ops, g);

        if (!std::isfinite(rec.grad_norm) || !std::isfinite(rec.energy)) {
            out.history.push_back(rec);
            out.failure = "non-finite energy or gradient";
            return out;
        }
        if (rec.grad_norm <= options.tol) {
            out.history.push_back(rec);
            out.converged = true;
            return out;
        }
        if (iter >= options.max_outer) {
            out.history.push_back(rec);
            out.failure = "iteration cap of " + std::to_string(options.max_outer) + " outer steps reached";
            return out;
        }

        const auto lin = fn.linearize(out.w);
        // superlinear forcing; absolute so a rough start does not tighten every later solve
        const double forcing = std::min(0.5, std::sqrt(rec.grad_norm));
        auto cg = preconditioned_cg(fn, lin, scaled(g, -1.0), forcing * rec.grad_norm, options.max_cg);
        FieldSet& d = cg.x;
        if (!(inner(ops, g, d) < 0.0)) d = scaled(fn.precondition(g), -1.0);
        limit_step(d, options.max_step);
        double slope = inner(ops, g, d);
        rec.cg_iterations = cg.iterations;

        // Armijo backtracking. Once the predicted decrease drops below the
        // rounding level of I, the gradient norm arbitrates instead.
        auto backtrack = [&](const FieldSet& dir, double dir_slope, FieldSet& trial) -> double {
            for (double t = 1.0; t >= 1e-12; t *= 0.5) {
                trial = out.w;
                axpy(t, dir, trial);
                const double e_trial = safe_energy(fn, trial);
                if (e_trial <= rec.energy + options.armijo * t * dir_slope) return t;
                const double noise = 1e-12 * (1.0 + std::abs(rec.energy));
                if (std::isfinite(e_trial) && std::abs(t * dir_slope) < noise && e_trial <= rec.energy + noise &&
                    norm(ops, fn.gradient(trial)) < rec.grad_norm)
                    return t;
            }
            return 0.0;
        };

        FieldSet trial;
        double t = backtrack(d, slope, trial);
        bool accepted = t > 0.0;
        if (!accepted) {
            // Newton direction unusable (near-singular Hessian): preconditioned
            // steepest descent, expanding the step while Armijo keeps holding.
            d = scaled(fn.precondition(g), -1.0);
            limit_step(d, options.max_step);
            slope = inner(ops, g, d);
            t = backtrack(d, slope, trial);
            accepted = t > 0.0;
            if (accepted && t == 1.0) {
                double best = safe_energy(fn, trial);
                const double grow_limit = std::min(1024.0, options.max_step / std::max(max_abs(d), 1e-300));
                for (double grow = 2.0; grow <= grow_limit; grow *= 2.0) {
                    FieldSet bigger = out.w;
                    axpy(grow, d, bigger);
                    const double e = safe_energy(fn, bigger);
                    if (!(e <= rec.energy + options.armijo * grow * slope) || !(e < best)) break;
                    best = e;
                    t = grow;
                    trial = std::move(bigger);
                }
            }
        }
        if (!accepted) {
            out.history.push_back(rec);
            out.failure = "line search failed to decrease the energy";
            return out;
        }
        rec.step = t;
        out.history.push_back(rec);
        out.w = std::move(trial);
    }
}

}  // namespace bpsv
