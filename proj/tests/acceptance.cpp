// Acceptance suite: one PASS/FAIL line per criterion, informational lines prefixed with "  ".
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "bpsv/coupling.hpp"
#include "bpsv/diagnostics.hpp"
#include "support.hpp"

using namespace bpsv;
using testing_support::kPi;
using testing_support::plane_spec;
using testing_support::torus_spec;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

VortexSpec two_vortex(int n) { return torus_spec(2, {{{1.0, 2.0}}, {{4.0, 3.5}}}, 2 * kPi, 2 * kPi, n); }

double relative_flux_error(const SolveResult& r) {
    const auto flux = check_flux(r);
    double e = 0.0;
    for (std::size_t j = 0; j < flux.size(); ++j)
        e = std::max(e, std::abs(flux[j] - 4 * kPi * r.counts[j]) / (4 * kPi * std::max(1, r.counts[j])));
    return e;
}

// ---- 1 ----
Verdict coupling() {
    double err = 0.0;
    bool spectrum = true;
    for (int l = 2; l <= 50; ++l) {
        const CouplingData c(l);
        auto E = [&](const DenseMatrix& m) {
            Eigen::MatrixXd e(l, l);
            for (int i = 0; i < l; ++i)
                for (int j = 0; j < l; ++j) e(i, j) = m(i, j);
            return e;
        };
        const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(l, l) + Eigen::MatrixXd::Ones(l, l);
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(l, l);
        const auto L = E(c.L());
        err = std::max({err, (L * L.transpose() - A).cwiseAbs().maxCoeff(),
                        (L * E(c.L_inv()) - I).cwiseAbs().maxCoeff(), (A * E(c.A_inv()) - I).cwiseAbs().maxCoeff()});
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
        auto ours = c.eigenvalues();
        std::sort(ours.begin(), ours.end());
        for (int k = 0; k < l; ++k) {
            const double expected = k == l - 1 ? l + 1.0 : 1.0;
            err = std::max({err, std::abs(ours[k] - expected), std::abs(eig.eigenvalues()(k) - expected)});
        }
        spectrum = spectrum && c.eigenvalues().size() == static_cast<std::size_t>(l);
    }
    return {spectrum && err <= 1e-12, fmt("l = 2..50, max identity/eigenvalue error %.2e", err)};
}

// ---- 2 ----
Verdict variational() {
    const PeriodicProblem p(torus_spec(3, {{{1.0, 1.0}}, {{3.0, 4.0}}, {{5.0, 2.0}}}, 2 * kPi, 2 * kPi, 32));
    const auto& ops = p.functional().ops();
    const auto w = testing_support::noise(p.grid(), 3, 21, 0.5);
    const auto g = gradient(p, w);
    const double h = 1e-5;
    double grad_err = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto d = testing_support::noise(p.grid(), 3, seed, 1.0);
        auto wp = w, wm = w;
        axpy(h, d, wp);
        axpy(-h, d, wm);
        const double fd = (energy(p, wp) - energy(p, wm)) / (2 * h);
        grad_err = std::max(grad_err, std::abs(fd - inner(ops, g, d)) / std::abs(fd));
    }
    double hess_err = 0.0;
    for (std::uint64_t seed = 11; seed <= 13; ++seed) {
        const auto s = testing_support::noise(p.grid(), 3, seed, 1.0);
        auto wp = w, wm = w;
        axpy(h, s, wp);
        axpy(-h, s, wm);
        auto fd = gradient(p, wp);
        axpy(-1.0, gradient(p, wm), fd);
        fd = scaled(fd, 1 / (2 * h));
        const auto hs = hessian_vector(p, w, s);
        auto diff = fd;
        axpy(-1.0, hs, diff);
        hess_err = std::max(hess_err, norm(ops, diff) / norm(ops, hs));
    }
    int positive = 0;
    for (std::uint64_t seed = 100; seed < 200; ++seed) {
        const auto s = testing_support::noise(p.grid(), 3, seed, 1.0);
        positive += inner(ops, s, hessian_vector(p, w, s)) > 0.0;
    }
    return {grad_err <= 1e-6 && hess_err <= 1e-5 && positive == 100,
            fmt("gradient FD %.2e, Hessian FD %.2e, <s,Hs> > 0 in %d/100", grad_err, hess_err, positive)};
}

// ---- 3 ----
Verdict gate() {
    const auto ok = existence_condition(two_vortex(32));
    const double L = 2 * std::sqrt(kPi);
    const auto bad_spec = torus_spec(2, {{{0.5, 0.5}, {1.5, 1.0}, {1.0, 2.5}}, {}}, L, L, 64);
    const auto bad = existence_condition(bad_spec);
    const bool exact = ok.admissible && std::abs(ok.threshold - 3 * kPi) <= 1e-14 * 3 * kPi && !bad.admissible &&
                       std::abs(bad.K[0] + 4 * kPi) <= 1e-14 * 4 * kPi;

    SolverOptions o;
    o.force = true;
    o.max_outer = 200;
    bool converged = true, monotone = true;
    double last_mean = 0.0, last_grad = 0.0;
    int iters = 0;
    try {
        (void)minimize(PeriodicProblem(bad_spec), o);
    } catch (const NotConvergedError& e) {
        converged = false;
        const auto& h = e.partial()->history;
        for (std::size_t k = 1; k < h.size(); ++k) monotone = monotone && h[k].means[0] < h[k - 1].means[0];
        last_mean = h.back().means[0];
        last_grad = h.back().grad_norm;
        iters = e.partial()->iterations;
    }
    return {exact && !converged && monotone && std::abs(last_mean) > 1e3,
            fmt("threshold %.12f (3 pi), K_1 = %.12f (-4 pi); forced: %d iterations, mean(w_1) %.4g %s, "
                "grad %.3g",
                ok.threshold, bad.K[0], iters, last_mean, monotone ? "monotone" : "NOT monotone", last_grad)};
}

// ---- 4, 5 ----
struct TorusRun {
    SolveResult r;
    double seconds = 0.0;
};

Verdict torus_solve(const PeriodicProblem& p, TorusRun& run) {
    const auto t0 = std::chrono::steady_clock::now();
    run.r = minimize(p);
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& r = run.r;
    const auto Kres = check_K_identity(r, p);
    double K_err = 0.0, K_quoted = 0.0;
    for (int j = 0; j < 2; ++j) {
        K_err = std::max(K_err, std::abs(Kres[j]) / p.K()[j]);
        K_quoted = std::max(K_quoted, std::abs(p.K()[j] - 35.290) / 35.290);
    }
    const double flux_err = relative_flux_error(r);
    return {r.converged && r.grad_norm <= 1e-10 && r.residual <= 1e-8 && K_err <= 1e-3 && K_quoted <= 1e-3 &&
                flux_err <= 5e-3 && run.seconds < 60,
            fmt("%d iterations, grad %.2e, residual %.2e, K = %.4f, int e^u vs K %.2e, flux %.2e, %.2f s",
                r.iterations, r.grad_norm, r.residual, p.K()[0], K_err, flux_err, run.seconds)};
}

Verdict uniqueness(const PeriodicProblem& p, const TorusRun& base, double& seconds) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<SolveResult> runs;
    for (std::uint64_t seed : {1, 2, 3}) runs.push_back(minimize(p, random_initial_fields(p.grid(), 2, seed), {}));
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double d = 0.0;
    for (std::size_t a = 0; a < runs.size(); ++a) {
        d = std::max(d, max_u_distance(runs[a], base.r));
        for (std::size_t b = a + 1; b < runs.size(); ++b) d = std::max(d, max_u_distance(runs[a], runs[b]));
    }
    return {d <= 1e-6 && seconds < 3 * base.seconds,
            fmt("max |u_a - u_b| = %.2e over 3 random starts (%d, %d, %d iterations), %.2f s (limit %.2f s)", d,
                runs[0].iterations, runs[1].iterations, runs[2].iterations, seconds, 3 * base.seconds)};
}

// ---- 6 ----
Verdict symmetric() {
    std::string detail;
    bool pass = true;
    for (int l : {2, 4}) {
        const auto sym = check_symmetric_reduction(l, {{0.0, 0.0}}, PlanarTruncation{16.0, 256, 256});
        const testing_support::RadialShooting oracle(l + 1.0);
        const Grid& g = sym.system.grid;
        double dev = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double rr = std::hypot(g.x(i), g.y(j));
                if (rr < 0.5 * g.hx || rr >= oracle.trusted_radius()) continue;
                dev = std::max(dev, std::abs(sym.system.u[0].at(i, j) - oracle.u(rr)));
            }
        pass = pass && sym.inter_component < 1e-10 && dev <= 1e-3;
        detail += fmt("l=%d: inter-component %.2e, vs shooting %.2e (r < %.1f); ", l, sym.inter_component, dev,
                      oracle.trusted_radius());
    }
    detail.resize(detail.size() - 2);
    return {pass, detail};
}

// ---- 7 ----
Verdict planar() {
    const PlanarProblem p(plane_spec(2, {{{0.0, 0.0}}, {}}, 20.0, 256));
    const auto r = planar_minimize(p);
    const auto flux = check_flux(r);
    double q = 0.0;
    for (int j = 0; j < 2; ++j) q = std::max(q, std::abs(flux[j] - 4 * kPi * r.counts[j]) / (4 * kPi));
    const auto fit = decay_rate(r, 6.0, 12.0);
    std::vector<double> rs;
    for (const auto& s : fit.samples) rs.push_back(s.r);
    std::printf("  decay fit over [6, 12]: rate %.4f, gradient rate %.4f; K0(r)^2 oracle rate %.4f, mu = %g\n",
                fit.rate, fit.grad_rate, testing_support::bessel_decay_rate(1.0, rs), p.mu());

    // R = 25 at the same spacing; nodes coincide on the common square
    const PlanarProblem big(plane_spec(2, {{{0.0, 0.0}}, {}}, 25.0, 320));
    const auto rb = planar_minimize(big);
    const Grid &g = r.grid, &gb = rb.grid;
    const int off = static_cast<int>(std::lround((g.x0 - gb.x0) / g.hx));
    double du = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * g.nx + i;
            if (r.center_mask[0][k]) continue;
            for (int c = 0; c < 2; ++c) du = std::max(du, std::abs(r.u[c].at(i, j) - rb.u[c].at(i + off, j + off)));
        }
    const bool rate_ok = fit.rate >= 0.8 && fit.rate <= 1.1;
    return {r.converged && q <= 1e-2 && rate_ok && std::abs(fit.grad_rate - fit.rate) <= 0.15 && du < 1e-5,
            fmt("flux error %.2e (1%%), decay rate %.4f (need [0.8, 1.1]), |grad rate - rate| %.3f, R 20 -> 25 "
                "changes u by %.2e",
                q, fit.rate, std::abs(fit.grad_rate - fit.rate), du)};
}

// ---- 8 ----
Verdict refinement() {
    std::vector<double> err;
    for (int n : {64, 128, 256}) err.push_back(relative_flux_error(minimize(PeriodicProblem(two_vortex(n)))));
    const double o1 = std::log2(err[0] / err[1]), o2 = std::log2(err[1] / err[2]);
    return {o1 >= 2 && o2 >= 2,
            fmt("flux errors %.2e, %.2e, %.2e at 64^2, 128^2, 256^2; observed orders %.2f, %.2f", err[0], err[1],
                err[2], o1, o2)};
}

}  // namespace

int main() {
    int failed = 0;
    auto run = [&](int id, double limit, const std::function<Verdict()>& f) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = f();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (s > limit) {
            v.pass = false;
            v.detail += fmt(" [runtime %.1f s exceeds %.0f s]", s, limit);
        }
        failed += !v.pass;
        std::printf("criterion %d: %s  %s (%.1f s)\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), s);
        std::fflush(stdout);
    };

    run(1, 1.0, coupling);
    run(2, 10.0, variational);
    run(3, 600.0, gate);
    const PeriodicProblem torus(two_vortex(256));
    TorusRun base;
    run(4, 60.0, [&] { return torus_solve(torus, base); });
    double multistart = 0.0;
    run(5, 600.0, [&] { return uniqueness(torus, base, multistart); });
    run(6, 120.0, symmetric);
    run(7, 180.0, planar);
    run(8, 300.0, refinement);

    std::printf("%d of 8 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
