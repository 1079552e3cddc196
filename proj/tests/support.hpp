#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "bpsv/background.hpp"
#include "bpsv/grid.hpp"

namespace testing_support {

inline constexpr double kPi = std::numbers::pi;

inline bpsv::VortexSpec torus_spec(int l, std::vector<std::vector<bpsv::Point>> points, double Lx, double Ly, int n) {
    return {l, std::move(points), bpsv::TorusGeometry{Lx, Ly, n, n}};
}

inline bpsv::VortexSpec plane_spec(int l, std::vector<std::vector<bpsv::Point>> points, double R, int n) {
    return {l, std::move(points), bpsv::PlanarTruncation{R, n, n}};
}

inline bpsv::FieldSet noise(const bpsv::Grid& grid, int l, std::uint64_t seed, double amplitude) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-amplitude, amplitude);
    bpsv::FieldSet f = bpsv::zero_fields(grid, l);
    for (auto& c : f)
        for (auto& x : c.values()) x = U(rng);
    return f;
}

/// Smooth random trigonometric field with modes |k| <= kmax (periodic grids).
inline bpsv::FieldSet smooth_noise(const bpsv::Grid& grid, int l, std::uint64_t seed, double amplitude, int kmax = 3) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    bpsv::FieldSet out;
    for (int c = 0; c < l; ++c) {
        std::vector<std::array<double, 4>> modes;
        for (int kx = 0; kx <= kmax; ++kx)
            for (int ky = -kmax; ky <= kmax; ++ky) modes.push_back({double(kx), double(ky), U(rng), U(rng)});
        out.push_back(bpsv::sample(grid, [&](double x, double y) {
            double s = 0.0;
            for (const auto& m : modes) {
                const double ph = 2 * kPi * (m[0] * x / grid.Lx + m[1] * y / grid.Ly);
                s += m[2] * std::cos(ph) + m[3] * std::sin(ph);
            }
            return amplitude * s / modes.size();
        }));
    }
    return out;
}

/**
 * Radial profile of Δu = κ(e^u - 1) + 4πδ on the whole plane, u → 0 at ∞.
 * Write u = 2 ln r + φ; then φ'' + φ'/r = κ(r² e^φ - 1), φ'(0) = 0, and φ(0)
 * is found by bisection: too large overshoots u = 0, too small turns back.
 */
class RadialShooting {
public:
    explicit RadialShooting(double kappa, double step = 2e-4) : kappa_(kappa), dr_(step) {
        double lo = -20.0, hi = 10.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (1 + std::abs(lo)); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (shoot(mid, false) > 0) hi = mid;
            else lo = mid;
        }
        shoot(0.5 * (lo + hi), true);
    }

    /// Largest radius where the tabulated profile is still on the separatrix.
    double trusted_radius() const { return trusted_; }

    double u(double r) const {
        if (r <= r_.front() || r >= trusted_) throw std::out_of_range("radius outside the shooting table");
        const auto k = static_cast<std::size_t>((r - r_.front()) / dr_);
        const double h = dr_, t = (r - r_[k]) / h;
        // cubic Hermite on (u, u')
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        return h00 * u_[k] + h10 * h * du_[k] + h01 * u_[k + 1] + h11 * h * du_[k + 1];
    }

private:
    // +1 overshoot (u crosses 0), -1 undershoot (u' < 0 while u < 0)
    int shoot(double c, bool record) {
        const double r0 = 1e-3;
        double phi = c - kappa_ * r0 * r0 / 4.0, dphi = -kappa_ * r0 / 2.0 + kappa_ * std::exp(c) * r0 * r0 * r0 / 4.0;
        auto rhs = [&](double r, double p, double dp, double& a, double& b) {
            a = dp;
            b = kappa_ * (r * r * std::exp(p) - 1.0) - dp / r;
        };
        if (record) {
            r_.clear();
            u_.clear();
            du_.clear();
        }
        double r = r0;
        int verdict = 0;
        for (int n = 0; n < 2000000; ++n) {
            const double u = 2 * std::log(r) + phi, du = 2 / r + dphi;
            if (record) {
                r_.push_back(r);
                u_.push_back(u);
                du_.push_back(du);
            }
            if (u > 0.0 || !std::isfinite(u)) { verdict = 1; break; }
            if (du < 0.0) { verdict = -1; break; }
            if (r > 60.0) break;
            double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
            const double h = dr_;
            rhs(r, phi, dphi, k1a, k1b);
            rhs(r + h / 2, phi + h / 2 * k1a, dphi + h / 2 * k1b, k2a, k2b);
            rhs(r + h / 2, phi + h / 2 * k2a, dphi + h / 2 * k2b, k3a, k3b);
            rhs(r + h, phi + h * k3a, dphi + h * k3b, k4a, k4b);
            phi += h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a);
            dphi += h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b);
            r += h;
        }
        if (record) {
            // double-precision bisection leaves the separatrix near |u| ~ 1e-8; stop well before
            trusted_ = r_.back();
            for (std::size_t k = 0; k < r_.size(); ++k)
                if (r_[k] > 1.0 && std::abs(u_[k]) < 1e-6) {
                    trusted_ = r_[k];
                    break;
                }
        }
        return verdict;
    }

    double kappa_, dr_;
    std::vector<double> r_, u_, du_;
    double trusted_ = 0.0;
};

/// -slope of the least-squares line through ln(K0(m r)²) at the radii rs.
inline double bessel_decay_rate(double mass, const std::vector<double>& rs) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(rs.size());
    for (double r : rs) {
        const double y = 2.0 * std::log(std::cyl_bessel_k(0.0, mass * r));
        sx += r;
        sy += y;
        sxx += r * r;
        sxy += r * y;
    }
    return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace testing_support
