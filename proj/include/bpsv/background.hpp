#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "bpsv/grid.hpp"

namespace bpsv {

struct Point {
    double x = 0.0, y = 0.0;
};

/// Problem definition: l components, each with its vortex centers. A center
/// listed k times has multiplicity k.
struct VortexSpec {
    int l = 0;
    std::vector<std::vector<Point>> points;
    std::variant<TorusGeometry, PlanarTruncation> domain;

    bool is_torus() const noexcept { return std::holds_alternative<TorusGeometry>(domain); }
    std::vector<int> counts() const;
    int total_count() const;
    Grid grid() const;
    /// Throws Error(Domain / Shape) when a center lies outside the domain,
    /// the component count disagrees with l, or l < 1.
    void validate() const;
};

/**
 * Singular background u0_j carrying the 4π δ sources, stored through e^{u0}.
 *
 * u0 holds u0_j at every node except exact vortex centers, where the
 * divergent ln|x - p|^2 terms are dropped (mask_j marks those nodes).
 */
struct BackgroundData {
    FieldSet exp_u0;
    FieldSet u0;
    std::vector<std::vector<std::uint8_t>> center_mask;

    /// Planar: source g_j with Δu0_j = 4πΣδ - g_j.
    FieldSet g;
    double mu = 0.0;

    /// Periodic: the analytic Laplacian of the singular part (δ excluded) and
    /// the zero-mean remainder obtained from the Poisson solve.
    FieldSet singular_laplacian;
    FieldSet remainder;
    /// Mean of the remainder source that was projected out before the solve.
    std::vector<double> projected_mean;

    std::vector<std::string> warnings;
};

/// Untapered planar background: e^{u0} = Π |x-p|^2/(|x-p|^2+μ), g = Σ 4μ/(μ+|x-p|^2)^2.
/// Throws Error(Domain) for mu <= 0.
BackgroundData planar_background(const VortexSpec& spec, double mu);

/// Radial taper 1 - S((|x| - inner)/(outer - inner)) applied to the planar background.
struct Taper {
    double inner = 0.0;
    double outer = 0.0;
};

/// Default taper for a box: outer = min(max|p| + 10, R - 2), inner = max|p| + 0.4 (outer - max|p|).
Taper default_taper(const VortexSpec& spec);

/**
 * Planar background localized by a smooth radial taper: ũ0 = (1 - η) u0 with
 * η = 0 inside taper.inner and η = 1 beyond taper.outer. g holds the smooth
 * source -Δũ0 + 4πΣδ, evaluated analytically; it integrates to 4πN_j exactly.
 */
BackgroundData tapered_planar_background(const VortexSpec& spec, double mu, const Taper& taper);

/// Default smoothing length min(Lx, Ly)/8 for the periodic construction.
double default_smoothing(const TorusGeometry& geometry);

/**
 * Periodic background solving Δu0_j = 4πΣδ - 4πN_j/|Ω|, split as an analytic
 * nearest-image profile χ(d) ln(d²/(d²+σ²)) per center (χ a smooth cutoff
 * supported in d < 0.45 min(Lx,Ly)) plus a zero-mean remainder from the
 * spectral Poisson solve. Throws Error(Domain) if smoothing < 2 min(hx, hy).
 */
BackgroundData periodic_background(const VortexSpec& spec, double smoothing);
BackgroundData periodic_background(const VortexSpec& spec);

/// Add constant c_j to u0_j (e^{u0_j} scaled by e^{c_j}).
BackgroundData shift_background(const BackgroundData& background, const std::vector<double>& constants);

namespace detail {
/// C-infinity step: 0 for t <= 0, 1 for t >= 1; returns {S, S', S''}.
struct StepValue {
    double value, first, second;
};
StepValue smooth_step(double t) noexcept;
}  // namespace detail

}  // namespace bpsv
