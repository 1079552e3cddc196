#include "bpsv/background.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bpsv/error.hpp"

namespace bpsv {

std::vector<int> VortexSpec::counts() const {
    std::vector<int> n;
    n.reserve(points.size());
    for (const auto& p : points) n.push_back(static_cast<int>(p.size()));
    return n;
}

int VortexSpec::total_count() const {
    int s = 0;
    for (const auto& p : points) s += static_cast<int>(p.size());
    return s;
}

Grid VortexSpec::grid() const {
    return std::visit([](const auto& d) { return make_grid(d); }, domain);
}

void VortexSpec::validate() const {
    if (l < 1) throw Error(ErrorCode::Domain, "component count l must be positive");
    if (static_cast<int>(points.size()) != l)
        throw Error(ErrorCode::Shape, "expected " + std::to_string(l) + " vortex lists, got " +
                                          std::to_string(points.size()));
    if (const auto* torus = std::get_if<TorusGeometry>(&domain)) {
        make_grid(*torus);
        for (const auto& comp : points)
            for (const auto& p : comp)
                if (p.x < 0.0 || p.x >= torus->Lx || p.y < 0.0 || p.y >= torus->Ly)
                    throw Error(ErrorCode::Domain, "vortex center outside the periodic cell [0,Lx)x[0,Ly)");
    } else {
        const auto& box = std::get<PlanarTruncation>(domain);
        make_grid(box);
        for (const auto& comp : points)
            for (const auto& p : comp)
                if (std::hypot(p.x, p.y) >= box.R)
                    throw Error(ErrorCode::Domain, "vortex center must satisfy |p| < R");
    }
}

namespace detail {

StepValue smooth_step(double t) noexcept {
    if (t <= 0.0) return {0.0, 0.0, 0.0};
    if (t >= 1.0) return {1.0, 0.0, 0.0};
    // S = logistic(z), z = 1/(1-t) - 1/t
    const double z = 1.0 / (1.0 - t) - 1.0 / t;
    const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    const double ds = s * (1.0 - s);
    const double dds = ds * (1.0 - 2.0 * s);
    const double zp = 1.0 / ((1.0 - t) * (1.0 - t)) + 1.0 / (t * t);
    const double zpp = 2.0 / std::pow(1.0 - t, 3) - 2.0 / (t * t * t);
    return {s, ds * zp, dds * zp * zp + ds * zpp};
}

}  // namespace detail

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

struct Radial {
    double value, first, second;  // value and radial derivatives
};

/// Cutoff 1 - S((r - inner)/(outer - inner)).
Radial cutoff(double r, double inner, double outer) {
    const double w = outer - inner;
    const auto s = detail::smooth_step((r - inner) / w);
    return {1.0 - s.value, -s.first / w, -s.second / (w * w)};
}

double periodic_delta(double d, double period) {
    d = std::fmod(d, period);
    if (d > 0.5 * period) d -= period;
    if (d < -0.5 * period) d += period;
    return d;
}

void warn_close_pairs(const VortexSpec& spec, const Grid& grid, BackgroundData& out) {
    const double h = std::min(grid.hx, grid.hy);
    const bool torus = spec.is_torus();
    for (int j = 0; j < spec.l; ++j) {
        const auto& pts = spec.points[j];
        for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b) {
                double dx = pts[a].x - pts[b].x, dy = pts[a].y - pts[b].y;
                if (torus) {
                    dx = periodic_delta(dx, grid.Lx);
                    dy = periodic_delta(dy, grid.Ly);
                }
                const double d = std::hypot(dx, dy);
                if (d > 0.0 && d < 2.0 * h) {
                    std::ostringstream msg;
                    msg << "component " << j + 1 << ": vortices " << a << " and " << b
                        << " are closer than two grid cells (d = " << d << ")";
                    out.warnings.push_back(msg.str());
                }
            }
    }
}

void init_fields(BackgroundData& bg, const Grid& grid, int l) {
    bg.exp_u0 = zero_fields(grid, l);
    bg.u0 = zero_fields(grid, l);
    bg.center_mask.assign(l, std::vector<std::uint8_t>(grid.size(), 0));
}

}  // namespace

BackgroundData planar_background(const VortexSpec& spec, double mu) {
    spec.validate();
    if (spec.is_torus()) throw Error(ErrorCode::WrongDomain, "planar background requested for a torus spec");
    if (!(mu > 0.0)) throw Error(ErrorCode::Domain, "planar background needs mu > 0");
    const Grid grid = spec.grid();
    BackgroundData bg;
    bg.mu = mu;
    init_fields(bg, grid, spec.l);
    bg.g = zero_fields(grid, spec.l);
    warn_close_pairs(spec, grid, bg);

    for (int j = 0; j < spec.l; ++j) {
        for (int iy = 0; iy < grid.ny; ++iy)
            for (int ix = 0; ix < grid.nx; ++ix) {
                const std::size_t k = static_cast<std::size_t>(iy) * grid.nx + ix;
                double e = 1.0, u = 0.0, g = 0.0;
                for (const auto& p : spec.points[j]) {
                    const double r2 = std::pow(grid.x(ix) - p.x, 2) + std::pow(grid.y(iy) - p.y, 2);
                    e *= r2 / (r2 + mu);
                    if (r2 > 0.0)
                        u -= std::log1p(mu / r2);
                    else {
                        u -= std::log(mu);
                        bg.center_mask[j][k] = 1;
                    }
                    g += 4.0 * mu / std::pow(mu + r2, 2);
                }
                bg.exp_u0[j][k] = e;
                bg.u0[j][k] = u;
                bg.g[j][k] = g;
            }
    }
    return bg;
}

Taper default_taper(const VortexSpec& spec) {
    const auto* box = std::get_if<PlanarTruncation>(&spec.domain);
    if (!box) throw Error(ErrorCode::WrongDomain, "taper applies to planar specs only");
    double pmax = 0.0;
    for (const auto& comp : spec.points)
        for (const auto& p : comp) pmax = std::max(pmax, std::hypot(p.x, p.y));
    const double outer = std::min(pmax + 10.0, box->R - 2.0);
    if (outer - pmax < 2.0)
        throw Error(ErrorCode::Domain, "box too small: need R >= max|p| + 4 for the background taper");
    return {pmax + 0.4 * (outer - pmax), outer};
}

BackgroundData tapered_planar_background(const VortexSpec& spec, double mu, const Taper& taper) {
    BackgroundData bg = planar_background(spec, mu);
    if (!(taper.outer > taper.inner) || taper.inner < 0.0)
        throw Error(ErrorCode::Domain, "taper needs 0 <= inner < outer");
    const Grid& grid = bg.exp_u0[0].grid();
    for (int j = 0; j < spec.l; ++j) {
        if (spec.points[j].empty()) continue;
        for (int iy = 0; iy < grid.ny; ++iy)
            for (int ix = 0; ix < grid.nx; ++ix) {
                const std::size_t k = static_cast<std::size_t>(iy) * grid.nx + ix;
                const double x = grid.x(ix), y = grid.y(iy);
                const double rho = std::hypot(x, y);
                // keep = 1 - η
                const auto keep = cutoff(rho, taper.inner, taper.outer);
                const double eta_p = -keep.first, eta_pp = -keep.second;
                const double u0 = bg.u0[j][k];

                double gx = 0.0, gy = 0.0;
                for (const auto& p : spec.points[j]) {
                    const double dx = x - p.x, dy = y - p.y, r2 = dx * dx + dy * dy;
                    if (r2 == 0.0) continue;
                    const double c = 2.0 * mu / (r2 * (r2 + mu));
                    gx += c * dx;
                    gy += c * dy;
                }
                double g = keep.value * bg.g[j][k];
                if (eta_p != 0.0 || eta_pp != 0.0) {
                    const double du_drho = (gx * x + gy * y) / rho;
                    g += 2.0 * eta_p * du_drho + u0 * (eta_pp + eta_p / rho);
                }
                bg.g[j][k] = g;
                bg.u0[j][k] = keep.value * u0;
                if (!bg.center_mask[j][k]) bg.exp_u0[j][k] = std::exp(keep.value * u0);
            }
    }
    return bg;
}

double default_smoothing(const TorusGeometry& geometry) { return std::min(geometry.Lx, geometry.Ly) / 8.0; }

BackgroundData periodic_background(const VortexSpec& spec) {
    spec.validate();
    const auto* torus = std::get_if<TorusGeometry>(&spec.domain);
    if (!torus) throw Error(ErrorCode::WrongDomain, "periodic background requested for a planar spec");
    return periodic_background(spec, default_smoothing(*torus));
}

BackgroundData periodic_background(const VortexSpec& spec, double smoothing) {
    spec.validate();
    const auto* torus = std::get_if<TorusGeometry>(&spec.domain);
    if (!torus) throw Error(ErrorCode::WrongDomain, "periodic background requested for a planar spec");
    const Grid grid = spec.grid();
    if (smoothing < 2.0 * std::min(grid.hx, grid.hy))
        throw Error(ErrorCode::Domain, "smoothing length must be at least two grid cells");

    const double mu0 = smoothing * smoothing;
    const double lmin = std::min(grid.Lx, grid.Ly);
    const double inner = 0.25 * lmin, outer = 0.45 * lmin;
    const double area = grid.area();

    BackgroundData bg;
    init_fields(bg, grid, spec.l);
    bg.singular_laplacian = zero_fields(grid, spec.l);
    bg.remainder = zero_fields(grid, spec.l);
    bg.projected_mean.assign(spec.l, 0.0);
    warn_close_pairs(spec, grid, bg);

    for (int j = 0; j < spec.l; ++j) {
        ScalarField2D singular(grid), exp_singular(grid, 1.0);
        auto& lap = bg.singular_laplacian[j];
        for (int iy = 0; iy < grid.ny; ++iy)
            for (int ix = 0; ix < grid.nx; ++ix) {
                const std::size_t k = static_cast<std::size_t>(iy) * grid.nx + ix;
                for (const auto& p : spec.points[j]) {
                    const double dx = periodic_delta(grid.x(ix) - p.x, grid.Lx);
                    const double dy = periodic_delta(grid.y(iy) - p.y, grid.Ly);
                    const double r2 = dx * dx + dy * dy, r = std::sqrt(r2);
                    if (r >= outer) continue;
                    const auto chi = cutoff(r, inner, outer);
                    const double lap_f = -4.0 * mu0 / std::pow(mu0 + r2, 2);
                    double term = chi.value * lap_f;
                    if (r2 == 0.0) {
                        singular[k] -= std::log(mu0);
                        exp_singular[k] = 0.0;
                        bg.center_mask[j][k] = 1;
                    } else {
                        const double f = std::log(r2 / (r2 + mu0));
                        const double fp = 2.0 * mu0 / (r * (r2 + mu0));
                        term += 2.0 * chi.first * fp + f * (chi.second + chi.first / r);
                        singular[k] += chi.value * f;
                        exp_singular[k] *= std::exp(chi.value * f);
                    }
                    lap[k] += term;
                }
            }

        ScalarField2D source(grid);
        const double background_density = kFourPi * static_cast<double>(spec.points[j].size()) / area;
        for (std::size_t k = 0; k < grid.size(); ++k) source[k] = -background_density - lap[k];
        const double m = source.mean();
        for (auto& v : source.values()) v -= m;
        bg.projected_mean[j] = m;

        bg.remainder[j] = poisson_solve_zero_mean(source);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            bg.u0[j][k] = singular[k] + bg.remainder[j][k];
            bg.exp_u0[j][k] = exp_singular[k] * std::exp(bg.remainder[j][k]);
        }
    }
    return bg;
}

BackgroundData shift_background(const BackgroundData& background, const std::vector<double>& constants) {
    if (constants.size() != background.exp_u0.size())
        throw Error(ErrorCode::Shape, "one shift constant per component required");
    BackgroundData out = background;
    for (std::size_t j = 0; j < constants.size(); ++j) {
        const double factor = std::exp(constants[j]);
        for (auto& v : out.exp_u0[j].values()) v *= factor;
        for (auto& v : out.u0[j].values()) v += constants[j];
        if (!out.remainder.empty())
            for (auto& v : out.remainder[j].values()) v += constants[j];
    }
    return out;
}

}  // namespace bpsv
