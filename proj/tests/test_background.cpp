#include "doctest.h"

#include <cmath>

#include "bpsv/background.hpp"
#include "bpsv/error.hpp"
#include "support.hpp"

using namespace bpsv;
using testing_support::kPi;
using testing_support::plane_spec;
using testing_support::torus_spec;

TEST_CASE("planar background without vortices is trivial") {
    const auto bg = planar_background(plane_spec(2, {{}, {}}, 5.0, 16), 1.0);
    for (int j = 0; j < 2; ++j) {
        for (double v : bg.exp_u0[j].values()) CHECK(v == 1.0);
        CHECK(bg.g[j].max_abs() == 0.0);
    }
}

TEST_CASE("planar background for one vortex at the origin") {
    // h = 1, so (1, 0) is a node
    const auto spec = plane_spec(2, {{{0.0, 0.0}}, {}}, 8.0, 16);
    const auto bg = planar_background(spec, 1.0);
    const Grid g = spec.grid();
    const int i0 = 7, j0 = 7;
    CHECK(g.x(i0) == doctest::Approx(0.0));
    CHECK(bg.exp_u0[0].at(i0 + 1, j0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(bg.exp_u0[0].at(i0, j0) == 0.0);
    CHECK(bg.center_mask[0][static_cast<std::size_t>(j0) * g.nx + i0] == 1);
    CHECK_THROWS_AS(planar_background(spec, 0.0), Error);
}

TEST_CASE("planar source integrates to 4 pi per vortex") {
    const auto spec = plane_spec(2, {{{0.0, 0.0}}, {}}, 20.0, 256);
    const auto bg = planar_background(spec, 1.0);
    CHECK(integrate(bg.g[0]) == doctest::Approx(4 * kPi).epsilon(1e-2));
    CHECK(integrate(bg.g[1]) == 0.0);

    SUBCASE("tapered variant: exact flux, trivial outside the taper") {
        const Taper taper = default_taper(spec);
        CHECK(taper.outer == doctest::Approx(10.0));
        CHECK(taper.inner == doctest::Approx(4.0));
        const auto tb = tapered_planar_background(spec, 1.0, taper);
        CHECK(integrate(tb.g[0]) == doctest::Approx(4 * kPi).epsilon(1e-7));
        const Grid g = spec.grid();
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                if (std::hypot(g.x(i), g.y(j)) >= taper.outer) {
                    REQUIRE(tb.exp_u0[0].at(i, j) == 1.0);
                    REQUIRE(tb.g[0].at(i, j) == 0.0);
                }
    }
}

TEST_CASE("smooth step") {
    using detail::smooth_step;
    CHECK(smooth_step(-0.5).value == 0.0);
    CHECK(smooth_step(1.5).value == 1.0);
    CHECK(smooth_step(0.5).value == doctest::Approx(0.5));
    // derivatives against central differences
    for (double t : {0.2, 0.45, 0.8}) {
        const double h = 1e-5;
        const double d1 = (smooth_step(t + h).value - smooth_step(t - h).value) / (2 * h);
        const double d2 = (smooth_step(t + h).first - smooth_step(t - h).first) / (2 * h);
        CHECK(smooth_step(t).first == doctest::Approx(d1).epsilon(1e-7));
        CHECK(smooth_step(t).second == doctest::Approx(d2).epsilon(1e-6));
    }
}

TEST_CASE("periodic background without vortices is constant") {
    const auto bg = periodic_background(torus_spec(2, {{}, {}}, 3.0, 3.0, 32));
    for (int j = 0; j < 2; ++j) {
        const double c = bg.u0[j][0];
        for (double v : bg.u0[j].values()) CHECK(v == doctest::Approx(c));
        CHECK(laplacian(bg.u0[j]).max_abs() < 1e-12);
        CHECK(bg.exp_u0[j][0] == doctest::Approx(std::exp(c)));
    }
}

TEST_CASE("periodic background Laplacian away from the center") {
    const double L = 2 * kPi;
    const auto spec = torus_spec(2, {{{2.0, 3.0}}, {}}, L, L, 256);
    const auto bg = periodic_background(spec);
    const Grid g = spec.grid();
    // analytic Laplacian of the singular profile plus the spectral one of the smooth remainder
    const auto lap_rem = laplacian(bg.remainder[0]);
    const auto lap_all = laplacian(bg.u0[0]);
    auto outside = [&](double cells, auto&& value) {
        double sum = 0.0, area = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double d = std::hypot(std::remainder(g.x(i) - 2.0, L), std::remainder(g.y(j) - 3.0, L));
                if (d <= cells * g.hx) continue;
                sum += value(i, j) * g.cell_area();
                area += g.cell_area();
            }
        return std::make_pair(sum, -4 * kPi / g.area() * area);
    };
    double pointwise = 0.0;
    const auto [split, expected] = outside(3.0, [&](int i, int j) {
        const double v = bg.singular_laplacian[0].at(i, j) + lap_rem.at(i, j);
        pointwise = std::max(pointwise, std::abs(v + 4 * kPi / g.area()));
        return v;
    });
    CHECK(split == doctest::Approx(expected).epsilon(1e-2));
    CHECK(pointwise < 1e-8);

    // sampled log singularity aliases; far enough out the spectral Laplacian agrees too
    const auto [spectral, expected10] = outside(10.0, [&](int i, int j) { return lap_all.at(i, j); });
    CHECK(spectral == doctest::Approx(expected10).epsilon(1e-2));

    for (double v : bg.exp_u0[0].values()) {
        REQUIRE(std::isfinite(v));
        REQUIRE(v >= 0.0);
    }
    CHECK(std::abs(bg.projected_mean[0]) < 1e-8);
}

TEST_CASE("coincident vortices vanish to fourth order") {
    const double L = 2 * kPi;
    const Grid probe = make_grid(TorusGeometry{L, L, 256, 256});
    const double px = probe.x(100), py = probe.y(90);
    const auto spec = torus_spec(2, {{{px, py}, {px, py}}, {}}, L, L, 256);
    const auto bg = periodic_background(spec);
    std::vector<double> x, y;
    for (int k = 1; k <= 4; ++k) {
        x.push_back(std::log(k * probe.hx));
        y.push_back(std::log(bg.exp_u0[0].at(100 + k, 90)));
    }
    const double n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("background guards") {
    const auto spec = torus_spec(2, {{{1.0, 1.0}}, {}}, 3.0, 3.0, 32);
    CHECK_THROWS_AS(periodic_background(spec, 0.01), Error);
    CHECK_THROWS_AS(planar_background(torus_spec(2, {{}, {}}, 3.0, 3.0, 32), 1.0), Error);
    VortexSpec outside = torus_spec(2, {{{4.0, 1.0}}, {}}, 3.0, 3.0, 32);
    CHECK_THROWS_AS(outside.validate(), Error);

    const auto shifted = shift_background(periodic_background(spec), {0.5, -0.25});
    const auto base = periodic_background(spec);
    CHECK(shifted.u0[0][5] == doctest::Approx(base.u0[0][5] + 0.5));
    CHECK(shifted.exp_u0[1][5] == doctest::Approx(base.exp_u0[1][5] * std::exp(-0.25)));
}
