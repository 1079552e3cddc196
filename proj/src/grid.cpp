#include "bpsv/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

#include "bpsv/error.hpp"

namespace bpsv {

Grid make_grid(const TorusGeometry& geometry) {
    if (!(geometry.Lx > 0.0) || !(geometry.Ly > 0.0))
        throw Error(ErrorCode::Domain, "torus cell sides must be positive");
    if (geometry.nx < 8 || geometry.ny < 8)
        throw Error(ErrorCode::Domain, "torus grid needs at least 8 points per axis");
    Grid g;
    g.boundary = Boundary::Periodic;
    g.nx = geometry.nx;
    g.ny = geometry.ny;
    g.Lx = geometry.Lx;
    g.Ly = geometry.Ly;
    g.hx = geometry.Lx / geometry.nx;
    g.hy = geometry.Ly / geometry.ny;
    return g;
}

Grid make_grid(const PlanarTruncation& box) {
    if (!(box.R > 0.0)) throw Error(ErrorCode::Domain, "box half-side R must be positive");
    if (box.nx < 8 || box.ny < 8) throw Error(ErrorCode::Domain, "box grid needs at least 8 intervals per axis");
    Grid g;
    g.boundary = Boundary::Dirichlet;
    g.nx = box.nx - 1;
    g.ny = box.ny - 1;
    g.Lx = 2.0 * box.R;
    g.Ly = 2.0 * box.R;
    g.hx = g.Lx / box.nx;
    g.hy = g.Ly / box.ny;
    g.x0 = -box.R + g.hx;
    g.y0 = -box.R + g.hy;
    return g;
}

ScalarField2D::ScalarField2D(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
        throw Error(ErrorCode::Shape, "field value count does not match grid size");
}

bool ScalarField2D::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField2D::max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double ScalarField2D::mean() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return values_.empty() ? 0.0 : s / static_cast<double>(values_.size());
}

namespace {

void require_same_grid(const ScalarField2D& a, const ScalarField2D& b) {
    if (!(a.grid() == b.grid())) throw Error(ErrorCode::Shape, "fields live on different grids");
}

template <class T>
struct FftwDeleter {
    void operator()(T* p) const noexcept { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double, FftwDeleter<double>>;
using ComplexBuffer = std::unique_ptr<fftw_complex, FftwDeleter<fftw_complex>>;

RealBuffer alloc_real(std::size_t n) { return RealBuffer(fftw_alloc_real(n)); }
ComplexBuffer alloc_complex(std::size_t n) { return ComplexBuffer(fftw_alloc_complex(n)); }

// FFTW's planner is not thread-safe; execution with the new-array interface is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PeriodicPlans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    ~PeriodicPlans() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

struct SinePlan {
    fftw_plan plan = nullptr;
    ~SinePlan() {
        std::lock_guard lock(planner_mutex());
        if (plan) fftw_destroy_plan(plan);
    }
};

std::shared_ptr<const PeriodicPlans> periodic_plans(int nx, int ny) {
    static std::map<std::pair<int, int>, std::weak_ptr<const PeriodicPlans>> cache;
    std::lock_guard lock(planner_mutex());
    auto key = std::make_pair(nx, ny);
    if (auto hit = cache[key].lock()) return hit;
    const std::size_t nreal = static_cast<std::size_t>(nx) * ny;
    const std::size_t ncomplex = static_cast<std::size_t>(ny) * (nx / 2 + 1);
    auto real = alloc_real(nreal);
    auto spec = alloc_complex(ncomplex);
    auto plans = std::make_shared<PeriodicPlans>();
    plans->forward = fftw_plan_dft_r2c_2d(ny, nx, real.get(), spec.get(), FFTW_ESTIMATE);
    plans->backward = fftw_plan_dft_c2r_2d(ny, nx, spec.get(), real.get(), FFTW_ESTIMATE);
    cache[key] = plans;
    return plans;
}

std::shared_ptr<const SinePlan> sine_plan(int nx, int ny) {
    static std::map<std::pair<int, int>, std::weak_ptr<const SinePlan>> cache;
    std::lock_guard lock(planner_mutex());
    auto key = std::make_pair(nx, ny);
    if (auto hit = cache[key].lock()) return hit;
    auto buf = alloc_real(static_cast<std::size_t>(nx) * ny);
    auto plan = std::make_shared<SinePlan>();
    plan->plan = fftw_plan_r2r_2d(ny, nx, buf.get(), buf.get(), FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
    cache[key] = plan;
    return plan;
}

class PeriodicOperators final : public FieldOperators {
public:
    explicit PeriodicOperators(const Grid& grid) : grid_(grid), plans_(periodic_plans(grid.nx, grid.ny)) {
        const double two_pi = 2.0 * std::numbers::pi;
        kx2_.resize(grid.nx / 2 + 1);
        for (int m = 0; m <= grid.nx / 2; ++m) kx2_[m] = std::pow(two_pi * m / grid.Lx, 2);
        ky2_.resize(grid.ny);
        for (int m = 0; m < grid.ny; ++m) {
            const int mm = (m <= grid.ny / 2) ? m : m - grid.ny;
            ky2_[m] = std::pow(two_pi * mm / grid.Ly, 2);
        }
    }

    const Grid& grid() const noexcept override { return grid_; }

    ScalarField2D laplacian(const ScalarField2D& f) const override {
        return apply_multiplier(f, [](double k2) { return -k2; });
    }

    ScalarField2D shifted_inverse(const ScalarField2D& f, double shift) const override {
        if (shift < 0.0) throw Error(ErrorCode::Domain, "shift must be non-negative");
        return apply_multiplier(f, [shift](double k2) {
            const double d = k2 + shift;
            return d == 0.0 ? 0.0 : 1.0 / d;
        });
    }

private:
    template <class Multiplier>
    ScalarField2D apply_multiplier(const ScalarField2D& f, Multiplier&& mult) const {
        if (!(f.grid() == grid_)) throw Error(ErrorCode::Shape, "field grid does not match operator grid");
        const int nx = grid_.nx, ny = grid_.ny, nxc = nx / 2 + 1;
        auto real = alloc_real(grid_.size());
        auto spec = alloc_complex(static_cast<std::size_t>(ny) * nxc);
        std::copy(f.values().begin(), f.values().end(), real.get());
        fftw_execute_dft_r2c(plans_->forward, real.get(), spec.get());
        const double norm = 1.0 / static_cast<double>(grid_.size());
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nxc; ++i) {
                const double s = mult(kx2_[i] + ky2_[j]) * norm;
                auto& c = spec.get()[static_cast<std::size_t>(j) * nxc + i];
                c[0] *= s;
                c[1] *= s;
            }
        fftw_execute_dft_c2r(plans_->backward, spec.get(), real.get());
        ScalarField2D out(grid_);
        std::copy(real.get(), real.get() + grid_.size(), out.values().begin());
        return out;
    }

    Grid grid_;
    std::shared_ptr<const PeriodicPlans> plans_;
    std::vector<double> kx2_, ky2_;
};

class DirichletOperators final : public FieldOperators {
public:
    explicit DirichletOperators(const Grid& grid) : grid_(grid), plan_(sine_plan(grid.nx, grid.ny)) {
        // Interior nodes: nx = intervals - 1; mode m has wavenumber pi*m/Lx.
        kx2_.resize(grid.nx);
        for (int m = 0; m < grid.nx; ++m) kx2_[m] = std::pow(std::numbers::pi * (m + 1) / grid.Lx, 2);
        ky2_.resize(grid.ny);
        for (int m = 0; m < grid.ny; ++m) ky2_[m] = std::pow(std::numbers::pi * (m + 1) / grid.Ly, 2);
    }

    const Grid& grid() const noexcept override { return grid_; }

    ScalarField2D laplacian(const ScalarField2D& f) const override {
        return apply_multiplier(f, [](double k2) { return -k2; });
    }

    ScalarField2D shifted_inverse(const ScalarField2D& f, double shift) const override {
        if (shift < 0.0) throw Error(ErrorCode::Domain, "shift must be non-negative");
        return apply_multiplier(f, [shift](double k2) { return 1.0 / (k2 + shift); });
    }

private:
    template <class Multiplier>
    ScalarField2D apply_multiplier(const ScalarField2D& f, Multiplier&& mult) const {
        if (!(f.grid() == grid_)) throw Error(ErrorCode::Shape, "field grid does not match operator grid");
        const int nx = grid_.nx, ny = grid_.ny;
        auto buf = alloc_real(grid_.size());
        std::copy(f.values().begin(), f.values().end(), buf.get());
        fftw_execute_r2r(plan_->plan, buf.get(), buf.get());
        // RODFT00 round trip scales by 2(n+1) per axis.
        const double norm = 1.0 / (4.0 * (nx + 1.0) * (ny + 1.0));
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) buf.get()[static_cast<std::size_t>(j) * nx + i] *= mult(kx2_[i] + ky2_[j]) * norm;
        fftw_execute_r2r(plan_->plan, buf.get(), buf.get());
        ScalarField2D out(grid_);
        std::copy(buf.get(), buf.get() + grid_.size(), out.values().begin());
        return out;
    }

    Grid grid_;
    std::shared_ptr<const SinePlan> plan_;
    std::vector<double> kx2_, ky2_;
};

}  // namespace

double FieldOperators::integrate(const ScalarField2D& f) const { return bpsv::integrate(f); }

double FieldOperators::inner(const ScalarField2D& a, const ScalarField2D& b) const {
    require_same_grid(a, b);
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s * a.grid().cell_area();
}

std::shared_ptr<const FieldOperators> make_operators(const Grid& grid) {
    if (grid.boundary == Boundary::Periodic) return std::make_shared<PeriodicOperators>(grid);
    return std::make_shared<DirichletOperators>(grid);
}

double integrate(const ScalarField2D& f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    return s * f.grid().cell_area();
}

ScalarField2D laplacian(const ScalarField2D& f) { return make_operators(f.grid())->laplacian(f); }

ScalarField2D poisson_solve_zero_mean(const ScalarField2D& rhs) {
    if (rhs.grid().boundary != Boundary::Periodic)
        throw Error(ErrorCode::WrongDomain, "zero-mean Poisson solve is defined on periodic grids only");
    const double m = rhs.mean();
    if (std::abs(m) > 1e-10 * rhs.max_abs()) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "Poisson right-hand side is not solvable on the torus: mean = " << m;
        throw Error(ErrorCode::Solvability, msg.str());
    }
    // Δu = rhs  <=>  -Δu = -rhs
    auto u = make_operators(rhs.grid())->shifted_inverse(rhs, 0.0);
    for (auto& v : u.values()) v = -v;
    return u;
}

double inner(const FieldOperators& ops, const FieldSet& a, const FieldSet& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::Shape, "field set component mismatch");
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) s += ops.inner(a[c], b[c]);
    return s;
}

double norm(const FieldOperators& ops, const FieldSet& a) { return std::sqrt(inner(ops, a, a)); }

void axpy(double alpha, const FieldSet& x, FieldSet& y) {
    if (x.size() != y.size()) throw Error(ErrorCode::Shape, "field set component mismatch");
    for (std::size_t c = 0; c < x.size(); ++c) {
        auto xs = x[c].values();
        auto ys = y[c].values();
        for (std::size_t k = 0; k < xs.size(); ++k) ys[k] += alpha * xs[k];
    }
}

FieldSet scaled(const FieldSet& x, double alpha) {
    FieldSet out = x;
    for (auto& f : out)
        for (auto& v : f.values()) v *= alpha;
    return out;
}

FieldSet zeros_like(const FieldSet& x) {
    FieldSet out;
    out.reserve(x.size());
    for (const auto& f : x) out.emplace_back(f.grid());
    return out;
}

FieldSet zero_fields(const Grid& grid, int count) { return FieldSet(static_cast<std::size_t>(count), ScalarField2D(grid)); }

double max_abs(const FieldSet& a) {
    double m = 0.0;
    for (const auto& f : a) m = std::max(m, f.max_abs());
    return m;
}

}  // namespace bpsv
