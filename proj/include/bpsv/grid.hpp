#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace bpsv {

enum class Boundary { Periodic, Dirichlet };

/// Doubly periodic rectangular cell [0,Lx) x [0,Ly) sampled at nodes (i*Lx/nx, j*Ly/ny).
struct TorusGeometry {
    double Lx = 0.0, Ly = 0.0;
    int nx = 0, ny = 0;

    double area() const noexcept { return Lx * Ly; }
};

/// Square box [-R,R]^2 split into nx x ny intervals; homogeneous Dirichlet on the edges.
struct PlanarTruncation {
    double R = 0.0;
    int nx = 0, ny = 0;
};

/**
 * Sample layout shared by every field. Values are row-major with x fastest:
 * index = j*nx + i, sample (i,j) at (x0 + i*hx, y0 + j*hy).
 *
 * Periodic grids store all nx*ny nodes of the cell. Dirichlet grids store only
 * interior nodes, so nx here is the interval count minus one.
 */
struct Grid {
    Boundary boundary = Boundary::Periodic;
    int nx = 0, ny = 0;
    double Lx = 0.0, Ly = 0.0;
    double x0 = 0.0, y0 = 0.0;
    double hx = 0.0, hy = 0.0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(nx) * ny; }
    double x(int i) const noexcept { return x0 + i * hx; }
    double y(int j) const noexcept { return y0 + j * hy; }
    double cell_area() const noexcept { return hx * hy; }
    double area() const noexcept { return Lx * Ly; }

    bool operator==(const Grid&) const = default;
};

/// Throws Error(Domain) unless Lx, Ly > 0 and nx, ny >= 8.
Grid make_grid(const TorusGeometry& geometry);
/// Throws Error(Domain) unless R > 0 and nx, ny >= 8 (intervals).
Grid make_grid(const PlanarTruncation& box);

class ScalarField2D {
public:
    ScalarField2D() = default;
    explicit ScalarField2D(const Grid& grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}
    ScalarField2D(const Grid& grid, std::vector<double> values);

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator[](std::size_t k) { return values_[k]; }
    double operator[](std::size_t k) const { return values_[k]; }
    double& at(int i, int j) { return values_[static_cast<std::size_t>(j) * grid_.nx + i]; }
    double at(int i, int j) const { return values_[static_cast<std::size_t>(j) * grid_.nx + i]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool all_finite() const noexcept;
    double max_abs() const noexcept;
    double mean() const noexcept;

private:
    Grid grid_;
    std::vector<double> values_;
};

using FieldSet = std::vector<ScalarField2D>;

/// Sample a function of (x, y) at every stored node.
template <class F>
ScalarField2D sample(const Grid& grid, F&& f) {
    ScalarField2D out(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) out.at(i, j) = f(grid.x(i), grid.y(j));
    return out;
}

/**
 * Spectral operators on one grid. Periodic grids use real-to-complex FFTs,
 * Dirichlet grids the type-I sine transform. Plans are shared through a
 * process-wide cache; every method is const and thread-safe.
 */
class FieldOperators {
public:
    virtual ~FieldOperators() = default;

    virtual const Grid& grid() const noexcept = 0;
    virtual ScalarField2D laplacian(const ScalarField2D& f) const = 0;
    /// (-Δ + shift)^{-1} f. shift must be > 0, except that a periodic grid with
    /// shift == 0 returns the zero-mean solution of -Δu = f - mean(f).
    virtual ScalarField2D shifted_inverse(const ScalarField2D& f, double shift) const = 0;

    double integrate(const ScalarField2D& f) const;
    double inner(const ScalarField2D& a, const ScalarField2D& b) const;
};

std::shared_ptr<const FieldOperators> make_operators(const Grid& grid);

/// Cell quadrature: (cell area) * Σ values. On periodic grids this is the
/// spectrally accurate trapezoid rule; on Dirichlet grids integrands are taken
/// as zero on the box edge.
double integrate(const ScalarField2D& f);
ScalarField2D laplacian(const ScalarField2D& f);
/// Zero-mean solution of Δu = rhs on a periodic grid. Throws Error(Solvability)
/// if |mean(rhs)| > 1e-10 * max|rhs|, Error(WrongDomain) on a Dirichlet grid.
ScalarField2D poisson_solve_zero_mean(const ScalarField2D& rhs);

// FieldSet helpers used by the solvers.
double inner(const FieldOperators& ops, const FieldSet& a, const FieldSet& b);
double norm(const FieldOperators& ops, const FieldSet& a);
void axpy(double alpha, const FieldSet& x, FieldSet& y);
FieldSet scaled(const FieldSet& x, double alpha);
FieldSet zeros_like(const FieldSet& x);
FieldSet zero_fields(const Grid& grid, int count);
double max_abs(const FieldSet& a);

}  // namespace bpsv
