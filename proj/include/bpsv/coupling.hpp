#pragma once

#include <span>
#include <vector>

namespace bpsv {

/// Dense row-major square matrix; l is small so nothing sparse is exploited.
struct DenseMatrix {
    int n = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    explicit DenseMatrix(int size) : n(size), data(static_cast<std::size_t>(size) * size, 0.0) {}

    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * n + j]; }
};

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix identity_matrix(int n);
double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b);

/**
 * The l x l coupling matrix A = I + 11^T together with its Cholesky factor,
 * the inverse factor, the inverse and the spectrum. Every entry comes from a
 * closed form; no factorization is run.
 *
 * Immutable after construction.
 */
class CouplingData {
public:
    /// Throws Error(Domain) for l < 2.
    explicit CouplingData(int l);

    int l() const noexcept { return l_; }
    const DenseMatrix& A() const noexcept { return a_; }
    const DenseMatrix& L() const noexcept { return chol_; }
    const DenseMatrix& L_inv() const noexcept { return chol_inv_; }
    const DenseMatrix& A_inv() const noexcept { return a_inv_; }
    /// {l+1, 1, ..., 1}
    const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }

    // Pointwise closed-form maps, O(l) each via prefix/suffix sums.

    /// v = L w
    void v_from_w(std::span<const double> w, std::span<double> v) const;
    /// w = L^{-1} v
    void w_from_v(std::span<const double> v, std::span<double> w) const;
    /// y = L^T x
    void apply_LT(std::span<const double> x, std::span<double> y) const;

    std::vector<double> v_from_w(std::span<const double> w) const;
    std::vector<double> w_from_v(std::span<const double> v) const;

private:
    void check_size(std::size_t a, std::size_t b) const;

    int l_;
    DenseMatrix a_, chol_, chol_inv_, a_inv_;
    std::vector<double> eigenvalues_;
    std::vector<double> diag_;      // sqrt((k+1)/k), k = 1..l
    std::vector<double> sub_;       // 1/sqrt(k(k+1)): column k of L below the diagonal
    std::vector<double> inv_diag_;  // sqrt(k/(k+1))
};

CouplingData build_coupling(int l);

}  // namespace bpsv
