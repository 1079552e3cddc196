#include "bpsv/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bpsv/error.hpp"

namespace bpsv {

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.n != b.n) throw Error(ErrorCode::Shape, "matrix size mismatch");
    DenseMatrix c(a.n);
    for (int i = 0; i < a.n; ++i)
        for (int k = 0; k < a.n; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < a.n; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.n);
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) t(j, i) = a(i, j);
    return t;
}

DenseMatrix identity_matrix(int n) {
    DenseMatrix id(n);
    for (int i = 0; i < n; ++i) id(i, i) = 1.0;
    return id;
}

double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.n != b.n) throw Error(ErrorCode::Shape, "matrix size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

CouplingData::CouplingData(int l) : l_(l) {
    if (l < 2) throw Error(ErrorCode::Domain, "coupling requires l >= 2, got l = " + std::to_string(l));

    a_ = DenseMatrix(l);
    chol_ = DenseMatrix(l);
    chol_inv_ = DenseMatrix(l);
    a_inv_ = DenseMatrix(l);
    diag_.resize(l);
    sub_.resize(l);
    inv_diag_.resize(l);

    // Formulas below use 1-based k = idx + 1.
    for (int idx = 0; idx < l; ++idx) {
        const double k = idx + 1.0;
        diag_[idx] = std::sqrt((k + 1.0) / k);
        sub_[idx] = std::sqrt(1.0 / (k * (k + 1.0)));
        inv_diag_[idx] = std::sqrt(k / (k + 1.0));
    }

    const double inv_l1 = 1.0 / (l + 1.0);
    for (int j = 0; j < l; ++j) {
        for (int k = 0; k < l; ++k) {
            a_(j, k) = (j == k) ? 2.0 : 1.0;
            a_inv_(j, k) = ((j == k) ? static_cast<double>(l) : -1.0) * inv_l1;
        }
        chol_(j, j) = diag_[j];
        chol_inv_(j, j) = inv_diag_[j];
        for (int k = 0; k < j; ++k) {
            chol_(j, k) = sub_[k];
            chol_inv_(j, k) = -sub_[j];
        }
    }

    eigenvalues_.assign(l, 1.0);
    eigenvalues_[0] = l + 1.0;
}

void CouplingData::check_size(std::size_t a, std::size_t b) const {
    if (a != static_cast<std::size_t>(l_) || b != static_cast<std::size_t>(l_))
        throw Error(ErrorCode::Shape, "expected " + std::to_string(l_) + " components, got " +
                                          std::to_string(a) + " -> " + std::to_string(b));
}

void CouplingData::v_from_w(std::span<const double> w, std::span<double> v) const {
    check_size(w.size(), v.size());
    double prefix = 0.0;
    for (int j = 0; j < l_; ++j) {
        const double wj = w[j];
        v[j] = prefix + diag_[j] * wj;
        prefix += sub_[j] * wj;
    }
}

void CouplingData::w_from_v(std::span<const double> v, std::span<double> w) const {
    check_size(v.size(), w.size());
    double prefix = 0.0;
    for (int j = 0; j < l_; ++j) {
        const double vj = v[j];
        w[j] = -sub_[j] * prefix + inv_diag_[j] * vj;
        prefix += vj;
    }
}

void CouplingData::apply_LT(std::span<const double> x, std::span<double> y) const {
    check_size(x.size(), y.size());
    double suffix = 0.0;
    for (int k = l_ - 1; k >= 0; --k) {
        const double xk = x[k];
        y[k] = diag_[k] * xk + sub_[k] * suffix;
        suffix += xk;
    }
}

std::vector<double> CouplingData::v_from_w(std::span<const double> w) const {
    std::vector<double> v(w.size());
    v_from_w(w, v);
    return v;
}

std::vector<double> CouplingData::w_from_v(std::span<const double> v) const {
    std::vector<double> w(v.size());
    w_from_v(v, w);
    return w;
}

CouplingData build_coupling(int l) { return CouplingData(l); }

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Domain: return "domain";
        case ErrorCode::Shape: return "shape";
        case ErrorCode::Solvability: return "solvability";
        case ErrorCode::Gate: return "gate";
        case ErrorCode::NotConverged: return "not_converged";
        case ErrorCode::Diverged: return "diverged";
        case ErrorCode::Underflow: return "underflow";
        case ErrorCode::WrongDomain: return "wrong_domain";
        case ErrorCode::Io: return "io";
        case ErrorCode::Parse: return "parse";
        case ErrorCode::InvalidArgument: return "invalid_argument";
    }
    return "unknown";
}

}  // namespace bpsv
