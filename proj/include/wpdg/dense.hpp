/// @file dense.hpp
/// @brief Column-major dense matrices, LU with partial pivoting, and a
/// column-pivoted rank probe. Dense blocks here are small (the m x m
/// coupling blocks and n x m deflation bases).

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "wpdg/core.hpp"
#include "wpdg/vector_ops.hpp"

namespace wpdg {

struct DenseMatrix {
    index_t n_rows = 0;
    index_t n_cols = 0;
    std::vector<double> values; // column-major

    DenseMatrix() = default;
    DenseMatrix(index_t r, index_t c)
        : n_rows(r), n_cols(c),
          values(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

    double& operator()(index_t i, index_t j) {
        return values[static_cast<std::size_t>(j) * static_cast<std::size_t>(n_rows) +
                      static_cast<std::size_t>(i)];
    }
    double operator()(index_t i, index_t j) const {
        return values[static_cast<std::size_t>(j) * static_cast<std::size_t>(n_rows) +
                      static_cast<std::size_t>(i)];
    }

    Vector column(index_t j) const {
        Vector c(static_cast<std::size_t>(n_rows));
        for (index_t i = 0; i < n_rows; ++i) c[static_cast<std::size_t>(i)] = (*this)(i, j);
        return c;
    }

    Vector row(index_t i) const {
        Vector r(static_cast<std::size_t>(n_cols));
        for (index_t j = 0; j < n_cols; ++j) r[static_cast<std::size_t>(j)] = (*this)(i, j);
        return r;
    }

    void set_column(index_t j, const Vector& c) {
        require(static_cast<index_t>(c.size()) == n_rows, "set_column: length");
        for (index_t i = 0; i < n_rows; ++i) (*this)(i, j) = c[static_cast<std::size_t>(i)];
    }

    static DenseMatrix identity(index_t n) {
        DenseMatrix e(n, n);
        for (index_t i = 0; i < n; ++i) e(i, i) = 1.0;
        return e;
    }
};

/// y = A x
inline Vector dense_apply(const DenseMatrix& a, const Vector& x) {
    require(a.n_cols == static_cast<index_t>(x.size()), "dense_apply: dims");
    Vector y(static_cast<std::size_t>(a.n_rows), 0.0);
    for (index_t j = 0; j < a.n_cols; ++j) {
        double xj = x[static_cast<std::size_t>(j)];
        for (index_t i = 0; i < a.n_rows; ++i) y[static_cast<std::size_t>(i)] += a(i, j) * xj;
    }
    return y;
}

/// y = A^T x
inline Vector dense_apply_transpose(const DenseMatrix& a, const Vector& x) {
    require(a.n_rows == static_cast<index_t>(x.size()), "dense_apply_transpose: dims");
    Vector y(static_cast<std::size_t>(a.n_cols), 0.0);
    for (index_t j = 0; j < a.n_cols; ++j) {
        double s = 0.0;
        for (index_t i = 0; i < a.n_rows; ++i) s += a(i, j) * x[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(j)] = s;
    }
    return y;
}

inline DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.n_cols == b.n_rows, "dense_matmul: dims");
    DenseMatrix c(a.n_rows, b.n_cols);
    for (index_t j = 0; j < b.n_cols; ++j)
        for (index_t k = 0; k < a.n_cols; ++k) {
            double bkj = b(k, j);
            for (index_t i = 0; i < a.n_rows; ++i) c(i, j) += a(i, k) * bkj;
        }
    return c;
}

/// LU factorization with partial pivoting of a square matrix, plus a
/// reciprocal condition number estimate in the 1-norm. Blocks are small
/// enough that the inverse 1-norm is computed exactly by m solves.
class LuFactor {
public:
    explicit LuFactor(DenseMatrix a) : lu_(std::move(a)) {
        require(lu_.n_rows == lu_.n_cols, "lu: matrix must be square");
        const index_t m = lu_.n_rows;
        perm_.resize(static_cast<std::size_t>(m));
        for (index_t i = 0; i < m; ++i) perm_[static_cast<std::size_t>(i)] = i;

        double norm1_a = 0.0;
        for (index_t j = 0; j < m; ++j) {
            double c = 0.0;
            for (index_t i = 0; i < m; ++i) c += std::abs(lu_(i, j));
            norm1_a = std::max(norm1_a, c);
        }

        for (index_t k = 0; k < m; ++k) {
            index_t piv = k;
            double best = std::abs(lu_(k, k));
            for (index_t i = k + 1; i < m; ++i)
                if (std::abs(lu_(i, k)) > best) {
                    best = std::abs(lu_(i, k));
                    piv = i;
                }
            if (best == 0.0) {
                singular_ = true;
                rcond_ = 0.0;
                return;
            }
            if (piv != k) {
                for (index_t j = 0; j < m; ++j) std::swap(lu_(k, j), lu_(piv, j));
                std::swap(perm_[static_cast<std::size_t>(k)],
                          perm_[static_cast<std::size_t>(piv)]);
            }
            for (index_t i = k + 1; i < m; ++i) {
                lu_(i, k) /= lu_(k, k);
                double lik = lu_(i, k);
                for (index_t j = k + 1; j < m; ++j) lu_(i, j) -= lik * lu_(k, j);
            }
        }

        double norm1_inv = 0.0;
        for (index_t j = 0; j < m; ++j) {
            Vector x = solve(unit_vector(m, j));
            double c = 0.0;
            for (double v : x) c += std::abs(v);
            norm1_inv = std::max(norm1_inv, c);
        }
        rcond_ = (norm1_a == 0.0 || norm1_inv == 0.0) ? 0.0 : 1.0 / (norm1_a * norm1_inv);
    }

    bool singular() const { return singular_; }
    double rcond() const { return rcond_; }
    index_t dim() const { return lu_.n_rows; }

    Vector solve(const Vector& rhs) const {
        require(!singular_, "lu: matrix is singular");
        const index_t m = lu_.n_rows;
        require(static_cast<index_t>(rhs.size()) == m, "lu solve: dims");
        Vector x(static_cast<std::size_t>(m));
        for (index_t i = 0; i < m; ++i)
            x[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])];
        for (index_t i = 1; i < m; ++i) {
            double s = x[static_cast<std::size_t>(i)];
            for (index_t j = 0; j < i; ++j) s -= lu_(i, j) * x[static_cast<std::size_t>(j)];
            x[static_cast<std::size_t>(i)] = s;
        }
        for (index_t i = m - 1; i >= 0; --i) {
            double s = x[static_cast<std::size_t>(i)];
            for (index_t j = i + 1; j < m; ++j) s -= lu_(i, j) * x[static_cast<std::size_t>(j)];
            x[static_cast<std::size_t>(i)] = s / lu_(i, i);
        }
        return x;
    }

private:
    DenseMatrix lu_;
    std::vector<index_t> perm_;
    double rcond_ = 0.0;
    bool singular_ = false;
};

inline LuFactor dense_lu_factor(const DenseMatrix& e) { return LuFactor(e); }

inline Vector dense_lu_solve(const LuFactor& f, const Vector& rhs) {
    if (f.singular()) throw SingularCouplingBlockError("dense solve: exactly singular pivot");
    return f.solve(rhs);
}

/// Numerical column rank via column-pivoted modified Gram-Schmidt.
/// A column whose remaining norm falls below tol * (largest original
/// column norm) is treated as dependent.
inline index_t column_rank(const DenseMatrix& a, double tol = 1e-10) {
    const index_t n = a.n_rows, m = a.n_cols;
    std::vector<Vector> cols;
    cols.reserve(static_cast<std::size_t>(m));
    double scale0 = 0.0;
    for (index_t j = 0; j < m; ++j) {
        cols.push_back(a.column(j));
        scale0 = std::max(scale0, norm2(cols.back()));
    }
    if (scale0 == 0.0 || n == 0 || m == 0) return 0;
    index_t rank = 0;
    std::vector<Vector> q;
    std::vector<bool> used(static_cast<std::size_t>(m), false);
    for (index_t step = 0; step < std::min(n, m); ++step) {
        index_t best = -1;
        double best_norm = 0.0;
        for (index_t j = 0; j < m; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            double nj = norm2(cols[static_cast<std::size_t>(j)]);
            if (nj > best_norm) {
                best_norm = nj;
                best = j;
            }
        }
        if (best < 0 || best_norm <= tol * scale0) break;
        used[static_cast<std::size_t>(best)] = true;
        Vector v = cols[static_cast<std::size_t>(best)];
        scale(1.0 / best_norm, v);
        for (index_t j = 0; j < m; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            double c = dot(v, cols[static_cast<std::size_t>(j)]);
            axpy(-c, v, cols[static_cast<std::size_t>(j)]);
        }
        q.push_back(std::move(v));
        ++rank;
    }
    return rank;
}

} // namespace wpdg
