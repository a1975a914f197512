/// @file tridiag.hpp
/// @brief Dense reduction kernels behind the eigenpencil: implicit-shift
/// QL for symmetric tridiagonal matrices and Householder
/// tridiagonalization of real skew-symmetric matrices.

#pragma once

#include <cmath>
#include <vector>

#include "wpdg/core.hpp"
#include "wpdg/dense.hpp"

namespace wpdg::detail {

/// Implicit QL with Wilkinson shifts. `d` holds the diagonal (length n),
/// `e` the off-diagonals (length n-1). On return `d` carries the
/// eigenvalues. If `accum` is non-null, its columns are post-multiplied
/// by the rotations, so starting from the identity it ends up holding
/// orthonormal eigenvectors (column j for eigenvalue d[j]).
inline void symmetric_tridiagonal_eigen(Vector& d, Vector& e, DenseMatrix* accum) {
    const index_t n = static_cast<index_t>(d.size());
    if (n == 0) return;
    require(static_cast<index_t>(e.size()) == n - 1 || (n == 1 && e.empty()),
            "tridiag eigen: off-diagonal length");
    Vector ework = e;
    ework.push_back(0.0);

    for (index_t l = 0; l < n; ++l) {
        int iter = 0;
        index_t m;
        do {
            for (m = l; m < n - 1; ++m) {
                double dd = std::abs(d[static_cast<std::size_t>(m)]) +
                            std::abs(d[static_cast<std::size_t>(m) + 1]);
                if (std::abs(ework[static_cast<std::size_t>(m)]) <=
                    1e-300 + 2.3e-16 * dd)
                    break;
            }
            if (m != l) {
                if (++iter > 60)
                    throw NumericalFailureError("tridiag eigen: QL did not converge");
                double g = (d[static_cast<std::size_t>(l) + 1] -
                            d[static_cast<std::size_t>(l)]) /
                           (2.0 * ework[static_cast<std::size_t>(l)]);
                double r = std::hypot(g, 1.0);
                g = d[static_cast<std::size_t>(m)] - d[static_cast<std::size_t>(l)] +
                    ework[static_cast<std::size_t>(l)] /
                        (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                index_t i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * ework[static_cast<std::size_t>(i)];
                    double b = c * ework[static_cast<std::size_t>(i)];
                    r = std::hypot(f, g);
                    ework[static_cast<std::size_t>(i) + 1] = r;
                    if (r == 0.0) {
                        d[static_cast<std::size_t>(i) + 1] -= p;
                        ework[static_cast<std::size_t>(m)] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[static_cast<std::size_t>(i) + 1] - p;
                    r = (d[static_cast<std::size_t>(i)] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[static_cast<std::size_t>(i) + 1] = g + p;
                    g = c * r - b;
                    if (accum) {
                        for (index_t k = 0; k < accum->n_rows; ++k) {
                            double z1 = (*accum)(k, i + 1);
                            (*accum)(k, i + 1) = s * (*accum)(k, i) + c * z1;
                            (*accum)(k, i) = c * (*accum)(k, i) - s * z1;
                        }
                    }
                }
                if (r == 0.0 && i >= l) continue;
                d[static_cast<std::size_t>(l)] -= p;
                ework[static_cast<std::size_t>(l)] = g;
                ework[static_cast<std::size_t>(m)] = 0.0;
            }
        } while (m != l);
    }
}

struct SkewTridiagonalization {
    Vector superdiag;  // c[j] = T(j, j+1); T(j+1, j) = -c[j]
    DenseMatrix q;     // orthogonal accumulation, S = Q T Q^T
};

/// Householder reduction of a real skew-symmetric matrix to skew
/// tridiagonal form. The two-sided update simplifies to the rank-2 form
/// B <- B + beta v u^T - beta u v^T with u = B v, since v^T B v = 0.
inline SkewTridiagonalization skew_tridiagonalize(DenseMatrix s) {
    require(s.n_rows == s.n_cols, "skew tridiagonalize: square input");
    const index_t n = s.n_rows;
    SkewTridiagonalization out;
    out.q = DenseMatrix::identity(n);
    if (n <= 1) return out;

    Vector v(static_cast<std::size_t>(n), 0.0);
    Vector u(static_cast<std::size_t>(n), 0.0);
    for (index_t k = 0; k + 2 < n; ++k) {
        double xnorm = 0.0;
        for (index_t i = k + 1; i < n; ++i) xnorm += s(i, k) * s(i, k);
        xnorm = std::sqrt(xnorm);
        if (xnorm == 0.0) continue;
        double x0 = s(k + 1, k);
        double alpha = (x0 >= 0.0) ? -xnorm : xnorm;
        double vnorm2 = 0.0;
        for (index_t i = k + 1; i < n; ++i) {
            v[static_cast<std::size_t>(i)] = s(i, k);
            if (i == k + 1) v[static_cast<std::size_t>(i)] -= alpha;
            vnorm2 += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
        }
        if (vnorm2 == 0.0) continue;
        double beta = 2.0 / vnorm2;

        // column k and row k collapse onto the subdiagonal entry
        s(k + 1, k) = alpha;
        s(k, k + 1) = -alpha;
        for (index_t i = k + 2; i < n; ++i) {
            s(i, k) = 0.0;
            s(k, i) = 0.0;
        }

        // trailing skew block update
        for (index_t i = k + 1; i < n; ++i) {
            double acc = 0.0;
            for (index_t j = k + 1; j < n; ++j)
                acc += s(i, j) * v[static_cast<std::size_t>(j)];
            u[static_cast<std::size_t>(i)] = acc;
        }
        for (index_t j = k + 1; j < n; ++j) {
            double vj = v[static_cast<std::size_t>(j)];
            double uj = u[static_cast<std::size_t>(j)];
            for (index_t i = k + 1; i < n; ++i)
                s(i, j) += beta * (v[static_cast<std::size_t>(i)] * uj -
                                   u[static_cast<std::size_t>(i)] * vj);
        }

        // Q <- Q H on the trailing columns
        for (index_t r = 0; r < n; ++r) {
            double acc = 0.0;
            for (index_t j = k + 1; j < n; ++j)
                acc += out.q(r, j) * v[static_cast<std::size_t>(j)];
            acc *= beta;
            for (index_t j = k + 1; j < n; ++j)
                out.q(r, j) -= acc * v[static_cast<std::size_t>(j)];
        }
    }

    out.superdiag.resize(static_cast<std::size_t>(n - 1));
    for (index_t j = 0; j + 1 < n; ++j)
        out.superdiag[static_cast<std::size_t>(j)] = s(j, j + 1);
    return out;
}

} // namespace wpdg::detail
