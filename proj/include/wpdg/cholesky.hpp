/// @file cholesky.hpp
/// @brief Sparse Cholesky factorization for spd matrices, stored as a
/// skyline (envelope) lower factor under a reverse Cuthill-McKee
/// ordering. A non-positive pivot throws; this doubles as the spd test
/// used by the rest of the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <vector>

#include "wpdg/core.hpp"
#include "wpdg/sparse.hpp"

namespace wpdg {

namespace detail {

/// Reverse Cuthill-McKee ordering of the sparsity graph. Reduces the
/// envelope for matrices that arrive badly ordered; on the structured
/// FEM problems it is close to the natural order.
inline std::vector<index_t> rcm_permutation(const SparseMatrixCsr& a) {
    const index_t n = a.n_rows;
    std::vector<index_t> degree(static_cast<std::size_t>(n));
    for (index_t i = 0; i < n; ++i)
        degree[static_cast<std::size_t>(i)] =
            a.row_offsets[static_cast<std::size_t>(i) + 1] -
            a.row_offsets[static_cast<std::size_t>(i)];

    std::vector<index_t> order;
    order.reserve(static_cast<std::size_t>(n));
    std::vector<bool> visited(static_cast<std::size_t>(n), false);

    for (index_t seed_scan = 0; seed_scan < n; ++seed_scan) {
        if (static_cast<index_t>(order.size()) == n) break;
        // lowest-degree unvisited vertex as the component seed
        index_t seed = -1;
        for (index_t i = 0; i < n; ++i)
            if (!visited[static_cast<std::size_t>(i)] &&
                (seed < 0 || degree[static_cast<std::size_t>(i)] <
                                 degree[static_cast<std::size_t>(seed)]))
                seed = i;
        if (seed < 0) break;
        visited[static_cast<std::size_t>(seed)] = true;
        std::queue<index_t> q;
        q.push(seed);
        while (!q.empty()) {
            index_t u = q.front();
            q.pop();
            order.push_back(u);
            std::vector<index_t> nbrs;
            for (index_t k = a.row_offsets[static_cast<std::size_t>(u)];
                 k < a.row_offsets[static_cast<std::size_t>(u) + 1]; ++k) {
                index_t v = a.col_indices[static_cast<std::size_t>(k)];
                if (v != u && !visited[static_cast<std::size_t>(v)]) {
                    visited[static_cast<std::size_t>(v)] = true;
                    nbrs.push_back(v);
                }
            }
            std::sort(nbrs.begin(), nbrs.end(), [&](index_t x, index_t y) {
                return degree[static_cast<std::size_t>(x)] <
                       degree[static_cast<std::size_t>(y)];
            });
            for (index_t v : nbrs) q.push(v);
        }
    }
    std::reverse(order.begin(), order.end());
    return order;
}

} // namespace detail

/// Envelope Cholesky factor of a permuted spd matrix: P M P^T = L L^T.
class CholeskyFactor {
public:
    explicit CholeskyFactor(const SparseMatrixCsr& m, bool reorder = true) {
        require(m.n_rows == m.n_cols, "cholesky: matrix must be square");
        n_ = m.n_rows;
        check_symmetry(m);

        perm_ = reorder ? detail::rcm_permutation(m) : natural_order(n_);
        inv_perm_.resize(static_cast<std::size_t>(n_));
        for (index_t i = 0; i < n_; ++i)
            inv_perm_[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])] = i;

        // envelope profile of the permuted matrix
        first_col_.assign(static_cast<std::size_t>(n_), 0);
        for (index_t pi = 0; pi < n_; ++pi) {
            index_t i = perm_[static_cast<std::size_t>(pi)];
            index_t fc = pi;
            for (index_t k = m.row_offsets[static_cast<std::size_t>(i)];
                 k < m.row_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
                index_t pj = inv_perm_[static_cast<std::size_t>(
                    m.col_indices[static_cast<std::size_t>(k)])];
                if (pj < fc) fc = pj;
            }
            first_col_[static_cast<std::size_t>(pi)] = fc;
        }
        start_.assign(static_cast<std::size_t>(n_) + 1, 0);
        for (index_t i = 0; i < n_; ++i)
            start_[static_cast<std::size_t>(i) + 1] =
                start_[static_cast<std::size_t>(i)] +
                (i - first_col_[static_cast<std::size_t>(i)] + 1);
        vals_.assign(static_cast<std::size_t>(start_.back()), 0.0);

        // scatter permuted entries into the envelope (lower triangle)
        for (index_t pi = 0; pi < n_; ++pi) {
            index_t i = perm_[static_cast<std::size_t>(pi)];
            for (index_t k = m.row_offsets[static_cast<std::size_t>(i)];
                 k < m.row_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
                index_t pj = inv_perm_[static_cast<std::size_t>(
                    m.col_indices[static_cast<std::size_t>(k)])];
                if (pj <= pi) at(pi, pj) = m.values[static_cast<std::size_t>(k)];
            }
        }

        factorize();
    }

    index_t dim() const { return n_; }

    /// Solves M x = b through the stored factor.
    Vector apply_inverse(const Vector& b) const {
        Vector y = permute(b);
        forward(y);
        backward(y);
        return unpermute(y);
    }

    /// Solves L y = P b (used by congruence transformations).
    Vector solve_lower(const Vector& b) const {
        Vector y = permute(b);
        forward(y);
        return y;
    }

    /// Solves L^T z = y and returns P^T z.
    Vector solve_lower_transpose(const Vector& y) const {
        Vector z = y;
        backward(z);
        return unpermute(z);
    }

    /// Applies L^T P, the transpose of the map inverted by
    /// solve_lower_transpose.
    Vector apply_lt(const Vector& x) const {
        Vector px = permute(x);
        Vector y(static_cast<std::size_t>(n_), 0.0);
        for (index_t i = 0; i < n_; ++i)
            for (index_t j = first_col_[static_cast<std::size_t>(i)]; j <= i; ++j)
                y[static_cast<std::size_t>(j)] += at(i, j) * px[static_cast<std::size_t>(i)];
        return y;
    }

private:
    static std::vector<index_t> natural_order(index_t n) {
        std::vector<index_t> p(static_cast<std::size_t>(n));
        std::iota(p.begin(), p.end(), index_t{0});
        return p;
    }

    static void check_symmetry(const SparseMatrixCsr& m) {
        double tol = 1e-14 * (1.0 + m.frobenius_norm());
        for (index_t i = 0; i < m.n_rows; ++i)
            for (index_t k = m.row_offsets[static_cast<std::size_t>(i)];
                 k < m.row_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
                index_t j = m.col_indices[static_cast<std::size_t>(k)];
                if (std::abs(m.values[static_cast<std::size_t>(k)] - m.at(j, i)) > tol)
                    throw ContractError("cholesky: matrix is not symmetric");
            }
    }

    double& at(index_t i, index_t j) {
        return vals_[static_cast<std::size_t>(
            start_[static_cast<std::size_t>(i)] +
            (j - first_col_[static_cast<std::size_t>(i)]))];
    }
    double at(index_t i, index_t j) const {
        if (j < first_col_[static_cast<std::size_t>(i)]) return 0.0;
        return vals_[static_cast<std::size_t>(
            start_[static_cast<std::size_t>(i)] +
            (j - first_col_[static_cast<std::size_t>(i)]))];
    }

    void factorize() {
        for (index_t i = 0; i < n_; ++i) {
            index_t fci = first_col_[static_cast<std::size_t>(i)];
            for (index_t j = fci; j < i; ++j) {
                index_t lo = std::max(fci, first_col_[static_cast<std::size_t>(j)]);
                double s = at(i, j);
                for (index_t k = lo; k < j; ++k) s -= at(i, k) * at(j, k);
                at(i, j) = s / at(j, j);
            }
            double d = at(i, i);
            for (index_t k = fci; k < i; ++k) d -= at(i, k) * at(i, k);
            if (!(d > 0.0))
                throw NotPositiveDefiniteError(
                    "cholesky: non-positive pivot at row " + std::to_string(i));
            at(i, i) = std::sqrt(d);
        }
    }

    Vector permute(const Vector& b) const {
        require(static_cast<index_t>(b.size()) == n_, "cholesky solve: dims");
        Vector y(static_cast<std::size_t>(n_));
        for (index_t i = 0; i < n_; ++i)
            y[static_cast<std::size_t>(i)] =
                b[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])];
        return y;
    }

    Vector unpermute(const Vector& y) const {
        Vector x(static_cast<std::size_t>(n_));
        for (index_t i = 0; i < n_; ++i)
            x[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])] =
                y[static_cast<std::size_t>(i)];
        return x;
    }

    void forward(Vector& y) const {
        for (index_t i = 0; i < n_; ++i) {
            double s = y[static_cast<std::size_t>(i)];
            for (index_t j = first_col_[static_cast<std::size_t>(i)]; j < i; ++j)
                s -= at(i, j) * y[static_cast<std::size_t>(j)];
            y[static_cast<std::size_t>(i)] = s / at(i, i);
        }
    }

    void backward(Vector& y) const {
        for (index_t i = n_ - 1; i >= 0; --i) {
            double xi = y[static_cast<std::size_t>(i)] / at(i, i);
            y[static_cast<std::size_t>(i)] = xi;
            for (index_t j = first_col_[static_cast<std::size_t>(i)]; j < i; ++j)
                y[static_cast<std::size_t>(j)] -= at(i, j) * xi;
        }
    }

    index_t n_ = 0;
    std::vector<index_t> perm_, inv_perm_;
    std::vector<index_t> first_col_;
    std::vector<index_t> start_;
    std::vector<double> vals_;
};

inline CholeskyFactor sparse_cholesky(const SparseMatrixCsr& m) {
    return CholeskyFactor(m);
}

} // namespace wpdg
