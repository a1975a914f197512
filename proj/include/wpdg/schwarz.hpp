/// @file schwarz.hpp
/// @brief One-level Additive Schwarz preconditioner on overlapping index
/// blocks, with an optional coarse space applied through the coarse
/// projector.

#pragma once

#include <algorithm>
#include <memory>
#include <set>
#include <vector>

#include "wpdg/cholesky.hpp"
#include "wpdg/core.hpp"
#include "wpdg/dense.hpp"
#include "wpdg/operators.hpp"
#include "wpdg/sparse.hpp"

namespace wpdg {

/// Splits `n_subdomains` into per-axis counts px * py with px chosen as
/// the divisor closest to (and not above) sqrt(n_subdomains).
inline std::pair<index_t, index_t> subdomain_grid(index_t n_subdomains) {
    require(n_subdomains >= 1, "subdomain_grid: need at least one subdomain");
    index_t px = 1;
    for (index_t d = 1; d * d <= n_subdomains; ++d)
        if (n_subdomains % d == 0) px = d;
    return {px, n_subdomains / px};
}

/// Rectangular block partition of an nx-by-ny grid of unknowns
/// (row-major), each block grown by `overlap` adjacency layers of the
/// sparsity graph of `m`. Every unknown ends up in at least one block.
inline std::vector<std::vector<index_t>>
partition_structured(const SparseMatrixCsr& m, index_t nx, index_t ny,
                     index_t n_subdomains, index_t overlap) {
    require(m.n_rows == m.n_cols && m.n_rows == nx * ny,
            "partition: grid dims must match the matrix");
    require(overlap >= 1, "partition: overlap must be >= 1");
    auto [px, py] = subdomain_grid(n_subdomains);
    if (px > nx || py > ny)
        throw ConfigError("partition: more subdomains than grid lines on an axis");

    auto axis_range = [](index_t len, index_t blocks, index_t b) {
        index_t lo = b * len / blocks;
        index_t hi = (b + 1) * len / blocks;
        return std::pair<index_t, index_t>{lo, hi};
    };

    std::vector<std::vector<index_t>> subdomains;
    subdomains.reserve(static_cast<std::size_t>(n_subdomains));
    for (index_t by = 0; by < py; ++by)
        for (index_t bx = 0; bx < px; ++bx) {
            auto [x0, x1] = axis_range(nx, px, bx);
            auto [y0, y1] = axis_range(ny, py, by);
            if (x0 == x1 || y0 == y1)
                throw ConfigError("partition: empty subdomain block");
            std::set<index_t> members;
            for (index_t y = y0; y < y1; ++y)
                for (index_t x = x0; x < x1; ++x) members.insert(y * nx + x);
            for (index_t layer = 0; layer < overlap; ++layer) {
                std::set<index_t> grown = members;
                for (index_t i : members)
                    for (index_t k = m.row_offsets[static_cast<std::size_t>(i)];
                         k < m.row_offsets[static_cast<std::size_t>(i) + 1]; ++k)
                        grown.insert(m.col_indices[static_cast<std::size_t>(k)]);
                members.swap(grown);
            }
            subdomains.emplace_back(members.begin(), members.end());
        }

    std::vector<bool> covered(static_cast<std::size_t>(m.n_rows), false);
    for (const auto& dom : subdomains)
        for (index_t i : dom) covered[static_cast<std::size_t>(i)] = true;
    require(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }),
            "partition: union of subdomains must cover all unknowns");
    return subdomains;
}

/// Partition-of-unity coarse rows: row s carries 1/multiplicity(i) on the
/// unknowns of subdomain s.
inline DenseMatrix pou_coarse_rows(const std::vector<std::vector<index_t>>& subdomains,
                                   index_t n) {
    Vector mult(static_cast<std::size_t>(n), 0.0);
    for (const auto& dom : subdomains)
        for (index_t i : dom) mult[static_cast<std::size_t>(i)] += 1.0;
    DenseMatrix r0(static_cast<index_t>(subdomains.size()), n);
    for (std::size_t s = 0; s < subdomains.size(); ++s)
        for (index_t i : subdomains[s])
            r0(static_cast<index_t>(s), i) = 1.0 / mult[static_cast<std::size_t>(i)];
    return r0;
}

struct SchwarzPreconditioner {
    SparseMatrixCsr m;
    std::vector<std::vector<index_t>> restrictions;
    std::vector<CholeskyFactor> local_factors;
    DenseMatrix coarse_rows;                        // m0 x n, may be empty
    std::unique_ptr<CholeskyFactor> coarse_factor;  // of R0 M R0^T

    bool has_coarse() const { return coarse_rows.n_rows > 0; }
};

namespace detail {

// R0^T (R0 M R0^T)^{-1} R0 v
inline Vector coarse_apply(const SchwarzPreconditioner& p, const Vector& v) {
    Vector rv(static_cast<std::size_t>(p.coarse_rows.n_rows), 0.0);
    for (index_t s = 0; s < p.coarse_rows.n_rows; ++s) {
        double acc = 0.0;
        for (index_t j = 0; j < p.coarse_rows.n_cols; ++j)
            acc += p.coarse_rows(s, j) * v[static_cast<std::size_t>(j)];
        rv[static_cast<std::size_t>(s)] = acc;
    }
    Vector sol = p.coarse_factor->apply_inverse(rv);
    Vector out(static_cast<std::size_t>(p.coarse_rows.n_cols), 0.0);
    for (index_t s = 0; s < p.coarse_rows.n_rows; ++s) {
        double ss = sol[static_cast<std::size_t>(s)];
        for (index_t j = 0; j < p.coarse_rows.n_cols; ++j)
            out[static_cast<std::size_t>(j)] += p.coarse_rows(s, j) * ss;
    }
    return out;
}

inline Vector local_sum(const SchwarzPreconditioner& p, const Vector& v) {
    Vector out(v.size(), 0.0);
    for (std::size_t s = 0; s < p.restrictions.size(); ++s) {
        const auto& dom = p.restrictions[s];
        Vector loc(dom.size());
        for (std::size_t q = 0; q < dom.size(); ++q)
            loc[q] = v[static_cast<std::size_t>(dom[q])];
        Vector sol = p.local_factors[s].apply_inverse(loc);
        for (std::size_t q = 0; q < dom.size(); ++q)
            out[static_cast<std::size_t>(dom[q])] += sol[q];
    }
    return out;
}

} // namespace detail

/// Builds H_AS = sum_s R_s^T (R_s M R_s^T)^{-1} R_s, or its coarse-
/// corrected variant Pi (sum_s ...) Pi^T + R_0^T (R_0 M R_0^T)^{-1} R_0
/// with Pi = I - R_0^T (R_0 M R_0^T)^{-1} R_0 M. Subdomain contributions
/// are accumulated in ascending subdomain order.
inline LinearOperator
additive_schwarz_op(const SparseMatrixCsr& m,
                    std::vector<std::vector<index_t>> restrictions,
                    DenseMatrix coarse_rows = DenseMatrix{}) {
    require(m.n_rows == m.n_cols, "schwarz: square matrix expected");
    auto p = std::make_shared<SchwarzPreconditioner>();
    p->m = m;
    p->restrictions = std::move(restrictions);
    p->local_factors.reserve(p->restrictions.size());
    for (std::size_t s = 0; s < p->restrictions.size(); ++s) {
        require(!p->restrictions[s].empty(), "schwarz: empty subdomain");
        try {
            p->local_factors.emplace_back(extract_principal(m, p->restrictions[s]));
        } catch (const NotPositiveDefiniteError&) {
            throw NotPositiveDefiniteError("schwarz: local block not spd, subdomain " +
                                           std::to_string(s));
        }
    }
    if (coarse_rows.n_rows > 0) {
        require(coarse_rows.n_cols == m.n_rows, "schwarz: coarse row length");
        p->coarse_rows = std::move(coarse_rows);
        const index_t m0 = p->coarse_rows.n_rows;
        TripletBuilder e0(m0, m0);
        std::vector<Vector> mw(static_cast<std::size_t>(m0));
        for (index_t r = 0; r < m0; ++r)
            mw[static_cast<std::size_t>(r)] = spmv(m, p->coarse_rows.row(r));
        for (index_t r = 0; r < m0; ++r)
            for (index_t c = 0; c < m0; ++c)
                e0.add(r, c, dot(p->coarse_rows.row(c), mw[static_cast<std::size_t>(r)]));
        try {
            p->coarse_factor = std::make_unique<CholeskyFactor>(e0.build());
        } catch (const NotPositiveDefiniteError&) {
            throw NotPositiveDefiniteError(
                "schwarz: coarse block not spd (coarse rows rank deficient?)");
        }
    }

    auto apply = [p](const Vector& v) -> Vector {
        if (!p->has_coarse()) return detail::local_sum(*p, v);
        Vector c0v = detail::coarse_apply(*p, v);
        Vector t = subtract(v, spmv(p->m, c0v)); // Pi^T v
        Vector s = detail::local_sum(*p, t);
        Vector u = subtract(s, detail::coarse_apply(*p, spmv(p->m, s))); // Pi s
        return add(u, c0v);
    };
    return LinearOperator{m.n_rows, apply, true, "schwarz"};
}

} // namespace wpdg
