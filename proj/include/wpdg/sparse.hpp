/// @file sparse.hpp
/// @brief CSR sparse matrix storage and kernels, including the
/// symmetric/skew-symmetric splitting A = M + N.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "wpdg/core.hpp"
#include "wpdg/vector_ops.hpp"

namespace wpdg {

/// Compressed sparse row matrix. Within each row the column indices are
/// strictly increasing; spmv accumulates in that order.
struct SparseMatrixCsr {
    index_t n_rows = 0;
    index_t n_cols = 0;
    std::vector<index_t> row_offsets; // length n_rows + 1
    std::vector<index_t> col_indices;
    std::vector<double> values;

    index_t nnz() const { return static_cast<index_t>(values.size()); }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return std::sqrt(s);
    }

    /// Entry lookup by binary search; absent entries read as zero.
    double at(index_t i, index_t j) const {
        auto b = col_indices.begin() + row_offsets[static_cast<std::size_t>(i)];
        auto e = col_indices.begin() + row_offsets[static_cast<std::size_t>(i) + 1];
        auto it = std::lower_bound(b, e, j);
        if (it == e || *it != j) return 0.0;
        return values[static_cast<std::size_t>(it - col_indices.begin())];
    }

    void check_invariants() const {
        require(static_cast<index_t>(row_offsets.size()) == n_rows + 1,
                "csr: row_offsets length");
        require(row_offsets.front() == 0 && row_offsets.back() == nnz(),
                "csr: row_offsets endpoints");
        for (index_t i = 0; i < n_rows; ++i) {
            require(row_offsets[static_cast<std::size_t>(i)] <=
                        row_offsets[static_cast<std::size_t>(i) + 1],
                    "csr: row_offsets must be non-decreasing");
            for (index_t k = row_offsets[static_cast<std::size_t>(i)];
                 k < row_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
                auto sk = static_cast<std::size_t>(k);
                require(col_indices[sk] >= 0 && col_indices[sk] < n_cols,
                        "csr: column index out of range");
                if (k > row_offsets[static_cast<std::size_t>(i)])
                    require(col_indices[sk - 1] < col_indices[sk],
                            "csr: columns must be strictly increasing");
            }
        }
    }
};

/// Accumulates (i, j, value) entries; duplicates are summed on build.
class TripletBuilder {
public:
    TripletBuilder(index_t n_rows, index_t n_cols)
        : n_rows_(n_rows), n_cols_(n_cols) {}

    void add(index_t i, index_t j, double v) {
        require(i >= 0 && i < n_rows_ && j >= 0 && j < n_cols_,
                "triplet: index out of range");
        entries_[{i, j}] += v;
    }

    SparseMatrixCsr build() const {
        SparseMatrixCsr a;
        a.n_rows = n_rows_;
        a.n_cols = n_cols_;
        a.row_offsets.assign(static_cast<std::size_t>(n_rows_) + 1, 0);
        for (const auto& [ij, v] : entries_)
            ++a.row_offsets[static_cast<std::size_t>(ij.first) + 1];
        for (index_t i = 0; i < n_rows_; ++i)
            a.row_offsets[static_cast<std::size_t>(i) + 1] +=
                a.row_offsets[static_cast<std::size_t>(i)];
        a.col_indices.reserve(entries_.size());
        a.values.reserve(entries_.size());
        for (const auto& [ij, v] : entries_) { // map iterates (i, j) ascending
            a.col_indices.push_back(ij.second);
            a.values.push_back(v);
        }
        return a;
    }

private:
    index_t n_rows_;
    index_t n_cols_;
    std::map<std::pair<index_t, index_t>, double> entries_;
};

inline SparseMatrixCsr identity_csr(index_t n) {
    TripletBuilder b(n, n);
    for (index_t i = 0; i < n; ++i) b.add(i, i, 1.0);
    return b.build();
}

/// y = A x, summed per row in ascending column order.
inline Vector spmv(const SparseMatrixCsr& a, const Vector& x) {
    require(a.n_cols == static_cast<index_t>(x.size()), "spmv: dimension mismatch");
    Vector y(static_cast<std::size_t>(a.n_rows), 0.0);
    for (index_t i = 0; i < a.n_rows; ++i) {
        double s = 0.0;
        for (index_t k = a.row_offsets[static_cast<std::size_t>(i)];
             k < a.row_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
            auto sk = static_cast<std::size_t>(k);
            s += a.values[sk] * x[static_cast<std::size_t>(a.col_indices[sk])];
        }
        y[static_cast<std::size_t>(i)] = s;
    }
    return y;
}

inline SparseMatrixCsr transpose(const SparseMatrixCsr& a) {
    TripletBuilder b(a.n_cols, a.n_rows);
    for (index_t i = 0; i < a.n_rows; ++i)
        for (index_t k = a.row_offsets[static_cast<std::size_t>(i)];
             k < a.row_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
            auto sk = static_cast<std::size_t>(k);
            b.add(a.col_indices[sk], i, a.values[sk]);
        }
    return b.build();
}

inline SparseMatrixCsr scaled(const SparseMatrixCsr& a, double alpha) {
    SparseMatrixCsr s = a;
    for (auto& v : s.values) v *= alpha;
    return s;
}

/// C = A + alpha B
inline SparseMatrixCsr add_scaled(const SparseMatrixCsr& a, double alpha,
                                  const SparseMatrixCsr& b) {
    require(a.n_rows == b.n_rows && a.n_cols == b.n_cols, "add: shape mismatch");
    TripletBuilder t(a.n_rows, a.n_cols);
    for (index_t i = 0; i < a.n_rows; ++i)
        for (index_t k = a.row_offsets[static_cast<std::size_t>(i)];
             k < a.row_offsets[static_cast<std::size_t>(i) + 1]; ++k)
            t.add(i, a.col_indices[static_cast<std::size_t>(k)],
                  a.values[static_cast<std::size_t>(k)]);
    for (index_t i = 0; i < b.n_rows; ++i)
        for (index_t k = b.row_offsets[static_cast<std::size_t>(i)];
             k < b.row_offsets[static_cast<std::size_t>(i) + 1]; ++k)
            t.add(i, b.col_indices[static_cast<std::size_t>(k)],
                  alpha * b.values[static_cast<std::size_t>(k)]);
    return t.build();
}

/// Splits A into M = (A + A^T)/2 and N = (A - A^T)/2. Both halves are
/// assembled from one triangle and mirrored, so M is symmetric and N is
/// skew-symmetric exactly, entry for entry, and the diagonal of N is
/// structurally zero.
inline std::pair<SparseMatrixCsr, SparseMatrixCsr>
split_hermitian_skew(const SparseMatrixCsr& a) {
    require(a.n_rows == a.n_cols, "split: matrix must be square");
    std::map<std::pair<index_t, index_t>, double> upper_sym;  // i <= j
    std::map<std::pair<index_t, index_t>, double> upper_skew; // i < j
    for (index_t i = 0; i < a.n_rows; ++i)
        for (index_t k = a.row_offsets[static_cast<std::size_t>(i)];
             k < a.row_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
            auto sk = static_cast<std::size_t>(k);
            index_t j = a.col_indices[sk];
            double v = a.values[sk];
            if (i <= j) {
                upper_sym[{i, j}] += 0.5 * v;
                if (i < j) upper_skew[{i, j}] += 0.5 * v;
            } else {
                upper_sym[{j, i}] += 0.5 * v;
                upper_skew[{j, i}] -= 0.5 * v;
            }
        }
    TripletBuilder m(a.n_rows, a.n_cols), n(a.n_rows, a.n_cols);
    for (const auto& [ij, v] : upper_sym) {
        m.add(ij.first, ij.second, v);
        if (ij.first != ij.second) m.add(ij.second, ij.first, v);
    }
    for (const auto& [ij, v] : upper_skew) {
        if (v == 0.0) continue;
        n.add(ij.first, ij.second, v);
        n.add(ij.second, ij.first, -v);
    }
    return {m.build(), n.build()};
}

/// Principal submatrix A(rows, rows); `rows` must be strictly increasing.
inline SparseMatrixCsr extract_principal(const SparseMatrixCsr& a,
                                         const std::vector<index_t>& rows) {
    require(a.n_rows == a.n_cols, "extract: matrix must be square");
    std::vector<index_t> where(static_cast<std::size_t>(a.n_rows), -1);
    for (std::size_t p = 0; p < rows.size(); ++p) {
        if (p > 0) require(rows[p - 1] < rows[p], "extract: rows must increase");
        where[static_cast<std::size_t>(rows[p])] = static_cast<index_t>(p);
    }
    TripletBuilder b(static_cast<index_t>(rows.size()),
                     static_cast<index_t>(rows.size()));
    for (std::size_t p = 0; p < rows.size(); ++p) {
        index_t i = rows[p];
        for (index_t k = a.row_offsets[static_cast<std::size_t>(i)];
             k < a.row_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
            auto sk = static_cast<std::size_t>(k);
            index_t jq = where[static_cast<std::size_t>(a.col_indices[sk])];
            if (jq >= 0) b.add(static_cast<index_t>(p), jq, a.values[sk]);
        }
    }
    return b.build();
}

} // namespace wpdg
