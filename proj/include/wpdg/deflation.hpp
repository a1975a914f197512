/// @file deflation.hpp
/// @brief The oblique projectors P_D = I - AZ E^{-1} Y^T and
/// Q_D = I - Z E^{-1} Y^T A with E = Y^T A Z, the direct/iterative
/// solution split, and the well-posedness checks behind them.

#pragma once

#include <memory>
#include <utility>

#include "wpdg/core.hpp"
#include "wpdg/dense.hpp"
#include "wpdg/operators.hpp"
#include "wpdg/sparse.hpp"
#include "wpdg/vector_ops.hpp"

namespace wpdg {

enum class DeflationMode { h_orthogonal, invariant, custom };

/// Immutable after build; all applications are pure.
struct DeflationPair {
    LinearOperator a;  // the operator being deflated
    DenseMatrix z;     // n x m
    DenseMatrix y;     // n x m
    DenseMatrix az;    // cached A Z
    std::shared_ptr<LuFactor> e_factor; // of E = Y^T A Z
    DeflationMode mode = DeflationMode::custom;

    index_t m() const { return z.n_cols; }
    bool empty() const { return m() == 0; }
    double e_rcond() const { return e_factor ? e_factor->rcond() : 1.0; }
};

namespace detail {

constexpr double kErcondThreshold = 1e-12;

inline DenseMatrix apply_columns(const LinearOperator& op, const DenseMatrix& z) {
    DenseMatrix out(z.n_rows, z.n_cols);
    for (index_t j = 0; j < z.n_cols; ++j) out.set_column(j, op(z.column(j)));
    return out;
}

inline DenseMatrix gram(const DenseMatrix& y, const DenseMatrix& x) {
    require(y.n_rows == x.n_rows, "gram: row mismatch");
    DenseMatrix g(y.n_cols, x.n_cols);
    for (index_t i = 0; i < y.n_cols; ++i)
        for (index_t j = 0; j < x.n_cols; ++j)
            g(i, j) = dot(y.column(i), x.column(j));
    return g;
}

inline std::shared_ptr<LuFactor> factor_coupling(const DenseMatrix& e,
                                                 const char* what) {
    auto f = std::make_shared<LuFactor>(e);
    if (f->singular() || f->rcond() < kErcondThreshold)
        throw SingularCouplingBlockError(
            std::string(what) + ": coupling block is singular or ill conditioned "
            "(well-posedness failure)");
    return f;
}

} // namespace detail

/// Pair with m = 0; both projectors are the identity.
inline DeflationPair null_pair(LinearOperator a) {
    DeflationPair p;
    index_t n = a.dim;
    p.a = std::move(a);
    p.z = DenseMatrix(n, 0);
    p.y = DenseMatrix(n, 0);
    p.az = DenseMatrix(n, 0);
    p.mode = DeflationMode::h_orthogonal;
    return p;
}

/// Y = H A Z, which makes P_D orthogonal in the H inner product; the
/// kernel/range intersection condition then holds automatically and only
/// the coupling block needs to be checked.
inline DeflationPair build_h_orthogonal(LinearOperator a, const LinearOperator& h,
                                        DenseMatrix z) {
    if (z.n_cols == 0) return null_pair(std::move(a));
    require(h.claims_hpd, "build_h_orthogonal: H must be hpd");
    require(z.n_rows == a.dim, "build_h_orthogonal: Z row count");
    if (column_rank(z) != z.n_cols)
        throw ContractError("build_h_orthogonal: Z is rank deficient");
    DeflationPair p;
    p.a = std::move(a);
    p.az = detail::apply_columns(p.a, z);
    p.y = detail::apply_columns(h, p.az);
    p.e_factor = detail::factor_coupling(detail::gram(p.y, p.az), "build_h_orthogonal");
    p.z = std::move(z);
    p.mode = DeflationMode::h_orthogonal;
    return p;
}

/// Y = Z = the spectral basis, valid with H = M^{-1} where the basis is
/// invariant under H A^T. Well-posedness reduces to invertibility of
/// Y^T M Z.
inline DeflationPair build_invariant(LinearOperator a, const SparseMatrixCsr& m_mat,
                                     DenseMatrix basis) {
    if (basis.n_cols == 0) return null_pair(std::move(a));
    require(basis.n_rows == a.dim, "build_invariant: basis row count");
    if (column_rank(basis) != basis.n_cols)
        throw ContractError("build_invariant: basis is rank deficient");
    DeflationPair p;
    p.a = std::move(a);
    DenseMatrix mz(basis.n_rows, basis.n_cols);
    for (index_t j = 0; j < basis.n_cols; ++j)
        mz.set_column(j, spmv(m_mat, basis.column(j)));
    detail::factor_coupling(detail::gram(basis, mz), "build_invariant (Y^T M Z)");
    p.az = detail::apply_columns(p.a, basis);
    p.e_factor = detail::factor_coupling(detail::gram(basis, p.az), "build_invariant");
    p.y = basis;
    p.z = std::move(basis);
    p.mode = DeflationMode::invariant;
    return p;
}

/// Arbitrary Y, Z; only the coupling block is checked.
inline DeflationPair build_custom(LinearOperator a, DenseMatrix y, DenseMatrix z) {
    if (z.n_cols == 0) return null_pair(std::move(a));
    require(y.n_rows == a.dim && z.n_rows == a.dim && y.n_cols == z.n_cols,
            "build_custom: Y/Z shapes");
    if (column_rank(z) != z.n_cols || column_rank(y) != y.n_cols)
        throw ContractError("build_custom: Y or Z is rank deficient");
    DeflationPair p;
    p.a = std::move(a);
    p.az = detail::apply_columns(p.a, z);
    p.e_factor = detail::factor_coupling(detail::gram(y, p.az), "build_custom");
    p.y = std::move(y);
    p.z = std::move(z);
    p.mode = DeflationMode::custom;
    return p;
}

/// P_D v = v - AZ E^{-1} Y^T v
inline Vector apply_PD(const DeflationPair& pair, const Vector& v) {
    if (pair.empty()) return v;
    Vector s = pair.e_factor->solve(dense_apply_transpose(pair.y, v));
    Vector out = v;
    for (index_t j = 0; j < pair.az.n_cols; ++j)
        for (index_t i = 0; i < pair.az.n_rows; ++i)
            out[static_cast<std::size_t>(i)] -=
                pair.az(i, j) * s[static_cast<std::size_t>(j)];
    return out;
}

/// Q_D v = v - Z E^{-1} Y^T A v
inline Vector apply_QD(const DeflationPair& pair, const Vector& v) {
    if (pair.empty()) return v;
    Vector s = pair.e_factor->solve(dense_apply_transpose(pair.y, pair.a(v)));
    Vector out = v;
    for (index_t j = 0; j < pair.z.n_cols; ++j)
        for (index_t i = 0; i < pair.z.n_rows; ++i)
            out[static_cast<std::size_t>(i)] -=
                pair.z(i, j) * s[static_cast<std::size_t>(j)];
    return out;
}

/// (I - Q_D) x_* = Z E^{-1} Y^T b, solved directly.
inline Vector direct_component(const DeflationPair& pair, const Vector& b) {
    if (pair.empty()) return zeros(static_cast<index_t>(b.size()));
    Vector s = pair.e_factor->solve(dense_apply_transpose(pair.y, b));
    return dense_apply(pair.z, s);
}

/// x = Q_D x_tilde + Z E^{-1} Y^T b
inline Vector recombine(const DeflationPair& pair, const Vector& x_tilde,
                        const Vector& b) {
    if (pair.empty()) return x_tilde;
    return add(apply_QD(pair, x_tilde), direct_component(pair, b));
}

} // namespace wpdg
