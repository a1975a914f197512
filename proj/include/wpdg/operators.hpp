/// @file operators.hpp
/// @brief Apply-only linear operators, the weighted inner product, and
/// the identity / inverse-symmetric-part preconditioners.

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "wpdg/cholesky.hpp"
#include "wpdg/core.hpp"
#include "wpdg/sparse.hpp"
#include "wpdg/vector_ops.hpp"

namespace wpdg {

struct LinearOperator {
    index_t dim = 0;
    std::function<Vector(const Vector&)> apply;
    bool claims_hpd = false;
    std::string label;

    Vector operator()(const Vector& v) const {
        require(static_cast<index_t>(v.size()) == dim, "operator apply: dims");
        return apply(v);
    }
};

inline LinearOperator identity_op(index_t n) {
    require(n >= 1, "identity_op: n must be >= 1");
    return LinearOperator{n, [](const Vector& v) { return v; }, true, "identity"};
}

inline LinearOperator csr_op(SparseMatrixCsr a, bool hpd = false,
                             std::string label = "csr") {
    require(a.n_rows == a.n_cols, "csr_op: square matrix expected");
    auto mat = std::make_shared<SparseMatrixCsr>(std::move(a));
    return LinearOperator{mat->n_rows,
                          [mat](const Vector& v) { return spmv(*mat, v); }, hpd,
                          std::move(label)};
}

/// H = M^{-1} through a stored Cholesky factor of the symmetric part.
inline LinearOperator inverse_hermitian_op(const SparseMatrixCsr& m) {
    auto factor = std::make_shared<CholeskyFactor>(m);
    return LinearOperator{factor->dim(),
                          [factor](const Vector& v) { return factor->apply_inverse(v); },
                          true, "inv_hermitian"};
}

/// <W x, y>. W must declare itself hpd.
inline double w_inner(const LinearOperator& w, const Vector& x, const Vector& y) {
    require(w.claims_hpd, "w_inner: weight operator must claim hpd");
    require(x.size() == y.size() && static_cast<index_t>(x.size()) == w.dim,
            "w_inner: dims");
    return dot(w(x), y);
}

inline double w_norm_from_inner(double self_inner, double xnorm2) {
    if (self_inner < -1e-12 * xnorm2 * xnorm2)
        throw HpdViolationError("weight operator produced a negative self inner product");
    return std::sqrt(std::max(self_inner, 0.0));
}

inline double w_norm(const LinearOperator& w, const Vector& x) {
    return w_norm_from_inner(w_inner(w, x, x), norm2(x));
}

struct HpdReport {
    bool symmetric_ok = true;
    bool positive_ok = true;
    double max_symmetry_error = 0.0; // relative to ||x|| ||y|| scale
    double min_rayleigh = 0.0;       // min <Wx,x>/<x,x> over the samples
    bool passed() const { return symmetric_ok && positive_ok; }
};

/// Probabilistic symmetry + positivity check over `n_samples` random
/// vector pairs. Report only; never throws.
inline HpdReport verify_hpd(const LinearOperator& op, int n_samples,
                            std::uint64_t seed = 1u) {
    HpdReport rep;
    Rng rng(seed);
    bool first = true;
    for (int s = 0; s < n_samples; ++s) {
        Vector x = random_vector(op.dim, rng);
        Vector y = random_vector(op.dim, rng);
        Vector wx = op(x);
        Vector wy = op(y);
        double sym_err = std::abs(dot(wx, y) - dot(wy, x)) /
                         (norm2(x) * norm2(y) + 1e-300);
        rep.max_symmetry_error = std::max(rep.max_symmetry_error, sym_err);
        double rayleigh = dot(wx, x) / dot(x, x);
        if (first || rayleigh < rep.min_rayleigh) rep.min_rayleigh = rayleigh;
        first = false;
    }
    rep.symmetric_ok = rep.max_symmetry_error <= 1e-10;
    rep.positive_ok = rep.min_rayleigh > 0.0;
    return rep;
}

/// Probabilistic linearity check: ||op(x+y) - op(x) - op(y)|| against a
/// 1e-12 relative tolerance.
inline bool check_linearity(const LinearOperator& op, int n_samples,
                            std::uint64_t seed = 2u) {
    Rng rng(seed);
    for (int s = 0; s < n_samples; ++s) {
        Vector x = random_vector(op.dim, rng);
        Vector y = random_vector(op.dim, rng);
        Vector lhs = op(add(x, y));
        Vector rhs = add(op(x), op(y));
        double scale_est = norm2(op(x)) + norm2(op(y)) + 1e-300;
        if (norm2(subtract(lhs, rhs)) > 1e-12 * scale_est) return false;
    }
    return true;
}

} // namespace wpdg
