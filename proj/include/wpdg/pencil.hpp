/// @file pencil.hpp
/// @brief Generalized eigensolvers for the pencil N z = lambda M z with
/// M spd and N skew-symmetric. All eigenvalues are 0 or purely
/// imaginary, stored as lambda = i * mu with real mu. Nonzero
/// eigenvalues come in conjugate pairs (mu, z), (-mu, conj z).
///
/// Both solvers reduce to a real skew tridiagonal matrix T. With
/// D = diag(i^j), the Hermitian matrix i T is unitarily similar to the
/// real symmetric tridiagonal matrix with zero diagonal and the
/// superdiagonal of T as off-diagonal, so the whole computation stays in
/// real arithmetic; complex vectors appear only when eigenvectors of the
/// pencil are reassembled.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "wpdg/cholesky.hpp"
#include "wpdg/core.hpp"
#include "wpdg/dense.hpp"
#include "wpdg/sparse.hpp"
#include "wpdg/tridiag.hpp"
#include "wpdg/vector_ops.hpp"

namespace wpdg {

struct PencilEigenPair {
    double mu = 0.0;        // eigenvalue = i * mu
    ComplexVector vector;   // M-normalized
    double residual = 0.0;  // ||N z - i mu M z||_2 with ||z||_M = 1
    double m_norm_error = 0.0;
};

struct PencilEigenSet {
    std::vector<PencilEigenPair> pairs; // |mu| descending, +mu before -mu
    index_t k_requested = 0;

    index_t size() const { return static_cast<index_t>(pairs.size()); }
};

struct TauValue {
    double value = 0.0;
    bool exhausted = false; // fewer than m+1 entries were available
};

/// |mu| of the (m+1)-th entry in descending order; 0 with the exhausted
/// flag when the set holds no more than m entries.
inline TauValue tau_of(const PencilEigenSet& set, index_t m) {
    require(m >= 0, "tau_of: m must be >= 0");
    if (set.size() > m)
        return {std::abs(set.pairs[static_cast<std::size_t>(m)].mu), false};
    return {0.0, true};
}

/// Lanczos ran out of iterations; carries whatever converged.
class PartialResultError : public Error {
public:
    PartialResultError(const std::string& msg, PencilEigenSet partial_set)
        : Error(msg), partial(std::move(partial_set)) {}
    PencilEigenSet partial;
};

namespace detail {

/// Maps a real coefficient vector in tridiagonal coordinates back to R^n.
using BackTransform = std::function<Vector(const Vector&)>;

/// u = conj(D) v for D = diag(i^j): real/imaginary parts follow the
/// period-4 pattern of (-i)^j.
inline void twist_coefficients(const Vector& v, Vector& u_re, Vector& u_im) {
    const std::size_t d = v.size();
    u_re.assign(d, 0.0);
    u_im.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        switch (j % 4) {
        case 0: u_re[j] = v[j]; break;
        case 1: u_im[j] = -v[j]; break;
        case 2: u_re[j] = -v[j]; break;
        case 3: u_im[j] = v[j]; break;
        }
    }
}

/// Shared back end of both pencil solvers. `superdiag` holds
/// T(j, j+1) of the reduced skew tridiagonal matrix; eigenvectors are
/// reassembled through `back`, which must preserve the M-inner product
/// (Euclidean in tridiagonal coordinates).
inline PencilEigenSet assemble_pencil_set(const Vector& superdiag,
                                          const BackTransform& back,
                                          index_t dim, index_t k,
                                          const SparseMatrixCsr& n_mat,
                                          const SparseMatrixCsr& m_mat) {
    Vector d(static_cast<std::size_t>(dim), 0.0);
    Vector e = superdiag;
    DenseMatrix v_tri = DenseMatrix::identity(dim);
    symmetric_tridiagonal_eigen(d, e, &v_tri);

    double rho = 0.0;
    for (double nu : d) rho = std::max(rho, std::abs(nu));
    const double zero_tol = 1e-12 * rho;

    struct Candidate {
        double mu;
        index_t tri_index;
    };
    std::vector<Candidate> positive;
    std::vector<index_t> zero_cluster;
    for (index_t j = 0; j < dim; ++j) {
        double nu = d[static_cast<std::size_t>(j)];
        if (std::abs(nu) <= zero_tol)
            zero_cluster.push_back(j);
        else if (nu < 0.0)
            positive.push_back({-nu, j}); // pencil mu = -nu
    }
    std::sort(positive.begin(), positive.end(),
              [](const Candidate& a, const Candidate& b) { return a.mu > b.mu; });

    PencilEigenSet set;
    set.k_requested = k;

    auto finish_pair = [&](double mu, ComplexVector z) {
        PencilEigenPair p;
        p.mu = mu;
        // M-normalize, then record the defect that remains
        Vector m_re = spmv(m_mat, z.re);
        Vector m_im = spmv(m_mat, z.im);
        double mnorm2 = dot(m_re, z.re) + dot(m_im, z.im);
        double s = 1.0 / std::sqrt(mnorm2);
        scale(s, z.re);
        scale(s, z.im);
        m_re = spmv(m_mat, z.re);
        m_im = spmv(m_mat, z.im);
        p.m_norm_error = std::abs(dot(m_re, z.re) + dot(m_im, z.im) - 1.0);
        // N z - i mu M z
        Vector n_re = spmv(n_mat, z.re);
        Vector n_im = spmv(n_mat, z.im);
        axpy(mu, m_im, n_re);
        axpy(-mu, m_re, n_im);
        p.residual = std::sqrt(dot(n_re, n_re) + dot(n_im, n_im));
        p.vector = std::move(z);
        return p;
    };

    // conjugate pairs, largest |mu| first; +mu precedes -mu
    for (const auto& c : positive) {
        if (set.size() >= k) break;
        Vector v = v_tri.column(c.tri_index);
        Vector u_re, u_im;
        twist_coefficients(v, u_re, u_im);
        ComplexVector z(back(u_re), back(u_im));
        PencilEigenPair plus = finish_pair(c.mu, z);
        PencilEigenPair minus = finish_pair(-c.mu, z.conj());
        set.pairs.push_back(std::move(plus));
        set.pairs.push_back(std::move(minus));
    }

    // zero cluster: the null space of the skew matrix is real; a real
    // orthonormal basis is extracted from the real/imag sieves of the
    // twisted null vectors
    if (set.size() < k && !zero_cluster.empty()) {
        std::vector<Vector> kept;
        for (index_t j : zero_cluster) {
            Vector v = v_tri.column(j);
            Vector u_re, u_im;
            twist_coefficients(v, u_re, u_im);
            for (Vector* cand : {&u_re, &u_im}) {
                Vector w = *cand;
                for (const auto& kv : kept) axpy(-dot(kv, w), kv, w);
                double nw = norm2(w);
                if (nw > 1e-8) {
                    scale(1.0 / nw, w);
                    kept.push_back(std::move(w));
                }
            }
            if (kept.size() >= zero_cluster.size()) break;
        }
        for (const auto& w : kept) {
            if (set.size() >= k) break;
            ComplexVector z(back(w), zeros(static_cast<index_t>(w.size())));
            set.pairs.push_back(finish_pair(0.0, std::move(z)));
        }
    }

    return set;
}

inline void check_skew_structural(const SparseMatrixCsr& n) {
    require(n.n_rows == n.n_cols, "pencil: N must be square");
    for (index_t i = 0; i < n.n_rows; ++i)
        for (index_t k = n.row_offsets[static_cast<std::size_t>(i)];
             k < n.row_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
            index_t j = n.col_indices[static_cast<std::size_t>(k)];
            double v = n.values[static_cast<std::size_t>(k)];
            require(i != j || v == 0.0, "pencil: N has a nonzero diagonal entry");
            require(n.at(j, i) == -v, "pencil: N is not skew-symmetric");
        }
}

} // namespace detail

/// Full reduction path: S = L^{-1} N L^{-T} under the Cholesky
/// congruence of M, Householder tridiagonalization, then the symmetric
/// tridiagonal eigensolver. Intended for n up to `dense_cap`.
inline PencilEigenSet pencil_dense(const SparseMatrixCsr& n_mat,
                                   const SparseMatrixCsr& m_mat, index_t k,
                                   index_t dense_cap = 2000) {
    detail::check_skew_structural(n_mat);
    require(m_mat.n_rows == n_mat.n_rows && m_mat.n_cols == n_mat.n_cols,
            "pencil: M and N dimensions differ");
    const index_t n = m_mat.n_rows;
    require(n <= dense_cap, "pencil_dense: problem exceeds the dense size cap");
    require(k >= 0, "pencil_dense: k must be >= 0");
    k = std::min(k, n);

    CholeskyFactor chol(m_mat);
    PencilEigenSet set;
    set.k_requested = k;
    if (k == 0 || n == 0) return set;

    DenseMatrix s(n, n);
    for (index_t j = 0; j < n; ++j) {
        Vector col = chol.solve_lower(spmv(n_mat, chol.solve_lower_transpose(unit_vector(n, j))));
        s.set_column(j, col);
    }
    // kill roundoff asymmetry so the reduction sees an exactly skew matrix
    for (index_t i = 0; i < n; ++i) {
        s(i, i) = 0.0;
        for (index_t j = i + 1; j < n; ++j) {
            double v = 0.5 * (s(i, j) - s(j, i));
            s(i, j) = v;
            s(j, i) = -v;
        }
    }

    auto tri = detail::skew_tridiagonalize(std::move(s));
    auto q = std::make_shared<DenseMatrix>(std::move(tri.q));
    auto cholp = std::make_shared<CholeskyFactor>(std::move(chol));
    detail::BackTransform back = [q, cholp](const Vector& x) {
        return cholp->solve_lower_transpose(dense_apply(*q, x));
    };
    return detail::assemble_pencil_set(tri.superdiag, back, n, k, n_mat, m_mat);
}

/// M-inner-product Lanczos for the M-skew-adjoint operator M^{-1} N,
/// with full reorthogonalization. On an invariant-subspace breakdown the
/// recurrence restarts from a fresh random vector; the projected matrix
/// then decouples into blocks, which the tridiagonal solver handles
/// without special cases.
inline PencilEigenSet pencil_lanczos(const SparseMatrixCsr& m_mat,
                                     const CholeskyFactor& m_factor,
                                     const SparseMatrixCsr& n_mat, index_t k,
                                     double tol = 1e-10, index_t max_iters = 400,
                                     std::uint64_t seed = 7u) {
    detail::check_skew_structural(n_mat);
    require(m_mat.n_rows == n_mat.n_rows, "pencil: M and N dimensions differ");
    require(k >= 0, "pencil_lanczos: k must be >= 0");
    const index_t n = m_mat.n_rows;
    k = std::min(k, n);

    PencilEigenSet empty;
    empty.k_requested = k;
    if (k == 0 || n == 0) return empty;

    Rng rng(seed);
    std::vector<Vector> basis;   // M-orthonormal q_j
    std::vector<Vector> m_basis; // cached M q_j
    Vector betas;                // T(j+1, j); zero marks a block restart

    auto m_orthonormalize = [&](Vector& w) {
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t i = 0; i < basis.size(); ++i)
                axpy(-dot(m_basis[i], w), basis[i], w);
        Vector mw = spmv(m_mat, w);
        double nrm = std::sqrt(std::max(dot(mw, w), 0.0));
        return nrm;
    };

    auto push_vector = [&](Vector w, double nrm) {
        scale(1.0 / nrm, w);
        m_basis.push_back(spmv(m_mat, w));
        basis.push_back(std::move(w));
    };

    // seed vector
    {
        Vector v = random_vector(n, rng);
        double nrm = m_orthonormalize(v);
        require(nrm > 0.0, "pencil_lanczos: degenerate start vector");
        push_vector(std::move(v), nrm);
    }

    const index_t max_dim = std::min(n, max_iters);
    double rho_est = 0.0;
    auto combine = [&](const Vector& x) {
        Vector out(static_cast<std::size_t>(n), 0.0);
        for (std::size_t j = 0; j < x.size(); ++j) axpy(x[j], basis[j], out);
        return out;
    };

    // Ritz residual bounds only need the last row of the tridiagonal
    // eigenvector matrix, so a single accumulation row suffices.
    auto converged_top_k = [&](index_t dim) -> bool {
        if (dim < std::min<index_t>(k, n)) return false;
        Vector d(static_cast<std::size_t>(dim), 0.0);
        Vector e(static_cast<std::size_t>(dim) - 1);
        for (index_t j = 0; j + 1 < dim; ++j)
            e[static_cast<std::size_t>(j)] = -betas[static_cast<std::size_t>(j)];
        DenseMatrix last_row(1, dim);
        last_row(0, dim - 1) = 1.0;
        detail::symmetric_tridiagonal_eigen(d, e, &last_row);
        double b_last = betas.empty() ? 0.0 : std::abs(betas.back());

        std::vector<std::pair<double, index_t>> by_mag;
        for (index_t j = 0; j < dim; ++j)
            by_mag.push_back({std::abs(d[static_cast<std::size_t>(j)]), j});
        std::sort(by_mag.begin(), by_mag.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        rho_est = by_mag.empty() ? 0.0 : by_mag.front().first;
        index_t need = std::min<index_t>(k, dim);
        for (index_t r = 0; r < need; ++r) {
            index_t j = by_mag[static_cast<std::size_t>(r)].second;
            double bound = b_last * std::abs(last_row(0, j));
            if (bound > tol * std::max(rho_est, 1e-300)) return false;
        }
        return true;
    };

    bool exhausted_space = false;
    for (index_t step = 0; step < max_dim; ++step) {
        index_t j = static_cast<index_t>(basis.size()) - 1;
        Vector w = m_factor.apply_inverse(spmv(n_mat, basis[static_cast<std::size_t>(j)]));
        if (j > 0 && betas[static_cast<std::size_t>(j) - 1] != 0.0)
            axpy(betas[static_cast<std::size_t>(j) - 1],
                 basis[static_cast<std::size_t>(j) - 1], w);
        double nrm = m_orthonormalize(w);

        if (static_cast<index_t>(basis.size()) == n) {
            exhausted_space = true;
            break;
        }
        if (nrm <= 1e-13 * std::max(1.0, rho_est)) {
            // invariant block found: restart in the orthogonal complement
            betas.push_back(0.0);
            Vector fresh = random_vector(n, rng);
            double fn = m_orthonormalize(fresh);
            if (fn <= 1e-13) {
                exhausted_space = true;
                betas.pop_back();
                break;
            }
            push_vector(std::move(fresh), fn);
        } else {
            betas.push_back(nrm);
            push_vector(std::move(w), nrm);
        }

        index_t dim = static_cast<index_t>(basis.size());
        bool check_now = (dim >= k && (dim % 10 == 0 || dim == max_dim || dim == n));
        if (check_now && converged_top_k(dim)) break;
    }

    index_t dim = static_cast<index_t>(basis.size());
    Vector superdiag(static_cast<std::size_t>(dim) - 1);
    for (index_t j = 0; j + 1 < dim; ++j)
        superdiag[static_cast<std::size_t>(j)] = -betas[static_cast<std::size_t>(j)];

    bool converged = exhausted_space || dim == n || converged_top_k(dim);
    PencilEigenSet set =
        detail::assemble_pencil_set(superdiag, combine, dim, k, n_mat, m_mat);
    set.k_requested = k;

    if (!converged) {
        PencilEigenSet partial;
        partial.k_requested = k;
        double thresh = tol * std::max(1.0, n_mat.frobenius_norm());
        for (const auto& p : set.pairs)
            if (p.residual <= thresh) partial.pairs.push_back(p);
        throw PartialResultError("pencil_lanczos: not converged within max_iters",
                                 std::move(partial));
    }
    return set;
}

/// Real deflation basis: for the m/2 largest conjugate pairs, columns
/// [Re z_1 .. Re z_{m/2}, Im z_1 .. Im z_{m/2}] taken from the mu > 0
/// representative of each pair.
inline DenseMatrix real_deflation_basis(const PencilEigenSet& set, index_t m) {
    require(m >= 0 && m % 2 == 0, "real_deflation_basis: m must be even");
    index_t half = m / 2;
    std::vector<const PencilEigenPair*> reps;
    for (const auto& p : set.pairs) {
        if (p.mu > 0.0) reps.push_back(&p);
        if (static_cast<index_t>(reps.size()) == half) break;
    }
    if (static_cast<index_t>(reps.size()) < half)
        throw NotEnoughEigenpairsError(
            "real_deflation_basis: fewer than m/2 conjugate pairs with mu > 0");
    const index_t n = reps.empty() ? 0 : reps.front()->vector.size();
    DenseMatrix z(half == 0 ? 0 : n, m);
    for (index_t c = 0; c < half; ++c) {
        z.set_column(c, reps[static_cast<std::size_t>(c)]->vector.re);
        z.set_column(half + c, reps[static_cast<std::size_t>(c)]->vector.im);
    }
    if (m > 0 && column_rank(z) != m)
        throw NotEnoughEigenpairsError("real_deflation_basis: basis is rank deficient");
    return z;
}

} // namespace wpdg
