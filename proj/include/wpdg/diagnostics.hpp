/// @file diagnostics.hpp
/// @brief Convergence-bound bookkeeping: extreme eigenvalues of the
/// preconditioned symmetric part via Lanczos Ritz values, the
/// theoretical contraction bound theta_th = 1/kappa * 1/(1+tau^2), its
/// experimental counterpart from residual histories, a sampled upper
/// estimate of the contraction infimum, and the PDE spectral-radius
/// bound for the model convection field.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "wpdg/core.hpp"
#include "wpdg/deflation.hpp"
#include "wpdg/gmres.hpp"
#include "wpdg/operators.hpp"
#include "wpdg/sparse.hpp"
#include "wpdg/tridiag.hpp"
#include "wpdg/vector_ops.hpp"

namespace wpdg {

struct KappaEstimate {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    index_t lanczos_steps = 0;
    double kappa() const { return lambda_max / lambda_min; }
};

/// Lanczos on H M in the M-inner product (H M is M-self-adjoint), full
/// reorthogonalization, fixed iteration budget or Ritz stagnation.
/// Extreme Ritz values bracket inside the true spectrum of H M.
inline KappaEstimate estimate_kappa_HM(const LinearOperator& h,
                                       const SparseMatrixCsr& m_mat,
                                       double stagnation_tol = 1e-10,
                                       index_t max_iter = 200,
                                       std::uint64_t seed = 11u) {
    require(h.claims_hpd, "estimate_kappa_HM: H must be hpd");
    require(m_mat.n_rows == m_mat.n_cols && m_mat.n_rows == h.dim,
            "estimate_kappa_HM: dims");
    const index_t n = m_mat.n_rows;
    if (n < 2)
        throw InsufficientDataError("estimate_kappa_HM: need at least 2 Ritz values");

    Rng rng(seed);
    std::vector<Vector> basis, m_basis;
    Vector alphas, betas;

    auto m_orthogonalize = [&](Vector& w) {
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t i = 0; i < basis.size(); ++i)
                axpy(-dot(m_basis[i], w), basis[i], w);
        Vector mw = spmv(m_mat, w);
        return std::sqrt(std::max(dot(mw, w), 0.0));
    };
    auto push_vector = [&](Vector w, double nrm) {
        scale(1.0 / nrm, w);
        m_basis.push_back(spmv(m_mat, w));
        basis.push_back(std::move(w));
    };

    {
        Vector v = random_vector(n, rng);
        double nrm = m_orthogonalize(v);
        push_vector(std::move(v), nrm);
    }

    auto ritz_extremes = [&]() -> std::pair<double, double> {
        Vector d = alphas;
        // the t-dimensional projected matrix couples through t-1 betas
        Vector e(betas.begin(),
                 betas.begin() + static_cast<std::ptrdiff_t>(d.size()) - 1);
        detail::symmetric_tridiagonal_eigen(d, e, nullptr);
        auto [lo, hi] = std::minmax_element(d.begin(), d.end());
        return {*lo, *hi};
    };

    double prev_lo = 0.0, prev_hi = 0.0;
    int stagnant = 0;
    const index_t cap = std::min(n, max_iter);
    while (static_cast<index_t>(alphas.size()) < cap) {
        const Vector& q = basis.back();
        Vector kq = h(spmv(m_mat, q));
        double alpha = dot(spmv(m_mat, kq), q);
        alphas.push_back(alpha);
        if (static_cast<index_t>(basis.size()) == n) break;
        double nrm = m_orthogonalize(kq);
        if (nrm <= 1e-13 * std::max(1.0, std::abs(alpha))) {
            // invariant subspace; restart in the orthogonal complement
            betas.push_back(0.0);
            Vector fresh = random_vector(n, rng);
            double fn = m_orthogonalize(fresh);
            if (fn <= 1e-13) {
                betas.pop_back();
                break;
            }
            push_vector(std::move(fresh), fn);
        } else {
            betas.push_back(nrm);
            push_vector(std::move(kq), nrm);
        }
        if (alphas.size() >= 2) {
            auto [lo, hi] = ritz_extremes();
            bool settled = std::abs(lo - prev_lo) <= stagnation_tol * std::abs(lo) &&
                           std::abs(hi - prev_hi) <= stagnation_tol * std::abs(hi);
            stagnant = settled ? stagnant + 1 : 0;
            prev_lo = lo;
            prev_hi = hi;
            if (stagnant >= 3) break;
        }
    }

    if (alphas.size() < 2)
        throw InsufficientDataError(
            "estimate_kappa_HM: breakdown before 2 Ritz values");
    auto [lo, hi] = ritz_extremes();
    KappaEstimate est;
    est.lambda_min = lo;
    est.lambda_max = hi;
    est.lanczos_steps = static_cast<index_t>(alphas.size());
    return est;
}

/// theta_th = (1/kappa) * 1/(1 + tau^2)
inline double theta_th(double kappa, double tau) {
    require(kappa >= 1.0, "theta_th: kappa must be >= 1");
    require(tau >= 0.0, "theta_th: tau must be >= 0");
    return (1.0 / kappa) * (1.0 / (1.0 + tau * tau));
}

/// Empirical upper estimate of the contraction infimum over
/// range(P_D): samples are random vectors projected by P_D. Always an
/// overestimate of the infimum, so theta_sampled >= theta >= theta_th.
inline double theta_sampled(const LinearOperator& a, const LinearOperator& h,
                            const LinearOperator& w, const DeflationPair& pair,
                            index_t n_samples = 1000, std::uint64_t seed = 13u) {
    Rng rng(seed);
    double best = 1.0;
    for (index_t s = 0; s < n_samples; ++s) {
        Vector y = apply_PD(pair, random_vector(a.dim, rng));
        double ynorm2_w = w_inner(w, y, y);
        if (ynorm2_w <= 0.0) continue;
        Vector t = apply_PD(pair, a(h(y)));
        double tnorm2_w = w_inner(w, t, t);
        if (tnorm2_w <= 0.0) continue;
        double num = dot(w(t), y);
        best = std::min(best, (num * num) / (tnorm2_w * ynorm2_w));
    }
    return best;
}

/// Spectral-radius bound for the model convection field
/// a = eta*pi*(-y-0.8, x) on [-1,1]^2 (divergence free):
/// rho(M^{-1}N) <= (1/2) ||a||_inf / sqrt(nu c0).
inline double rho_bound_pde(double nu, double c0, double eta) {
    require(nu > 0.0 && c0 > 0.0, "rho_bound_pde: coefficients must be positive");
    require(eta >= 0.0, "rho_bound_pde: eta must be >= 0");
    const double pi = 3.14159265358979323846;
    double a_inf = eta * pi * std::sqrt(1.8 * 1.8 + 1.0);
    return 0.5 * a_inf / std::sqrt(nu * c0);
}

struct BoundReport {
    double lambda_min_hm = 0.0;
    double lambda_max_hm = 0.0;
    double kappa_hm = 0.0;
    double tau = 0.0;
    double theta_th = 0.0;
    double theta_exp = std::numeric_limits<double>::quiet_NaN();
    double theta_sampled = std::numeric_limits<double>::quiet_NaN();
    bool bound_satisfied = false;
    bool per_step_satisfied = false;
};

/// Assembles the bound report for a completed weighted run with W = H.
/// Checks theta_th <= theta_exp and the per-step contraction
/// (h_i/h_{i-1})^2 <= 1 - theta_th for every consecutive history pair.
inline BoundReport verify_run(const SolveReport& rep, const KappaEstimate& kappa,
                              double tau_value, const LinearOperator& a,
                              const LinearOperator& h, const LinearOperator& w,
                              const DeflationPair& pair,
                              index_t theta_sample_count = 0,
                              std::uint64_t seed = 13u) {
    BoundReport br;
    br.lambda_min_hm = kappa.lambda_min;
    br.lambda_max_hm = kappa.lambda_max;
    br.kappa_hm = kappa.kappa();
    br.tau = tau_value;
    br.theta_th = theta_th(std::max(br.kappa_hm, 1.0), tau_value);
    br.theta_exp = theta_exp_of_history(rep.residual_history);
    if (theta_sample_count > 0)
        br.theta_sampled = theta_sampled(a, h, w, pair, theta_sample_count, seed);

    br.bound_satisfied = std::isfinite(br.theta_exp) &&
                         br.theta_th <= br.theta_exp + 1e-12;
    br.per_step_satisfied = true;
    const auto& hist = rep.residual_history;
    for (std::size_t i = 0; i + 1 < hist.size(); ++i) {
        if (hist[i] <= 0.0) continue;
        double ratio2 = (hist[i + 1] * hist[i + 1]) / (hist[i] * hist[i]);
        if (ratio2 > 1.0 - br.theta_th + 1e-12) {
            br.per_step_satisfied = false;
            break;
        }
    }
    return br;
}

} // namespace wpdg
