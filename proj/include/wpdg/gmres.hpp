/// @file gmres.hpp
/// @brief GMRES on the deflated, right-preconditioned system
/// P_D A H u = P_D b in the inner product of the weight operator W,
/// maintained in the x variable (x = H u), plus the unweighted
/// left-preconditioned reference solver used for comparisons.
///
/// Arnoldi uses modified Gram-Schmidt in the W-inner product with one
/// conditional reorthogonalization pass (trigger: norm drop below
/// 1/sqrt(2)); the least-squares problem is updated by Givens rotations.
/// A near-zero subdiagonal entry on the consistent singular projected
/// system is a breakdown: the current minimizer is final and, modulo
/// roundoff, solves the system.

#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "wpdg/core.hpp"
#include "wpdg/deflation.hpp"
#include "wpdg/operators.hpp"
#include "wpdg/vector_ops.hpp"

namespace wpdg {

enum class GmresMode { weighted_right, unweighted_left };

struct SolverConfig {
    double tol = 1e-10;      // relative residual threshold
    index_t max_iter = 1000; // total across restart cycles
    index_t restart = 0;     // 0 = full GMRES
    GmresMode mode = GmresMode::weighted_right;
    double breakdown_eps = 1e-14; // relative to the first-column scale
    bool double_orthogonalize = false; // debug: always run the second MGS pass
    bool track_h_euclidean = true;     // record ||H r_i|| each iteration
    bool stop_on_h_euclidean = false;  // stop on ||H r_i|| < tol ||H b||
    bool capture_residual_vectors = false;
    bool capture_basis = false; // debug: keep the final cycle's Arnoldi basis

    void validate() const {
        require(tol > 0.0, "solver: tol must be positive");
        require(restart >= 0, "solver: restart must be >= 0 (0 = full)");
        require(max_iter >= 0, "solver: max_iter must be >= 0");
    }
};

struct SolveReport {
    bool converged = false;
    index_t iterations = 0;
    Vector residual_history;    // entry i: residual norm after i iterations
    Vector h_euclidean_history; // ||H r_i||, when tracked
    bool breakdown = false;
    double theta_exp = std::numeric_limits<double>::quiet_NaN();
    double wallclock_seconds = 0.0;
    double final_residual_recurrence = 0.0;
    double final_residual_true = 0.0;
    bool recurrence_warning = false;
    std::vector<Vector> captured_residuals;
    std::vector<Vector> basis; // final cycle, when capture_basis is set
};

/// min_i { 1 - h_{i+1}^2 / h_i^2 } over a residual history.
inline double theta_exp_of_history(const Vector& history) {
    if (history.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double worst = 1.0;
    for (std::size_t i = 0; i + 1 < history.size(); ++i) {
        double hi = history[i], hn = history[i + 1];
        if (hi <= 0.0) continue;
        worst = std::min(worst, 1.0 - (hn * hn) / (hi * hi));
    }
    return worst;
}

namespace detail {

struct GmresWorkspace {
    std::vector<Vector> v;   // basis, W-orthonormal
    std::vector<Vector> wv;  // cached W v_j
    std::vector<Vector> hcols; // Hessenberg columns after Givens
    Vector cs, sn, g;
};

} // namespace detail

/// Weighted, right-preconditioned, deflated GMRES. Returns the deflated
/// iterate x_tilde; callers recombine through the deflation pair.
inline std::pair<Vector, SolveReport>
wpd_gmres(const LinearOperator& a, const Vector& b, const LinearOperator& h,
          const LinearOperator& w, const DeflationPair& pair,
          const SolverConfig& cfg, Vector x0 = {}) {
    cfg.validate();
    require(w.claims_hpd, "wpd_gmres: W must claim hpd");
    require(a.dim == static_cast<index_t>(b.size()), "wpd_gmres: b length");
    require(all_finite(b), "wpd_gmres: b has non-finite entries");
    const index_t n = a.dim;
    if (x0.empty()) x0 = zeros(n);
    require(static_cast<index_t>(x0.size()) == n && all_finite(x0),
            "wpd_gmres: bad initial vector");

    const bool left = cfg.mode == GmresMode::unweighted_left;
    auto t_start = std::chrono::steady_clock::now();

    SolveReport rep;
    Vector x = x0;

    // stopping scales: tol ||b||_W (weighted) or tol ||H b|| (Euclidean-H);
    // the left-preconditioned mode always stops on ||H r_i|| < tol ||H b||
    double bnorm_w = 0.0, bnorm_h = 0.0;
    if (left || cfg.track_h_euclidean || cfg.stop_on_h_euclidean)
        bnorm_h = norm2(h(b));
    if (!left) bnorm_w = w_norm(w, b);
    const bool euclid_stop = left || cfg.stop_on_h_euclidean;
    double stop_scale = euclid_stop ? cfg.tol * bnorm_h : cfg.tol * bnorm_w;
    double warn_scale = left ? bnorm_h : bnorm_w;

    // operator applied inside Arnoldi
    auto op = [&](const Vector& v) {
        return left ? h(apply_PD(pair, a(v))) : apply_PD(pair, a(h(v)));
    };
    auto residual_of = [&](const Vector& xi) {
        Vector r = apply_PD(pair, subtract(b, a(xi)));
        return left ? h(r) : r;
    };
    auto wnorm = [&](const Vector& v, const Vector& wv_cached) {
        return w_norm_from_inner(dot(wv_cached, v), norm2(v));
    };

    double first_col_scale = -1.0;
    bool done = false;

    auto record_history = [&](double res_norm, const Vector* x_now) {
        rep.residual_history.push_back(res_norm);
        if (left) {
            rep.h_euclidean_history.push_back(res_norm);
            if (cfg.capture_residual_vectors && x_now)
                rep.captured_residuals.push_back(
                    apply_PD(pair, subtract(b, a(*x_now))));
        } else if ((cfg.track_h_euclidean || cfg.stop_on_h_euclidean ||
                    cfg.capture_residual_vectors) &&
                   x_now) {
            Vector r = apply_PD(pair, subtract(b, a(*x_now)));
            if (cfg.track_h_euclidean || cfg.stop_on_h_euclidean)
                rep.h_euclidean_history.push_back(norm2(h(r)));
            if (cfg.capture_residual_vectors)
                rep.captured_residuals.push_back(std::move(r));
        }
    };

    while (!done) {
        Vector r0 = residual_of(x);
        Vector wr0 = left ? r0 : w(r0);
        double beta = wnorm(r0, wr0);
        if (!std::isfinite(beta))
            throw NumericalFailureError("wpd_gmres: non-finite residual norm");

        if (rep.residual_history.empty()) record_history(beta, &x);

        double current_stop_metric =
            euclid_stop && !left ? rep.h_euclidean_history.back() : beta;
        if (current_stop_metric <= stop_scale || beta == 0.0) {
            rep.converged = true;
            break;
        }
        if (rep.iterations >= cfg.max_iter) break;

        detail::GmresWorkspace ws;
        Vector v1 = r0;
        scale(1.0 / beta, v1);
        Vector wv1 = wr0;
        scale(1.0 / beta, wv1);
        ws.v.push_back(std::move(v1));
        ws.wv.push_back(std::move(wv1));
        ws.g.assign(1, beta);

        index_t cycle_cap = cfg.restart > 0 ? cfg.restart : cfg.max_iter;
        bool cycle_end = false;

        for (index_t j = 0; !cycle_end; ++j) {
            Vector t = op(ws.v[static_cast<std::size_t>(j)]);
            Vector wt = left ? t : w(t);
            double pre_norm = wnorm(t, wt);
            if (first_col_scale < 0.0) first_col_scale = pre_norm;

            Vector hcol(static_cast<std::size_t>(j) + 2, 0.0);
            for (index_t i = 0; i <= j; ++i) {
                double hij = dot(ws.wv[static_cast<std::size_t>(i)], t);
                hcol[static_cast<std::size_t>(i)] = hij;
                axpy(-hij, ws.v[static_cast<std::size_t>(i)], t);
            }
            wt = left ? t : w(t);
            double post_norm = wnorm(t, wt);
            if (cfg.double_orthogonalize || post_norm < pre_norm / 1.41421356237) {
                for (index_t i = 0; i <= j; ++i) {
                    double c = dot(ws.wv[static_cast<std::size_t>(i)], t);
                    hcol[static_cast<std::size_t>(i)] += c;
                    axpy(-c, ws.v[static_cast<std::size_t>(i)], t);
                }
                wt = left ? t : w(t);
                post_norm = wnorm(t, wt);
            }
            if (!std::isfinite(post_norm))
                throw NumericalFailureError("wpd_gmres: NaN in the Arnoldi recurrence");
            hcol[static_cast<std::size_t>(j) + 1] = post_norm;

            bool broke_down = !(post_norm > cfg.breakdown_eps * first_col_scale);

            // apply existing rotations, then the new one
            for (index_t i = 0; i < j; ++i) {
                double c = ws.cs[static_cast<std::size_t>(i)];
                double s = ws.sn[static_cast<std::size_t>(i)];
                double t0 = hcol[static_cast<std::size_t>(i)];
                double t1 = hcol[static_cast<std::size_t>(i) + 1];
                hcol[static_cast<std::size_t>(i)] = c * t0 + s * t1;
                hcol[static_cast<std::size_t>(i) + 1] = -s * t0 + c * t1;
            }
            double h0 = hcol[static_cast<std::size_t>(j)];
            double h1 = hcol[static_cast<std::size_t>(j) + 1];
            double denom = std::hypot(h0, h1);
            double c = denom == 0.0 ? 1.0 : h0 / denom;
            double s = denom == 0.0 ? 0.0 : h1 / denom;
            hcol[static_cast<std::size_t>(j)] = denom;
            hcol[static_cast<std::size_t>(j) + 1] = 0.0;
            ws.cs.push_back(c);
            ws.sn.push_back(s);
            double gj = ws.g[static_cast<std::size_t>(j)];
            ws.g[static_cast<std::size_t>(j)] = c * gj;
            ws.g.push_back(-s * gj);
            ws.hcols.push_back(std::move(hcol));

            double res = std::abs(ws.g.back());
            ++rep.iterations;

            // iterate for this step (needed for tracking and at exit)
            auto form_iterate = [&]() {
                index_t mdim = j + 1;
                Vector y(static_cast<std::size_t>(mdim));
                for (index_t i = mdim - 1; i >= 0; --i) {
                    double sum = ws.g[static_cast<std::size_t>(i)];
                    for (index_t l = i + 1; l < mdim; ++l)
                        sum -= ws.hcols[static_cast<std::size_t>(l)]
                                       [static_cast<std::size_t>(i)] *
                               y[static_cast<std::size_t>(l)];
                    double diag = ws.hcols[static_cast<std::size_t>(i)]
                                          [static_cast<std::size_t>(i)];
                    y[static_cast<std::size_t>(i)] = diag == 0.0 ? 0.0 : sum / diag;
                }
                Vector dx = zeros(n);
                for (index_t l = 0; l < mdim; ++l)
                    axpy(y[static_cast<std::size_t>(l)],
                         ws.v[static_cast<std::size_t>(l)], dx);
                return left ? add(x, dx) : add(x, h(dx));
            };

            bool need_iterate = cfg.track_h_euclidean ||
                                cfg.capture_residual_vectors ||
                                cfg.stop_on_h_euclidean;
            Vector x_now;
            if (need_iterate) x_now = form_iterate();
            record_history(res, need_iterate ? &x_now : nullptr);

            double stop_metric =
                euclid_stop && !left ? rep.h_euclidean_history.back() : res;
            bool hit_tol = stop_metric <= stop_scale;
            bool out_of_budget = rep.iterations >= cfg.max_iter;
            bool cycle_full = (j + 1) >= cycle_cap;

            if (broke_down || hit_tol || out_of_budget || cycle_full) {
                x = need_iterate ? std::move(x_now) : form_iterate();
                rep.breakdown = rep.breakdown || broke_down;
                rep.final_residual_recurrence = res;
                if (hit_tol) rep.converged = true;
                if (cfg.capture_basis) rep.basis = ws.v;
                // On breakdown the singular projected system is consistent
                // and the minimizer is the solution; accept it if the true
                // residual clears the threshold below.
                cycle_end = true;
                if (broke_down || hit_tol || out_of_budget) done = true;
            } else {
                scale(1.0 / post_norm, t);
                if (!left) scale(1.0 / post_norm, wt);
                ws.v.push_back(std::move(t));
                ws.wv.push_back(left ? ws.v.back() : std::move(wt));
            }
        }
    }

    // recompute the true residual; flag recurrence drift
    {
        Vector r = residual_of(x);
        double tr = left ? norm2(r) : w_norm(w, r);
        rep.final_residual_true = tr;
        if (rep.iterations == 0) rep.final_residual_recurrence = tr;
        if (std::abs(tr - rep.final_residual_recurrence) >
            10.0 * cfg.tol * std::max(warn_scale, 1e-300))
            rep.recurrence_warning = true;
        double true_stop_metric = (euclid_stop && !left) ? norm2(h(r)) : tr;
        if (rep.breakdown && true_stop_metric <= stop_scale) rep.converged = true;
    }

    rep.theta_exp = theta_exp_of_history(rep.residual_history);
    rep.wallclock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    return {x, rep};
}

/// Direct part + deflated weighted GMRES + recombination.
inline std::pair<Vector, SolveReport>
solve_full(const LinearOperator& a, const Vector& b, const LinearOperator& h,
           const LinearOperator& w, const DeflationPair& pair,
           const SolverConfig& cfg, Vector x0 = {}) {
    auto [x_tilde, rep] = wpd_gmres(a, b, h, w, pair, cfg, std::move(x0));
    return {recombine(pair, x_tilde, b), rep};
}

/// Euclidean-inner-product GMRES on the left-preconditioned deflated
/// system H P_D A; the history records ||H r_i||.
inline std::pair<Vector, SolveReport>
gmres_unweighted_left(const LinearOperator& a, const Vector& b,
                      const LinearOperator& h, const DeflationPair& pair,
                      const SolverConfig& cfg, Vector x0 = {}) {
    SolverConfig lcfg = cfg;
    lcfg.mode = GmresMode::unweighted_left;
    LinearOperator w = identity_op(a.dim);
    auto [x_tilde, rep] = wpd_gmres(a, b, h, w, pair, lcfg, std::move(x0));
    return {x_tilde, rep};
}

/// One-dimensional minimization probe from Theorem-style per-step
/// analysis: 1 - <P_D A H r, r>_W^2 / (||P_D A H r||_W^2 ||r||_W^2),
/// an upper bound for the squared one-step residual ratio from r.
inline double one_step_bound_probe(const LinearOperator& a, const LinearOperator& h,
                                   const LinearOperator& w, const DeflationPair& pair,
                                   const Vector& r_in) {
    Vector r = apply_PD(pair, r_in);
    double rnorm2_w = w_inner(w, r, r);
    if (rnorm2_w <= 0.0) return 0.0;
    Vector t = apply_PD(pair, a(h(r)));
    double tnorm2_w = w_inner(w, t, t);
    if (tnorm2_w <= 0.0) return 1.0;
    double alpha_num = dot(w(t), r);
    return 1.0 - (alpha_num * alpha_num) / (tnorm2_w * rnorm2_w);
}

} // namespace wpdg
