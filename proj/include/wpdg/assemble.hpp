/// @file assemble.hpp
/// @brief P1 finite element assembly of the convection-diffusion-reaction
/// model problem on [-1, 1]^2 with homogeneous Dirichlet conditions
/// eliminated. The operator splits as A = M + eta * N_tilde with M spd
/// and N_tilde skew-symmetric by construction.

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>

#include "wpdg/cholesky.hpp"
#include "wpdg/core.hpp"
#include "wpdg/mesh.hpp"
#include "wpdg/sparse.hpp"

namespace wpdg {

/// Convection field a(x, y) / eta = pi * (-y - 0.8, x). Divergence free,
/// so the symmetric part of the operator carries no convection term.
inline std::array<double, 2> convection_field(double x, double y) {
    const double pi = 3.14159265358979323846;
    return {pi * (-y - 0.8), pi * x};
}

inline double default_rhs(double x, double y) {
    return std::exp(-2.5 * (x * x + (y + 0.8) * (y + 0.8)));
}

struct AssembledProblem {
    SparseMatrixCsr m;       // c0 * mass + nu * stiffness (spd)
    SparseMatrixCsr n_tilde; // unscaled convection part (skew)
    double eta = 0.0;
    Vector b;
    std::vector<index_t> dof_map; // vertex -> dof, -1 on the boundary
    double c0 = 1.0;
    double nu = 1.0;
    index_t grid_nx = 0; // interior unknowns per axis (structured meshes)
    index_t grid_ny = 0;

    index_t n_dofs() const { return m.n_rows; }

    SparseMatrixCsr full_matrix() const { return add_scaled(m, eta, n_tilde); }
};

namespace detail {

struct ElementGeometry {
    double area;
    std::array<std::array<double, 2>, 3> grad;     // gradients of P1 basis
    std::array<std::array<double, 2>, 3> midpoint; // edge midpoints
    // phi[q][i]: basis i at quadrature point q (midpoint opposite vertex q)
    static constexpr double phi[3][3] = {
        {0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
};

inline ElementGeometry element_geometry(const TriMesh& mesh, index_t t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const auto& p0 = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const auto& p1 = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const auto& p2 = mesh.vertices[static_cast<std::size_t>(tri[2])];
    double twice_area = (p1[0] - p0[0]) * (p2[1] - p0[1]) -
                        (p2[0] - p0[0]) * (p1[1] - p0[1]);
    if (!(twice_area > 0.0))
        throw ContractError("assemble: inverted element " + std::to_string(t));
    ElementGeometry g;
    g.area = 0.5 * twice_area;
    g.grad[0] = {(p1[1] - p2[1]) / twice_area, (p2[0] - p1[0]) / twice_area};
    g.grad[1] = {(p2[1] - p0[1]) / twice_area, (p0[0] - p2[0]) / twice_area};
    g.grad[2] = {(p0[1] - p1[1]) / twice_area, (p1[0] - p0[0]) / twice_area};
    g.midpoint[0] = {0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1])};
    g.midpoint[1] = {0.5 * (p1[0] + p2[0]), 0.5 * (p1[1] + p2[1])};
    g.midpoint[2] = {0.5 * (p0[0] + p2[0]), 0.5 * (p0[1] + p2[1])};
    return g;
}

} // namespace detail

inline Vector assemble_rhs(const TriMesh& mesh,
                           const std::function<double(double, double)>& f,
                           const std::vector<index_t>& dof_map, index_t n_dofs);

/// Assembles M and N_tilde. The mass/stiffness integrals use exact closed
/// forms; the convection term uses the edge-midpoint rule, which is exact
/// here because the integrand is quadratic.
inline AssembledProblem assemble_cdr(const TriMesh& mesh, double c0, double nu,
                                     double eta) {
    require(c0 > 0.0 && nu > 0.0, "assemble: c0 and nu must be positive");
    AssembledProblem prob;
    prob.c0 = c0;
    prob.nu = nu;
    prob.eta = eta;

    prob.dof_map.assign(mesh.vertices.size(), -1);
    index_t n = 0;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
        if (!mesh.boundary_mask[v]) prob.dof_map[v] = n++;
    require(n >= 1, "assemble: mesh has no interior vertices");

    // Upper triangles accumulated first, mirrored on build, so symmetry
    // and skewness hold entry for entry.
    std::map<std::pair<index_t, index_t>, double> m_upper;  // i <= j
    std::map<std::pair<index_t, index_t>, double> nt_upper; // i < j

    for (index_t t = 0; t < mesh.n_triangles(); ++t) {
        auto g = detail::element_geometry(mesh, t);
        const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
        std::array<index_t, 3> dof{};
        for (int i = 0; i < 3; ++i)
            dof[static_cast<std::size_t>(i)] =
                prob.dof_map[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];

        std::array<std::array<double, 2>, 3> a_q{};
        for (int q = 0; q < 3; ++q)
            a_q[static_cast<std::size_t>(q)] = convection_field(
                g.midpoint[static_cast<std::size_t>(q)][0],
                g.midpoint[static_cast<std::size_t>(q)][1]);

        for (int i = 0; i < 3; ++i) {
            if (dof[static_cast<std::size_t>(i)] < 0) continue;
            for (int j = 0; j < 3; ++j) {
                if (dof[static_cast<std::size_t>(j)] < 0) continue;
                index_t di = dof[static_cast<std::size_t>(i)];
                index_t dj = dof[static_cast<std::size_t>(j)];

                if (di <= dj) {
                    double mass = g.area / 12.0 * (i == j ? 2.0 : 1.0);
                    double stiff = g.area * (g.grad[static_cast<std::size_t>(i)][0] *
                                                 g.grad[static_cast<std::size_t>(j)][0] +
                                             g.grad[static_cast<std::size_t>(i)][1] *
                                                 g.grad[static_cast<std::size_t>(j)][1]);
                    m_upper[{di, dj}] += c0 * mass + nu * stiff;
                }
                if (i < j && di != dj) {
                    double conv = 0.0;
                    for (int q = 0; q < 3; ++q) {
                        const auto& aq = a_q[static_cast<std::size_t>(q)];
                        double agi = aq[0] * g.grad[static_cast<std::size_t>(i)][0] +
                                     aq[1] * g.grad[static_cast<std::size_t>(i)][1];
                        double agj = aq[0] * g.grad[static_cast<std::size_t>(j)][0] +
                                     aq[1] * g.grad[static_cast<std::size_t>(j)][1];
                        conv += (g.area / 3.0) * 0.5 *
                                (agi * detail::ElementGeometry::phi[q][j] -
                                 agj * detail::ElementGeometry::phi[q][i]);
                    }
                    if (di < dj)
                        nt_upper[{di, dj}] += conv;
                    else
                        nt_upper[{dj, di}] -= conv;
                }
            }
        }
    }

    TripletBuilder mb(n, n), nb(n, n);
    for (const auto& [ij, v] : m_upper) {
        mb.add(ij.first, ij.second, v);
        if (ij.first != ij.second) mb.add(ij.second, ij.first, v);
    }
    for (const auto& [ij, v] : nt_upper) {
        if (v == 0.0) continue;
        nb.add(ij.first, ij.second, v);
        nb.add(ij.second, ij.first, -v);
    }
    prob.m = mb.build();
    prob.n_tilde = nb.build();
    if (prob.n_tilde.nnz() == 0) {
        // keep an all-zero skew part with the dimensions of M
        prob.n_tilde.n_rows = n;
        prob.n_tilde.n_cols = n;
        prob.n_tilde.row_offsets.assign(static_cast<std::size_t>(n) + 1, 0);
    }

    sparse_cholesky(prob.m); // spd verification

    prob.b = assemble_rhs(mesh, default_rhs, prob.dof_map, n);
    return prob;
}

/// Load vector for a scalar source f via the edge-midpoint rule;
/// boundary rows are dropped.
inline Vector assemble_rhs(const TriMesh& mesh,
                           const std::function<double(double, double)>& f,
                           const std::vector<index_t>& dof_map, index_t n_dofs) {
    Vector b(static_cast<std::size_t>(n_dofs), 0.0);
    for (index_t t = 0; t < mesh.n_triangles(); ++t) {
        auto g = detail::element_geometry(mesh, t);
        const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
        for (int i = 0; i < 3; ++i) {
            index_t di = dof_map[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
            if (di < 0) continue;
            double acc = 0.0;
            for (int q = 0; q < 3; ++q)
                acc += (g.area / 3.0) *
                       f(g.midpoint[static_cast<std::size_t>(q)][0],
                         g.midpoint[static_cast<std::size_t>(q)][1]) *
                       detail::ElementGeometry::phi[q][i];
            b[static_cast<std::size_t>(di)] += acc;
        }
    }
    return b;
}

/// Model problem on the structured mesh: k cells per axis, so the
/// interior unknowns form a (k-1) x (k-1) grid.
inline AssembledProblem model_problem(index_t k, double c0 = 1.0, double nu = 1.0,
                                      double eta = 1.0) {
    TriMesh mesh = structured_mesh(k);
    AssembledProblem prob = assemble_cdr(mesh, c0, nu, eta);
    prob.grid_nx = k - 1;
    prob.grid_ny = k - 1;
    return prob;
}

} // namespace wpdg
