/// @file mesh.hpp
/// @brief Structured P1 triangulations of the square [-1, 1]^2.

#pragma once

#include <array>
#include <vector>

#include "wpdg/core.hpp"

namespace wpdg {

struct TriMesh {
    std::vector<std::array<double, 2>> vertices;
    std::vector<std::array<index_t, 3>> triangles; // positive orientation
    std::vector<bool> boundary_mask;

    index_t n_vertices() const { return static_cast<index_t>(vertices.size()); }
    index_t n_triangles() const { return static_cast<index_t>(triangles.size()); }
};

/// Uniform k-by-k grid of cells on [-1, 1]^2, each cell split along the
/// same (lower-left to upper-right) diagonal. (k+1)^2 vertices, 2 k^2
/// triangles, boundary vertices flagged.
inline TriMesh structured_mesh(index_t k) {
    require(k >= 2, "structured_mesh: k must be >= 2");
    TriMesh mesh;
    const double h = 2.0 / static_cast<double>(k);
    mesh.vertices.reserve(static_cast<std::size_t>((k + 1) * (k + 1)));
    mesh.boundary_mask.reserve(static_cast<std::size_t>((k + 1) * (k + 1)));
    for (index_t j = 0; j <= k; ++j)
        for (index_t i = 0; i <= k; ++i) {
            mesh.vertices.push_back({-1.0 + h * static_cast<double>(i),
                                     -1.0 + h * static_cast<double>(j)});
            mesh.boundary_mask.push_back(i == 0 || i == k || j == 0 || j == k);
        }
    auto vid = [k](index_t i, index_t j) { return j * (k + 1) + i; };
    mesh.triangles.reserve(static_cast<std::size_t>(2 * k * k));
    for (index_t j = 0; j < k; ++j)
        for (index_t i = 0; i < k; ++i) {
            mesh.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            mesh.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    return mesh;
}

} // namespace wpdg
