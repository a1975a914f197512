/// @file io.hpp
/// @brief Matrix Market coordinate I/O (general / symmetric /
/// skew-symmetric), one-value-per-line vectors, dense matrix text files,
/// and the partition dump.

#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wpdg/core.hpp"
#include "wpdg/dense.hpp"
#include "wpdg/sparse.hpp"

namespace wpdg {

enum class MmSymmetry { general, symmetric, skew_symmetric };

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

} // namespace detail

inline void save_matrix_market(const std::string& path, const SparseMatrixCsr& a,
                               MmSymmetry sym = MmSymmetry::general) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    const char* qual = sym == MmSymmetry::general ? "general"
                       : sym == MmSymmetry::symmetric ? "symmetric"
                                                      : "skew-symmetric";
    out << "%%MatrixMarket matrix coordinate real " << qual << "\n";

    std::vector<std::string> lines;
    for (index_t i = 0; i < a.n_rows; ++i)
        for (index_t k = a.row_offsets[static_cast<std::size_t>(i)];
             k < a.row_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
            index_t j = a.col_indices[static_cast<std::size_t>(k)];
            double v = a.values[static_cast<std::size_t>(k)];
            if (sym == MmSymmetry::symmetric && j > i) continue;      // lower only
            if (sym == MmSymmetry::skew_symmetric && j >= i) continue; // strict lower
            lines.push_back(std::to_string(i + 1) + " " + std::to_string(j + 1) +
                            " " + detail::format_double(v));
        }
    out << a.n_rows << " " << a.n_cols << " " << lines.size() << "\n";
    for (const auto& l : lines) out << l << "\n";
}

inline SparseMatrixCsr load_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open: " + path);
    std::string line;
    long lineno = 0;

    if (!std::getline(in, line)) throw ParseError("empty Matrix Market file", 1);
    ++lineno;
    std::istringstream header(line);
    std::string banner, object, fmt, field, qual;
    header >> banner >> object >> fmt >> field >> qual;
    if (banner != "%%MatrixMarket" || detail::lower(object) != "matrix" ||
        detail::lower(fmt) != "coordinate")
        throw ParseError("expected '%%MatrixMarket matrix coordinate' header", lineno);
    if (detail::lower(field) != "real" && detail::lower(field) != "integer")
        throw ParseError("unsupported field type '" + field + "'", lineno);
    MmSymmetry sym;
    std::string q = detail::lower(qual);
    if (q == "general")
        sym = MmSymmetry::general;
    else if (q == "symmetric")
        sym = MmSymmetry::symmetric;
    else if (q == "skew-symmetric")
        sym = MmSymmetry::skew_symmetric;
    else
        throw ParseError("unsupported symmetry qualifier '" + qual + "'", lineno);

    index_t n_rows = 0, n_cols = 0;
    long long declared_nnz = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line[0] == '%') continue;
        std::istringstream sizes(line);
        if (!(sizes >> n_rows >> n_cols >> declared_nnz))
            throw ParseError("malformed size line", lineno);
        break;
    }
    if (declared_nnz < 0) throw ParseError("missing size line", lineno);

    TripletBuilder b(n_rows, n_cols);
    long long seen = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '%') continue;
        std::istringstream entry(line);
        long long i = 0, j = 0;
        double v = 0.0;
        if (!(entry >> i >> j >> v)) throw ParseError("malformed entry", lineno);
        if (i < 1 || i > n_rows || j < 1 || j > n_cols)
            throw ParseError("index out of range (file is 1-indexed)", lineno);
        ++seen;
        index_t i0 = static_cast<index_t>(i - 1), j0 = static_cast<index_t>(j - 1);
        switch (sym) {
        case MmSymmetry::general:
            b.add(i0, j0, v);
            break;
        case MmSymmetry::symmetric:
            b.add(i0, j0, v);
            if (i0 != j0) b.add(j0, i0, v);
            break;
        case MmSymmetry::skew_symmetric:
            if (i0 == j0)
                throw ParseError("skew-symmetric file stores a diagonal entry", lineno);
            b.add(i0, j0, v);
            b.add(j0, i0, -v);
            break;
        }
    }
    if (seen != declared_nnz)
        throw ParseError("entry count mismatch: declared " +
                             std::to_string(declared_nnz) + ", found " +
                             std::to_string(seen),
                         lineno);
    return b.build();
}

inline void save_vector(const std::string& path, const Vector& v) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    for (double x : v) out << detail::format_double(x) << "\n";
}

inline Vector load_vector(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open: " + path);
    Vector v;
    double x;
    while (in >> x) v.push_back(x);
    return v;
}

/// Dense matrix as text: a "rows cols" line, then one row per line.
inline void save_dense_matrix(const std::string& path, const DenseMatrix& a) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << a.n_rows << " " << a.n_cols << "\n";
    for (index_t i = 0; i < a.n_rows; ++i) {
        for (index_t j = 0; j < a.n_cols; ++j)
            out << (j ? " " : "") << detail::format_double(a(i, j));
        out << "\n";
    }
}

inline DenseMatrix load_dense_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open: " + path);
    index_t rows = 0, cols = 0;
    if (!(in >> rows >> cols)) throw ParseError("missing dense matrix size line", 1);
    DenseMatrix a(rows, cols);
    for (index_t i = 0; i < rows; ++i)
        for (index_t j = 0; j < cols; ++j)
            if (!(in >> a(i, j)))
                throw ParseError("dense matrix truncated", static_cast<long>(i + 2));
    return a;
}

inline void write_partition(const std::string& path,
                            const std::vector<std::vector<index_t>>& subdomains) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    for (std::size_t s = 0; s < subdomains.size(); ++s) {
        out << s << ":";
        for (index_t i : subdomains[s]) out << " " << i;
        out << "\n";
    }
}

} // namespace wpdg
