/// @file vector_ops.hpp
/// @brief Dense vector kernels. All reductions run in ascending index
/// order so that results are bit-reproducible across runs.

#pragma once

#include <cmath>
#include <cstddef>

#include "wpdg/core.hpp"

namespace wpdg {

inline double dot(const Vector& x, const Vector& y) {
    require(x.size() == y.size(), "dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const Vector& x) { return std::sqrt(dot(x, x)); }

/// y += a*x
inline void axpy(double a, const Vector& x, Vector& y) {
    require(x.size() == y.size(), "axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(double a, Vector& x) {
    for (auto& v : x) v *= a;
}

inline Vector subtract(const Vector& x, const Vector& y) {
    require(x.size() == y.size(), "subtract: length mismatch");
    Vector r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
    return r;
}

inline Vector add(const Vector& x, const Vector& y) {
    require(x.size() == y.size(), "add: length mismatch");
    Vector r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
    return r;
}

inline Vector zeros(index_t n) { return Vector(static_cast<std::size_t>(n), 0.0); }

inline Vector unit_vector(index_t n, index_t i) {
    Vector e = zeros(n);
    e[static_cast<std::size_t>(i)] = 1.0;
    return e;
}

/// Complex vector stored as split real/imaginary parts.
struct ComplexVector {
    Vector re;
    Vector im;

    ComplexVector() = default;
    explicit ComplexVector(index_t n) : re(zeros(n)), im(zeros(n)) {}
    ComplexVector(Vector r, Vector i) : re(std::move(r)), im(std::move(i)) {
        require(re.size() == im.size(), "ComplexVector: part length mismatch");
    }

    index_t size() const { return static_cast<index_t>(re.size()); }

    ComplexVector conj() const {
        ComplexVector c(*this);
        for (auto& x : c.im) x = -x;
        return c;
    }
};

/// Hermitian inner product <x, y> = sum conj(x_i) y_i, returned as (re, im).
inline std::pair<double, double> cdot(const ComplexVector& x, const ComplexVector& y) {
    require(x.size() == y.size(), "cdot: length mismatch");
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < x.re.size(); ++i) {
        re += x.re[i] * y.re[i] + x.im[i] * y.im[i];
        im += x.re[i] * y.im[i] - x.im[i] * y.re[i];
    }
    return {re, im};
}

inline double cnorm2(const ComplexVector& x) {
    return std::sqrt(dot(x.re, x.re) + dot(x.im, x.im));
}

} // namespace wpdg
