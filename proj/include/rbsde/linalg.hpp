#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

// Small dense helpers for points in R^m and m-by-d matrices stored row-major.
// Dimensions here are tiny (m, d <= 4 in practice), so everything is plain
// loops over std::vector<double>.

namespace rbsde {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) {
    return std::sqrt(dot(a, a));
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return std::sqrt(s);
}

inline Vec operator+(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec operator-(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec operator*(double s, const Vec& a) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

inline void axpy(double s, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

inline void scale_into(double s, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = s * x[i];
}

// Frobenius norm of a flat m*d block.
inline double frob(std::span<const double> z) { return norm2(z); }

inline Vec normalized(std::span<const double> a) {
    const double n = norm2(a);
    Vec r(a.begin(), a.end());
    if (n > 0.0)
        for (auto& v : r) v /= n;
    return r;
}

}  // namespace rbsde
