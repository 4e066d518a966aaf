// Fixed-size forward-mode dual numbers. Used to differentiate the
// rational-quadratic spline with respect to its local knot quantities;
// everything here is exact up to floating point.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace levyflow {

template <int N>
struct Dual {
    double v = 0.0;
    std::array<double, N> d{};

    Dual() = default;
    Dual(double value) : v(value) {}  // constant, zero tangent

    static Dual seed(double value, int direction) {
        Dual r(value);
        r.d[static_cast<std::size_t>(direction)] = 1.0;
        return r;
    }
};

template <int N>
inline Dual<N> operator+(const Dual<N>& a, const Dual<N>& b) {
    Dual<N> r(a.v + b.v);
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
}

template <int N>
inline Dual<N> operator-(const Dual<N>& a, const Dual<N>& b) {
    Dual<N> r(a.v - b.v);
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
}

template <int N>
inline Dual<N> operator-(const Dual<N>& a) {
    Dual<N> r(-a.v);
    for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
}

template <int N>
inline Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
    Dual<N> r(a.v * b.v);
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
}

template <int N>
inline Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
    const double inv = 1.0 / b.v;
    Dual<N> r(a.v * inv);
    for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
    return r;
}

template <int N>
inline Dual<N> operator*(double s, const Dual<N>& a) {
    Dual<N> r(s * a.v);
    for (int i = 0; i < N; ++i) r.d[i] = s * a.d[i];
    return r;
}

template <int N>
inline Dual<N> operator*(const Dual<N>& a, double s) { return s * a; }

template <int N>
inline Dual<N> operator+(const Dual<N>& a, double s) { Dual<N> r = a; r.v += s; return r; }

template <int N>
inline Dual<N> operator+(double s, const Dual<N>& a) { return a + s; }

template <int N>
inline Dual<N> operator-(const Dual<N>& a, double s) { Dual<N> r = a; r.v -= s; return r; }

template <int N>
inline Dual<N> operator-(double s, const Dual<N>& a) { return (-a) + s; }

template <int N>
inline Dual<N> operator/(const Dual<N>& a, double s) { return a * (1.0 / s); }

template <int N>
inline Dual<N> log(const Dual<N>& a) {
    Dual<N> r(std::log(a.v));
    const double inv = 1.0 / a.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * inv;
    return r;
}

template <int N>
inline Dual<N> exp(const Dual<N>& a) {
    const double e = std::exp(a.v);
    Dual<N> r(e);
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * e;
    return r;
}

// Plain-double passthroughs so the spline formulas can be written once and
// instantiated with either scalar type.
inline double log(double a) { return std::log(a); }
inline double exp(double a) { return std::exp(a); }

}  // namespace levyflow
