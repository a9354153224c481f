#pragma once

#include <cmath>
#include <stdexcept>

namespace ssea {

template <typename T>
struct Vec2 {
    T x{}, y{};
};

template <typename T>
inline Vec2<T> operator+(const Vec2<T>& a, const Vec2<T>& b) { return {a.x + b.x, a.y + b.y}; }
template <typename T>
inline Vec2<T> operator-(const Vec2<T>& a, const Vec2<T>& b) { return {a.x - b.x, a.y - b.y}; }
template <typename T>
inline Vec2<T> operator-(const Vec2<T>& a) { return {-a.x, -a.y}; }
template <typename T, typename S>
inline Vec2<T> operator*(const S& s, const Vec2<T>& a) { return {T(s) * a.x, T(s) * a.y}; }
template <typename T, typename S>
inline Vec2<T> operator*(const Vec2<T>& a, const S& s) { return {a.x * T(s), a.y * T(s)}; }
template <typename T, typename S>
inline Vec2<T> operator/(const Vec2<T>& a, const S& s) { return {a.x / T(s), a.y / T(s)}; }

template <typename T>
inline T dot(const Vec2<T>& a, const Vec2<T>& b) { return a.x * b.x + a.y * b.y; }
template <typename T>
inline T cross(const Vec2<T>& a, const Vec2<T>& b) { return a.x * b.y - a.y * b.x; }
template <typename T>
inline T norm(const Vec2<T>& a) { using std::sqrt; return sqrt(a.x * a.x + a.y * a.y); }

// Row-major 2x2 matrix [[a, b], [c, d]].
template <typename T>
struct Mat2 {
    T a{}, b{}, c{}, d{};

    static Mat2 identity() { return {T(1), T(0), T(0), T(1)}; }
    static Mat2 diag(const T& p, const T& q) { return {p, T(0), T(0), q}; }
    static Mat2 columns(const Vec2<T>& c0, const Vec2<T>& c1) { return {c0.x, c1.x, c0.y, c1.y}; }

    T det() const { return a * d - b * c; }
    T trace() const { return a + d; }
    Mat2 transpose() const { return {a, c, b, d}; }
    Mat2 inverse() const {
        T D = det();
        return {d / D, -b / D, -c / D, a / D};
    }
    Vec2<T> col0() const { return {a, c}; }
    Vec2<T> col1() const { return {b, d}; }
};

template <typename T>
inline Mat2<T> operator*(const Mat2<T>& m, const Mat2<T>& n) {
    return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
            m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
}
template <typename T>
inline Vec2<T> operator*(const Mat2<T>& m, const Vec2<T>& v) {
    return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
}
template <typename T>
inline Mat2<T> operator-(const Mat2<T>& m, const Mat2<T>& n) {
    return {m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d};
}
template <typename T>
inline Mat2<T> operator+(const Mat2<T>& m, const Mat2<T>& n) {
    return {m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d};
}
template <typename T, typename S>
inline Mat2<T> operator*(const S& s, const Mat2<T>& m) {
    return {T(s) * m.a, T(s) * m.b, T(s) * m.c, T(s) * m.d};
}

// Spectral (largest singular value) norm.
template <typename T>
inline T opnorm(const Mat2<T>& m) {
    using std::sqrt;
    T p = m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d;
    T q = m.det();
    T disc = p * p - T(4) * q * q;
    if (disc < T(0)) disc = T(0);
    return sqrt((p + sqrt(disc)) / T(2));
}

template <typename T>
struct Eigen2 {
    T l1, l2;        // real eigenvalues, |l1| >= |l2|
    Vec2<T> v1, v2;  // unit eigenvectors, positive first component when possible
};

template <typename T>
inline Vec2<T> normalize_positive(Vec2<T> v) {
    using std::abs;
    T n = norm(v);
    v = v / n;
    if (v.x < T(0) || (v.x == T(0) && v.y < T(0))) v = -v;
    return v;
}

// Eigen-decomposition of a matrix with real distinct eigenvalues.
template <typename T>
inline Eigen2<T> eigen_real(const Mat2<T>& m) {
    using std::abs;
    using std::sqrt;
    T tr = m.trace(), de = m.det();
    T disc = tr * tr / T(4) - de;
    if (disc <= T(0)) throw std::domain_error("eigen_real: complex or repeated eigenvalues");
    T s = sqrt(disc);
    // Avoid cancellation for the smaller root.
    T big = tr / T(2) + (tr >= T(0) ? s : -s);
    T small = de / big;
    auto vec_for = [&](const T& l) {
        Vec2<T> a{m.b, l - m.a}, b{l - m.d, m.c};
        return normalize_positive(norm(a) >= norm(b) ? a : b);
    };
    return {big, small, vec_for(big), vec_for(small)};
}

}  // namespace ssea
