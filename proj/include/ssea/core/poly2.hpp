#pragma once

// Dense truncated polynomials in two variables (u, v), stored as a
// triangular table of coefficients c(i, j) of u^i v^j with i + j <= D.
// Products are truncated at the common degree D.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "vec2.hpp"

namespace ssea {

template <typename T>
class Poly2 {
public:
    Poly2() : Poly2(0) {}
    explicit Poly2(int degree) : D_(degree), c_(size_for(degree), T(0)) {}
    Poly2(int degree, const T& constant) : Poly2(degree) { c_[0] = constant; }

    static Poly2 u(int degree) { Poly2 p(degree); if (degree >= 1) p(1, 0) = T(1); return p; }
    static Poly2 v(int degree) { Poly2 p(degree); if (degree >= 1) p(0, 1) = T(1); return p; }

    int degree() const { return D_; }
    static int index(int i, int j) { int m = i + j; return m * (m + 1) / 2 + j; }
    static std::size_t size_for(int D) { return std::size_t(D + 1) * std::size_t(D + 2) / 2; }

    T& operator()(int i, int j) { return c_[index(i, j)]; }
    T operator()(int i, int j) const { return (i < 0 || j < 0 || i + j > D_) ? T(0) : c_[index(i, j)]; }
    const std::vector<T>& coefficients() const { return c_; }

    // Homogeneous part of total degree m.
    Poly2 part(int m) const {
        Poly2 r(D_);
        for (int j = 0; j <= m && m <= D_; ++j) r(m - j, j) = (*this)(m - j, j);
        return r;
    }

    Poly2 truncated(int D) const {
        Poly2 r(D);
        for (int m = 0; m <= std::min(D, D_); ++m)
            for (int j = 0; j <= m; ++j) r(m - j, j) = (*this)(m - j, j);
        return r;
    }

    Poly2 du() const {
        Poly2 r(D_);
        for (int m = 1; m <= D_; ++m)
            for (int j = 0; j < m; ++j) {
                int i = m - j;
                r(i - 1, j) = T(i) * (*this)(i, j);
            }
        return r;
    }
    Poly2 dv() const {
        Poly2 r(D_);
        for (int m = 1; m <= D_; ++m)
            for (int j = 1; j <= m; ++j) {
                int i = m - j;
                r(i, j - 1) = T(j) * (*this)(i, j);
            }
        return r;
    }

    // Evaluate at an arbitrary ring element pair (scalars, duals, series,
    // other polynomials). Zeros are formed as x * 0 so that types whose
    // integer constructor means something else still work.
    template <typename S>
    S eval(const S& x, const S& y) const {
        S r = x * T(0);
        for (int i = D_; i >= 0; --i) {
            S inner = y * T(0);
            for (int j = D_ - i; j >= 0; --j) inner = inner * y + (*this)(i, j);
            r = r * x + inner;
        }
        return r;
    }

    T max_abs() const {
        using std::abs;
        T m(0);
        for (const auto& x : c_) if (abs(x) > m) m = abs(x);
        return m;
    }

    Poly2& operator+=(const Poly2& o) { check(o); for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k]; return *this; }
    Poly2& operator-=(const Poly2& o) { check(o); for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k]; return *this; }
    Poly2& operator*=(const T& s) { for (auto& x : c_) x *= s; return *this; }

    friend Poly2 operator+(Poly2 a, const Poly2& b) { return a += b; }
    friend Poly2 operator-(Poly2 a, const Poly2& b) { return a -= b; }
    friend Poly2 operator-(Poly2 a) { for (auto& x : a.c_) x = -x; return a; }
    friend Poly2 operator*(Poly2 a, const T& s) { return a *= s; }
    friend Poly2 operator*(const T& s, Poly2 a) { return a *= s; }
    friend Poly2 operator+(Poly2 a, const T& s) { a.c_[0] += s; return a; }
    friend Poly2 operator+(const T& s, Poly2 a) { a.c_[0] += s; return a; }
    friend Poly2 operator-(Poly2 a, const T& s) { a.c_[0] -= s; return a; }
    friend Poly2 operator-(const T& s, Poly2 a) { return (-a) + s; }

    friend Poly2 operator*(const Poly2& a, const Poly2& b) {
        a.check(b);
        const int D = a.D_;
        Poly2 r(D);
        for (int m1 = 0; m1 <= D; ++m1)
            for (int j1 = 0; j1 <= m1; ++j1) {
                const T& x = a.c_[index(m1 - j1, j1)];
                if (x == T(0)) continue;
                for (int m2 = 0; m1 + m2 <= D; ++m2)
                    for (int j2 = 0; j2 <= m2; ++j2)
                        r.c_[index(m1 - j1 + m2 - j2, j1 + j2)] += x * b.c_[index(m2 - j2, j2)];
            }
        return r;
    }

private:
    void check(const Poly2& o) const {
        if (o.D_ != D_) throw std::invalid_argument("Poly2: degree mismatch");
    }
    int D_;
    std::vector<T> c_;
};

// Polynomial map of the plane.
template <typename T>
struct PolyMap2 {
    Poly2<T> x, y;

    template <typename S>
    Vec2<S> operator()(const Vec2<S>& p) const { return {x.eval(p.x, p.y), y.eval(p.x, p.y)}; }

    int degree() const { return x.degree(); }
    static PolyMap2 identity(int D) { return {Poly2<T>::u(D), Poly2<T>::v(D)}; }
};

// (P o Q) truncated at the common degree.
template <typename T>
PolyMap2<T> compose(const PolyMap2<T>& P, const PolyMap2<T>& Q) {
    return {P.x.eval(Q.x, Q.y), P.y.eval(Q.x, Q.y)};
}

}  // namespace ssea
