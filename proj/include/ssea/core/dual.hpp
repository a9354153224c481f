#pragma once

// Forward-mode dual numbers with a fixed number of tangent directions.
// Nesting Dual<Dual<T, N>, N> yields second derivatives.

#include <array>
#include <cmath>
#include <stdexcept>
#include <type_traits>

namespace ssea {

template <typename T, int N>
struct Dual;

template <typename T>
struct is_dual : std::false_type {};
template <typename T, int N>
struct is_dual<Dual<T, N>> : std::true_type {};

template <typename T>
struct scalar_of { using type = T; };
template <typename T, int N>
struct scalar_of<Dual<T, N>> { using type = typename scalar_of<T>::type; };
template <typename T>
using scalar_of_t = typename scalar_of<T>::type;

template <typename T, int N>
struct Dual {
    T v{};
    std::array<T, N> g{};

    Dual() = default;
    Dual(const T& value) : v(value) {}
    template <typename S, typename = std::enable_if_t<std::is_constructible_v<T, S> && !is_dual<S>::value>>
    Dual(const S& s) : v(T(s)) {}
    Dual(const T& value, const std::array<T, N>& grad) : v(value), g(grad) {}

    static Dual variable(const T& value, int i) {
        Dual d(value);
        d.g[i] = T(1);
        return d;
    }

    Dual& operator+=(const Dual& o) { v += o.v; for (int i = 0; i < N; ++i) g[i] += o.g[i]; return *this; }
    Dual& operator-=(const Dual& o) { v -= o.v; for (int i = 0; i < N; ++i) g[i] -= o.g[i]; return *this; }
    Dual& operator*=(const Dual& o) {
        for (int i = 0; i < N; ++i) g[i] = g[i] * o.v + v * o.g[i];
        v *= o.v;
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        T inv = T(1) / o.v;
        T q = v * inv;
        for (int i = 0; i < N; ++i) g[i] = (g[i] - q * o.g[i]) * inv;
        v = q;
        return *this;
    }
};

template <typename T>
inline const auto& primal(const T& x) {
    if constexpr (is_dual<T>::value) return primal(x.v);
    else return x;
}

#define SSEA_DUAL_BINOP(op, opeq)                                                           \
    template <typename T, int N>                                                            \
    inline Dual<T, N> operator op(Dual<T, N> a, const Dual<T, N>& b) { return a opeq b; }   \
    template <typename T, int N, typename S, typename = std::enable_if_t<!is_dual<S>::value>> \
    inline Dual<T, N> operator op(Dual<T, N> a, const S& b) { return a opeq Dual<T, N>(b); } \
    template <typename T, int N, typename S, typename = std::enable_if_t<!is_dual<S>::value>> \
    inline Dual<T, N> operator op(const S& a, const Dual<T, N>& b) { return Dual<T, N>(a) opeq b; }

SSEA_DUAL_BINOP(+, +=)
SSEA_DUAL_BINOP(-, -=)
SSEA_DUAL_BINOP(*, *=)
SSEA_DUAL_BINOP(/, /=)
#undef SSEA_DUAL_BINOP

template <typename T, int N>
inline Dual<T, N> operator-(const Dual<T, N>& a) {
    Dual<T, N> r;
    r.v = -a.v;
    for (int i = 0; i < N; ++i) r.g[i] = -a.g[i];
    return r;
}

#define SSEA_DUAL_CMP(op)                                                                   \
    template <typename T, int N>                                                            \
    inline bool operator op(const Dual<T, N>& a, const Dual<T, N>& b) { return primal(a) op primal(b); } \
    template <typename T, int N, typename S, typename = std::enable_if_t<!is_dual<S>::value>> \
    inline bool operator op(const Dual<T, N>& a, const S& b) { return primal(a) op b; }     \
    template <typename T, int N, typename S, typename = std::enable_if_t<!is_dual<S>::value>> \
    inline bool operator op(const S& a, const Dual<T, N>& b) { return a op primal(b); }

SSEA_DUAL_CMP(<)
SSEA_DUAL_CMP(>)
SSEA_DUAL_CMP(<=)
SSEA_DUAL_CMP(>=)
SSEA_DUAL_CMP(==)
SSEA_DUAL_CMP(!=)
#undef SSEA_DUAL_CMP

// Chain rule helper: f(a) given value fv and derivative dfv at a.v.
template <typename T, int N>
inline Dual<T, N> chain(const Dual<T, N>& a, const T& fv, const T& dfv) {
    Dual<T, N> r;
    r.v = fv;
    for (int i = 0; i < N; ++i) r.g[i] = dfv * a.g[i];
    return r;
}

template <typename T, int N>
inline Dual<T, N> sin(const Dual<T, N>& a) { using std::sin; using std::cos; return chain(a, sin(a.v), cos(a.v)); }
template <typename T, int N>
inline Dual<T, N> cos(const Dual<T, N>& a) { using std::sin; using std::cos; return chain(a, cos(a.v), T(-sin(a.v))); }
template <typename T, int N>
inline Dual<T, N> exp(const Dual<T, N>& a) { using std::exp; T e = exp(a.v); return chain(a, e, e); }
template <typename T, int N>
inline Dual<T, N> log(const Dual<T, N>& a) { using std::log; return chain(a, T(log(a.v)), T(T(1) / a.v)); }
template <typename T, int N>
inline Dual<T, N> sqrt(const Dual<T, N>& a) { using std::sqrt; T s = sqrt(a.v); return chain(a, s, T(T(0.5) / s)); }
template <typename T, int N>
inline Dual<T, N> abs(const Dual<T, N>& a) { return primal(a) < 0 ? -a : a; }
template <typename T, int N>
inline Dual<T, N> floor(const Dual<T, N>& a) { using std::floor; return Dual<T, N>(T(floor(a.v))); }

// Integer power by repeated squaring; valid for any ring-like type.
template <typename T>
inline T ipow(T base, long e) {
    bool inv = e < 0;
    if (inv) e = -e;
    if (e == 0) return T(1);
    // Accumulate from the base itself so types whose integer constructor
    // means something else (dense polynomial tables) still work.
    T r = base;
    --e;
    while (e > 0) {
        if (e & 1) r = r * base;
        e >>= 1;
        if (e) base = base * base;
    }
    if constexpr (requires { T(1) / r; }) {
        if (inv) return T(1) / r;
    } else if (inv) {
        throw std::domain_error("ipow: negative exponent for a type without division");
    }
    return r;
}

// Second-order jet in two variables: value, gradient and Hessian.
template <typename T>
using Jet2 = Dual<Dual<T, 2>, 2>;

template <typename T>
inline Jet2<T> jet2_variable(const T& value, int i) {
    Jet2<T> r;
    r.v = Dual<T, 2>::variable(value, i);
    r.g[i] = Dual<T, 2>(T(1));
    return r;
}

template <typename T>
inline T jet_value(const Jet2<T>& j) { return j.v.v; }
template <typename T>
inline T jet_d(const Jet2<T>& j, int i) { return j.v.g[i]; }
template <typename T>
inline T jet_dd(const Jet2<T>& j, int i, int k) { return j.g[i].g[k]; }

}  // namespace ssea
