#pragma once

// Truncated univariate power series, used to solve invariance equations
// order by order. All series in one expression share the same order.

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <vector>

namespace ssea {

template <typename T>
struct Series1 {
    std::vector<T> c;  // c[i] multiplies xi^i

    Series1() = default;
    explicit Series1(int order) : c(order + 1, T(0)) {}
    template <typename S, typename = std::enable_if_t<std::is_arithmetic_v<S>>>
    Series1(const S& s) : c(1, T(s)) {}
    Series1(const T& s, int order) : c(order + 1, T(0)) { c[0] = s; }

    int order() const { return int(c.size()) - 1; }
    T operator[](int i) const { return i < int(c.size()) ? c[i] : T(0); }

    // Horner evaluation.
    template <typename S>
    S eval(const S& xi) const {
        S r(0);
        for (int i = order(); i >= 0; --i) r = r * xi + S(c[i]);
        return r;
    }
};

template <typename S, typename T>
inline constexpr bool series_scalar_v = std::is_arithmetic_v<S> || std::is_same_v<S, T>;

namespace detail {
template <typename T>
inline int common_order(const Series1<T>& a, const Series1<T>& b) { return std::max(a.order(), b.order()); }
}  // namespace detail

template <typename T>
inline Series1<T> operator+(const Series1<T>& a, const Series1<T>& b) {
    Series1<T> r(detail::common_order(a, b));
    for (int i = 0; i <= r.order(); ++i) r.c[i] = a[i] + b[i];
    return r;
}
template <typename T>
inline Series1<T> operator-(const Series1<T>& a, const Series1<T>& b) {
    Series1<T> r(detail::common_order(a, b));
    for (int i = 0; i <= r.order(); ++i) r.c[i] = a[i] - b[i];
    return r;
}
template <typename T>
inline Series1<T> operator-(const Series1<T>& a) {
    Series1<T> r(a.order());
    for (int i = 0; i <= r.order(); ++i) r.c[i] = -a.c[i];
    return r;
}
template <typename T>
inline Series1<T> operator*(const Series1<T>& a, const Series1<T>& b) {
    // Constants carry order 0; the product takes the larger order.
    int K = detail::common_order(a, b);
    Series1<T> r(K);
    for (int i = 0; i <= a.order(); ++i) {
        if (a.c[i] == T(0)) continue;
        for (int j = 0; j <= b.order() && i + j <= K; ++j) r.c[i + j] += a.c[i] * b.c[j];
    }
    return r;
}
template <typename T, typename S, typename = std::enable_if_t<series_scalar_v<S, T>>>
inline Series1<T> operator*(const S& s, Series1<T> a) { for (auto& x : a.c) x *= T(s); return a; }
template <typename T, typename S, typename = std::enable_if_t<series_scalar_v<S, T>>>
inline Series1<T> operator*(Series1<T> a, const S& s) { for (auto& x : a.c) x *= T(s); return a; }
template <typename T, typename S, typename = std::enable_if_t<series_scalar_v<S, T>>>
inline Series1<T> operator+(const S& s, Series1<T> a) { a.c[0] += T(s); return a; }
template <typename T, typename S, typename = std::enable_if_t<series_scalar_v<S, T>>>
inline Series1<T> operator+(Series1<T> a, const S& s) { a.c[0] += T(s); return a; }
template <typename T, typename S, typename = std::enable_if_t<series_scalar_v<S, T>>>
inline Series1<T> operator-(Series1<T> a, const S& s) { a.c[0] -= T(s); return a; }
template <typename T, typename S, typename = std::enable_if_t<series_scalar_v<S, T>>>
inline Series1<T> operator-(const S& s, const Series1<T>& a) { return (-a) + s; }

// sin and cos together through s' = c x', c' = -s x'.
template <typename T>
inline void sincos_series(const Series1<T>& x, Series1<T>& s, Series1<T>& co) {
    using std::sin;
    using std::cos;
    int K = x.order();
    s = Series1<T>(K);
    co = Series1<T>(K);
    s.c[0] = sin(x.c[0]);
    co.c[0] = cos(x.c[0]);
    for (int n = 1; n <= K; ++n) {
        T as(0), ac(0);
        for (int k = 1; k <= n; ++k) {
            T kx = T(k) * x.c[k];
            as += kx * co.c[n - k];
            ac += kx * s.c[n - k];
        }
        s.c[n] = as / T(n);
        co.c[n] = -ac / T(n);
    }
}
template <typename T>
inline Series1<T> sin(const Series1<T>& x) { Series1<T> s, c; sincos_series(x, s, c); return s; }
template <typename T>
inline Series1<T> cos(const Series1<T>& x) { Series1<T> s, c; sincos_series(x, s, c); return c; }

}  // namespace ssea
