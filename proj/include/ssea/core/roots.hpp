#pragma once

// Scalar root finding on bracketing intervals.

#include <cmath>
#include <optional>
#include <stdexcept>

namespace ssea {

// Bisection on [lo, hi] with f(lo), f(hi) of opposite sign. Stops when the
// bracket width drops below tol or after max_iter halvings.
template <typename T, typename F>
T bisect(F&& f, T lo, T hi, T tol, int max_iter = 400) {
    T flo = f(lo), fhi = f(hi);
    if (flo == T(0)) return lo;
    if (fhi == T(0)) return hi;
    if ((flo > T(0)) == (fhi > T(0))) throw std::domain_error("bisect: root not bracketed");
    for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        T mid = (lo + hi) / T(2);
        if (mid <= lo || mid >= hi) break;
        T fm = f(mid);
        if (fm == T(0)) return mid;
        if ((fm > T(0)) == (flo > T(0))) { lo = mid; flo = fm; }
        else hi = mid;
    }
    return (lo + hi) / T(2);
}

// Newton with bisection fallback. fd returns {f(x), f'(x)}. The bracket
// [lo, hi] must contain a sign change and is kept throughout.
template <typename T, typename FD>
T newton_bracketed(FD&& fd, T lo, T hi, T tol, int max_iter = 200) {
    using std::abs;
    auto [flo, dlo] = fd(lo);
    auto [fhi, dhi] = fd(hi);
    (void)dlo;
    (void)dhi;
    if (flo == T(0)) return lo;
    if (fhi == T(0)) return hi;
    if ((flo > T(0)) == (fhi > T(0))) throw std::domain_error("newton_bracketed: root not bracketed");
    bool lo_pos = flo > T(0);
    T x = (lo + hi) / T(2);
    for (int it = 0; it < max_iter; ++it) {
        auto [fx, dx] = fd(x);
        if (fx == T(0)) return x;
        if ((fx > T(0)) == lo_pos) lo = x; else hi = x;
        T step = dx != T(0) ? fx / dx : T(0);
        T xn = x - step;
        bool ok = dx != T(0) && xn > lo && xn < hi;
        if (!ok) { xn = (lo + hi) / T(2); step = x - xn; }
        x = xn;
        if (abs(step) <= tol * (T(1) + abs(x)) || hi - lo <= tol * (T(1) + abs(x))) return x;
    }
    return x;
}

}  // namespace ssea
