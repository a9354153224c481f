#pragma once

// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton on the
// Legendre recurrence. Valid for any floating type with std-style math.

#include <cmath>
#include <utility>
#include <vector>

namespace ssea {

template <typename T>
struct GaussLegendre {
    std::vector<T> x, w;

    explicit GaussLegendre(int n) : x(n), w(n) {
        using std::abs;
        using std::cos;
        const T pi = T(3.141592653589793238462643383279502884197L);
        const T eps = std::numeric_limits<T>::epsilon() * T(8);
        for (int i = 0; i < (n + 1) / 2; ++i) {
            T z = cos(pi * (T(i) + T(0.75)) / (T(n) + T(0.5)));
            T dp(0);
            for (int it = 0; it < 100; ++it) {
                T p0(1), p1 = z;
                for (int k = 2; k <= n; ++k) {
                    T p2 = ((T(2 * k - 1)) * z * p1 - T(k - 1) * p0) / T(k);
                    p0 = p1;
                    p1 = p2;
                }
                dp = T(n) * (z * p1 - p0) / (z * z - T(1));
                T dz = p1 / dp;
                z -= dz;
                if (abs(dz) < eps) break;
            }
            {
                T p0(1), p1 = z;
                for (int k = 2; k <= n; ++k) {
                    T p2 = ((T(2 * k - 1)) * z * p1 - T(k - 1) * p0) / T(k);
                    p0 = p1;
                    p1 = p2;
                }
                dp = T(n) * (z * p1 - p0) / (z * z - T(1));
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            w[i] = w[n - 1 - i] = T(2) / ((T(1) - z * z) * dp * dp);
        }
    }

    // Integral of f over [a, b].
    template <typename F>
    T integrate(F&& f, const T& a, const T& b) const {
        T mid = (a + b) / T(2), half = (b - a) / T(2), s(0);
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(mid + half * x[i]);
        return s * half;
    }
};

}  // namespace ssea
