#pragma once

// Map families: the standard map, the area-preserving Henon family, the
// quadratic family F_eps, the affine rescaling Upsilon_delta, and the
// near-identity family obtained from them. Every map is a functor with a
// templated call operator so the same code runs on plain scalars, duals,
// jets and power series.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/constants/constants.hpp>

#include "core/dual.hpp"
#include "core/errors.hpp"
#include "core/roots.hpp"
#include "core/vec2.hpp"

namespace ssea {

template <typename T>
inline T pi_v() {
    return boost::math::constants::pi<T>();
}

// Jacobian of any map functor at p by forward-mode differentiation.
template <typename T, typename Map>
Mat2<T> jacobian(const Map& f, const Vec2<T>& p) {
    using D = Dual<T, 2>;
    Vec2<D> q{D::variable(p.x, 0), D::variable(p.y, 1)};
    Vec2<D> r = f(q);
    return {r.x.g[0], r.x.g[1], r.y.g[0], r.y.g[1]};
}

// Floor-based reduction into [0, 1).
template <typename T>
inline T mod1(const T& x) {
    using std::floor;
    T r = x - floor(x);
    if (r >= T(1)) r -= T(1);
    return r;
}

// ---------------------------------------------------------------------------
// Standard map f_k(x, y) = (x + y + k sin 2 pi x, y + k sin 2 pi x).

template <typename T = double>
struct StandardMap {
    T k{};

    // Action on the universal cover (no reduction).
    template <typename S>
    Vec2<S> operator()(const Vec2<S>& p) const {
        using std::sin;
        S yn = p.y + k * sin(T(2) * pi_v<T>() * p.x);
        return {p.x + yn, yn};
    }
    template <typename S>
    Vec2<S> inverse(const Vec2<S>& p) const {
        using std::sin;
        S x = p.x - p.y;
        return {x, p.y - k * sin(T(2) * pi_v<T>() * x)};
    }

    Vec2<T> apply_mod1(const Vec2<T>& p) const {
        Vec2<T> q = (*this)(p);
        return {mod1(q.x), mod1(q.y)};
    }

    Mat2<T> jacobian(const Vec2<T>& p) const {
        using std::cos;
        T c = T(2) * pi_v<T>() * k * cos(T(2) * pi_v<T>() * p.x);
        return {T(1) + c, T(1), c, T(1)};
    }
};

// ---------------------------------------------------------------------------
// Area-preserving Henon family H_a(x, y) = (y, -x + a - y^2).

template <typename T = double>
struct HenonMap {
    T a{};

    template <typename S>
    Vec2<S> operator()(const Vec2<S>& p) const { return {p.y, a - p.x - p.y * p.y}; }
    template <typename S>
    Vec2<S> inverse(const Vec2<S>& p) const { return {a - p.x * p.x - p.y, p.x}; }
    Mat2<T> jacobian(const Vec2<T>& p) const { return {T(0), T(1), T(-1), T(-2) * p.y}; }
};

enum class FixedPointType { elliptic, hyperbolic, parabolic };

inline const char* type_name(FixedPointType t) {
    switch (t) {
        case FixedPointType::elliptic: return "elliptic";
        case FixedPointType::hyperbolic: return "hyperbolic";
        case FixedPointType::parabolic: return "parabolic";
    }
    return "?";
}

// |trace| against 2 with an absolute tolerance for the parabolic case.
template <typename T>
inline FixedPointType classify_trace(const T& tr, const T& tol = T(1e-12)) {
    using std::abs;
    T d = abs(tr) - T(2);
    if (abs(d) <= tol) return FixedPointType::parabolic;
    return d < T(0) ? FixedPointType::elliptic : FixedPointType::hyperbolic;
}

template <typename T>
struct HenonFixedPoint {
    Vec2<T> point;
    T trace;
    FixedPointType type;
};

// Fixed points satisfy x = y and x^2 + 2x - a = 0; the trace of DH is -2y.
template <typename T>
std::vector<HenonFixedPoint<T>> henon_fixed_points(const HenonMap<T>& H) {
    using std::sqrt;
    std::vector<HenonFixedPoint<T>> out;
    T disc = T(1) + H.a;  // quarter discriminant of x^2 + 2x - a
    if (disc < T(0)) return out;
    auto push = [&](const T& x) { out.push_back({{x, x}, T(-2) * x, classify_trace(T(-2) * x)}); };
    if (disc == T(0)) {
        push(T(-1));
        return out;
    }
    T s = sqrt(disc);
    push(T(-1) + s);
    push(T(-1) - s);
    return out;
}

// ---------------------------------------------------------------------------
// Quadratic family F_eps(x, y) = (x + y - x^2 + eps, y - x^2 + eps).

template <typename T = double>
struct QuadraticMap {
    T eps{};

    template <typename S>
    Vec2<S> operator()(const Vec2<S>& p) const {
        S yn = p.y - p.x * p.x + eps;
        return {p.x + yn, yn};
    }
    template <typename S>
    Vec2<S> inverse(const Vec2<S>& p) const {
        S x = p.x - p.y;
        return {x, p.y + x * x - eps};
    }
};

// Upsilon_delta(u, v) = (-delta^2 + delta^2 u, delta^3 v).
template <typename T = double>
struct AffineChange {
    T delta{};

    template <typename S>
    Vec2<S> operator()(const Vec2<S>& p) const {
        T d2 = delta * delta;
        return {d2 * p.x - d2, d2 * delta * p.y};
    }
    template <typename S>
    Vec2<S> inverse(const Vec2<S>& p) const {
        T d2 = delta * delta;
        return {(p.x + d2) / d2, p.y / (d2 * delta)};
    }
};

// ---------------------------------------------------------------------------
// Rescaled near-identity family
//   (u, v) -> (u, v) + delta (v, g(u)) + delta^2 (g(u), 0),  g(u) = 2u - u^2,
// written as a twist map: v' = v + delta g(u), u' = u + delta v'.

template <typename T>
inline T lambda_of_delta(const T& delta) {
    using std::sqrt;
    if (!(delta > T(0))) throw std::domain_error("lambda_of_delta: delta must be positive");
    T d2 = delta * delta;
    return T(1) + d2 + sqrt(d2 * d2 + T(2) * d2);
}

// Bisection on (0, 10]; lambda(delta) is increasing so the bracket is safe.
template <typename T>
inline T delta_of_h(const T& h) {
    using std::log;
    if (!(h > T(0))) throw std::domain_error("delta_of_h: h must be positive");
    auto f = [&](const T& d) { return log(lambda_of_delta(d)) - h; };
    T hi(10);
    if (f(hi) < T(0)) throw std::domain_error("delta_of_h: h beyond the bracket (0, 10]");
    T lo = std::numeric_limits<T>::min();
    return bisect<T>(f, lo, hi, T(0), std::numeric_limits<T>::digits + 1100);
}

template <typename T = double>
struct RescaledParams {
    T h{}, delta{}, lambda{};

    static RescaledParams from_h(const T& h) {
        using std::exp;
        RescaledParams p;
        p.h = h;
        p.delta = delta_of_h(h);
        p.lambda = exp(h);
        return p;
    }
    static RescaledParams from_delta(const T& delta) {
        using std::log;
        RescaledParams p;
        p.delta = delta;
        p.lambda = lambda_of_delta(delta);
        p.h = log(p.lambda);
        return p;
    }
};

template <typename T = double>
struct RescaledMap {
    T delta{};

    RescaledMap() = default;
    explicit RescaledMap(const T& d) : delta(d) {}
    explicit RescaledMap(const RescaledParams<T>& p) : delta(p.delta) {}

    template <typename S>
    Vec2<S> operator()(const Vec2<S>& p) const {
        S g = p.x * (T(2) - p.x);
        S v = p.y + delta * g;
        return {p.x + delta * v, v};
    }
    template <typename S>
    Vec2<S> inverse(const Vec2<S>& p) const {
        S u = p.x - delta * p.y;
        S g = u * (T(2) - u);
        return {u, p.y - delta * g};
    }
    Mat2<T> jacobian(const Vec2<T>& p) const {
        T gp = T(2) - T(2) * p.x;
        return {T(1) + delta * delta * gp, delta, delta * gp, T(1)};
    }
    // Inverse map as its own functor, so manifold code can treat the stable
    // manifold as the unstable manifold of this map.
    struct Inverse {
        T delta;
        template <typename S>
        Vec2<S> operator()(const Vec2<S>& p) const { return RescaledMap(delta).inverse(p); }
        template <typename S>
        Vec2<S> inverse(const Vec2<S>& p) const { return RescaledMap(delta)(p); }
    };
    Inverse inverted() const { return {delta}; }
};

// The same family written literally as the sum in its defining formula;
// used as an independent check of the twist-form evaluation.
template <typename T, typename S>
Vec2<S> rescaled_apply_literal(const T& delta, const Vec2<S>& p) {
    S g = T(2) * p.x - p.x * p.x;
    return {p.x + delta * p.y + delta * delta * g, p.y + delta * g};
}

// ---------------------------------------------------------------------------
// Splitting-size function mu(h) = 16 sqrt(2) pi |Theta_1| h^-7 exp(-2 pi^2/h).

template <typename T = double>
struct MuValue {
    T value{};
    T log_value{};
    bool underflow = false;
};

template <typename T = double>
MuValue<T> mu(const T& h, const T& theta1) {
    using std::abs;
    using std::exp;
    using std::log;
    using std::sqrt;
    if (!(h > T(0)) || !(theta1 > T(0))) throw std::domain_error("mu: h and theta1 must be positive");
    const T pi = pi_v<T>();
    MuValue<T> m;
    m.log_value = log(T(16) * sqrt(T(2)) * pi * abs(theta1)) - T(7) * log(h) - T(2) * pi * pi / h;
    if (m.log_value < log(std::numeric_limits<T>::min())) {
        m.underflow = true;
        m.value = T(0);
    } else {
        m.value = exp(m.log_value);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Saddle eigendata.

template <typename T = double>
struct SaddleData {
    Vec2<T> location;
    T lambda{}, h{};
    Vec2<T> v_u, v_s;  // unit, positive first component
};

template <typename T, typename Map>
SaddleData<T> saddle_data(const Map& f, const Vec2<T>& p) {
    using std::abs;
    using std::log;
    Mat2<T> J = jacobian<T>(f, p);
    if (!(abs(J.trace()) > T(2))) throw std::domain_error("saddle_data: point is not a saddle");
    Eigen2<T> e = eigen_real(J);
    SaddleData<T> s;
    s.location = p;
    bool first_unstable = abs(e.l1) > T(1);
    s.lambda = first_unstable ? e.l1 : e.l2;
    s.v_u = first_unstable ? e.v1 : e.v2;
    s.v_s = first_unstable ? e.v2 : e.v1;
    s.h = log(abs(s.lambda));
    return s;
}

}  // namespace ssea
