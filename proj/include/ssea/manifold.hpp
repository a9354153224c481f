#pragma once

// One-dimensional invariant manifolds of a planar saddle by the
// parametrization method: a polynomial P with F(P(xi)) = P(lambda xi),
// solved order by order, then globalized by iterating the map. In the
// standard parameter t = log xi the map acts as t -> t + h.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "core/dual.hpp"
#include "core/errors.hpp"
#include "core/series1.hpp"
#include "core/vec2.hpp"
#include "maps.hpp"

namespace ssea {

// Swaps the roles of a map functor and its inverse.
template <typename Map>
struct Inverted {
    Map map;
    template <typename S>
    auto operator()(const Vec2<S>& p) const { return map.inverse(p); }
    template <typename S>
    auto inverse(const Vec2<S>& p) const { return map(p); }
};

template <typename Map>
Inverted<Map> invert(const Map& m) { return {m}; }

enum class ManifoldSide { unstable, stable };

// Parametrized unstable manifold of `map` at the fixed point `base`. The
// stable manifold of a map is built as Parametrization over invert(map).
template <typename T, typename Map>
struct Parametrization {
    Map map;
    Vec2<T> base;
    T lambda{};              // expanding eigenvalue of `map` along the curve
    std::vector<Vec2<T>> c;  // c[k] multiplies xi^k; c[0] = base
    T xi0{};                 // polynomial used for |xi| <= xi0
    T defect{};              // invariance defect on [xi0 / lambda, xi0]

    int order() const { return int(c.size()) - 1; }

    template <typename S>
    Vec2<S> poly(const S& xi) const {
        S x = xi * T(0) + c.back().x, y = xi * T(0) + c.back().y;
        for (int k = order() - 1; k >= 0; --k) {
            x = x * xi + c[k].x;
            y = y * xi + c[k].y;
        }
        return {x, y};
    }

    // F^m(P(xi / lambda^m)) with the smallest m that brings xi inside the
    // polynomial domain.
    template <typename S>
    Vec2<S> eval_xi(const S& xi) const {
        using std::abs;
        T ax = abs(T(primal(xi)));
        T scale(1);
        int m = 0;
        while (ax > xi0) {
            ax /= lambda;
            scale *= lambda;
            ++m;
            if (m > 100000) throw StageError("manifold", "parameter too far from the saddle");
        }
        Vec2<S> p = poly(S(xi / scale));
        for (int i = 0; i < m; ++i) p = map(p);
        return p;
    }

    template <typename S>
    Vec2<S> eval_t(const S& t) const {
        using std::exp;
        return eval_xi(S(exp(t)));
    }

    // Number of map iterates used at parameter t.
    int iterates_at(const T& t) const {
        using std::exp;
        using std::floor;
        using std::log;
        T ax = exp(t);
        if (ax <= xi0) return 0;
        return int(floor(log(ax / xi0) / log(lambda))) + 1;
    }

    // Tangent and first two derivatives with respect to t.
    struct Local {
        Vec2<T> p, d1, d2;
    };
    Local local_t(const T& t) const {
        using D1 = Dual<T, 1>;
        using D2 = Dual<D1, 1>;
        D2 tt(D1(t, {T(1)}), {D1(T(1))});
        Vec2<D2> q = eval_t(tt);
        return {{q.x.v.v, q.y.v.v}, {q.x.v.g[0], q.y.v.g[0]}, {q.x.g[0].g[0], q.y.g[0].g[0]}};
    }
    Vec2<T> tangent_t(const T& t) const {
        using D1 = Dual<T, 1>;
        Vec2<D1> q = eval_t(D1(t, {T(1)}));
        return {q.x.g[0], q.y.g[0]};
    }

    T invariance_defect(const T& xi) const {
        return norm(map(poly(xi)) - poly(T(lambda * xi)));
    }
};

// Solve the invariance equation to `order`. direction is the eigenvector
// for `lambda` carried by P'(0); the sign of xi > 0 follows it.
template <typename T, typename Map>
Parametrization<T, Map> parametrize(const Map& map, const Vec2<T>& base, const T& lambda, const Vec2<T>& direction,
                                    int order, const T& defect_tol) {
    if (order < 1) throw InputError("parametrize: order must be at least 1");
    using std::abs;
    using std::log;
    using std::pow;
    Parametrization<T, Map> P;
    P.map = map;
    P.base = base;
    P.lambda = lambda;
    P.c = {base, direction};
    // Linear part A of the map at the base point.
    Mat2<T> A;
    {
        using D = Dual<T, 2>;
        Vec2<D> q{D::variable(base.x, 0), D::variable(base.y, 1)};
        Vec2<D> r = map(q);
        A = {r.x.g[0], r.x.g[1], r.y.g[0], r.y.g[1]};
    }
    for (int k = 2; k <= order; ++k) {
        Series1<T> sx(k), sy(k);
        for (int i = 0; i < k; ++i) {
            sx.c[i] = P.c[i].x;
            sy.c[i] = P.c[i].y;
        }
        Vec2<Series1<T>> img = map(Vec2<Series1<T>>{sx, sy});
        Vec2<T> R{img.x[k], img.y[k]};
        T lk = pow(lambda, k);
        Mat2<T> L{lk - A.a, -A.b, -A.c, lk - A.d};
        P.c.push_back(L.inverse() * R);
    }
    // Largest xi0 (on a geometric grid, then bisection in log) whose
    // defect on the fundamental domain stays below defect_tol.
    auto domain_defect = [&](const T& x) {
        T worst(0);
        for (int i = 0; i <= 8; ++i) {
            T xi = x * pow(lambda, T(i) / T(8) - T(1));
            T d = P.invariance_defect(xi);
            if (d > worst) worst = d;
        }
        return worst;
    };
    T lo(1e-8), hi(1e-8);
    if (domain_defect(lo) > defect_tol) throw StageError("manifold", "defect tolerance unreachable near the saddle");
    while (domain_defect(hi) <= defect_tol && hi < T(100)) {
        lo = hi;
        hi *= T(2);
    }
    for (int it = 0; it < 50; ++it) {
        using std::sqrt;
        T mid = sqrt(lo * hi);
        if (domain_defect(mid) <= defect_tol) lo = mid; else hi = mid;
    }
    P.xi0 = lo;
    P.defect = domain_defect(lo);
    return P;
}

// Polyline sampled in the standard parameter, with refinement until the
// turn between adjacent chords is below max_turn.
template <typename T = double>
struct ManifoldCurve {
    ManifoldSide side = ManifoldSide::unstable;
    SaddleData<T> base;
    std::vector<Vec2<T>> jet;  // polynomial coefficients; empty for plain polylines
    T xi0{};
    std::vector<Vec2<T>> points;
    std::vector<T> t;  // standard parameter of each point
    T accuracy{};
    bool truncated = false;
};

template <typename T, typename Param>
ManifoldCurve<T> sample_curve(const Param& P, ManifoldSide side, const T& t0, const T& arc_length, const T& window,
                              const T& max_turn = T(0.05), const T& max_chord = T(0.02)) {
    using std::abs;
    using std::acos;
    using std::log;
    ManifoldCurve<T> C;
    C.side = side;
    C.jet = P.c;
    C.xi0 = P.xi0;
    C.accuracy = P.defect;
    T t = t0, len(0);
    Vec2<T> p = P.eval_t(t);
    C.points.push_back(p);
    C.t.push_back(t);
    T dt = log(P.lambda) / T(16);
    Vec2<T> prev_dir{};
    bool have_dir = false;
    while (len < arc_length) {
        // Shrink the step until chord length and turn are acceptable.
        for (int tries = 0;; ++tries) {
            Vec2<T> q = P.eval_t(T(t + dt));
            Vec2<T> ch = q - p;
            T l = norm(ch);
            bool ok = l <= max_chord;
            if (ok && have_dir && l > T(0)) {
                T cs = dot(ch, prev_dir) / l;
                if (cs > T(1)) cs = T(1);
                ok = acos(cs) < max_turn;
            }
            if (ok || tries > 60) {
                if (abs(q.x) > window || abs(q.y) > window) {
                    C.truncated = true;
                    return C;
                }
                t += dt;
                len += l;
                if (l > T(0)) {
                    prev_dir = ch / l;
                    have_dir = true;
                }
                p = q;
                C.points.push_back(p);
                C.t.push_back(t);
                if (l < max_chord / T(4)) dt *= T(1.5);
                break;
            }
            dt /= T(2);
        }
    }
    return C;
}

}  // namespace ssea
