#pragma once

// The limiting conservative vector field x' = y, y' = 2x - x^2, its
// homoclinic orbit x(t) = 3 sech^2(t / sqrt 2), and measurement of the
// splitting of the invariant manifolds of the near-identity family.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "core/dual.hpp"
#include "core/errors.hpp"
#include "core/precision.hpp"
#include "core/quadrature.hpp"
#include "core/roots.hpp"
#include "core/stats.hpp"
#include "core/vec2.hpp"
#include "manifold.hpp"
#include "maps.hpp"

namespace ssea {

// ---------------------------------------------------------------------------
// Vector field and closed-form separatrix.

template <typename S>
Vec2<S> vf_eval(const Vec2<S>& p) {
    return {p.y, S(2) * p.x - p.x * p.x};
}

template <typename S>
S energy(const Vec2<S>& p) {
    return p.y * p.y / S(2) - p.x * p.x + p.x * p.x * p.x / S(3);
}

struct SeparatrixModel {
    // (x(t), x'(t)); sech is written through exp so S may be a dual type.
    template <typename S>
    static Vec2<S> point(const S& t) {
        using std::abs;
        using std::exp;
        const double r2 = std::sqrt(2.0);
        S tau = t / r2;
        S e = exp(-abs(tau));  // symmetric and overflow-free
        S sech = S(2) * e / (S(1) + e * e);
        S tanh_abs = (S(1) - e * e) / (S(1) + e * e);
        S th = primal(tau) < 0 ? -tanh_abs : tanh_abs;
        S x = S(3) * sech * sech;
        S y = S(-3) * r2 * sech * sech * th;
        return {x, y};
    }
    template <typename S>
    static S energy_at(const S& t) { return energy(point(t)); }
};

// Max over a grid on [-tmax, tmax] of |d/dt x - y| + |d/dt y - (2x - x^2)|,
// the derivatives taken exactly by forward-mode differentiation.
inline double separatrix_residual(double tmax = 20.0, int n = 4001) {
    using D = Dual<double, 1>;
    double worst = 0;
    for (int i = 0; i < n; ++i) {
        double t = -tmax + 2 * tmax * i / (n - 1);
        Vec2<D> p = SeparatrixModel::point(D(t, {1.0}));
        Vec2<double> f = vf_eval(Vec2<double>{p.x.v, p.y.v});
        double r = std::abs(p.x.g[0] - f.x) + std::abs(p.y.g[0] - f.y);
        worst = std::max(worst, r);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Adaptive integration (Dormand-Prince 5(4), controlled).

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec2<double>> x;
    double energy_drift = 0;  // max |H - H(start)| along the accepted steps
};

inline Trajectory integrate_flow(const Vec2<double>& start, double t0, double t1, double tol) {
    namespace odeint = boost::numeric::odeint;
    if (!(tol > 0)) throw InputError("integrate_flow: tol must be positive");
    using state = std::array<double, 2>;
    auto rhs = [](const state& s, state& ds, double) {
        ds[0] = s[1];
        ds[1] = 2 * s[0] - s[0] * s[0];
    };
    auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<state>());
    Trajectory tr;
    state s{start.x, start.y};
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    double t = t0, dt = dir * std::min(1e-3, std::abs(t1 - t0) + 1e-300);
    const double H0 = energy(start);
    tr.t.push_back(t);
    tr.x.push_back(start);
    while (dir * (t1 - t) > 0) {
        if (dir * (t + dt - t1) > 0) dt = t1 - t;
        double dt_try = dt;
        auto res = stepper.try_step(rhs, s, t, dt_try);
        if (res == odeint::fail) {
            dt = dt_try;
        } else {
            dt = dt_try;  // try_step advanced t and proposed the next step
            if (!std::isfinite(s[0]) || !std::isfinite(s[1]))
                throw StageError("integrate_flow", "solution left the representable range");
            Vec2<double> p{s[0], s[1]};
            tr.t.push_back(t);
            tr.x.push_back(p);
            tr.energy_drift = std::max(tr.energy_drift, std::abs(energy(p) - H0));
        }
        if (std::abs(dt) < 64 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
            throw StageError("integrate_flow", "step size underflow at t = " + std::to_string(t));
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Invariant manifolds of the near-identity family at the origin.

template <typename T, typename Map>
struct InvariantManifold {
    Parametrization<T, Map> param;
    ManifoldCurve<T> curve;
};

template <typename T>
using UnstableManifold = InvariantManifold<T, RescaledMap<T>>;
template <typename T>
using StableManifold = InvariantManifold<T, typename RescaledMap<T>::Inverse>;

// Default defect target on the fundamental domain for the working type.
template <typename T>
T default_defect_tol() {
    return significand_bits<T>() > 64 ? T(1e-30) : T(1e-12);
}
template <typename T>
int default_jet_order() {
    return significand_bits<T>() > 64 ? 40 : 24;
}

template <typename T>
UnstableManifold<T> unstable_manifold(const RescaledParams<T>& p, int order, const T& arc_length,
                                      const T& window = T(4)) {
    using std::log;
    if (order < 1) throw InputError("unstable_manifold: order must be at least 1");
    RescaledMap<T> F(p);
    SaddleData<T> sd = saddle_data<T>(F, {T(0), T(0)});
    UnstableManifold<T> W;
    W.param = parametrize<T>(F, sd.location, sd.lambda, sd.v_u, order, default_defect_tol<T>());
    W.curve = sample_curve<T>(W.param, ManifoldSide::unstable, T(log(T(1e-3))), arc_length, window);
    W.curve.base = sd;
    return W;
}

template <typename T>
StableManifold<T> stable_manifold(const RescaledParams<T>& p, int order, const T& arc_length,
                                  const T& window = T(4)) {
    using std::log;
    if (order < 1) throw InputError("stable_manifold: order must be at least 1");
    RescaledMap<T> F(p);
    SaddleData<T> sd = saddle_data<T>(F, {T(0), T(0)});
    StableManifold<T> W;
    W.param = parametrize<T>(F.inverted(), sd.location, sd.lambda, sd.v_s, order, default_defect_tol<T>());
    W.curve = sample_curve<T>(W.param, ManifoldSide::stable, T(log(T(1e-3))), arc_length, window);
    W.curve.base = sd;
    return W;
}

// ---------------------------------------------------------------------------
// Homoclinic intersections.

template <typename T = double>
struct HomoclinicPoint {
    Vec2<T> point;
    T t_u{}, t_s{};  // parameters on the two curves
    T angle{};       // in (0, pi/2]
    int sign = 0;    // orientation of (Wu', Ws')
};

template <typename T>
T crossing_angle(const Vec2<T>& a, const Vec2<T>& b) {
    using std::abs;
    using std::atan2;
    T ang = atan2(abs(cross(a, b)), abs(dot(a, b)));
    return ang;
}

// Synthetic polylines: exact segment intersections, sorted along Wu.
template <typename T>
std::vector<HomoclinicPoint<T>> polyline_intersections(const std::vector<Vec2<T>>& U, const std::vector<Vec2<T>>& S) {
    std::vector<HomoclinicPoint<T>> out;
    for (std::size_t i = 0; i + 1 < U.size(); ++i) {
        Vec2<T> a = U[i], da = U[i + 1] - U[i];
        for (std::size_t j = 0; j + 1 < S.size(); ++j) {
            Vec2<T> b = S[j], db = S[j + 1] - S[j];
            T den = cross(da, db);
            if (den == T(0)) continue;
            T u = cross(b - a, db) / den, v = cross(b - a, da) / den;
            // Half-open on the far end so shared vertices count once.
            if (u < T(0) || u >= T(1) || v < T(0) || v >= T(1)) continue;
            HomoclinicPoint<T> q;
            q.point = a + da * u;
            q.t_u = T(i) + u;
            q.t_s = T(j) + v;
            q.angle = crossing_angle(da, db);
            q.sign = den > T(0) ? 1 : -1;
            out.push_back(q);
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.t_u < y.t_u; });
    return out;
}

struct IntersectionDiagnostics {
    int samples = 0;
    int sign_changes = 0;
    int newton_failures = 0;
    std::string message;
};

namespace detail {

// Foot point of q on W near s: Newton on (W(s) - q) . W'(s) = 0.
template <typename T, typename Param>
T foot_parameter(const Param& W, const Vec2<T>& q, T s, const T& lo, const T& hi) {
    using std::abs;
    const T tol = T(64) * std::numeric_limits<T>::epsilon();
    for (int it = 0; it < 40; ++it) {
        auto L = W.local_t(s);
        Vec2<T> r = L.p - q;
        T g = dot(r, L.d1), gp = dot(L.d1, L.d1) + dot(r, L.d2);
        if (!(gp > T(0))) gp = dot(L.d1, L.d1);
        T step = g / gp;
        T sn = std::clamp(T(s - step), lo, hi);
        if (abs(sn - s) <= tol * (T(1) + abs(s))) return sn;
        s = sn;
    }
    return s;
}

template <typename T, typename PU, typename PS>
bool refine_intersection(const PU& U, const PS& S, T& t, T& s) {
    using std::abs;
    const T eps = std::numeric_limits<T>::epsilon();
    // Near-tangent crossings leave rounding noise of order eps / angle in
    // the step, so convergence is judged on the residual.
    T best_res = std::numeric_limits<T>::infinity(), best_t = t, best_s = s;
    for (int it = 0; it < 60; ++it) {
        auto a = U.local_t(t);
        auto b = S.local_t(s);
        Vec2<T> F = a.p - b.p;
        T res = norm(F);
        if (res < best_res) {
            best_res = res;
            best_t = t;
            best_s = s;
        }
        // Solve [a', -b'] (dt, ds) = -F.
        Mat2<T> J{a.d1.x, -b.d1.x, a.d1.y, -b.d1.y};
        if (J.det() == T(0)) break;
        Vec2<T> d = J.inverse() * (-F);
        t += d.x;
        s += d.y;
        if (abs(d.x) + abs(d.y) <= T(64) * eps * (T(1) + abs(t) + abs(s))) break;
    }
    auto a = U.eval_t(t), b = S.eval_t(s);
    if (norm(a - b) < best_res) {
        best_res = norm(a - b);
        best_t = t;
        best_s = s;
    }
    t = best_t;
    s = best_s;
    return best_res <= T(1024) * eps * (T(1) + norm(a));
}

}  // namespace detail

// Transversal intersections of two parametrized curves for Wu parameters in
// [tu_lo, tu_hi] and Ws parameters in [ts_lo, ts_hi]. Detection uses the
// sign of the distance from Wu(t) to its foot point on Ws; each sign change
// is refined by Newton on Wu(t) = Ws(s) with exact derivatives through the
// iterated map. Sorted along the Wu parameter.
template <typename T, typename PU, typename PS>
std::vector<HomoclinicPoint<T>> homoclinic_intersections(const PU& U, const PS& S, const T& tu_lo, const T& tu_hi,
                                                         const T& ts_lo, const T& ts_hi, int samples,
                                                         IntersectionDiagnostics* diag = nullptr) {
    using std::abs;
    std::vector<HomoclinicPoint<T>> out;
    IntersectionDiagnostics dg;
    if (!(tu_hi > tu_lo) || !(ts_hi > ts_lo) || samples < 2) throw InputError("homoclinic_intersections: empty window");
    // Initial foot guess from a coarse scan of Ws.
    const int coarse = 256;
    std::vector<Vec2<T>> sp(coarse + 1);
    std::vector<T> sv(coarse + 1);
    for (int j = 0; j <= coarse; ++j) {
        sv[j] = ts_lo + (ts_hi - ts_lo) * T(j) / T(coarse);
        sp[j] = S.eval_t(sv[j]);
    }
    auto nearest = [&](const Vec2<T>& q) {
        int best = 0;
        T bd = norm(sp[0] - q);
        for (int j = 1; j <= coarse; ++j) {
            T d = norm(sp[j] - q);
            if (d < bd) { bd = d; best = j; }
        }
        return sv[best];
    };
    std::vector<T> tt(samples), ss(samples), dd(samples);
    for (int i = 0; i < samples; ++i) {
        tt[i] = tu_lo + (tu_hi - tu_lo) * T(i) / T(samples - 1);
        Vec2<T> q = U.eval_t(tt[i]);
        T s0 = i > 0 ? ss[i - 1] : nearest(q);
        // Restart from the coarse guess when the continuation drifted.
        T s = detail::foot_parameter(S, q, s0, ts_lo, ts_hi);
        T sn = detail::foot_parameter(S, q, nearest(q), ts_lo, ts_hi);
        if (norm(S.eval_t(sn) - q) < norm(S.eval_t(s) - q)) s = sn;
        ss[i] = s;
        auto L = S.local_t(s);
        dd[i] = cross(L.d1, q - L.p) / norm(L.d1);
    }
    dg.samples = samples;
    for (int i = 0; i + 1 < samples; ++i) {
        if ((dd[i] > T(0)) == (dd[i + 1] > T(0))) continue;
        // Skip jumps caused by the foot point switching branches.
        if (ss[i] == ts_lo || ss[i] == ts_hi || ss[i + 1] == ts_lo || ss[i + 1] == ts_hi) continue;
        ++dg.sign_changes;
        T w = dd[i] / (dd[i] - dd[i + 1]);
        T t = tt[i] + (tt[i + 1] - tt[i]) * w, s = ss[i] + (ss[i + 1] - ss[i]) * w;
        if (!detail::refine_intersection(U, S, t, s)) {
            ++dg.newton_failures;
            continue;
        }
        if (t < tu_lo || t > tu_hi || s < ts_lo || s > ts_hi) continue;
        HomoclinicPoint<T> q;
        q.point = U.eval_t(t);
        q.t_u = t;
        q.t_s = s;
        Vec2<T> a = U.tangent_t(t), b = S.tangent_t(s);
        q.angle = crossing_angle(a, b);
        q.sign = cross(a, b) > T(0) ? 1 : -1;
        bool dup = false;
        for (const auto& o : out)
            if (abs(o.t_u - t) < T(1e-9) * (T(1) + abs(t))) dup = true;
        if (!dup) out.push_back(q);
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.t_u < y.t_u; });
    if (out.empty()) dg.message = "no transversal intersections in the window";
    if (diag) *diag = dg;
    return out;
}

// ---------------------------------------------------------------------------
// Splitting measurement.

// Significand width needed for a given h, or 0 when h is refused.
inline int required_precision_bits(double h) {
    if (h >= 0.7) return 53;
    if (h >= 0.35) return 128;
    return 0;
}

template <typename T = double>
struct SplittingReport {
    T h{};
    std::vector<HomoclinicPoint<T>> intersections;
    int primary = -1;        // index into intersections
    T angle{};               // crossing angle at the primary point
    T lobe_area{};           // lobe between primary and next intersection
    T lobe_area_next{};      // the adjacent lobe
    T accuracy{};            // error estimate for lobe_area
    int precision_bits = 0;  // significand width used
    T t_tip{}, s_tip{};      // parameters where the curves cross v = 0
    T defect_u{}, defect_s{};
};

namespace detail {

// First parameter after t0 at which the v-coordinate changes sign.
template <typename T, typename Param>
T first_v_crossing(const Param& W, T t0, const T& step) {
    T v0 = W.eval_t(t0).y;
    for (int i = 0; i < 4000; ++i) {
        T t1 = t0 + step;
        T v1 = W.eval_t(t1).y;
        if ((v0 > T(0)) != (v1 > T(0)))
            return bisect<T>([&](const T& t) { return W.eval_t(t).y; }, t0, t1, T(0), 200);
        t0 = t1;
        v0 = v1;
    }
    throw StageError("separatrix", "manifold never crosses v = 0");
}

// Integral of (1/2)((x - c) dy - (y - c) dx) along W for parameter a -> b.
template <typename T, typename Param>
T action_integral(const Param& W, const T& a, const T& b, const Vec2<T>& c, int panels, const GaussLegendre<T>& gl) {
    using D = Dual<T, 1>;
    T total(0);
    for (int k = 0; k < panels; ++k) {
        T lo = a + (b - a) * T(k) / T(panels), hi = a + (b - a) * T(k + 1) / T(panels);
        total += gl.integrate(
            [&](const T& t) {
                Vec2<D> p = W.eval_t(D(t, {T(1)}));
                T x = p.x.v - c.x, y = p.y.v - c.y;
                return (x * p.y.g[0] - y * p.x.g[0]) / T(2);
            },
            lo, hi);
    }
    return total;
}

template <typename T, typename PU, typename PS>
T lobe_area(const PU& U, const PS& S, const HomoclinicPoint<T>& a, const HomoclinicPoint<T>& b, int panels,
            const GaussLegendre<T>& gl) {
    using std::abs;
    Vec2<T> c = (a.point + b.point) / T(2);
    return abs(action_integral(U, a.t_u, b.t_u, c, panels, gl) - action_integral(S, a.t_s, b.t_s, c, panels, gl));
}

}  // namespace detail

// Both parametrized manifolds of the origin at the default jet order.
template <typename T>
struct ManifoldPair {
    SaddleData<T> saddle;
    Parametrization<T, RescaledMap<T>> U;
    Parametrization<T, typename RescaledMap<T>::Inverse> S;
};

template <typename T>
ManifoldPair<T> manifold_pair(const RescaledParams<T>& p, int order = default_jet_order<T>()) {
    RescaledMap<T> F(p);
    ManifoldPair<T> mp;
    mp.saddle = saddle_data<T>(F, {T(0), T(0)});
    mp.U = parametrize<T>(F, mp.saddle.location, mp.saddle.lambda, mp.saddle.v_u, order, default_defect_tol<T>());
    mp.S = parametrize<T>(F.inverted(), mp.saddle.location, mp.saddle.lambda, mp.saddle.v_s, order,
                          default_defect_tol<T>());
    return mp;
}

// Measure the splitting in working type T. Throws PrecisionError when T is
// narrower than the policy requires or when the error estimate is not
// small against the measured area.
template <typename T>
SplittingReport<T> measure_splitting(const RescaledParams<T>& p) {
    using std::abs;
    using std::ceil;
    using std::log;
    using std::log2;
    const double hd = to_double(p.h);
    const int need = required_precision_bits(hd);
    if (need == 0)
        throw PrecisionError("measure_splitting: h = " + std::to_string(hd) +
                                 " is below 0.35; more than 128 significand bits would be required",
                             256);
    const int have = significand_bits<T>();
    if (have < need)
        throw PrecisionError("measure_splitting: h = " + std::to_string(hd) + " requires a " + std::to_string(need) +
                                 "-bit significand, working type has " + std::to_string(have),
                             need);
    const T h = p.h;
    ManifoldPair<T> mp = manifold_pair(p);
    const auto& U = mp.U;
    const auto& S = mp.S;
    const SaddleData<T>& sd = mp.saddle;

    SplittingReport<T> rep;
    rep.h = h;
    rep.precision_bits = have;
    rep.defect_u = U.defect;
    rep.defect_s = S.defect;
    rep.t_tip = detail::first_v_crossing(U, T(log(T(1e-3))), T(h / T(8)));
    rep.s_tip = detail::first_v_crossing(S, T(log(T(1e-3))), T(h / T(8)));

    const int samples = 112;
    rep.intersections = homoclinic_intersections<T>(U, S, T(rep.t_tip - T(1.5) * h), T(rep.t_tip + T(2) * h),
                                                    T(rep.s_tip - T(2.5) * h), T(rep.s_tip + T(2) * h), samples);
    const auto& X = rep.intersections;
    // Primary: largest angle in the fundamental domain [t_tip - h/4, t_tip + 3h/4).
    // Its ends avoid the symmetric intersections at t_tip and t_tip + h/2.
    for (int i = 0; i < int(X.size()); ++i) {
        if (X[i].t_u < rep.t_tip - h / T(4) || X[i].t_u >= rep.t_tip + T(3) * h / T(4)) continue;
        if (rep.primary < 0 || X[i].angle > X[rep.primary].angle) rep.primary = i;
    }
    if (rep.primary < 0 || rep.primary + 2 >= int(X.size()))
        throw StageError("separatrix", "fewer than three consecutive intersections around the primary point");
    rep.angle = X[rep.primary].angle;

    const int nodes = significand_bits<T>() > 64 ? 40 : 24;
    GaussLegendre<T> gl(nodes), gl2(nodes + 8);
    const auto& q0 = X[rep.primary];
    const auto& q1 = X[rep.primary + 1];
    const auto& q2 = X[rep.primary + 2];
    rep.lobe_area = detail::lobe_area(U, S, q0, q1, 4, gl);
    rep.lobe_area_next = detail::lobe_area(U, S, q1, q2, 4, gl);
    T quad_err = abs(rep.lobe_area - detail::lobe_area(U, S, q0, q1, 8, gl2));
    // Position error of the curves: the jet defect amplified by the iterates
    // taken to reach the lobe, times the lobe perimeter scale.
    int m = std::max(U.iterates_at(q1.t_u), S.iterates_at(q1.t_s));
    T amp = ipow(sd.lambda, long(m + 1));
    T perim = norm(q1.point - q0.point) + h;
    T pos_err = (U.defect + S.defect) * amp * perim;
    T round_err = T(64) * std::numeric_limits<T>::epsilon() * amp * perim * T(4);
    rep.accuracy = quad_err + pos_err + round_err;

    if (!(rep.lobe_area > T(0)) || rep.accuracy > rep.lobe_area / T(100)) {
        double ratio = to_double(T(rep.accuracy / (rep.lobe_area / T(100) + std::numeric_limits<T>::min())));
        int more = int(std::ceil(std::log2(std::max(ratio, 2.0))));
        throw PrecisionError("measure_splitting: error estimate not small against the lobe area at h = " +
                                 std::to_string(hd) + "; about " + std::to_string(have + more) +
                                 " significand bits required",
                             have + more);
    }
    return rep;
}

inline SplittingReport<double> report_to_double(const SplittingReport<ext128>& r) {
    SplittingReport<double> d;
    d.h = to_double(r.h);
    for (const auto& q : r.intersections)
        d.intersections.push_back({{to_double(q.point.x), to_double(q.point.y)},
                                   to_double(q.t_u), to_double(q.t_s), to_double(q.angle), q.sign});
    d.primary = r.primary;
    d.angle = to_double(r.angle);
    d.lobe_area = to_double(r.lobe_area);
    d.lobe_area_next = to_double(r.lobe_area_next);
    d.accuracy = to_double(r.accuracy);
    d.precision_bits = r.precision_bits;
    d.t_tip = to_double(r.t_tip);
    d.s_tip = to_double(r.s_tip);
    d.defect_u = to_double(r.defect_u);
    d.defect_s = to_double(r.defect_s);
    return d;
}

// Runs at the requested significand width (53 or 128); PrecisionError when
// the policy needs more than that.
inline SplittingReport<double> measure_splitting_bits(double h, int bits) {
    if (bits != 53 && bits != 128) throw InputError("measure_splitting: supported widths are 53 and 128 bits");
    if (bits == 53) return measure_splitting<double>(RescaledParams<double>::from_h(h));
    return report_to_double(measure_splitting<ext128>(RescaledParams<ext128>::from_h(ext128(h))));
}

// Auto-selects the working precision from the policy; results in double.
inline SplittingReport<double> measure_splitting_auto(double h) {
    int need = required_precision_bits(h);
    return measure_splitting_bits(h, need == 0 ? 53 : need);
}

// Model prediction of the lobe area: the integral of the first harmonic
// (1/2 pi) h mu(h) sin(2 pi t / h) over a half period, h^2 mu / (2 pi^2).
inline double predicted_lobe_area(double h, double theta1) {
    MuValue<double> m = mu(h, theta1);
    return h * h * m.value / (2 * M_PI * M_PI);
}

struct SplittingFit {
    LinearFit fit;  // ln(area h^5) against 1/h
    double target = -2 * M_PI * M_PI;
    double relative_error() const { return std::abs(fit.slope - target) / std::abs(target); }
};

inline SplittingFit fit_splitting(const std::vector<double>& h, const std::vector<double>& area) {
    if (h.size() != area.size() || h.size() < 3) throw InputError("fit_splitting: need at least three (h, area) pairs");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(area[i] > 0)) throw InputError("fit_splitting: non-positive area");
        x.push_back(1.0 / h[i]);
        y.push_back(std::log(area[i] * std::pow(h[i], 5)));
    }
    return {fit_line(x, y)};
}

// Symmetric Hausdorff distance between two point sets.
template <typename T>
T hausdorff(const std::vector<Vec2<T>>& A, const std::vector<Vec2<T>>& B) {
    auto directed = [](const std::vector<Vec2<T>>& P, const std::vector<Vec2<T>>& Q) {
        T worst(0);
        for (const auto& p : P) {
            T best = std::numeric_limits<T>::infinity();
            for (const auto& q : Q) best = std::min(best, norm(p - q));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(A, B), directed(B, A));
}

}  // namespace ssea
