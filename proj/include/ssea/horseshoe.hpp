#pragma once

// Two-rectangle horseshoe near the saddle of the near-identity family.
//
// Coordinates. (x, y) are normal-form coordinates scaled so that the
// homoclinic anchor points are (1, 0) on the unstable axis and (0, 1) on
// the stable axis. The local map is N(x, y) = (D(xy) x, y / D(xy)) with
// D(s) = Delta(alpha beta s). The global transition Gl maps a neighbourhood
// of (1, 0) to one of (0, 1) by k raw steps of the map, entering and
// leaving through the truncated normal-form change.
//
// Renormalized coordinates are rho(x, y) = D^n(xy) (x, y); in them the
// square S becomes [0, tau+]^2 exactly, tau+- = lambda^(+-1/10), and
//   T0~ = (D(t) x, y / D(t)),     t = t(xy),
//   T1~ = Ghat o Gl o G,          G(x, y) = (x, D^-2n(t(xy)) y),
//                                 Ghat(X, Y) = (D^2n(XY) X, Y),
// where t(s) solves t D^2n(t) = s.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cantor.hpp"
#include "core/dual.hpp"
#include "core/errors.hpp"
#include "core/roots.hpp"
#include "core/vec2.hpp"
#include "maps.hpp"
#include "normalform.hpp"
#include "separatrix.hpp"

namespace ssea {

// ---------------------------------------------------------------------------
// Iterate count.

// log(mu(h) h^(1+nu)); throws when mu underflows in T.
template <typename T>
T log_mu_scale(const T& h, const T& nu, const T& theta1) {
    using std::log;
    MuValue<T> m = mu(h, theta1);
    if (m.underflow)
        throw PrecisionError("choose_n: mu(h) underflows at " + std::to_string(significand_bits<T>()) +
                                 "-bit precision",
                             128);
    return m.log_value + (T(1) + nu) * log(h);
}

template <typename T>
int choose_n(const T& h, const T& nu, const T& theta1) {
    using std::floor;
    if (!(nu > T(0))) throw InputError("choose_n: nu must be positive");
    T L = log_mu_scale(h, nu, theta1);
    if (!(L < T(0))) throw InputError("choose_n: mu(h) h^(1+nu) must be below 1");
    return int(floor(-L / (T(2) * h)));
}

// lambda^-2n in [mu h^(1+nu), lambda^2 mu h^(1+nu)), checked in logarithms.
template <typename T>
bool n_bracket_holds(const T& h, const T& nu, const T& theta1, int n) {
    T L = log_mu_scale(h, nu, theta1);
    T e = -T(2) * T(n) * h;
    return e >= L && e < L + T(2) * h;
}

// ---------------------------------------------------------------------------
// Distortion bound and the two angle lemmas.

struct ClassFParams {
    double C_star = 0, eps = 0, gamma = 0;
};

inline double distortion_bound(const ClassFParams& p) {
    if (p.C_star < 0 || p.eps < 0 || p.gamma < 0) throw InputError("distortion_bound: parameters must be non-negative");
    return 4 * (p.C_star + 3) * p.gamma + 2 * p.eps;
}

struct AngleCheck {
    double lhs = 0, rhs = 0;
    bool holds() const { return lhs <= rhs * (1 + 1e-12) + 1e-15; }
    double margin() const { return rhs - lhs; }
};

inline double sin_angle(const Vec2<double>& a, const Vec2<double>& b) {
    double na = norm(a), nb = norm(b);
    if (na == 0 || nb == 0) throw InputError("sin_angle: zero vector");
    return std::min(1.0, std::abs(cross(a, b)) / (na * nb));
}

// sin angle(A u1, A u2) <= |A| |A^-1| sin angle(u1, u2).
inline AngleCheck angle_bound_pair(const Mat2<double>& A, const Vec2<double>& u1, const Vec2<double>& u2) {
    AngleCheck c;
    c.lhs = sin_angle(A * u1, A * u2);
    c.rhs = opnorm(A) * opnorm(A.inverse()) * sin_angle(u1, u2);
    return c;
}

// sin angle(A u, B u) <= |A| |A - B|. The proof uses |A u| >= |u| / |A|,
// i.e. |A^-1| = |A|, so A must have determinant +-1.
inline AngleCheck angle_bound_perturbation(const Mat2<double>& A, const Mat2<double>& B, const Vec2<double>& u) {
    if (norm(u) == 0) throw InputError("angle_bound_perturbation: zero vector");
    if (std::abs(std::abs(A.det()) - 1) > 1e-9) throw InputError("angle_bound_perturbation: det A must be +-1");
    AngleCheck c;
    c.lhs = sin_angle(A * (u / norm(u)), B * (u / norm(u)));
    c.rhs = opnorm(A) * opnorm(A - B);
    return c;
}

// ---------------------------------------------------------------------------
// Cone fields.

struct ConeFieldSpec {
    double kappa = 1;
};

struct ConeBranchResult {
    bool unstable_ok = true, stable_ok = true;
    double worst_u = std::numeric_limits<double>::infinity();  // min |w1| / (kappa |w2|) over cone edges
    double worst_s = std::numeric_limits<double>::infinity();  // min |w2| / (kappa |w1|) under the inverse
    double growth_u = std::numeric_limits<double>::infinity(); // min |w1| / |v1| over K^u
    double growth_s = std::numeric_limits<double>::infinity(); // min |w2| / |v2| over K^s under the inverse
    int points = 0;
};

// K^u = {|v1| > kappa |v2|} must map into itself under J, and
// K^s = {|v2| > kappa |v1|} into itself under J^-1. Checking both edge
// vectors and the axis vector covers the whole nappe since linear maps
// send the sector between two rays to the sector between their images.
inline ConeBranchResult cone_check(const std::vector<Mat2<double>>& jac, double kappa) {
    if (!(kappa > 0)) throw InputError("cone_check: kappa must be positive");
    ConeBranchResult r;
    for (const auto& J : jac) {
        ++r.points;
        Vec2<double> ep = J * Vec2<double>{1, 1 / kappa}, em = J * Vec2<double>{1, -1 / kappa};
        Vec2<double> ax = J * Vec2<double>{1, 0};
        auto ratio_u = [&](const Vec2<double>& w) { return std::abs(w.x) / (kappa * std::abs(w.y)); };
        double mu_ = std::min({ratio_u(ep), ratio_u(em), ratio_u(ax)});
        bool same = (ep.x > 0) == (em.x > 0) && (ep.x > 0) == (ax.x > 0);
        r.worst_u = std::min(r.worst_u, mu_);
        if (!(mu_ > 1) || !same) r.unstable_ok = false;
        r.growth_u = std::min({r.growth_u, std::abs(ep.x), std::abs(em.x)});

        Mat2<double> K = J.inverse();
        Vec2<double> fp = K * Vec2<double>{1 / kappa, 1}, fm = K * Vec2<double>{-1 / kappa, 1};
        Vec2<double> ay = K * Vec2<double>{0, 1};
        auto ratio_s = [&](const Vec2<double>& w) { return std::abs(w.y) / (kappa * std::abs(w.x)); };
        double ms = std::min({ratio_s(fp), ratio_s(fm), ratio_s(ay)});
        bool same_s = (fp.y > 0) == (fm.y > 0) && (fp.y > 0) == (ay.y > 0);
        r.worst_s = std::min(r.worst_s, ms);
        if (!(ms > 1) || !same_s) r.stable_ok = false;
        r.growth_s = std::min({r.growth_s, std::abs(fp.y), std::abs(fm.y)});
    }
    return r;
}

struct ConeReport {
    double kappa = 0, lambda = 0;
    int grid = 0;
    ConeBranchResult s0, s1;
    bool growth_ok = false;  // S0 growth >= lambda^0.9 for both cones
    bool pass = false;
    std::string note;
    double kappa_lo = 0, kappa_hi = 0;  // largest passing interval on the scan grid (0 if none)
};

// Jacobians sampled on both renormalized rectangles; the S1 growth only
// has to exceed 1, the S0 growth has to reach lambda^0.9.
struct ConeSamples {
    double lambda = 0;
    int grid = 0;
    std::vector<Mat2<double>> s0, s1;
};

inline ConeReport evaluate_cones(const ConeSamples& cs, const ConeFieldSpec& spec) {
    ConeReport r;
    r.kappa = spec.kappa;
    r.lambda = cs.lambda;
    r.grid = cs.grid;
    r.s0 = cone_check(cs.s0, spec.kappa);
    r.s1 = cone_check(cs.s1, spec.kappa);
    const double g = std::pow(cs.lambda, 0.9);
    r.growth_ok = r.s0.growth_u >= g && r.s0.growth_s >= g;
    r.pass = r.s0.unstable_ok && r.s0.stable_ok && r.s1.unstable_ok && r.s1.stable_ok && r.growth_ok &&
             r.s1.growth_u > 1 && r.s1.growth_s > 1;
    if (!r.pass) r.note = "no invariant cones at this kappa";
    return r;
}

// Log-grid scan (per_decade points per decade on [10^lo_exp, 10^hi_exp]);
// returns the report at spec.kappa with the largest contiguous passing
// interval filled in.
inline ConeReport scan_cones(const ConeSamples& cs, const ConeFieldSpec& spec, int lo_exp = -9, int hi_exp = 9,
                             int per_decade = 8) {
    ConeReport r = evaluate_cones(cs, spec);
    double best_lo = 0, best_hi = 0, cur_lo = 0;
    bool in_run = false;
    int best_len = 0, cur_len = 0;
    for (int j = lo_exp * per_decade; j <= hi_exp * per_decade; ++j) {
        double k = std::pow(10.0, double(j) / per_decade);
        bool ok = evaluate_cones(cs, {k}).pass;
        if (ok) {
            if (!in_run) { cur_lo = k; cur_len = 0; in_run = true; }
            ++cur_len;
            if (cur_len > best_len) { best_len = cur_len; best_lo = cur_lo; best_hi = k; }
        } else {
            in_run = false;
        }
    }
    r.kappa_lo = best_lo;
    r.kappa_hi = best_hi;
    return r;
}

// ---------------------------------------------------------------------------
// Class F(C*, eps, gamma).

// Derivative data of one branch at one point: Df = [[a, b], [c, d]] and
// the partial derivatives of its entries.
struct JetSample {
    Vec2<double> p, fp;
    Mat2<double> J, Jx, Jy;  // Jx = dDf/dx, Jy = dDf/dy
};

using BranchSampler = std::function<JetSample(int branch, const Vec2<double>&)>;

// A curvilinear rectangle as a map of the unit square.
struct Region {
    std::function<Vec2<double>(double, double)> at;
};

struct ClassFSamples {
    int grid = 0;
    std::vector<JetSample> s[2];
};

inline ClassFSamples sample_class_f(const BranchSampler& f, const Region& S0, const Region& S1, int grid) {
    if (grid < 2) throw InputError("classF: grid must be at least 2");
    ClassFSamples out;
    out.grid = grid;
    const Region* R[2] = {&S0, &S1};
    for (int b = 0; b < 2; ++b)
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j)
                out.s[b].push_back(f(b, R[b]->at(double(i) / (grid - 1), double(j) / (grid - 1))));
    return out;
}

struct ConditionMargin {
    bool pass = true;
    double worst = 0;  // worst ratio actual / allowed; pass needs <= 1 (< 1 for strict ones)
};

struct ClassFReport {
    int grid = 0;
    ClassFParams params;
    double det_tol = 0;
    ConditionMargin diam_domain, diam_image;  // (1)
    ConditionMargin det;                      // (2a): |det - 1| / det_tol
    ConditionMargin d_small, a_large, a_bounded;  // (2b)
    ConditionMargin bc_small;                 // (2c)
    ConditionMargin tilde_first;              // (3a)
    ConditionMargin mixed;                    // (3b)
    ConditionMargin tilde_second;             // (3c)
    ConditionMargin diagonal;                 // (3d)
    ConditionMargin variation[2];             // (4)
    ConditionMargin gap_domain, gap_image;    // (5)
    double gap_domain_size = 0, gap_image_size = 0;
    double log_a_variation[2] = {0, 0};       // sup - inf of log|a| per rectangle

    bool pass() const {
        for (const ConditionMargin* c : {&diam_domain, &diam_image, &det, &d_small, &a_large, &a_bounded, &bc_small,
                                         &tilde_first, &mixed, &tilde_second, &diagonal, &variation[0],
                                         &variation[1], &gap_domain, &gap_image})
            if (!c->pass) return false;
        return true;
    }
};

namespace detail {

// Requirements of conditions (2c), (3) and (4) per sample, as the smallest
// eps or gamma that would satisfy them.
struct ClassFNeeds {
    double eps = 0, gamma3 = 0, var[2] = {0, 0}, alpha[2] = {0, 0}, a_max = 0;
};

inline void tilde_gradients(const JetSample& s, std::array<double, 2>& ga, std::array<double, 2>& gb,
                            std::array<double, 2>& gc, std::array<double, 2>& gd) {
    // grad_q (e o f^-1) = Df^-T grad_p e.
    Mat2<double> K = s.J.inverse();
    auto tr = [&](double ex, double ey) {
        return std::array<double, 2>{K.a * ex + K.c * ey, K.b * ex + K.d * ey};
    };
    ga = tr(s.Jx.a, s.Jy.a);
    gb = tr(s.Jx.b, s.Jy.b);
    gc = tr(s.Jx.c, s.Jy.c);
    gd = tr(s.Jx.d, s.Jy.d);
}

inline double pair_min_distance(const std::vector<Vec2<double>>& A, const std::vector<Vec2<double>>& B) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : A)
        for (const auto& q : B) m = std::min(m, norm(p - q));
    return m;
}
inline double diameter(const std::vector<Vec2<double>>& A) {
    double m = 0;
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = i + 1; j < A.size(); ++j) m = std::max(m, norm(A[i] - A[j]));
    return m;
}

inline ClassFNeeds class_f_needs(const ClassFSamples& S) {
    ClassFNeeds n;
    for (int b = 0; b < 2; ++b) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& s : S.s[b]) {
            const double a = std::abs(s.J.a), am1 = a - 1;
            n.a_max = std::max(n.a_max, a);
            n.alpha[b] = std::max(n.alpha[b], a);
            lo = std::min(lo, std::log(a));
            hi = std::max(hi, std::log(a));
            if (am1 > 0) {
                n.eps = std::max(n.eps, std::max(std::abs(s.J.b), std::abs(s.J.c)) / am1);
                std::array<double, 2> ga, gb, gc, gd;
                tilde_gradients(s, ga, gb, gc, gd);
                double t3a = std::max({std::abs(gb[0]), std::abs(gd[1]), std::abs(gb[1]), std::abs(gc[0]),
                                       std::abs(ga[0]), std::abs(gc[1])});
                double t3b = std::max({std::abs(s.Jy.a), std::abs(s.Jx.b), std::abs(s.Jy.b), std::abs(s.Jx.c),
                                       std::abs(s.Jy.c), std::abs(s.Jx.d)});
                double t3c = std::max(std::abs(ga[1]), std::abs(gd[0])) / a;
                double t3d = std::max(std::abs(s.Jx.a), std::abs(s.Jy.d)) / a;
                n.gamma3 = std::max(n.gamma3, std::max({t3a, t3b, t3c, t3d}) / am1);
            }
        }
        n.var[b] = S.s[b].empty() ? 0 : hi - lo;
    }
    return n;
}

inline std::vector<Vec2<double>> sample_points(const ClassFSamples& S, int b, bool image) {
    std::vector<Vec2<double>> v;
    for (const auto& s : S.s[b]) v.push_back(image ? s.fp : s.p);
    return v;
}

}  // namespace detail

inline ClassFReport classF_evaluate(const ClassFSamples& S, const ClassFParams& P, double det_tol = 1e-9) {
    ClassFReport r;
    r.grid = S.grid;
    r.params = P;
    r.det_tol = det_tol;
    auto upd = [](ConditionMargin& c, double actual, double allowed, bool strict = false) {
        double ratio = allowed > 0 ? actual / allowed : (actual > 0 ? std::numeric_limits<double>::infinity() : 0);
        c.worst = std::max(c.worst, ratio);
        if (strict ? !(actual < allowed) : !(actual <= allowed)) c.pass = false;
    };
    auto P0 = detail::sample_points(S, 0, false), P1 = detail::sample_points(S, 1, false);
    auto I0 = detail::sample_points(S, 0, true), I1 = detail::sample_points(S, 1, true);
    {
        auto all = P0;
        all.insert(all.end(), P1.begin(), P1.end());
        upd(r.diam_domain, detail::diameter(all), 1);
        auto im = I0;
        im.insert(im.end(), I1.begin(), I1.end());
        upd(r.diam_image, detail::diameter(im), 1);
    }
    const double a_cap = P.eps > 0 ? P.C_star / P.eps : std::numeric_limits<double>::infinity();
    for (int b = 0; b < 2; ++b) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, alpha = 0;
        for (const auto& s : S.s[b]) {
            const double a = std::abs(s.J.a), d = std::abs(s.J.d), am1 = a - 1;
            upd(r.det, std::abs(s.J.det() - 1), det_tol);
            upd(r.d_small, d, 1, true);
            upd(r.a_large, 1, a, true);
            upd(r.a_bounded, a, a_cap);
            upd(r.bc_small, std::max(std::abs(s.J.b), std::abs(s.J.c)), P.eps * am1);
            std::array<double, 2> ga, gb, gc, gd;
            detail::tilde_gradients(s, ga, gb, gc, gd);
            upd(r.tilde_first,
                std::max({std::abs(gb[0]), std::abs(gd[1]), std::abs(gb[1]), std::abs(gc[0]), std::abs(ga[0]),
                          std::abs(gc[1])}),
                P.gamma * am1);
            upd(r.mixed,
                std::max({std::abs(s.Jy.a), std::abs(s.Jx.b), std::abs(s.Jy.b), std::abs(s.Jx.c), std::abs(s.Jy.c),
                          std::abs(s.Jx.d)}),
                P.gamma * am1);
            upd(r.tilde_second, std::max(std::abs(ga[1]), std::abs(gd[0])), P.gamma * a * am1);
            upd(r.diagonal, std::max(std::abs(s.Jx.a), std::abs(s.Jy.d)), P.gamma * a * am1);
            lo = std::min(lo, std::log(a));
            hi = std::max(hi, std::log(a));
            alpha = std::max(alpha, a);
        }
        if (!S.s[b].empty()) {
            r.log_a_variation[b] = hi - lo;
            upd(r.variation[b], hi - lo, P.gamma * (1 - 1 / alpha));
        }
    }
    const double need = P.gamma > 0 ? P.eps / P.gamma : 0;
    r.gap_domain_size = detail::pair_min_distance(P0, P1);
    r.gap_image_size = detail::pair_min_distance(I0, I1);
    upd(r.gap_domain, need, r.gap_domain_size);
    upd(r.gap_image, need, r.gap_image_size);
    return r;
}

inline ClassFReport classF_check(const BranchSampler& f, const Region& S0, const Region& S1, const ClassFParams& P,
                                 int grid = 33, double det_tol = 1e-9) {
    return classF_evaluate(sample_class_f(f, S0, S1, grid), P, det_tol);
}

// Smallest parameters satisfying (2)-(5) on the samples, times `safety`.
// gamma is raised if needed so that eps / gamma fits the smaller gap.
inline ClassFParams fit_classF_params(const ClassFSamples& S, double safety = 1.05) {
    detail::ClassFNeeds n = detail::class_f_needs(S);
    ClassFParams p;
    p.eps = safety * n.eps;
    double g = n.gamma3;
    for (int b = 0; b < 2; ++b)
        if (n.alpha[b] > 1) g = std::max(g, n.var[b] / (1 - 1 / n.alpha[b]));
    double gap = std::min(detail::pair_min_distance(detail::sample_points(S, 0, false), detail::sample_points(S, 1, false)),
                          detail::pair_min_distance(detail::sample_points(S, 0, true), detail::sample_points(S, 1, true)));
    if (gap > 0) g = std::max(g, p.eps / gap);
    p.gamma = safety * g;
    p.C_star = safety * p.eps * n.a_max;
    return p;
}

// ---------------------------------------------------------------------------
// The return-map model.

template <typename T = double>
struct ReturnMapGeometry {
    T h{}, nu{}, theta1{}, lambda{};
    int n = 0;
    int transit_count = 0;  // k(h)
    int jet_order = 0;      // normal form M
    T window{};             // |z| bound for the anchor points
    T conjugacy_residual{};
    T alpha{}, beta{};      // normal-form scales
    T tau_plus{}, tau_minus{};
    T l{};                  // edge of S along both axes, lambda^(-n + 1/10)
    Vec2<T> qu_ambient, qs_ambient;  // homoclinic anchors
    Vec2<T> qu_normal, qs_normal;    // their scaled normal-form images, (1, 0) and (0, 1)
    int intersection_index = -1;     // which splitting intersection anchors the orbit
    NormalForm<T> nf;
    std::vector<Vec2<T>> S0, S1;     // boundary polylines in scaled normal-form coordinates
    T gap_renormalized{};            // horizontal gap between S0~ and S1~

    // ---- local dynamics --------------------------------------------------
    template <typename S>
    S Dn(const S& s) const { return nf.series.eval(S(s * T(alpha * beta))); }

    template <typename S>
    Vec2<S> N(const Vec2<S>& p) const {
        S d = Dn(S(p.x * p.y));
        return {d * p.x, p.y / d};
    }
    template <typename S>
    Vec2<S> N_inv(const Vec2<S>& p) const {
        S d = Dn(S(p.x * p.y));
        return {p.x / d, d * p.y};
    }
    template <typename S>
    Vec2<S> N_pow(const Vec2<S>& p, long m) const {
        S d = ipow(Dn(S(p.x * p.y)), m);
        return {d * p.x, p.y / d};
    }

    // Root of t D^2n(t) = s by safeguarded Newton on [0, 4 lambda^-2n] (or
    // its mirror for s < 0), then a few Newton steps in S so that
    // derivative parts are exact.
    template <typename S>
    S t_of_s(const S& s) const {
        using std::abs;
        const T sv = T(primal(s));
        const long m = 2L * n;
        auto f = [&](const auto& t) { return t * ipow(Dn(t), m) - s; };
        if (sv == T(0)) {
            S t = s * T(0);
            for (int i = 0; i < 3; ++i) t = t - f(t) / ipow(Dn(t), m);
            return t;
        }
        const T lam2n = ipow(lambda, m);
        T lo(0), hi = T(4) / lam2n;
        if (sv < T(0)) { lo = -hi; hi = T(0); }
        auto fv = [&](const T& t) { return t * ipow(nf.series.eval(T(t * alpha * beta)), m) - sv; };
        if ((fv(lo) > T(0)) == (fv(hi) > T(0))) throw StageError("renormalize", "t(s) bracket failure");
        T t = sv / lam2n;
        for (int it = 0; it < 100; ++it) {
            using D1 = Dual<T, 1>;
            D1 td(t, {T(1)});
            D1 r = td * ipow(Dn(td), m) - D1(sv);
            if ((r.v > T(0)) == (fv(lo) > T(0))) lo = t; else hi = t;
            T tn = t - r.v / r.g[0];
            if (!(tn > lo && tn < hi)) tn = (lo + hi) / T(2);
            T step = abs(tn - t);
            t = tn;
            if (step <= T(4) * std::numeric_limits<T>::epsilon() * abs(t)) break;
        }
        if constexpr (is_dual<S>::value) {
            S ts = s * T(0) + t;
            for (int i = 0; i < 4; ++i) {
                using std::pow;
                S d = Dn(ts);
                S fd = ipow(d, m) + T(m) * ts * ipow(d, m - 1) * dn_prime(ts);
                ts = ts - f(ts) / fd;
            }
            return ts;
        } else {
            return t;
        }
    }
    // d/ds of D(s) = Delta(alpha beta s).
    template <typename S>
    S dn_prime(const S& s) const {
        const auto& c = nf.series.coeffs;
        const T ab = alpha * beta;
        S r = s * T(0) + T(0);
        for (int i = int(c.size()) - 1; i >= 1; --i) r = r * S(s * ab) + T(T(i) * c[i]);
        return r * ab;
    }

    template <typename S>
    Vec2<S> rho(const Vec2<S>& p) const {
        S d = ipow(Dn(S(p.x * p.y)), long(n));
        return {d * p.x, d * p.y};
    }
    template <typename S>
    Vec2<S> rho_inv(const Vec2<S>& p) const {
        S t = t_of_s(S(p.x * p.y));
        S d = ipow(Dn(t), long(n));
        return {p.x / d, p.y / d};
    }

    // ---- global transition -----------------------------------------------
    template <typename S>
    Vec2<S> global(const Vec2<S>& p) const {
        Vec2<S> z = nf.change.inverse(Vec2<S>{S(p.x * alpha), S(p.y * beta)}, 4);
        for (int i = 0; i < transit_count; ++i) z = nf.map(z);
        Vec2<S> w = nf.change.forward(z);
        return {w.x / alpha, w.y / beta};
    }
    template <typename S>
    Vec2<S> global_inv(const Vec2<S>& p) const {
        Vec2<S> z = nf.change.inverse(Vec2<S>{S(p.x * alpha), S(p.y * beta)}, 4);
        for (int i = 0; i < transit_count; ++i) z = nf.map.inverse(z);
        Vec2<S> w = nf.change.forward(z);
        return {w.x / alpha, w.y / beta};
    }

    // ---- renormalized branches -------------------------------------------
    template <typename S>
    Vec2<S> T0(const Vec2<S>& p) const {
        S d = Dn(t_of_s(S(p.x * p.y)));
        return {d * p.x, p.y / d};
    }
    template <typename S>
    Vec2<S> T0_inv(const Vec2<S>& p) const {
        S d = Dn(t_of_s(S(p.x * p.y)));
        return {p.x / d, d * p.y};
    }
    template <typename S>
    Vec2<S> G(const Vec2<S>& p) const {
        S d = ipow(Dn(t_of_s(S(p.x * p.y))), 2L * n);
        return {p.x, p.y / d};
    }
    template <typename S>
    Vec2<S> G_inv(const Vec2<S>& p) const {
        S d = ipow(Dn(S(p.x * p.y)), 2L * n);
        return {p.x, d * p.y};
    }
    template <typename S>
    Vec2<S> Ghat(const Vec2<S>& p) const {
        S d = ipow(Dn(S(p.x * p.y)), 2L * n);
        return {d * p.x, p.y};
    }
    template <typename S>
    Vec2<S> Ghat_inv(const Vec2<S>& p) const {
        S d = ipow(Dn(t_of_s(S(p.x * p.y))), 2L * n);
        return {p.x / d, p.y};
    }
    template <typename S>
    Vec2<S> T1(const Vec2<S>& p) const { return Ghat(global(G(p))); }
    template <typename S>
    Vec2<S> T1_inv(const Vec2<S>& p) const { return G_inv(global_inv(Ghat_inv(p))); }

    template <typename S>
    Vec2<S> branch(int b, const Vec2<S>& p) const { return b == 0 ? T0(p) : T1(p); }
    template <typename S>
    Vec2<S> branch_inv(int b, const Vec2<S>& p) const { return b == 0 ? T0_inv(p) : T1_inv(p); }

    // ---- membership (renormalized) ----------------------------------------
    bool in_square(const Vec2<T>& p) const {
        return p.x >= T(0) && p.y >= T(0) && p.x <= tau_plus && p.y <= tau_plus;
    }
    bool in_S0_tilde(const Vec2<T>& p) const { return in_square(p) && in_square(T0(p)); }
    bool in_S1_tilde(const Vec2<T>& p) const {
        if (!in_square(p) || p.x < tau_minus) return false;
        Vec2<T> q = T1(p);
        return q.x >= T(0) && q.x <= tau_plus && q.y >= tau_minus && q.y <= tau_plus;
    }
};

template <typename T>
Mat2<T> branch_jacobian(const ReturnMapGeometry<T>& g, int b, const Vec2<T>& p) {
    using D = Dual<T, 2>;
    Vec2<D> r = g.branch(b, Vec2<D>{D::variable(p.x, 0), D::variable(p.y, 1)});
    return {r.x.g[0], r.x.g[1], r.y.g[0], r.y.g[1]};
}

template <typename T>
JetSample branch_jet(const ReturnMapGeometry<T>& g, int b, const Vec2<T>& p) {
    Vec2<Jet2<T>> r = g.branch(b, Vec2<Jet2<T>>{jet2_variable(p.x, 0), jet2_variable(p.y, 1)});
    JetSample s;
    s.p = {to_double(p.x), to_double(p.y)};
    s.fp = {to_double(jet_value(r.x)), to_double(jet_value(r.y))};
    auto d = [](const Jet2<T>& j, int i) { return to_double(jet_d(j, i)); };
    auto dd = [](const Jet2<T>& j, int i, int k) { return to_double(jet_dd(j, i, k)); };
    s.J = {d(r.x, 0), d(r.x, 1), d(r.y, 0), d(r.y, 1)};
    s.Jx = {dd(r.x, 0, 0), dd(r.x, 1, 0), dd(r.y, 0, 0), dd(r.y, 1, 0)};
    s.Jy = {dd(r.x, 0, 1), dd(r.x, 1, 1), dd(r.y, 0, 1), dd(r.y, 1, 1)};
    return s;
}

namespace detail {

// Scalar Newton on f(x) = component of map(x, y) minus target, with the
// derivative from a dual evaluation. Steps are clamped to `max_step`. The
// return branch amplifies rounding by up to lambda^2n, so once steps are
// tiny and stop shrinking the iterate is at the noise floor and accepted.
template <typename T, typename F>
T solve_component(F&& f, T x, const T& max_step, int max_iter = 80) {
    using std::abs;
    using D1 = Dual<T, 1>;
    const T eps = std::numeric_limits<T>::epsilon();
    T prev = std::numeric_limits<T>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        D1 r = f(D1(x, {T(1)}));
        if (!(r.g[0] != T(0))) throw StageError("horseshoe", "zero derivative in a row solve");
        T step = r.v / r.g[0];
        if (abs(step) > max_step) step = step > T(0) ? max_step : -max_step;
        x -= step;
        const T as = abs(step), scale = T(1) + abs(x);
        if (as <= T(8) * eps * scale) return x;
        if (as <= T(1e6) * eps * scale && as > prev / T(2)) return x;
        prev = as;
    }
    throw StageError("horseshoe", "row solve did not converge");
}

}  // namespace detail

// Left (target 0) or right (target tau+) edge of S1~ at height y: the x
// with T1~(x, y).x = target, found from x = 1.
template <typename T>
T s1_edge(const ReturnMapGeometry<T>& g, const T& y, const T& target, T guess = T(1)) {
    using D1 = Dual<T, 1>;
    return detail::solve_component<T>(
        [&](const D1& x) { return g.T1(Vec2<D1>{x, D1(y)}).x - target; }, guess, T(1e-3));
}

// Right edge of S0~ at height y: D(t(xy)) x = target.
template <typename T>
T s0_edge(const ReturnMapGeometry<T>& g, const T& y, const T& target) {
    using D1 = Dual<T, 1>;
    return detail::solve_component<T>(
        [&](const D1& x) { return g.T0(Vec2<D1>{x, D1(y)}).x - target; }, target / g.lambda, T(0.1));
}

struct HorseshoeConfig {
    double nu = 0.1;
    double theta1 = 1.0;
    double window = 0.15;      // |z| bound for the anchor points
    int min_order = 3, max_order = 12;
    double residual_fraction = 1e-3;  // conjugacy residual vs splitting scale
    int grid = 33;
    int max_grid = 129;        // grid doubling stops here
    double grid_tolerance = 0.05;  // relative change of fitted parameters
    int boundary_samples = 17;
};

// Geometry of the return map at parameter p from a splitting measurement.
template <typename T>
ReturnMapGeometry<T> build_geometry(const RescaledParams<T>& p, const SplittingReport<T>& rep,
                                    const HorseshoeConfig& cfg = {}) {
    using std::abs;
    using std::pow;
    ReturnMapGeometry<T> g;
    g.h = p.h;
    g.nu = T(cfg.nu);
    g.theta1 = T(cfg.theta1);
    g.lambda = p.lambda;
    g.window = T(cfg.window);
    g.tau_plus = pow(p.lambda, T(0.1));
    g.tau_minus = T(1) / g.tau_plus;
    g.n = choose_n(p.h, g.nu, g.theta1);
    g.l = pow(p.lambda, T(-g.n) + T(0.1));

    ManifoldPair<T> mp = manifold_pair(p);
    // Splitting scale: the lobe area over its parameter length.
    const T scale = rep.lobe_area / p.h;

    // Normal form: the smallest order whose residual on the window is small
    // against the splitting scale.
    bool found = false;
    for (int M = cfg.min_order; M <= cfg.max_order; ++M) {
        NormalForm<T> nf = birkhoff_normalize(p, M);
        T res = conjugacy_residual(nf, g.window);
        if (res < T(cfg.residual_fraction) * scale) {
            g.nf = nf;
            g.jet_order = M;
            g.conjugacy_residual = res;
            found = true;
            break;
        }
    }
    if (!found)
        throw PrecisionError("build_geometry: normal-form residual on |z| <= " + std::to_string(cfg.window) +
                                 " not below " + std::to_string(cfg.residual_fraction) +
                                 " of the splitting scale up to M = " + std::to_string(cfg.max_order),
                             2 * significand_bits<T>());

    // Anchor candidates: the primary intersection and its neighbour carry
    // the two homoclinic orbits of the fundamental domain.
    const auto& X = rep.intersections;
    if (rep.primary < 0 || rep.primary + 1 >= int(X.size()))
        throw StageError("horseshoe", "splitting report has no primary intersection pair");
    bool chosen = false;
    for (int idx : {rep.primary, rep.primary + 1}) {
        T tu = X[idx].t_u, ts = X[idx].t_s;
        int mu_ = 0, ms = 0;
        Vec2<T> qu = mp.U.eval_t(tu), qs = mp.S.eval_t(ts);
        while (norm(qu) > g.window) { tu -= p.h; qu = mp.U.eval_t(tu); if (++mu_ > 200) break; }
        while (norm(qs) > g.window) { ts -= p.h; qs = mp.S.eval_t(ts); if (++ms > 200) break; }
        if (mu_ > 200 || ms > 200)
            throw StageError("horseshoe", "homoclinic excursion never enters the window |z| <= " +
                                              std::to_string(cfg.window));
        g.transit_count = mu_ + ms;
        Vec2<T> nu_ = g.nf.change.forward(qu), ns = g.nf.change.forward(qs);
        g.alpha = nu_.x;
        g.beta = ns.y;
        if (!(g.alpha > T(0)) || !(g.beta > T(0))) continue;
        // Refine the anchors of the model itself: Gl(x*, 0) on the y-axis.
        using D1 = Dual<T, 1>;
        T xs = detail::solve_component<T>([&](const D1& x) { return g.global(Vec2<D1>{x, D1(T(0))}).x; },
                                          T(nu_.x / g.alpha), T(0.05));
        T ys = g.global(Vec2<T>{xs, T(0)}).y;
        g.alpha *= xs;
        g.beta *= ys;
        // Orientation: Gl must carry +x to +X at the anchor.
        Mat2<T> J = jacobian<T>([&](const auto& q) { return g.global(q); }, Vec2<T>{T(1), T(0)});
        if (!(J.a > T(0))) continue;
        g.qu_ambient = qu;
        g.qs_ambient = qs;
        g.qu_normal = {T(1), T(0)};
        g.qs_normal = g.global(Vec2<T>{T(1), T(0)});
        g.intersection_index = idx;
        chosen = true;
        break;
    }
    if (!chosen) throw StageError("horseshoe", "no homoclinic orbit with positive orientation near the primary point");

    // Boundaries, built in renormalized coordinates and pulled back by rho.
    const int m = cfg.boundary_samples;
    std::vector<Vec2<T>> s0t, s1t;
    for (int i = 0; i < m; ++i) s0t.push_back({T(0), g.tau_plus * T(i) / T(m - 1)});
    for (int i = 0; i < m; ++i) {
        T y = g.tau_plus * T(m - 1 - i) / T(m - 1);
        s0t.push_back({s0_edge(g, y, g.tau_plus), y});
    }
    std::vector<T> left(m), right(m);
    T guess(1);
    for (int i = 0; i < m; ++i) {
        T y = g.tau_plus * T(i) / T(m - 1);
        left[i] = guess = s1_edge(g, y, T(0), guess);
        right[i] = s1_edge(g, y, g.tau_plus, left[i]);
    }
    for (int i = 0; i < m; ++i) s1t.push_back({left[i], g.tau_plus * T(i) / T(m - 1)});
    for (int i = m - 1; i >= 0; --i) s1t.push_back({right[i], g.tau_plus * T(i) / T(m - 1)});
    T s0_right = T(0), s1_left = left[0];
    for (const auto& q : s0t) s0_right = std::max(s0_right, q.x);
    for (T v : left) s1_left = std::min(s1_left, v);
    g.gap_renormalized = s1_left - s0_right;
    if (!(g.gap_renormalized > T(0))) throw StageError("horseshoe", "rectangles S0 and S1 overlap");
    for (const auto& q : s0t) g.S0.push_back(g.rho_inv(q));
    for (const auto& q : s1t) g.S1.push_back(g.rho_inv(q));
    return g;
}

template <typename T>
ReturnMapGeometry<T> build_geometry(const T& h, const HorseshoeConfig& cfg = {}) {
    RescaledParams<T> p = RescaledParams<T>::from_h(h);
    return build_geometry(p, measure_splitting<T>(p), cfg);
}

// First-return map in scaled normal-form coordinates: N on S0 and
// N^n o Gl o N^n on S1.
template <typename T>
Vec2<T> first_return(const ReturnMapGeometry<T>& g, const Vec2<T>& q) {
    Vec2<T> r = g.rho(q);
    if (g.in_S0_tilde(r)) {
        Vec2<T> u = normal_apply(g.nf.series, Vec2<T>{q.x * g.alpha, q.y * g.beta});
        return {u.x / g.alpha, u.y / g.beta};
    }
    if (g.in_S1_tilde(r)) return g.N_pow(g.global(g.N_pow(q, g.n)), g.n);
    throw InputError("first_return: point outside S0 and S1");
}

// Which renormalized rectangle holds p: 0, 1, or -1.
template <typename T>
int branch_of(const ReturnMapGeometry<T>& g, const Vec2<T>& p) {
    if (g.in_S0_tilde(p)) return 0;
    if (g.in_S1_tilde(p)) return 1;
    return -1;
}

// ---------------------------------------------------------------------------
// Cones on the renormalized rectangles.

template <typename T>
ConeSamples cone_samples(const ReturnMapGeometry<T>& g, int grid) {
    if (grid < 20) throw InputError("verify_cones: grid must be at least 20");
    ConeSamples cs;
    cs.lambda = to_double(g.lambda);
    cs.grid = grid;
    T guess(1);
    for (int j = 0; j < grid; ++j) {
        T y = g.tau_plus * T(j) / T(grid - 1);
        T xr0 = s0_edge(g, y, g.tau_plus);
        T xl = guess = s1_edge(g, y, T(0), guess), xr = s1_edge(g, y, g.tau_plus, xl);
        for (int i = 0; i < grid; ++i) {
            T u = T(i) / T(grid - 1);
            Mat2<T> A = branch_jacobian(g, 0, Vec2<T>{xr0 * u, y});
            Mat2<T> B = branch_jacobian(g, 1, Vec2<T>{xl + (xr - xl) * u, y});
            cs.s0.push_back({to_double(A.a), to_double(A.b), to_double(A.c), to_double(A.d)});
            cs.s1.push_back({to_double(B.a), to_double(B.b), to_double(B.c), to_double(B.d)});
        }
    }
    return cs;
}

template <typename T>
ConeReport verify_cones(const ReturnMapGeometry<T>& g, const ConeFieldSpec& spec, int grid = 33) {
    return scan_cones(cone_samples(g, grid), spec);
}

// ---------------------------------------------------------------------------
// Fixed point Q of T1~, its local manifolds, and the Markov partitions.

template <typename T = double>
struct PartitionGeometry {
    T lambda{};
    T x_s{}, y_u{};
    Vec2<T> Q;
    T eig_u{}, eig_s{}, trace{};
    int newton_iterations = 0;
    // [0, x_s / lambda] and [1, x_s]; likewise for y_u.
    Interval stable[2], unstable[2];
    double tauL_s = 0, tauR_s = 0, tauL_u = 0, tauR_u = 0;
};

namespace detail {
// Largest Jacobian entry of T1~ at p, the amplification of rounding there.
template <typename T>
T t1_scale(const ReturnMapGeometry<T>& g, const Vec2<T>& p) {
    using std::abs;
    Mat2<T> J = branch_jacobian(g, 1, p);
    return std::max({abs(J.a), abs(J.b), abs(J.c), abs(J.d)});
}
}  // namespace detail

template <typename T>
Vec2<T> fixed_point_T1(const ReturnMapGeometry<T>& g, int* iterations = nullptr) {
    using std::abs;
    T y0(1);
    T x0 = (s1_edge(g, y0, T(0)) + s1_edge(g, y0, g.tau_plus)) / T(2);
    Vec2<T> p{x0, y0};
    using D = Dual<T, 2>;
    std::string trace;
    // Keep the iterate with the smallest residual; past the rounding floor
    // of the return branch further steps only wander.
    Vec2<T> best = p;
    T best_res = std::numeric_limits<T>::infinity();
    int since_best = 0;
    for (int it = 0; it < 60; ++it) {
        Vec2<D> r = g.T1(Vec2<D>{D::variable(p.x, 0), D::variable(p.y, 1)});
        Mat2<T> A{r.x.g[0] - T(1), r.x.g[1], r.y.g[0], r.y.g[1] - T(1)};
        Vec2<T> F{r.x.v - p.x, r.y.v - p.y};
        const T res = norm(F);
        trace += " " + std::to_string(to_double(res));
        if (res < best_res) {
            best_res = res;
            best = p;
            since_best = 0;
        } else if (++since_best >= 3) {
            break;
        }
        if (res == T(0)) break;
        Vec2<T> step = A.inverse() * F;
        p = p - step;
        if (norm(step) <= T(4) * std::numeric_limits<T>::epsilon() * norm(p)) {
            best = p;
            best_res = T(0);
            break;
        }
        if (iterations) *iterations = it + 1;
    }
    // Accept when Q is pinned to within 1e-10 in the contracting variable.
    if (best_res < T(1e-10) * T(1e3) * detail::t1_scale(g, best) || best_res == T(0)) return best;
    throw StageError("partition", "Newton for the fixed point of T1 did not converge; residuals" + trace);
}

namespace detail {

// Local stable curve of Q (inverse = false) as x at height `level`, or
// local unstable curve as y at abscissa `level` (inverse = true): a
// vertical (horizontal) line through Q is pulled back `depth` times through
// T1~ (T1~^-1), each pull-back contracting the error by the expansion.
template <typename T>
T invariant_leaf(const ReturnMapGeometry<T>& g, const Vec2<T>& Q, const T& level, int depth, bool inverse) {
    using std::abs;
    using D1 = Dual<T, 1>;
    const T base = inverse ? Q.y : Q.x;
    if (depth == 0) return base;
    T c = base;
    for (int it = 0; it < 60; ++it) {
        Vec2<D1> p = inverse ? Vec2<D1>{D1(level), D1(c, {T(1)})} : Vec2<D1>{D1(c, {T(1)}), D1(level)};
        Vec2<D1> r = inverse ? g.T1_inv(p) : g.T1(p);
        const D1& moving = inverse ? r.y : r.x;
        const T other = inverse ? r.x.v : r.y.v;
        T target = invariant_leaf(g, Q, other, depth - 1, inverse);
        T step = (moving.v - target) / moving.g[0];
        c -= step;
        if (abs(step) <= T(8) * std::numeric_limits<T>::epsilon() * abs(c)) break;
    }
    return c;
}

}  // namespace detail

template <typename T>
PartitionGeometry<T> partition_geometry(const ReturnMapGeometry<T>& g, int leaf_depth = 3) {
    using std::abs;
    PartitionGeometry<T> P;
    P.lambda = g.lambda;
    P.Q = fixed_point_T1(g, &P.newton_iterations);
    Mat2<T> A = branch_jacobian(g, 1, P.Q);
    P.trace = A.trace();
    Eigen2<T> e = eigen_real(A);
    P.eig_u = e.l1;
    P.eig_s = e.l2;
    if (!(P.eig_u > T(0)) || !(P.eig_s > T(0)))
        throw StageError("partition", "fixed point of T1 does not have positive eigenvalues");
    P.x_s = detail::invariant_leaf(g, P.Q, T(0), leaf_depth, false);
    P.y_u = detail::invariant_leaf(g, P.Q, T(0), leaf_depth, true);
    const double lam = to_double(g.lambda), xs = to_double(P.x_s), yu = to_double(P.y_u);
    P.stable[0] = {0, xs / lam};
    P.stable[1] = {1, xs};
    P.unstable[0] = {0, yu / lam};
    P.unstable[1] = {1, yu};
    P.tauL_s = (xs / lam) / (1 - xs / lam);
    P.tauR_s = (xs - 1) / (1 - xs / lam);
    P.tauL_u = (yu / lam) / (1 - yu / lam);
    P.tauR_u = (yu - 1) / (1 - yu / lam);
    return P;
}

// Markov partition thicknesses from heteroclinic coordinates, valid for
// any model whose partitions are {[0, c / lambda], [1, c]}.
inline std::pair<double, double> markov_thickness(double c, double lambda) {
    double l = c / lambda;
    if (!(l > 0 && l < 1 && c > 1)) throw InputError("markov_thickness: need 0 < c / lambda < 1 < c");
    return {l / (1 - l), (c - 1) / (1 - l)};
}

// ---------------------------------------------------------------------------
// Periodic orbits of the renormalized map by multiple shooting.

template <typename T = double>
struct ShootingResult {
    std::vector<int> symbols;
    std::vector<Vec2<T>> points;  // renormalized coordinates, points[i] in S_{symbols[i]}~
    T residual{};                 // max |T~(p_i) - p_{i+1}|
    int newton_iterations = 0;
};

// Alternating sweeps give the initial guess: x is solved backwards (the
// contracting direction of the inverse), y is pushed forwards. Newton on
// the cyclic system with a dense Eigen solve then polishes it.
template <typename T>
ShootingResult<T> periodic_orbit(const ReturnMapGeometry<T>& g, const PartitionGeometry<T>& P,
                                 const std::vector<int>& symbols, int sweeps = 6) {
    const int m = int(symbols.size());
    if (m < 1) throw InputError("periodic_orbit: empty symbol sequence");
    for (int s : symbols)
        if (s != 0 && s != 1) throw InputError("periodic_orbit: symbols must be 0 or 1");
    std::vector<T> x(m, T(0.5)), y(m, T(0.5));
    for (int sw = 0; sw < sweeps; ++sw) {
        for (int pass = 0; pass < 2; ++pass)
            for (int i = m - 1; i >= 0; --i) {
                const T target = x[(i + 1) % m];
                x[i] = symbols[i] == 0 ? s0_edge(g, y[i], target) : s1_edge(g, y[i], target);
            }
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i < m; ++i) y[(i + 1) % m] = g.branch(symbols[i], Vec2<T>{x[i], y[i]}).y;
    }
    ShootingResult<T> out;
    out.symbols = symbols;
    for (int i = 0; i < m; ++i) out.points.push_back({x[i], y[i]});

    using D = Dual<T, 2>;
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1>;
    auto residual = [&](std::vector<Vec2<T>>& pts, Mat* J) {
        Vec F(2 * m);
        if (J) J->setZero(2 * m, 2 * m);
        for (int i = 0; i < m; ++i) {
            const int j = (i + 1) % m;
            Vec2<D> r = g.branch(symbols[i], Vec2<D>{D::variable(pts[i].x, 0), D::variable(pts[i].y, 1)});
            F(2 * i) = to_double(T(r.x.v - pts[j].x));
            F(2 * i + 1) = to_double(T(r.y.v - pts[j].y));
            if (J) {
                (*J)(2 * i, 2 * i) = to_double(r.x.g[0]);
                (*J)(2 * i, 2 * i + 1) = to_double(r.x.g[1]);
                (*J)(2 * i + 1, 2 * i) = to_double(r.y.g[0]);
                (*J)(2 * i + 1, 2 * i + 1) = to_double(r.y.g[1]);
                (*J)(2 * i, 2 * j) -= 1;
                (*J)(2 * i + 1, 2 * j + 1) -= 1;
            }
        }
        return F;
    };
    Mat J;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 20; ++it) {
        Vec F = residual(out.points, &J);
        double r = F.template lpNorm<Eigen::Infinity>();
        out.residual = T(r);
        out.newton_iterations = it;
        if (r == 0 || r > prev / 2) break;
        prev = r;
        Vec dx = J.partialPivLu().solve(F);
        std::vector<Vec2<T>> trial = out.points;
        for (int i = 0; i < m; ++i) trial[i] = trial[i] - Vec2<T>{T(dx(2 * i)), T(dx(2 * i + 1))};
        Vec Ft = residual(trial, nullptr);
        if (!(Ft.template lpNorm<Eigen::Infinity>() < r)) break;
        out.points = trial;
    }
    out.residual = T(residual(out.points, nullptr).template lpNorm<Eigen::Infinity>());
    for (int i = 0; i < m; ++i)
        if (branch_of(g, out.points[i]) != symbols[i])
            throw StageError("horseshoe", "shooting orbit left its rectangle at index " + std::to_string(i));
    (void)P;
    return out;
}

// ---------------------------------------------------------------------------
// Depth-measured thickness of the factor Cantor sets.
//
// K^s lies on the x-axis of the renormalized chart, with inverse branches
// phi0(x) = x / lambda (T0~ preserves the axis) and phi1(x') = the point x of
// [1, x_s] whose image under T1~ lies on the stable leaf of (x', 0). To find
// it, the leaf is followed up to the height where the inverse branch
// T1~^-1 lands on the axis; T1~^-1 contracts horizontally by 1/a, so the leaf
// only has to be known roughly, and a one-step pull-back of the vertical
// line gives it. K^u is the same construction for the inverse map with the
// axes swapped.

template <typename T>
struct SwappedInverse {
    const ReturnMapGeometry<T>* g;
    template <typename S>
    Vec2<S> branch(int b, const Vec2<S>& p) const {
        Vec2<S> q = g->branch_inv(b, Vec2<S>{p.y, p.x});
        return {q.y, q.x};
    }
    template <typename S>
    Vec2<S> branch_inv(int b, const Vec2<S>& p) const {
        Vec2<S> q = g->branch(b, Vec2<S>{p.y, p.x});
        return {q.y, q.x};
    }
};

template <typename T>
struct ForwardModel {
    const ReturnMapGeometry<T>* g;
    template <typename S>
    Vec2<S> branch(int b, const Vec2<S>& p) const { return g->branch(b, p); }
    template <typename S>
    Vec2<S> branch_inv(int b, const Vec2<S>& p) const { return g->branch_inv(b, p); }
};

template <typename T>
struct FactorThickness {
    T tau_L{}, tau_R{};
    int depth = 0;
    int gaps_used = 0, gaps_unresolved = 0;
};

namespace detail {

// x at height y on the leaf through (x0, 0), from one pull-back: the point
// with the same abscissa as (x0, 0) after one step of branch b.
template <typename T, typename Model>
T leaf_at(const Model& m, int b, const T& x0, const T& y) {
    using D1 = Dual<T, 1>;
    const T target = m.branch(b, Vec2<T>{x0, T(0)}).x;
    return solve_component<T>([&](const D1& x) { return m.branch(b, Vec2<D1>{x, D1(y)}).x - target; }, x0,
                              T(1e-3));
}

template <typename T, typename Model>
T factor_phi1(const Model& m, const T& xp, const T& c, const T& lambda) {
    using std::abs;
    using D1 = Dual<T, 1>;
    const T split = (c / lambda + T(1)) / T(2);
    const int b = xp < split ? 0 : 1;
    // Height where the leaf, pushed back through T1~^-1, meets the axis.
    const T x_aff = T(1) + (c - T(1)) * xp / c;
    T y = m.branch(1, Vec2<T>{x_aff, T(0)}).y;
    for (int it = 0; it < 60; ++it) {
        // d(leaf)/dy is tiny next to the vertical expansion of T1~^-1, so the
        // derivative is taken along the frozen leaf abscissa.
        const T lx = leaf_at(m, b, xp, y);
        Vec2<D1> r = m.branch_inv(1, Vec2<D1>{D1(lx), D1(y, {T(1)})});
        T step = r.y.v / r.y.g[0];
        y -= step;
        if (abs(step) <= T(64) * std::numeric_limits<T>::epsilon() * abs(y)) break;
    }
    return m.branch_inv(1, Vec2<T>{leaf_at(m, b, xp, y), y}).x;
}

}  // namespace detail

// Lateral thickness of the factor Cantor set of `m`, whose partition is
// {[0, c / lambda], [1, c]}, from cylinders up to `depth`. Gaps shorter
// than `resolution` times the hull length, or with such a bridge, are
// counted but not used.
template <typename T, typename Model>
FactorThickness<T> factor_thickness(const Model& m, const T& c, const T& lambda, int depth, const T& resolution) {
    if (depth < 1 || depth > 16) throw InputError("factor_thickness: depth must lie in [1, 16]");
    struct Iv {
        T lo, hi;
    };
    auto phi = [&](int a, const T& x) { return a == 0 ? T(x / lambda) : detail::factor_phi1(m, x, c, lambda); };
    // level[k][code]: cylinder of the word whose symbol i is bit i of code.
    std::vector<std::vector<Iv>> level(depth + 1);
    level[0] = {{T(0), c}};
    for (int k = 1; k <= depth; ++k) {
        level[k].resize(std::size_t(1) << k);
        for (std::size_t w = 0; w < level[k - 1].size(); ++w)
            for (int a = 0; a < 2; ++a) {
                const Iv& I = level[k - 1][w];
                level[k][(w << 1) | std::size_t(a)] = {phi(a, I.lo), phi(a, I.hi)};
            }
    }
    FactorThickness<T> r;
    r.depth = depth;
    r.tau_L = r.tau_R = std::numeric_limits<T>::infinity();
    for (int k = 0; k < depth; ++k)
        for (std::size_t w = 0; w < level[k].size(); ++w) {
            const Iv& L = level[k + 1][w | (std::size_t(0) << k)];
            const Iv& R = level[k + 1][w | (std::size_t(1) << k)];
            const T gap = R.lo - L.hi, lL = L.hi - L.lo, lR = R.hi - R.lo;
            const T floor = resolution * c;
            if (!(gap > floor && lL > floor && lR > floor)) {
                ++r.gaps_unresolved;
                continue;
            }
            ++r.gaps_used;
            r.tau_L = std::min(r.tau_L, T(lL / gap));
            r.tau_R = std::min(r.tau_R, T(lR / gap));
        }
    return r;
}

// ---------------------------------------------------------------------------
// Dimension assembly.

struct FactorBound {
    double tau_L = 0, tau_R = 0;              // partition thickness
    std::pair<double, double> interval_L, interval_R;  // e^{-+D} bands
    double d = 0, d_log = 0;
};

struct DimensionPipelineResult {
    double h = 0, nu = 0, theta1 = 0;
    int n = 0, transit_count = 0, jet_order = 0;
    double x_s = 0, y_u = 0;
    ClassFParams params;
    double D = 0;
    bool class_f_pass = false;
    ConeReport cones;
    FactorBound stable, unstable;
    double d_s = 0, d_u = 0, total = 0, total_log = 0;
    int grid = 0, precision_bits = 53;
    double log_a_variation = 0;  // on S1
};

// Lower bound from two partition thicknesses and a distortion bound.
inline FactorBound factor_bound(double tau_L, double tau_R, double D) {
    FactorBound f;
    f.tau_L = tau_L;
    f.tau_R = tau_R;
    f.interval_L = thickness_interval(tau_L, D);
    f.interval_R = thickness_interval(tau_R, D);
    f.d = dimension_lower_bound_exact(f.interval_L.first, f.interval_R.first).d;
    f.d_log = dimension_lower_bound_log(f.interval_L.first, f.interval_R.first).d;
    return f;
}

inline void assemble(DimensionPipelineResult& r) {
    r.stable = factor_bound(r.stable.tau_L, r.stable.tau_R, r.D);
    r.unstable = factor_bound(r.unstable.tau_L, r.unstable.tau_R, r.D);
    r.d_s = r.stable.d;
    r.d_u = r.unstable.d;
    r.total = r.d_s + r.d_u;
    r.total_log = r.stable.d_log + r.unstable.d_log;
}

// ---------------------------------------------------------------------------
// Synthetic affine horseshoe: f0 = (x / r0, r0 y) on [0, r0] x [0, 1] and
// f1 = ((x - 1 + r1) / r1, 1 - r1 + r1 y) on [1 - r1, 1] x [0, 1], with
// r_i = tau_i / (1 + tau_L + tau_R). Both factor Cantor sets then have
// partition thickness (tau_L, tau_R) and zero distortion.
struct AffineHorseshoe {
    double r0 = 0, r1 = 0;

    static AffineHorseshoe from_thickness(double tau_L, double tau_R) {
        if (!(tau_L > 0 && tau_R > 0)) throw InputError("affine horseshoe: thickness must be positive");
        double g = 1 / (1 + tau_L + tau_R);
        return {tau_L * g, tau_R * g};
    }
    Vec2<double> apply(int b, const Vec2<double>& p) const {
        return b == 0 ? Vec2<double>{p.x / r0, r0 * p.y} : Vec2<double>{(p.x - 1 + r1) / r1, 1 - r1 + r1 * p.y};
    }
    Region rect(int b) const {
        double lo = b == 0 ? 0 : 1 - r1, w = b == 0 ? r0 : r1;
        // Kept inside the unit square with a small inset so diam <= 1.
        return {[lo, w](double u, double v) { return Vec2<double>{(lo + w * u) * 0.7, 0.7 * v}; }};
    }
    // The map conjugated by the homothety of ratio 0.7 used in rect().
    BranchSampler sampler() const {
        return [*this](int b, const Vec2<double>& q) {
            JetSample s;
            s.p = q;
            Vec2<double> p = q / 0.7;
            s.fp = apply(b, p) * 0.7;
            double a = b == 0 ? 1 / r0 : 1 / r1, d = b == 0 ? r0 : r1;
            s.J = {a, 0, 0, d};
            return s;
        };
    }
    CantorSystem factor() const { return affine_system(r0, r1); }
};

inline DimensionPipelineResult synthetic_pipeline(double tau_L, double tau_R, int grid = 33) {
    AffineHorseshoe m = AffineHorseshoe::from_thickness(tau_L, tau_R);
    ClassFSamples S = sample_class_f(m.sampler(), m.rect(0), m.rect(1), grid);
    DimensionPipelineResult r;
    r.params = fit_classF_params(S);
    r.class_f_pass = classF_evaluate(S, r.params).pass();
    r.D = distortion_bound(r.params);
    r.stable.tau_L = r.unstable.tau_L = tau_L;
    r.stable.tau_R = r.unstable.tau_R = tau_R;
    assemble(r);
    return r;
}

// ---------------------------------------------------------------------------
// The h pipeline.

namespace detail {

// Markov rectangles bold-S0 and bold-S1 in renormalized coordinates:
// rows y in [0, y_u]; S0 rows end where T0~ reaches x_s, S1 rows run
// between the preimages of x = 0 and x = x_s under T1~.
template <typename T>
Region markov_region(const ReturnMapGeometry<T>& g, const PartitionGeometry<T>& P, int b, double sigma) {
    return {[&g, &P, b, sigma](double u, double v) {
        T y = T(v) * P.y_u;
        T x;
        if (b == 0) {
            x = T(u) * s0_edge(g, y, P.x_s);
        } else {
            T xl = s1_edge(g, y, T(0)), xr = s1_edge(g, y, P.x_s, xl);
            x = xl + (xr - xl) * T(u);
        }
        return Vec2<double>{sigma * to_double(x), sigma * to_double(y)};
    }};
}

}  // namespace detail

template <typename T>
struct HorseshoeRun {
    ReturnMapGeometry<T> geometry;
    PartitionGeometry<T> partition;
    ClassFReport class_f;
    DimensionPipelineResult result;
    double sigma = 1;  // homothety applied for condition (1)
};

template <typename T>
HorseshoeRun<T> run_horseshoe(const ReturnMapGeometry<T>& g, const HorseshoeConfig& cfg = {}) {
    HorseshoeRun<T> run;
    run.geometry = g;
    const auto& G = run.geometry;
    run.partition = partition_geometry(G);
    const auto& P = run.partition;

    DimensionPipelineResult& r = run.result;
    r.h = to_double(G.h);
    r.nu = to_double(G.nu);
    r.theta1 = to_double(G.theta1);
    r.n = G.n;
    r.transit_count = G.transit_count;
    r.jet_order = G.jet_order;
    r.x_s = to_double(P.x_s);
    r.y_u = to_double(P.y_u);
    const double kappa = std::pow(r.h, -1 - r.nu);
    r.cones = verify_cones(G, {kappa}, std::max(cfg.grid, 20));

    // Homothety so that both the rectangles and their images fit in a unit
    // diameter; Df is unchanged, its partials scale by 1 / sigma.
    const double ext = std::hypot(std::max(r.x_s, r.y_u), std::max(r.x_s, r.y_u));
    run.sigma = 0.99 / ext;
    const double sigma = run.sigma;
    BranchSampler f = [&G, sigma](int b, const Vec2<double>& q) {
        JetSample s = branch_jet(G, b, Vec2<T>{T(q.x / sigma), T(q.y / sigma)});
        s.p = q;
        s.fp = s.fp * sigma;
        s.Jx = (1 / sigma) * s.Jx;
        s.Jy = (1 / sigma) * s.Jy;
        return s;
    };
    const Region R0 = detail::markov_region(G, P, 0, sigma), R1 = detail::markov_region(G, P, 1, sigma);
    // Fitted parameters are the worst margins; refine until they settle.
    int grid = cfg.grid;
    ClassFSamples S = sample_class_f(f, R0, R1, grid);
    r.params = fit_classF_params(S);
    while (2 * grid - 1 <= cfg.max_grid) {
        ClassFSamples S2 = sample_class_f(f, R0, R1, 2 * grid - 1);
        ClassFParams p2 = fit_classF_params(S2);
        auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); };
        const double change = std::max({rel(p2.C_star, r.params.C_star), rel(p2.eps, r.params.eps),
                                        rel(p2.gamma, r.params.gamma)});
        grid = 2 * grid - 1;
        S = std::move(S2);
        r.params = p2;
        if (change < cfg.grid_tolerance) break;
    }
    r.grid = grid;
    r.precision_bits = significand_bits<T>();
    run.class_f = classF_evaluate(S, r.params, 1e-3);
    r.class_f_pass = run.class_f.pass();
    r.log_a_variation = run.class_f.log_a_variation[1];
    r.D = distortion_bound(r.params);
    r.stable.tau_L = P.tauL_s;
    r.stable.tau_R = P.tauR_s;
    r.unstable.tau_L = P.tauL_u;
    r.unstable.tau_R = P.tauR_u;
    assemble(r);
    return run;
}

// Native doubles for h >= 0.7, 128-bit significands below, refused under
// 0.35 (by the splitting stage).
inline DimensionPipelineResult dimension_pipeline(double h, const HorseshoeConfig& cfg = {}) {
    if (required_precision_bits(h) == 53) return run_horseshoe(build_geometry<double>(h, cfg), cfg).result;
    return run_horseshoe(build_geometry<ext128>(h, cfg), cfg).result;
}

}  // namespace ssea
