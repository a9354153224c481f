#pragma once

// Truncated Birkhoff normal form of the near-identity family at its saddle.
//
// Coordinates: z (ambient), w = E^-1 z (eigenframe, E has the unit
// unstable and stable eigenvectors as columns), and the normal-form
// coordinates (u, v) = C(w). The change satisfies
//   C o Fhat = N o C  up to total degree D = 2M + 1,
// with Fhat = E^-1 o F o E and N(u, v) = (alpha(uv) u, beta(uv) v).
// The coefficients of alpha are those of Delta; beta agrees with 1 / alpha
// to order M, and normal_apply uses 1 / Delta exactly.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "core/dual.hpp"
#include "core/errors.hpp"
#include "core/poly2.hpp"
#include "core/vec2.hpp"
#include "maps.hpp"

namespace ssea {

template <typename T = double>
struct NormalFormSeries {
    T h{}, lambda{};
    int M = 0;
    std::vector<T> coeffs;  // Delta(s) = coeffs[0] + coeffs[1] s + ... ; coeffs[0] = lambda
    std::vector<T> beta;    // second diagonal factor as computed (check only)
    T s0 = T(0.05);         // working radius in s

    // Horner evaluation; S may be a dual or jet type.
    template <typename S>
    S eval(const S& s) const {
        S r = s * T(0) + coeffs.back();
        for (int i = int(coeffs.size()) - 2; i >= 0; --i) r = r * s + coeffs[i];
        return r;
    }
    T deriv(const T& s, int order) const {
        if (order < 1 || order > 2) throw std::invalid_argument("deriv: order must be 1 or 2");
        T r(0);
        for (int i = int(coeffs.size()) - 1; i >= order; --i) {
            T f = order == 1 ? T(i) : T(i) * T(i - 1);
            r = r * s + f * coeffs[i];
        }
        return r;
    }
    bool extrapolating(const T& s) const {
        using std::abs;
        return abs(s) > s0;
    }
};

template <typename T = double>
struct DeltaValue {
    T value{};
    bool extrapolated = false;
};

template <typename T>
DeltaValue<T> delta_eval(const NormalFormSeries<T>& nf, const T& s) {
    return {nf.eval(s), nf.extrapolating(s)};
}
template <typename T>
DeltaValue<T> delta_deriv(const NormalFormSeries<T>& nf, const T& s, int order) {
    return {nf.deriv(s, order), nf.extrapolating(s)};
}

// N(u, v) = (Delta(uv) u, v / Delta(uv)); uv is invariant by construction.
template <typename T, typename S>
Vec2<S> normal_apply(const NormalFormSeries<T>& nf, const Vec2<S>& p) {
    S d = nf.eval(S(p.x * p.y));
    return {d * p.x, p.y / d};
}
template <typename T, typename S>
Vec2<S> normal_apply_inverse(const NormalFormSeries<T>& nf, const Vec2<S>& p) {
    S d = nf.eval(S(p.x * p.y));
    return {p.x / d, d * p.y};
}
// n-fold iterate; uv is constant along the orbit so Delta is evaluated once.
template <typename T, typename S>
Vec2<S> normal_apply_n(const NormalFormSeries<T>& nf, const Vec2<S>& p, long n) {
    S d = ipow(nf.eval(S(p.x * p.y)), n);
    return {d * p.x, p.y / d};
}

template <typename T = double>
struct NormalFormChange {
    int D = 1;
    Mat2<T> E, Einv;
    PolyMap2<T> C;     // eigenframe -> normal form
    PolyMap2<T> Cinv;  // series inverse to degree D
    T r = T(0.2);      // domain radius in z

    // C_h(z) = C(E^-1 z).
    template <typename S>
    Vec2<S> forward(const Vec2<S>& z) const {
        Vec2<S> w{Einv.a * z.x + Einv.b * z.y, Einv.c * z.x + Einv.d * z.y};
        return C(w);
    }

    // Series inverse followed by Newton on C(w) = p; S may carry
    // derivatives, which Newton propagates exactly.
    template <typename S>
    Vec2<S> inverse(const Vec2<S>& p, int newton_steps = 3) const {
        Vec2<S> w = Cinv(p);
        for (int it = 0; it < newton_steps; ++it) {
            Vec2<S> res = C(w) - p;
            S a = Cx_u.eval(w.x, w.y), b = Cx_v.eval(w.x, w.y);
            S c = Cy_u.eval(w.x, w.y), d = Cy_v.eval(w.x, w.y);
            S det = a * d - b * c;
            Vec2<S> step{(d * res.x - b * res.y) / det, (a * res.y - c * res.x) / det};
            w = w - step;
        }
        return {E.a * w.x + E.b * w.y, E.c * w.x + E.d * w.y};
    }

    void finalize() {
        Cx_u = C.x.du();
        Cx_v = C.x.dv();
        Cy_u = C.y.du();
        Cy_v = C.y.dv();
    }

    Poly2<T> Cx_u, Cx_v, Cy_u, Cy_v;
};

template <typename T = double>
struct NormalForm {
    NormalFormChange<T> change;
    NormalFormSeries<T> series;
    RescaledMap<T> map;
    PolyMap2<T> Fhat;  // map in the eigenframe, exact (quadratic)

    template <typename S>
    Vec2<S> to_normal(const Vec2<S>& z) const { return change.forward(z); }
    template <typename S>
    Vec2<S> from_normal(const Vec2<S>& p) const { return change.inverse(p); }
};

namespace detail {

// Series inverse of a near-identity polynomial map: X = I - (P - I) o X.
template <typename T>
PolyMap2<T> series_inverse(const PolyMap2<T>& P) {
    const int D = P.degree();
    PolyMap2<T> I = PolyMap2<T>::identity(D);
    PolyMap2<T> H{P.x - I.x, P.y - I.y};
    PolyMap2<T> X = I;
    for (int it = 0; it < D; ++it) {
        PolyMap2<T> HX = compose(H, X);
        X = {I.x - HX.x, I.y - HX.y};
    }
    return X;
}

}  // namespace detail

// Degree-by-degree normalization. The free resonant coefficients of C at
// degree 2k+1 (u(uv)^k in the first component, v(uv)^k in the second) are
// chosen equal and such that the (uv)^k coefficient of det DC vanishes.
template <typename T>
NormalForm<T> birkhoff_normalize(const RescaledParams<T>& p, int M) {
    using std::abs;
    if (M < 0) throw InputError("birkhoff_normalize: M must be non-negative");
    const int D = 2 * M + 1;
    if (D > 41) throw InputError("birkhoff_normalize: degree beyond series workspace");
    RescaledMap<T> F(p);
    SaddleData<T> sd = saddle_data<T>(F, {T(0), T(0)});
    const T lam = p.lambda, lam_inv = T(1) / p.lambda;

    NormalForm<T> out;
    out.map = F;
    auto& ch = out.change;
    ch.D = D;
    ch.E = Mat2<T>::columns(sd.v_u, sd.v_s);
    ch.Einv = ch.E.inverse();

    // Fhat = E^-1 F(E w) as an exact polynomial map (F is quadratic).
    PolyMap2<T> Ew{ch.E.a * Poly2<T>::u(D) + ch.E.b * Poly2<T>::v(D),
                   ch.E.c * Poly2<T>::u(D) + ch.E.d * Poly2<T>::v(D)};
    Vec2<Poly2<T>> FE = F(Vec2<Poly2<T>>{Ew.x, Ew.y});
    PolyMap2<T> Fhat{ch.Einv.a * FE.x + ch.Einv.b * FE.y, ch.Einv.c * FE.x + ch.Einv.d * FE.y};
    // The linear part is diagonal up to rounding; make it exact.
    Fhat.x(1, 0) = lam;
    Fhat.x(0, 1) = T(0);
    Fhat.y(1, 0) = T(0);
    Fhat.y(0, 1) = lam_inv;

    PolyMap2<T> C = PolyMap2<T>::identity(D);
    PolyMap2<T> N{lam * Poly2<T>::u(D), lam_inv * Poly2<T>::v(D)};
    std::vector<T> alpha(M + 1, T(0)), beta(M + 1, T(0));
    alpha[0] = lam;
    beta[0] = lam_inv;

    auto eig_pow = [&](int e) { return ipow(lam, long(e)); };
    for (int m = 2; m <= D; ++m) {
        PolyMap2<T> NC = compose(N, C), CF = compose(C, Fhat);
        for (int j = 0; j <= m; ++j) {
            const int i = m - j;
            const T mult = eig_pow(i - j);
            for (int comp = 0; comp < 2; ++comp) {
                const Poly2<T>& nc = comp == 0 ? NC.x : NC.y;
                const Poly2<T>& cf = comp == 0 ? CF.x : CF.y;
                T R = nc(i, j) - cf(i, j);
                bool resonant = comp == 0 ? (i - j == 1) : (i - j == -1);
                Poly2<T>& Cc = comp == 0 ? C.x : C.y;
                Poly2<T>& Nc = comp == 0 ? N.x : N.y;
                if (resonant) {
                    int k = comp == 0 ? j : i;  // monomial is u(uv)^k or v(uv)^k
                    (comp == 0 ? alpha : beta)[k] = -R;
                    Nc(i, j) = -R;
                } else {
                    T div = mult - (comp == 0 ? lam : lam_inv);
                    if (abs(div) < T(1e-10))
                        throw StageError("normalform", "near-resonant divisor at degree " + std::to_string(m));
                    Cc(i, j) = R / div;
                }
            }
        }
        if (m % 2 == 1) {
            const int k = (m - 1) / 2;
            Poly2<T> J = C.x.du() * C.y.dv() - C.x.dv() * C.y.du();
            T c = -J(k, k) / (T(2) * T(k + 1));
            C.x(k + 1, k) = c;
            C.y(k, k + 1) = c;
        }
    }

    out.Fhat = Fhat;
    ch.C = C;
    ch.Cinv = detail::series_inverse(C);
    ch.finalize();

    auto& se = out.series;
    se.h = p.h;
    se.lambda = lam;
    se.M = M;
    se.coeffs = alpha;
    se.coeffs[0] = lam;
    se.beta = beta;
    return out;
}

// max |C_h(F(z)) - N(C_h(z))| over n_samples points on |z| = r.
template <typename T>
T conjugacy_residual(const NormalForm<T>& nf, const T& r, int n_samples = 64) {
    using std::cos;
    using std::sin;
    T worst(0);
    for (int i = 0; i < n_samples; ++i) {
        T th = T(2) * pi_v<T>() * T(i) / T(n_samples);
        Vec2<T> z{r * cos(th), r * sin(th)};
        Vec2<T> a = nf.change.forward(nf.map(z));
        Vec2<T> b = normal_apply(nf.series, nf.change.forward(z));
        T e = norm(a - b);
        if (e > worst) worst = e;
    }
    return worst;
}

}  // namespace ssea
