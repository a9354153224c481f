#pragma once

// Experiments on the standard map f_k: orbit sampling on the torus,
// Lyapunov exponents by two independent estimators, periodic-orbit
// detection, covering-radius checks, box-count dimension of chaotic
// ensembles, and saddle manifolds on the universal cover.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cantor.hpp"
#include "core/errors.hpp"
#include "core/series1.hpp"
#include "core/stats.hpp"
#include "core/vec2.hpp"
#include "manifold.hpp"
#include "maps.hpp"

namespace ssea {

// Unit-interval variate built from the top 53 bits; mt19937_64 is fully
// specified, so this is reproducible bitwise on every platform.
inline double unit_variate(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1p-53; }

inline std::vector<Vec2<double>> seed_points(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Vec2<double>> s(n);
    for (auto& p : s) {
        p.x = unit_variate(rng);
        p.y = unit_variate(rng);
    }
    return s;
}

// Distance on the unit torus.
inline double torus_distance(const Vec2<double>& a, const Vec2<double>& b) {
    double dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y);
    dx = std::min(dx, 1.0 - dx);
    dy = std::min(dy, 1.0 - dy);
    return std::hypot(dx, dy);
}

// ---------------------------------------------------------------------------
// Orbits.

struct OrbitSample {
    double k = 0;
    Vec2<double> initial;
    std::size_t N = 0;       // iterates computed
    std::size_t stride = 1;  // points[i] is iterate i * stride
    std::uint64_t seed = 0;
    std::vector<Vec2<double>> points;
};

// Calls fn(i, p) for iterates 0..N-1 reduced into [0, 1)^2.
template <typename Fn>
void for_each_iterate(double k, Vec2<double> p, std::size_t N, Fn&& fn) {
    StandardMap<double> f{k};
    p = {mod1(p.x), mod1(p.y)};
    for (std::size_t i = 0; i < N; ++i) {
        fn(i, p);
        p = f.apply_mod1(p);
    }
}

inline OrbitSample sample_orbit(double k, const Vec2<double>& p0, std::size_t N, std::size_t stride = 1,
                                std::uint64_t seed = 0) {
    if (stride == 0) throw InputError("sample_orbit: stride must be positive");
    OrbitSample o;
    o.k = k;
    o.initial = p0;
    o.N = N;
    o.stride = stride;
    o.seed = seed;
    o.points.reserve(N / stride + 1);
    for_each_iterate(k, p0, N, [&](std::size_t i, const Vec2<double>& p) {
        if (i % stride == 0) o.points.push_back(p);
    });
    return o;
}

// Orbit from the seed-th random initial point.
inline OrbitSample sample_orbit_seeded(double k, std::uint64_t seed, std::size_t N, std::size_t stride = 1) {
    return sample_orbit(k, seed_points(1, seed)[0], N, stride, seed);
}

// Largest |det Df_k - 1| over the stored points.
inline double max_det_defect(const OrbitSample& o) {
    StandardMap<double> f{o.k};
    double worst = 0;
    for (const auto& p : o.points) worst = std::max(worst, std::abs(f.jacobian(p).det() - 1.0));
    return worst;
}

// ---------------------------------------------------------------------------
// Lyapunov exponents.

enum class LyapunovMethod { qr, two_orbit };

inline std::string to_string(LyapunovMethod m) { return m == LyapunovMethod::qr ? "qr" : "two-orbit"; }

struct LyapunovEstimate {
    double value = 0;  // nats per iterate
    std::size_t N = 0;
    LyapunovMethod method = LyapunovMethod::qr;
    double spread = 0;     // standard deviation over the seeds of an ensemble
    std::size_t seeds = 1;
    bool periodic = false;  // final point returns to itself within 8 iterates
};

namespace detail {

inline bool lands_on_periodic(double k, const Vec2<double>& p) {
    StandardMap<double> f{k};
    Vec2<double> q = p;
    for (int i = 1; i <= 8; ++i) {
        q = f.apply_mod1(q);
        if (torus_distance(p, q) < 1e-9) return true;
    }
    return false;
}

}  // namespace detail

// The QR estimator pushes one tangent vector through the Jacobian chain and
// renormalizes every `renorm` steps; the two-orbit estimator follows a
// companion orbit at distance d0 on the lift, rescaled back every step.
inline LyapunovEstimate lyapunov(double k, const Vec2<double>& p0, std::size_t N, LyapunovMethod method,
                                 int renorm = 8, double d0 = 1e-9) {
    if (N < 10000) throw InputError("lyapunov: need N >= 1e4");
    if (renorm < 1) throw InputError("lyapunov: renormalization interval must be positive");
    StandardMap<double> f{k};
    Vec2<double> p{mod1(p0.x), mod1(p0.y)};
    const Vec2<double> dir{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    double sum = 0;
    if (method == LyapunovMethod::qr) {
        Vec2<double> v = dir;
        for (std::size_t i = 0; i < N; ++i) {
            v = f.jacobian(p) * v;
            p = f.apply_mod1(p);
            if ((i + 1) % std::size_t(renorm) == 0 || i + 1 == N) {
                double n = norm(v);
                sum += std::log(n);
                v = v / n;
            }
        }
    } else {
        Vec2<double> q = p + dir * d0;
        for (std::size_t i = 0; i < N; ++i) {
            p = f(p);
            q = f(q);
            // Both orbits move by the same lattice vector.
            Vec2<double> shift{std::floor(p.x), std::floor(p.y)};
            p = p - shift;
            q = q - shift;
            Vec2<double> d = q - p;
            double n = norm(d);
            sum += std::log(n / d0);
            q = p + d * (d0 / n);
        }
    }
    LyapunovEstimate e;
    e.value = sum / double(N);
    e.N = N;
    e.method = method;
    e.periodic = detail::lands_on_periodic(k, p);
    return e;
}

// Ensemble over random seeds; seeds whose finite-time exponent after
// `filter_steps` is at most `filter` are dropped (filter < 0 keeps all).
struct LyapunovEnsemble {
    LyapunovEstimate summary;
    std::vector<Vec2<double>> seeds;  // kept seeds
    std::vector<double> values;
    std::size_t rejected = 0;
};

inline LyapunovEnsemble lyapunov_ensemble(double k, std::size_t n_seeds, std::uint64_t seed, std::size_t N,
                                          LyapunovMethod method, double filter = 0.1,
                                          std::size_t filter_steps = 10000) {
    LyapunovEnsemble out;
    for (const auto& s : seed_points(n_seeds, seed)) {
        if (filter >= 0 && lyapunov(k, s, filter_steps, LyapunovMethod::qr).value <= filter) {
            ++out.rejected;
            continue;
        }
        LyapunovEstimate e = lyapunov(k, s, N, method);
        out.seeds.push_back(s);
        out.values.push_back(e.value);
        out.summary.periodic = out.summary.periodic || e.periodic;
    }
    out.summary.N = N;
    out.summary.method = method;
    out.summary.seeds = out.values.size();
    if (!out.values.empty()) {
        double m = 0;
        for (double v : out.values) m += v;
        m /= double(out.values.size());
        double var = 0;
        for (double v : out.values) var += (v - m) * (v - m);
        out.summary.value = m;
        out.summary.spread = out.values.size() > 1 ? std::sqrt(var / double(out.values.size() - 1)) : 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Periodic orbits.

enum class OrbitClass { elliptic, hyperbolic, parabolic };

inline std::string to_string(OrbitClass c) {
    switch (c) {
    case OrbitClass::elliptic: return "elliptic";
    case OrbitClass::hyperbolic: return "hyperbolic";
    default: return "parabolic";
    }
}

inline OrbitClass classify_trace(double tr, double tol = 1e-9) {
    if (std::abs(tr) < 2.0 - tol) return OrbitClass::elliptic;
    if (std::abs(tr) > 2.0 + tol) return OrbitClass::hyperbolic;
    return OrbitClass::parabolic;
}

struct IslandRecord {
    double k = 0;
    int q = 1;
    Vec2<double> center;  // in [0, 1)^2
    double trace = 0;     // of Df_k^q at the center
    OrbitClass cls = OrbitClass::parabolic;
    double residual = 0;  // torus distance from f^q(center) to center
};

// Jacobian of f^q along the orbit of p, starting the product at p.
inline Mat2<double> orbit_jacobian(double k, Vec2<double> p, int q) {
    StandardMap<double> f{k};
    Mat2<double> J{1, 0, 0, 1};
    for (int i = 0; i < q; ++i) {
        J = f.jacobian(p) * J;
        p = f(p);
    }
    return J;
}

// Newton on f^q(p) - p - m = 0 in the lift, with the lattice vector m
// re-read from the current iterate by rounding.
inline std::optional<IslandRecord> find_periodic(double k, int q, const Vec2<double>& seed, int max_iter = 50) {
    if (q < 1) throw InputError("find_periodic: period must be at least 1");
    StandardMap<double> f{k};
    Vec2<double> p = seed;
    auto image = [&](Vec2<double> x) {
        for (int i = 0; i < q; ++i) x = f(x);
        return x;
    };
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        Vec2<double> g = image(p) - p;
        Vec2<double> m{std::round(g.x), std::round(g.y)};
        g = g - m;
        if (!(std::isfinite(g.x) && std::isfinite(g.y))) return std::nullopt;
        Mat2<double> A = orbit_jacobian(k, p, q) - Mat2<double>{1, 0, 0, 1};
        if (A.det() == 0) return std::nullopt;
        Vec2<double> d = A.inverse() * g;
        p = p - d;
        if (norm(d) < 1e-14 * (1 + norm(p))) {
            converged = true;
            break;
        }
    }
    if (!converged || !std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
    IslandRecord r;
    r.k = k;
    r.q = q;
    r.center = {mod1(p.x), mod1(p.y)};
    Vec2<double> back = r.center;
    for (int i = 0; i < q; ++i) back = f.apply_mod1(back);
    r.residual = torus_distance(back, r.center);
    if (r.residual > 1e-10) return std::nullopt;
    r.trace = orbit_jacobian(k, r.center, q).trace();
    r.cls = classify_trace(r.trace);
    return r;
}

// Traces of the q cyclic rotations of one Jacobian product along the
// orbit of p; equal up to rounding.
inline std::vector<double> cyclic_traces(double k, Vec2<double> p, int q) {
    StandardMap<double> f{k};
    std::vector<Mat2<double>> J;
    for (int i = 0; i < q; ++i) {
        J.push_back(f.jacobian(p));
        p = f(p);
    }
    std::vector<double> tr;
    for (int s = 0; s < q; ++s) {
        Mat2<double> M{1, 0, 0, 1};
        for (int i = 0; i < q; ++i) M = J[(s + i) % q] * M;
        tr.push_back(M.trace());
    }
    return tr;
}

// Minimal period of a point known to satisfy f^q(p) = p.
inline int minimal_period(double k, const Vec2<double>& p, int q, double tol = 1e-8) {
    StandardMap<double> f{k};
    Vec2<double> x = p;
    for (int i = 1; i <= q; ++i) {
        x = f.apply_mod1(x);
        if (torus_distance(x, p) < tol) return i;
    }
    return q;
}

// Newton from a grid x grid seed lattice; one record per orbit of minimal
// period q, ordered by the lattice scan.
inline std::vector<IslandRecord> find_islands(double k, int q, int grid = 16) {
    if (grid < 1) throw InputError("find_islands: grid must be positive");
    StandardMap<double> f{k};
    std::vector<IslandRecord> out;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            Vec2<double> s{(i + 0.5) / grid, (j + 0.5) / grid};
            auto r = find_periodic(k, q, s);
            if (!r || minimal_period(k, r->center, q) != q) continue;
            bool seen = false;
            for (const auto& o : out) {
                Vec2<double> x = o.center;
                for (int m = 0; m < q && !seen; ++m) {
                    if (torus_distance(x, r->center) < 1e-8) seen = true;
                    x = f.apply_mod1(x);
                }
            }
            if (!seen) out.push_back(*r);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Covering radius and dimension.

// Infinite at k = 0, where no density is claimed.
inline double delta_k(double k) {
    if (!(k >= 0)) throw InputError("delta_k: k must be non-negative");
    return k == 0 ? std::numeric_limits<double>::infinity() : 4.0 / std::cbrt(k);
}

inline double duarte_bound(double k) {
    if (!(k > 0)) throw InputError("duarte_bound: k must be positive");
    return 2.0 * std::log(2.0) / std::log(2.0 + 9.0 / std::cbrt(k));
}

struct DensityReport {
    double k = 0;
    double delta_target = 0;
    double achieved = 0;  // max over probes of the distance to the nearest orbit point
    std::size_t N = 0;
    int probes = 64;
    std::size_t second_pass_probes = 0;  // probes resolved by a full rescan
    bool pass = false;
};

// Covering radius of the first N iterates of p0 measured on a probes x
// probes grid at the lattice points (i, j) / probes. A first streaming pass
// updates only the 4 x 4 probes around each point, which is exact for every
// probe whose nearest point lies within one probe spacing; the remaining
// probes get a second pass over the regenerated orbit.
inline DensityReport density_check(double k, const Vec2<double>& p0, std::size_t N, int probes = 64) {
    if (probes < 2) throw InputError("density_check: need at least 2 probes per side");
    if (N == 0) throw InputError("density_check: empty orbit");
    const double h = 1.0 / probes;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> best(std::size_t(probes) * probes, inf);
    auto probe = [&](int i, int j) { return Vec2<double>{i * h, j * h}; };
    auto wrap = [&](int i) { return ((i % probes) + probes) % probes; };
    for_each_iterate(k, p0, N, [&](std::size_t, const Vec2<double>& p) {
        int ci = int(p.x * probes), cj = int(p.y * probes);
        for (int di = -1; di <= 2; ++di)
            for (int dj = -1; dj <= 2; ++dj) {
                int i = wrap(ci + di), j = wrap(cj + dj);
                double& b = best[std::size_t(i) * probes + j];
                b = std::min(b, torus_distance(p, probe(i, j)));
            }
    });
    std::vector<std::size_t> open;
    for (std::size_t n = 0; n < best.size(); ++n)
        if (!(best[n] <= h)) open.push_back(n);
    if (!open.empty()) {
        for_each_iterate(k, p0, N, [&](std::size_t, const Vec2<double>& p) {
            for (std::size_t n : open) {
                double& b = best[n];
                b = std::min(b, torus_distance(p, probe(int(n / probes), int(n % probes))));
            }
        });
    }
    DensityReport r;
    r.k = k;
    r.delta_target = delta_k(k);
    r.N = N;
    r.probes = probes;
    r.second_pass_probes = open.size();
    r.achieved = *std::max_element(best.begin(), best.end());
    r.pass = r.achieved <= r.delta_target;
    return r;
}

// Box-count dimension of the union of orbit point sets.
inline DimensionBound orbit_box_dimension(const std::vector<OrbitSample>& orbits, const std::vector<double>& scales) {
    std::vector<Vec2<double>> pts;
    for (const auto& o : orbits) pts.insert(pts.end(), o.points.begin(), o.points.end());
    return box_dimension(pts, scales);
}

struct ChaoticDimension {
    DimensionBound bound;
    std::size_t kept = 0, rejected = 0;
};

// Seeds pass the stochastic-sea filter when their QR exponent after
// filter_steps exceeds `filter`; their orbits are pooled.
inline ChaoticDimension chaotic_box_dimension(double k, std::size_t n_seeds, std::uint64_t seed, std::size_t N,
                                              std::size_t stride, const std::vector<double>& scales,
                                              double filter = 0.1, std::size_t filter_steps = 10000) {
    ChaoticDimension out;
    std::vector<OrbitSample> orbits;
    std::uint64_t idx = 0;
    for (const auto& s : seed_points(n_seeds, seed)) {
        ++idx;
        if (lyapunov(k, s, filter_steps, LyapunovMethod::qr).value <= filter) {
            ++out.rejected;
            continue;
        }
        orbits.push_back(sample_orbit(k, s, N, stride, seed + idx));
    }
    out.kept = orbits.size();
    if (orbits.empty()) throw InputError("chaotic_box_dimension: no seed passed the chaotic filter");
    out.bound = orbit_box_dimension(orbits, scales);
    return out;
}

// ---------------------------------------------------------------------------
// Saddle manifolds on the universal cover.

template <typename Map>
struct SaddleManifolds {
    SaddleData<double> saddle;
    Parametrization<double, Map> U;
    Parametrization<double, Inverted<Map>> S;
    ManifoldCurve<double> unstable, stable;
};

template <typename Map>
SaddleManifolds<Map> saddle_manifolds(const Map& f, const Vec2<double>& p, double arc_length, int order = 16,
                                      double defect_tol = 1e-12, double window = 1e3) {
    SaddleManifolds<Map> m;
    m.saddle = saddle_data<double>(f, p);
    if (m.saddle.lambda < 0) throw InputError("saddle_manifolds: orientation-reversing saddle");
    m.U = parametrize<double>(f, p, m.saddle.lambda, m.saddle.v_u, order, defect_tol);
    // Area preservation: the inverse expands the stable direction by lambda.
    m.S = parametrize<double>(invert(f), p, m.saddle.lambda, m.saddle.v_s, order, defect_tol);
    const double t0 = std::log(m.U.xi0) - std::log(m.saddle.lambda);
    m.unstable = sample_curve<double>(m.U, ManifoldSide::unstable, t0, arc_length, window);
    m.stable = sample_curve<double>(m.S, ManifoldSide::stable, std::log(m.S.xi0) - std::log(m.saddle.lambda),
                                    arc_length, window);
    m.unstable.base = m.stable.base = m.saddle;
    return m;
}

inline SaddleManifolds<StandardMap<double>> standard_saddle_manifolds(double k, double arc_length, int order = 16) {
    return saddle_manifolds(StandardMap<double>{k}, Vec2<double>{0, 0}, arc_length, order);
}

}  // namespace ssea
