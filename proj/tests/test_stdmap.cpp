#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ssea/scan.hpp"
#include "ssea/stdmap.hpp"
#include "tangency_oracle.hpp"

using namespace ssea;

namespace {

const double kPi = 3.14159265358979323846;

// Hand-written inverse of f_k, independent of the Inverted adaptor.
struct InverseStandard {
    double k;
    template <typename S>
    Vec2<S> operator()(const Vec2<S>& p) const {
        using std::sin;
        S x = p.x - p.y;
        return {x, p.y - k * sin(2 * kPi * x)};
    }
    template <typename S>
    Vec2<S> inverse(const Vec2<S>& p) const {
        using std::sin;
        S y = p.y + k * sin(2 * kPi * p.x);
        return {p.x + y, y};
    }
};

// Covering radius by brute force over the stored orbit.
double brute_radius(const OrbitSample& o, int probes) {
    double worst = 0;
    for (int i = 0; i < probes; ++i)
        for (int j = 0; j < probes; ++j) {
            Vec2<double> q{double(i) / probes, double(j) / probes};
            double b = 1e300;
            for (const auto& p : o.points) b = std::min(b, torus_distance(p, q));
            worst = std::max(worst, b);
        }
    return worst;
}

double eig_u(double k) {
    double tr = 2 + 2 * kPi * k;
    return (tr + std::sqrt(tr * tr - 4)) / 2;
}

}  // namespace

// ---------------------------------------------------------------------------
// Orbits.

TEST(Orbit, Reproducible) {
    auto a = sample_orbit_seeded(10, 42, 5000, 7);
    auto b = sample_orbit_seeded(10, 42, 5000, 7);
    ASSERT_EQ(a.points.size(), b.points.size());
    EXPECT_EQ(a.points.size(), 715u);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_EQ(a.points[i].x, b.points[i].x);
        EXPECT_EQ(a.points[i].y, b.points[i].y);
    }
    auto c = sample_orbit_seeded(10, 43, 5000, 7);
    EXPECT_NE(a.points[0].x, c.points[0].x);
    // Stride is a pure decimation of the full orbit.
    auto full = sample_orbit(10, a.initial, 5000, 1);
    for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].x, full.points[i * 7].x);
}

TEST(Orbit, SeedsAreUniformInUnitSquare) {
    auto s = seed_points(20000, 3);
    double mx = 0, my = 0;
    for (const auto& p : s) {
        ASSERT_GE(p.x, 0);
        ASSERT_LT(p.x, 1);
        ASSERT_GE(p.y, 0);
        ASSERT_LT(p.y, 1);
        mx += p.x;
        my += p.y;
    }
    EXPECT_NEAR(mx / s.size(), 0.5, 0.01);
    EXPECT_NEAR(my / s.size(), 0.5, 0.01);
}

TEST(Orbit, DeterminantIsOne) {
    for (double k : {0.0, 0.3, 10.0, 1000.0}) {
        auto o = sample_orbit_seeded(k, 5, 100000, 10);
        EXPECT_LT(max_det_defect(o), 1e-12) << "k = " << k;
    }
}

TEST(Orbit, TorusDistance) {
    EXPECT_NEAR(torus_distance({0.05, 0.5}, {0.95, 0.5}), 0.1, 1e-15);
    EXPECT_NEAR(torus_distance({0.0, 0.0}, {0.5, 0.5}), std::sqrt(0.5), 1e-15);
    EXPECT_THROW(sample_orbit(1, {0, 0}, 10, 0), InputError);
}

// ---------------------------------------------------------------------------
// Lyapunov exponents.

TEST(Lyapunov, IntegrableShearIsZero) {
    // Df = [[1, 1], [0, 1]]: tangent vectors grow linearly, so the finite-time
    // exponent is of order log N / N.
    for (auto m : {LyapunovMethod::qr, LyapunovMethod::two_orbit}) {
        auto e = lyapunov(0, {0.3, 0.6180339887}, 100000, m);
        EXPECT_GE(e.value, 0);
        EXPECT_LT(e.value, 1e-3) << to_string(m);
    }
    // |Df^N v| grows like N, so the QR value is close to log N / N.
    EXPECT_LT(lyapunov(0, {0.3, 0.6180339887}, 100000, LyapunovMethod::qr).value, 2 * std::log(1e5) / 1e5);
}

TEST(Lyapunov, StrongChaos) {
    auto s = seed_points(5, 19);
    for (const auto& p : s) {
        double a = lyapunov(1000, p, 100000, LyapunovMethod::qr).value;
        double b = lyapunov(1000, p, 100000, LyapunovMethod::two_orbit).value;
        EXPECT_GT(a, 3);
        EXPECT_GT(b, 3);
        EXPECT_LT(std::abs(a - b), 0.05 * a);
        // Away from islands the exponent is close to log(pi k).
        EXPECT_NEAR(a, std::log(kPi * 1000), 0.5);
    }
}

TEST(Lyapunov, SaddleFixedPointGivesItsEigenvalue) {
    for (double k : {0.5, 2.0, 7.3}) {
        auto e = lyapunov(k, {0, 0}, 10000, LyapunovMethod::qr);
        EXPECT_NEAR(e.value, std::log(eig_u(k)), 1e-3) << k;
        EXPECT_TRUE(e.periodic);
        auto t = lyapunov(k, {0, 0}, 10000, LyapunovMethod::two_orbit);
        EXPECT_NEAR(t.value, std::log(eig_u(k)), 1e-3) << k;
    }
    EXPECT_FALSE(lyapunov(1000, {0.123, 0.456}, 10000, LyapunovMethod::qr).periodic);
}

TEST(Lyapunov, EstimatorsAgreeOnChaoticSeedsAtK10) {
    auto ens_qr = lyapunov_ensemble(10, 100, 2024, 10000, LyapunovMethod::qr);
    auto ens_to = lyapunov_ensemble(10, 100, 2024, 10000, LyapunovMethod::two_orbit);
    ASSERT_EQ(ens_qr.values.size(), ens_to.values.size());
    ASSERT_GT(ens_qr.values.size(), 80u);
    for (std::size_t i = 0; i < ens_qr.values.size(); ++i)
        EXPECT_LT(std::abs(ens_qr.values[i] - ens_to.values[i]), 0.05 * ens_qr.values[i]);
    EXPECT_NEAR(ens_qr.summary.value, ens_to.summary.value, 0.05 * ens_qr.summary.value);
    EXPECT_GT(ens_qr.summary.spread, 0);
    EXPECT_EQ(ens_qr.summary.seeds + ens_qr.rejected, 100u);
}

TEST(Lyapunov, RejectsShortOrbits) {
    EXPECT_THROW(lyapunov(1, {0.1, 0.1}, 999, LyapunovMethod::qr), InputError);
    EXPECT_THROW(lyapunov(1, {0.1, 0.1}, 20000, LyapunovMethod::qr, 0), InputError);
}

// ---------------------------------------------------------------------------
// Periodic orbits.

TEST(Periodic, FixedPointAtOrigin) {
    for (double k : {0.1, 1.0, 7.3}) {
        auto r = find_periodic(k, 1, {0.01, -0.02});
        ASSERT_TRUE(r.has_value());
        EXPECT_LT(torus_distance(r->center, {0, 0}), 1e-12);
        EXPECT_NEAR(r->trace, 2 + 2 * kPi * k, 1e-9 * (1 + k));
        EXPECT_EQ(r->cls, OrbitClass::hyperbolic);
        EXPECT_LT(r->residual, 1e-10);
    }
}

TEST(Periodic, EllipticFixedPointAtHalf) {
    auto r = find_periodic(0.3, 1, {0.45, 0.05});
    ASSERT_TRUE(r.has_value());
    EXPECT_NEAR(r->center.x, 0.5, 1e-12);
    EXPECT_LT(torus_distance(r->center, {0.5, 0}), 1e-12);
    EXPECT_NEAR(r->trace, 2 - 0.6 * kPi, 1e-12);
    EXPECT_NEAR(std::abs(r->trace), 0.115, 1e-3);
    EXPECT_EQ(r->cls, OrbitClass::elliptic);
    // Past k = 2 / pi the same point is a flip saddle.
    auto h = find_periodic(0.8, 1, {0.5, 0.0});
    ASSERT_TRUE(h.has_value());
    EXPECT_EQ(h->cls, OrbitClass::hyperbolic);
    EXPECT_LT(h->trace, -2);
}

TEST(Periodic, IslandListAtK03) {
    auto is = find_islands(0.3, 1);
    // sin(2 pi x) = 0 and y = 0: exactly the two fixed points.
    ASSERT_EQ(is.size(), 2u);
    int elliptic = 0;
    for (const auto& r : is) elliptic += r.cls == OrbitClass::elliptic;
    EXPECT_EQ(elliptic, 1);
}

TEST(Periodic, CyclicTraceInvariance) {
    for (double k : {0.9, 2.5, 6.0}) {
        for (int q = 2; q <= 5; ++q) {
            auto is = find_islands(k, q);
            ASSERT_FALSE(is.empty()) << k << " " << q;
            for (const auto& r : is) {
                auto tr = cyclic_traces(k, r.center, q);
                ASSERT_EQ(int(tr.size()), q);
                for (double t : tr) EXPECT_NEAR(t, r.trace, 1e-9 * (1 + std::abs(r.trace)));
                EXPECT_NEAR(orbit_jacobian(k, r.center, q).det(), 1, 1e-9 * (1 + std::abs(r.trace)));
                EXPECT_EQ(classify_trace(tr.back()), r.cls);
                EXPECT_EQ(minimal_period(k, r.center, q), q);
            }
        }
    }
}

TEST(Periodic, FailureIsNotAnException) {
    EXPECT_THROW(find_periodic(1, 0, {0, 0}), InputError);
    // Newton started exactly where Df^q - I is singular.
    auto r = find_periodic(0, 1, {0.3, 0.2});
    EXPECT_FALSE(r.has_value());
}

// ---------------------------------------------------------------------------
// Density.

TEST(Density, TargetRadius) {
    EXPECT_NEAR(delta_k(1000), 0.4, 1e-15);
    EXPECT_NEAR(delta_k(64), 1.0, 1e-15);
    EXPECT_GT(delta_k(10), delta_k(11));
    EXPECT_TRUE(std::isinf(delta_k(0)));
    EXPECT_THROW(delta_k(-1), InputError);
}

TEST(Density, StreamingMatchesBruteForce) {
    for (double k : {0.2, 3.0, 50.0}) {
        for (std::size_t N : {std::size_t(50), std::size_t(3000)}) {
            auto o = sample_orbit_seeded(k, 8, N);
            auto r = density_check(k, o.initial, N, 32);
            EXPECT_NEAR(r.achieved, brute_radius(o, 32), 1e-15) << k << " " << N;
        }
    }
}

TEST(Density, MonotoneInOrbitLength) {
    Vec2<double> p = seed_points(1, 77)[0];
    double prev = 1e300;
    for (std::size_t N : {1000, 4000, 16000, 64000, 256000}) {
        double r = density_check(30, p, N).achieved;
        EXPECT_LE(r, prev);
        prev = r;
    }
}

TEST(Density, PassesAtK1000) {
    auto r = density_check(1000, seed_points(1, 1)[0], 10000000);
    EXPECT_NEAR(r.delta_target, 0.4, 1e-15);
    EXPECT_TRUE(r.pass);
    EXPECT_LT(r.achieved, 0.01);
    EXPECT_EQ(r.N, 10000000u);
}

TEST(Density, IntegrableOrbitIsNotDense) {
    // An invariant circle y = const covers only a horizontal line, so the
    // radius is the largest vertical probe offset from it.
    const double y = 0.6180339887498949;
    double expect = 0;
    for (int j = 0; j < 64; ++j) {
        double d = std::abs(j / 64.0 - y);
        expect = std::max(expect, std::min(d, 1 - d));
    }
    auto r = density_check(0, {0.1, y}, 20000);
    EXPECT_NEAR(r.achieved, expect, 1e-4);
    EXPECT_GT(r.second_pass_probes, 0u);
}

// ---------------------------------------------------------------------------
// Dimension.

TEST(Dimension, DuarteBound) {
    EXPECT_NEAR(duarte_bound(10), 2 * std::log(2.0) / std::log(6.1774), 2e-5);
    EXPECT_NEAR(duarte_bound(10), 0.7613, 1e-4);
    EXPECT_NEAR(duarte_bound(1000), 2 * std::log(2.0) / std::log(2.9), 1e-14);
    EXPECT_NEAR(duarte_bound(1000), 1.3020, 1e-4);
    EXPECT_NEAR(duarte_bound(1e18), 2.0, 1e-4);
    EXPECT_LT(duarte_bound(100), duarte_bound(1000));
    EXPECT_THROW(duarte_bound(-1), InputError);
}

TEST(Dimension, InvariantCircleIsOneDimensional) {
    auto o = sample_orbit(0, {0.1, 0.6180339887498949}, 200000);
    auto b = orbit_box_dimension({o}, dyadic_scales(3, 10));
    EXPECT_NEAR(b.d, 1.0, 0.02);
}

TEST(Dimension, ChaoticEnsembles) {
    auto scales = dyadic_scales(3, 8);
    double prev = 0;
    for (double k : {10.0, 100.0, 1000.0}) {
        auto c = chaotic_box_dimension(k, 100, 11, 20000, 1, scales);
        EXPECT_GE(c.bound.d, prev - c.bound.tolerance - 1e-9) << k;
        prev = c.bound.d;
        if (k == 1000.0) EXPECT_GE(c.bound.d, duarte_bound(1000) - 0.05);
    }
    EXPECT_THROW(chaotic_box_dimension(0, 10, 1, 20000, 1, scales), InputError);
}

// ---------------------------------------------------------------------------
// Saddle manifolds.

TEST(SaddleManifolds, EigenvectorsAtK2) {
    auto m = standard_saddle_manifolds(2, 0.5);
    // [[1 + 4 pi, 1], [4 pi, 1]]: eigenvector (1, l - 1 - 4 pi).
    double a = 1 + 4 * kPi, tr = 2 + 4 * kPi;
    double lu = (tr + std::sqrt(tr * tr - 4)) / 2, ls = 1 / lu;
    EXPECT_NEAR(m.saddle.lambda, lu, 1e-11);
    auto check = [&](Vec2<double> v, double l) {
        Vec2<double> e{1, l - a};
        e = e / norm(e);
        EXPECT_NEAR(std::abs(cross(v, e)), 0, 1e-12);
    };
    check(m.saddle.v_u, lu);
    check(m.saddle.v_s, ls);
    // The sampled curves leave along them.
    Vec2<double> du = m.unstable.points[1] - m.unstable.points[0];
    EXPECT_LT(std::abs(cross(du / norm(du), m.saddle.v_u)), 1e-3);
}

TEST(SaddleManifolds, DefectDecreasesWithOrder) {
    StandardMap<double> f{7.3};
    auto sd = saddle_data<double>(f, {0, 0});
    double prev = 1e300;
    for (int order : {2, 4, 8, 12}) {
        auto P = parametrize<double>(f, sd.location, sd.lambda, sd.v_u, order, 1e-6);
        double d = P.invariance_defect(0.02);
        EXPECT_LT(d, prev) << order;
        prev = d;
    }
    auto m = standard_saddle_manifolds(7.3, 1.0);
    EXPECT_LT(m.U.defect, 1e-8);
    EXPECT_LT(m.S.defect, 1e-8);
}

TEST(SaddleManifolds, StableIsUnstableOfInverse) {
    const double k = 7.3;
    auto m = standard_saddle_manifolds(k, 2.0);
    InverseStandard g{k};
    auto sd = saddle_data<double>(g, {0, 0});
    auto P = parametrize<double>(g, sd.location, sd.lambda, sd.v_u, 16, 1e-12);
    for (double t = -4; t <= 0.5; t += 0.125) {
        auto a = m.S.eval_t(t), b = P.eval_t(t);
        EXPECT_LT(norm(a - b), 1e-8) << t;
    }
    // Forward iterates of stable points approach the saddle at rate 1 / lambda.
    StandardMap<double> f{k};
    auto p = m.S.eval_t(0.0);
    auto q = f(p);
    EXPECT_NEAR(norm(q), norm(m.S.eval_t(-std::log(m.saddle.lambda))), 1e-10);
}

// ---------------------------------------------------------------------------
// Shear and tangency scan.

TEST(Shear, LocalAndLatticeInvariant) {
    LocalShear s{0.3, 0.25, 0.05};
    EXPECT_EQ(s.bump(0.0), 0.0);
    EXPECT_EQ(s.bump(0.199), 0.0);
    EXPECT_DOUBLE_EQ(s.bump(0.25), 1.0);
    EXPECT_NEAR(s.bump(3.27), s.bump(0.27), 1e-12);
    ShearedStandardMap F{{7.3}, s};
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        Vec2<double> p{unit_variate(rng), unit_variate(rng)};
        auto q = F.inverse(F(p));
        EXPECT_LT(norm(q - p), 1e-12);
        auto a = F(p), b = F(Vec2<double>{p.x + 2, p.y - 1});
        EXPECT_NEAR(b.x - a.x, 2 - 1, 1e-12);
        EXPECT_NEAR(b.y - a.y, -1, 1e-12);
        EXPECT_NEAR(jacobian<double>(F, p).det(), 1, 1e-10);
    }
}

TEST(Shear, SeriesAndDualsAgree) {
    LocalShear s{0.3, 0.25, 0.05};
    using D = Dual<double, 1>;
    D y(0.26, {1.0});
    auto b = s.bump(y);
    double h = 1e-6;
    EXPECT_NEAR(b.g[0], (s.bump(0.26 + h) - s.bump(0.26 - h)) / (2 * h), 1e-5);
    Series1<double> z(3);
    z.c[0] = 0.26;
    z.c[1] = 1;
    auto bs = s.bump(z);
    EXPECT_NEAR(bs.c[0], s.bump(0.26), 1e-15);
    EXPECT_NEAR(bs.c[1], b.g[0], 1e-9);
}

namespace {

const oracle::ManufacturedTangency& manufactured() {
    static const auto m = oracle::manufacture_tangency(7.3);
    return m;
}

const ScanTree& synthetic_tree() {
    static const ScanTree tree = [] {
        ScanOptions opt;
        opt.depth = 2;
        return tangency_scan(ShearedFamily{manufactured().shear}, 7.0, 7.7, manufactured().tracker, opt);
    }();
    return tree;
}

}  // namespace

TEST(TangencyOracle, ArcsTouchAtTheManufacturedParameter) {
    const auto& m = manufactured();
    EXPECT_LT(m.shear.sigma, 0);
    EXPECT_GT(m.y_touch, m.shear.yc - m.shear.w);
    EXPECT_LT(m.y_touch, m.shear.yc + m.shear.w);
    auto A = build_arcs(ShearedStandardMap{{7.3}, m.shear}, 7.3, m.tracker, 0);
    // Closest approach between the arcs near the touching height.
    double best = 1e300;
    for (std::size_t i = 0; i < A.up.size(); ++i)
        if (std::abs(A.up[i].y - m.y_touch) < 1e-3) {
            double d = local_arc_distance(A, A.ut[i], -0.4, 0.01);
            best = std::min(best, d);
        }
    EXPECT_LT(best, 1e-9);
}

TEST(TangencyScan, RecoversManufacturedTangency) {
    const auto& tree = synthetic_tree();
    ASSERT_FALSE(tree.nodes.empty());
    const auto& root = tree.nodes[0];
    ASSERT_EQ(root.tangencies.size(), 1u);
    const auto& t = root.tangencies[0];
    EXPECT_NEAR(t.k_star, 7.3, 1e-4);
    EXPECT_NEAR(t.k_star, 7.3, 1e-6);
    EXPECT_LT(t.bracket_hi - t.bracket_lo, 1e-6);
    EXPECT_LT(t.min_angle, 1e-3);
    EXPECT_NEAR(t.beta, 1.0, 0.2);
    EXPECT_TRUE(root.undecided.empty());
    // Away from k* the count is 2 on one side and 0 on the other.
    for (const auto& s : root.samples) EXPECT_EQ(s.crossings, s.k < 7.3 ? 2 : 0);
}

TEST(TangencyScan, TreeInvariants) {
    const auto& tree = synthetic_tree();
    EXPECT_TRUE(tree.nested());
    EXPECT_TRUE(tree.siblings_disjoint());
    EXPECT_EQ(tree.max_depth(), 2);
    for (const auto& n : tree.nodes) {
        for (int c : n.children) {
            EXPECT_GT(tree.nodes[c].lo, n.lo);
            EXPECT_LT(tree.nodes[c].hi, n.hi);
        }
        for (const auto& t : n.tangencies) {
            EXPECT_GE(t.k_star, n.lo);
            EXPECT_LE(t.k_star, n.hi);
        }
    }
    EXPECT_LE(tree.used, tree.budget);
    EXPECT_GT(tree.coverage(1), 0);
    EXPECT_LT(tree.coverage(1), tree.coverage(0));
}

TEST(TangencyScan, InvariantCheckersDetectViolations) {
    ScanTree t;
    ScanNode root;
    root.lo = 0;
    root.hi = 1;
    t.nodes.push_back(root);
    ScanNode a;
    a.depth = 1;
    a.parent = 0;
    a.lo = 0.2;
    a.hi = 0.5;
    ScanNode b = a;
    b.lo = 0.4;
    b.hi = 0.6;
    t.nodes.push_back(a);
    t.nodes.push_back(b);
    t.nodes[0].children = {1, 2};
    EXPECT_TRUE(t.nested());
    EXPECT_FALSE(t.siblings_disjoint());
    t.nodes[2].lo = 0.6;
    t.nodes[2].hi = 1.0;
    EXPECT_TRUE(t.siblings_disjoint());
    EXPECT_FALSE(t.nested());
}

TEST(TangencyScan, BudgetAndUndecided) {
    ScanOptions opt;
    opt.depth = 1;
    opt.budget = 5;
    auto tree = tangency_scan(ShearedFamily{manufactured().shear}, 7.0, 7.7, manufactured().tracker, opt);
    EXPECT_TRUE(tree.exhausted);
    EXPECT_EQ(tree.used, 5u);
    EXPECT_GT(tree.undecided_count(), 0u);
    EXPECT_GT(tree.undecided_measure(), 0.5 * 0.7);
    // A defect tolerance that cannot be met leaves every step undecided.
    TrackerConfig bad = manufactured().tracker;
    bad.defect_tol = 1e-30;
    ScanOptions o2;
    o2.depth = 0;
    auto t2 = tangency_scan(ShearedFamily{manufactured().shear}, 7.0, 7.7, bad, o2);
    EXPECT_NEAR(t2.undecided_measure(), 0.7, 1e-12);
    EXPECT_TRUE(t2.nodes[0].tangencies.empty());
}

TEST(TangencyScan, NoShearNoTangency) {
    ScanOptions opt;
    opt.depth = 0;
    opt.fit_unfolding = false;
    auto tree = tangency_scan(StandardFamily{}, 7.0, 7.7, manufactured().tracker, opt);
    EXPECT_TRUE(tree.nodes[0].tangencies.empty());
    for (const auto& s : tree.nodes[0].samples) EXPECT_EQ(s.crossings, 0);
}

TEST(TangencyScan, RejectsBadInput) {
    ScanOptions opt;
    EXPECT_THROW(tangency_scan(StandardFamily{}, 7.0, 7.0, standard_tracker(), opt), InputError);
    opt.depth = 7;
    EXPECT_THROW(tangency_scan(StandardFamily{}, 7.0, 7.5, standard_tracker(), opt), InputError);
}
