#pragma once

// Dynamically defined Cantor sets on the line: two monotone contractions
// (the inverse branches of the expanding map psi) acting on a hull
// interval, their cylinder refinements, gaps, lateral thickness, and the
// dimension bounds that follow from lateral thickness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "core/errors.hpp"
#include "core/roots.hpp"
#include "core/stats.hpp"
#include "core/vec2.hpp"

namespace ssea {

struct Interval {
    double lo = 0, hi = 0;
    double length() const { return hi - lo; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
    bool overlaps(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
};

inline bool operator==(const Interval& a, const Interval& b) { return a.lo == b.lo && a.hi == b.hi; }

// One inverse branch. Affine branches map the hull onto
// [offset, offset + ratio * |hull|], reversing order when orientation < 0.
struct Branch {
    enum class Kind { affine, general };
    Kind kind = Kind::affine;
    double ratio = 0, offset = 0;
    int orientation = 1;
    std::function<double(double)> map;  // general kind only
    double lipschitz = 0;               // certified bound for general kind

    static Branch affine(double ratio, double offset, int orientation = 1) {
        Branch b;
        b.ratio = ratio;
        b.offset = offset;
        b.orientation = orientation >= 0 ? 1 : -1;
        return b;
    }
    static Branch general(std::function<double(double)> f, double lipschitz) {
        Branch b;
        b.kind = Kind::general;
        b.map = std::move(f);
        b.lipschitz = lipschitz;
        return b;
    }
};

struct CantorSystem {
    Interval hull;
    Branch branch[2];

    double apply(int i, double x) const {
        const Branch& b = branch[i];
        if (b.kind == Branch::Kind::general) return b.map(x);
        return b.orientation > 0 ? b.offset + b.ratio * (x - hull.lo) : b.offset + b.ratio * (hull.hi - x);
    }

    Interval image(int i, const Interval& J) const {
        double a = apply(i, J.lo), c = apply(i, J.hi);
        return a <= c ? Interval{a, c} : Interval{c, a};
    }

    // Throws InputError unless the branch images are disjoint strictly
    // monotone contractions into the hull.
    void validate() const {
        if (!(hull.lo < hull.hi)) throw InputError("cantor: hull must satisfy lo < hi");
        Interval im[2];
        for (int i = 0; i < 2; ++i) {
            const Branch& b = branch[i];
            if (b.kind == Branch::Kind::affine) {
                if (!(b.ratio > 0 && b.ratio < 1)) throw InputError("cantor: affine ratio must lie in (0,1)");
            } else {
                if (!b.map) throw InputError("cantor: general branch without a map");
                if (!(b.lipschitz > 0 && b.lipschitz < 1)) throw InputError("cantor: Lipschitz constant must lie in (0,1)");
                // Strict monotonicity on a sample grid.
                constexpr int N = 64;
                double prev = b.map(hull.lo), sgn = 0;
                for (int k = 1; k <= N; ++k) {
                    double cur = b.map(hull.lo + hull.length() * k / N);
                    double s = cur > prev ? 1 : (cur < prev ? -1 : 0);
                    if (s == 0 || (sgn != 0 && s != sgn)) throw InputError("cantor: branch not strictly monotone");
                    sgn = s;
                    prev = cur;
                }
            }
            im[i] = image(i, hull);
            const double slack = 1e-14 * hull.length();
            if (im[i].lo < hull.lo - slack || im[i].hi > hull.hi + slack)
                throw InputError("cantor: branch image escapes the hull");
        }
        if (im[0].overlaps(im[1])) throw InputError("cantor: branch images overlap");
    }
};

inline CantorSystem affine_system(double r0, double r1, Interval hull = {0, 1}) {
    CantorSystem s;
    s.hull = hull;
    s.branch[0] = Branch::affine(r0, hull.lo);
    s.branch[1] = Branch::affine(r1, hull.hi - r1 * hull.length());
    return s;
}
inline CantorSystem middle_thirds() { return affine_system(1.0 / 3, 1.0 / 3); }
inline CantorSystem middle_fifths() { return affine_system(0.4, 0.4); }

// Words are encoded as integers with the first symbol a_0 in the most
// significant of m bits.
struct Word {
    int length = 0;
    std::uint64_t bits = 0;

    int symbol(int i) const { return int((bits >> (length - 1 - i)) & 1u); }
    Word child(int a) const { return {length + 1, (bits << 1) | std::uint64_t(a)}; }
    std::string str() const {
        std::string s;
        for (int i = 0; i < length; ++i) s += char('0' + symbol(i));
        return s;
    }
};

inline bool operator<(const Word& a, const Word& b) {
    // Lexicographic on symbol strings; a proper prefix sorts first.
    int m = std::min(a.length, b.length);
    for (int i = 0; i < m; ++i)
        if (a.symbol(i) != b.symbol(i)) return a.symbol(i) < b.symbol(i);
    return a.length < b.length;
}

struct CylinderTree {
    int depth = 0;
    Interval hull;
    // level[m][w] is the hull of the cylinder with word w of length m.
    std::vector<std::vector<Interval>> level;

    const Interval& cylinder(const Word& w) const { return level[w.length][w.bits]; }

    // Level-m cylinders sorted left to right.
    std::vector<Interval> cover(int m) const {
        std::vector<Interval> c = level.at(m);
        std::sort(c.begin(), c.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        return c;
    }
};

// Cylinder of word w is phi_{a_0} o ... o phi_{a_{m-1}} applied to the hull.
inline CylinderTree refine(const CantorSystem& sys, int depth) {
    if (depth < 0) throw InputError("refine: negative depth");
    if (depth > 26) throw InputError("refine: depth too large for a dense tree");
    sys.validate();
    CylinderTree t;
    t.depth = depth;
    t.hull = sys.hull;
    t.level.resize(depth + 1);
    t.level[0] = {sys.hull};
    // Build level m+1 from level m by prepending a symbol: word a.w has
    // interval phi_a(I_w).
    for (int m = 0; m < depth; ++m) {
        const auto& prev = t.level[m];
        auto& next = t.level[m + 1];
        next.resize(prev.size() * 2);
        const std::uint64_t top = std::uint64_t(1) << m;
        for (std::uint64_t w = 0; w < prev.size(); ++w)
            for (int a = 0; a < 2; ++a) next[(std::uint64_t(a) * top) | w] = sys.image(a, prev[w]);
    }
    return t;
}

struct Gap {
    Interval interval;
    int order = 0;
    Interval left_bridge, right_bridge;
    Word word;  // cylinder whose two children border the gap
};

// Every gap of order j < depth sits between the two children of a level-j
// cylinder; those children are its bridges.
inline std::vector<Gap> enumerate_gaps(const CylinderTree& t) {
    if (t.depth < 1) throw InputError("enumerate_gaps: depth must be at least 1");
    std::vector<Gap> gaps;
    for (int j = 0; j < t.depth; ++j) {
        for (std::uint64_t w = 0; w < t.level[j].size(); ++w) {
            Word parent{j, w};
            Interval c0 = t.cylinder(parent.child(0)), c1 = t.cylinder(parent.child(1));
            if (c1.lo < c0.lo) std::swap(c0, c1);
            Gap g;
            g.interval = {c0.hi, c1.lo};
            g.order = j;
            g.left_bridge = c0;
            g.right_bridge = c1;
            g.word = parent;
            gaps.push_back(g);
        }
    }
    return gaps;
}

struct ThicknessReport {
    double tau_L = 0, tau_R = 0;
    int depth = 0;
    Word argmin_L, argmin_R;
    std::vector<Interval> gaps;  // every gap enumerated at this depth
};

inline ThicknessReport lateral_thickness(const CylinderTree& t) {
    auto gaps = enumerate_gaps(t);
    ThicknessReport r;
    r.depth = t.depth;
    r.tau_L = r.tau_R = std::numeric_limits<double>::infinity();
    const double degenerate = 1e3 * std::numeric_limits<double>::epsilon() * t.hull.length();
    // Values within tie_rel of the minimum count as ties; the argmin is then
    // the lexicographically smallest tied word, so rounding noise in deep
    // gaps cannot move it.
    constexpr double tie_rel = 1e-9;
    std::vector<std::pair<double, double>> ratios;
    ratios.reserve(gaps.size());
    for (const Gap& g : gaps) {
        double len = g.interval.length();
        if (len <= degenerate) throw InputError("lateral_thickness: degenerate gap at word " + g.word.str());
        double tl = g.left_bridge.length() / len, tr = g.right_bridge.length() / len;
        r.tau_L = std::min(r.tau_L, tl);
        r.tau_R = std::min(r.tau_R, tr);
        ratios.push_back({tl, tr});
        r.gaps.push_back(g.interval);
    }
    bool haveL = false, haveR = false;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        if (ratios[i].first <= r.tau_L * (1 + tie_rel) && (!haveL || gaps[i].word < r.argmin_L)) {
            r.argmin_L = gaps[i].word;
            haveL = true;
        }
        if (ratios[i].second <= r.tau_R * (1 + tie_rel) && (!haveR || gaps[i].word < r.argmin_R)) {
            r.argmin_R = gaps[i].word;
            haveR = true;
        }
    }
    return r;
}

// Thickness computed at growing depth until successive values agree to
// rel_tol; affine systems stop at the first doubling.
struct ConvergedThickness {
    ThicknessReport report;
    bool converged = false;
    std::vector<std::pair<int, std::pair<double, double>>> history;
};

inline ConvergedThickness lateral_thickness_converged(const CantorSystem& sys, int start_depth = 2,
                                                      int max_depth = 20, double rel_tol = 1e-6) {
    ConvergedThickness out;
    ThicknessReport prev = lateral_thickness(refine(sys, start_depth));
    out.history.push_back({start_depth, {prev.tau_L, prev.tau_R}});
    for (int d = start_depth * 2; d <= max_depth; d = std::min(max_depth, d * 2)) {
        ThicknessReport cur = lateral_thickness(refine(sys, d));
        out.history.push_back({d, {cur.tau_L, cur.tau_R}});
        bool ok = std::abs(cur.tau_L - prev.tau_L) <= rel_tol * std::abs(prev.tau_L) &&
                  std::abs(cur.tau_R - prev.tau_R) <= rel_tol * std::abs(prev.tau_R);
        prev = std::move(cur);
        if (ok) { out.converged = true; break; }
        if (d == max_depth) break;
    }
    out.report = std::move(prev);
    return out;
}

inline std::pair<double, double> partition_thickness(const CantorSystem& sys) {
    auto r = lateral_thickness(refine(sys, 1));
    return {r.tau_L, r.tau_R};
}

struct DimensionBound {
    enum class Method { exact_bisection, log_formula, moran_oracle, box_oracle };
    double d = 0;
    Method method = Method::exact_bisection;
    double tolerance = 0;
    double fit_residual = 0;  // box oracle only
};

inline const char* method_name(DimensionBound::Method m) {
    switch (m) {
        case DimensionBound::Method::exact_bisection: return "exact-bisection";
        case DimensionBound::Method::log_formula: return "log-formula";
        case DimensionBound::Method::moran_oracle: return "moran-oracle";
        case DimensionBound::Method::box_oracle: return "box-oracle";
    }
    return "?";
}

// Root of tau_L^d + tau_R^d = (1 + tau_L + tau_R)^d in (0, 1). Dividing by
// the right side gives x^d + y^d = 1 with x + y < 1, which is monotone.
inline DimensionBound dimension_lower_bound_exact(double tau_L, double tau_R, double tol = 1e-12) {
    if (!(tau_L > 0) || !(tau_R > 0)) throw std::domain_error("dimension bound: thickness must be positive");
    if (!(tol > 0)) throw std::domain_error("dimension bound: tolerance must be positive");
    const double s = 1 + tau_L + tau_R;
    const double x = tau_L / s, y = tau_R / s;
    auto f = [&](double d) { return std::pow(x, d) + std::pow(y, d) - 1.0; };
    DimensionBound b;
    b.method = DimensionBound::Method::exact_bisection;
    b.tolerance = tol;
    b.d = bisect<double>(f, 0.0, 1.0, std::min(tol, 1e-15));
    return b;
}

inline DimensionBound dimension_lower_bound_log(double tau_L, double tau_R) {
    if (!(tau_L > 0) || !(tau_R > 0)) throw std::domain_error("dimension bound: thickness must be positive");
    auto branch = [](double a, double b) {  // log(1 + b/(1+a)) / log(1 + (1+b)/a)
        return std::log1p(b / (1 + a)) / std::log1p((1 + b) / a);
    };
    DimensionBound r;
    r.method = DimensionBound::Method::log_formula;
    r.d = std::max(branch(tau_L, tau_R), branch(tau_R, tau_L));
    return r;
}

inline DimensionBound moran_dimension(double r0, double r1, double tol = 1e-14) {
    if (!(r0 > 0 && r0 < 1 && r1 > 0 && r1 < 1 && r0 + r1 < 1))
        throw std::domain_error("moran_dimension: need r0, r1 in (0,1) with r0 + r1 < 1");
    DimensionBound b;
    b.method = DimensionBound::Method::moran_oracle;
    b.tolerance = tol;
    b.d = bisect<double>([&](double d) { return std::pow(r0, d) + std::pow(r1, d) - 1.0; }, 0.0, 1.0, tol);
    return b;
}

// Lateral Newhouse gap lemma: a true result guarantees K^s and K^u meet.
inline bool gap_lemma(const ThicknessReport& s, const ThicknessReport& u, const Interval& hull_s,
                      const Interval& hull_u) {
    if (!hull_s.overlaps(hull_u)) return false;
    for (const Interval& g : s.gaps)
        if (g.lo < hull_u.lo && hull_u.hi < g.hi) return false;
    for (const Interval& g : u.gaps)
        if (g.lo < hull_s.lo && hull_s.hi < g.hi) return false;
    return s.tau_L * u.tau_R > 1 && s.tau_R * u.tau_L > 1;
}

struct DistortionEstimate {
    double c = 0;
    int depth = 0;
    int samples = 0;
};

// Sampled Dist(psi^n, K(w)) over words of length n <= depth. With
// x = phi_w(x'), the defining ratio becomes
// |y'-x'|/|z'-x'| * |phi_w(z')-phi_w(x')|/|phi_w(y')-phi_w(x')|, so only the
// forward branches are needed.
inline DistortionEstimate distortion_estimate(const CantorSystem& sys, int depth, int samples = 17) {
    if (samples < 3) throw InputError("distortion_estimate: need at least 3 samples");
    sys.validate();
    std::vector<double> base(samples);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < samples; ++i)
        base[i] = sys.hull.lo + sys.hull.length() * 0.5 * (1 - std::cos(pi * i / (samples - 1)));
    DistortionEstimate est;
    est.depth = depth;
    est.samples = samples;
    std::vector<double> img(samples);
    for (int m = 1; m <= depth; ++m) {
        for (std::uint64_t w = 0; w < (std::uint64_t(1) << m); ++w) {
            Word word{m, w};
            for (int i = 0; i < samples; ++i) {
                double p = base[i];
                for (int k = m - 1; k >= 0; --k) p = sys.apply(word.symbol(k), p);
                img[i] = p;
            }
            for (int ix = 0; ix < samples; ++ix)
                for (int iy = 0; iy < samples; ++iy) {
                    if (iy == ix) continue;
                    for (int iz = 0; iz < samples; ++iz) {
                        if (iz == ix || iz == iy) continue;
                        double num = std::abs(base[iy] - base[ix]), den = std::abs(base[iz] - base[ix]);
                        double gnum = std::abs(img[iz] - img[ix]), gden = std::abs(img[iy] - img[ix]);
                        if (num == 0 || den == 0 || gnum == 0 || gden == 0) continue;
                        double v = std::log((num / den) * (gnum / gden));
                        if (v > est.c) est.c = v;
                    }
                }
        }
    }
    return est;
}

inline std::pair<double, double> thickness_interval(double tau_partition, double c) {
    return {std::exp(-c) * tau_partition, std::exp(c) * tau_partition};
}

// Least-squares slope of log N(eps) against log(1/eps) for box counts.
inline DimensionBound box_dimension(const std::vector<Vec2<double>>& points, const std::vector<double>& scales) {
    if (points.size() < 1000) throw InputError("box_dimension: need at least 1000 points");
    if (scales.size() < 4) throw InputError("box_dimension: need at least 4 scales");
    bool all_equal = std::all_of(points.begin(), points.end(),
                                 [&](const Vec2<double>& p) { return p.x == points[0].x && p.y == points[0].y; });
    if (all_equal) throw InputError("box_dimension: degenerate point set");
    std::vector<double> lx, ly;
    std::unordered_set<std::uint64_t> boxes;
    for (double eps : scales) {
        boxes.clear();
        boxes.reserve(points.size());
        for (const auto& p : points) {
            auto i = std::int64_t(std::floor(p.x / eps)), j = std::int64_t(std::floor(p.y / eps));
            boxes.insert((std::uint64_t(std::uint32_t(i)) << 32) | std::uint64_t(std::uint32_t(j)));
        }
        lx.push_back(std::log(1.0 / eps));
        ly.push_back(std::log(double(boxes.size())));
    }
    LinearFit f = fit_line(lx, ly);
    DimensionBound b;
    b.method = DimensionBound::Method::box_oracle;
    b.d = f.slope;
    b.fit_residual = f.residual_rms;
    b.tolerance = f.slope_stderr;
    return b;
}

inline std::vector<double> dyadic_scales(int from_exp, int to_exp) {
    std::vector<double> s;
    for (int e = from_exp; e <= to_exp; ++e) s.push_back(std::ldexp(1.0, -e));
    return s;
}

}  // namespace ssea
