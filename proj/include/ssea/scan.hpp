#pragma once

// Finite-depth homoclinic-tangency scans over a one-parameter family of
// area-preserving maps. A tracker fixes a saddle on the universal cover, one
// arc of its unstable manifold, one lattice translate of an arc of its
// stable manifold, and a counting window. Along the parameter the scan
// counts transversal intersections in the window; a change by two across a
// step is bisected, then the merging pair is followed with exact Newton
// corrections until the crossing angle drops below the threshold.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "core/errors.hpp"
#include "core/stats.hpp"
#include "core/vec2.hpp"
#include "manifold.hpp"
#include "maps.hpp"
#include "separatrix.hpp"

namespace ssea {

namespace detail {

template <typename S>
struct is_series1 : std::false_type {};
template <typename T>
struct is_series1<Series1<T>> : std::true_type {};

// Value of the constant term through any nesting of duals and series.
template <typename S>
double lead_value(const S& x) {
    if constexpr (is_dual<S>::value) return lead_value(x.v);
    else if constexpr (is_series1<S>::value) return lead_value(x.c[0]);
    else return double(x);
}

}  // namespace detail

// Horizontal shear (x, y) -> (x + sigma b(y), y) with b(y) = (1 - u^2)^3,
// u = (y - yc - n) / w for the nearest integer n and |u| < 1, else 0. The
// shear commutes with lattice translations, and b vanishes identically
// near integer heights when w < min(yc, 1 - yc).
struct LocalShear {
    double sigma = 0, yc = 0.25, w = 0.05;

    template <typename S>
    S bump(const S& y) const {
        double n = std::round(detail::lead_value(y) - yc);
        double ul = (detail::lead_value(y) - yc - n) / w;
        if (std::abs(ul) >= 1) return y * 0.0;
        S u = (y - (yc + n)) * (1.0 / w);
        S v = 1.0 - u * u;
        return v * v * v;
    }
    template <typename S>
    Vec2<S> operator()(const Vec2<S>& p) const { return {p.x + bump(p.y) * sigma, p.y}; }
    template <typename S>
    Vec2<S> inverse(const Vec2<S>& p) const { return {p.x - bump(p.y) * sigma, p.y}; }
};

// F = shear o f_k.
struct ShearedStandardMap {
    StandardMap<double> f;
    LocalShear shear;

    template <typename S>
    Vec2<S> operator()(const Vec2<S>& p) const { return shear(f(p)); }
    template <typename S>
    Vec2<S> inverse(const Vec2<S>& p) const { return f.inverse(shear.inverse(p)); }
};

struct StandardFamily {
    StandardMap<double> map_at(double k) const { return {k}; }
};

struct ShearedFamily {
    LocalShear shear;
    ShearedStandardMap map_at(double k) const { return {{k}, shear}; }
};

struct Box {
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool contains(const Vec2<double>& p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

// Arc of a manifold in the standard parameter t = log xi, moved by a
// lattice vector. P'(0) is a unit eigenvector, so t is intrinsic.
struct ArcSpec {
    double t_lo = -1, t_hi = 0;
    Vec2<double> shift{0, 0};
};

struct TrackerConfig {
    Vec2<double> saddle{0, 0};
    ArcSpec unstable, stable;
    Box window;
    int order = 16;
    double defect_tol = 1e-12;
    double max_turn = 2e-3;
    double max_chord = 2e-3;
    double extend_per_depth = 0.5;  // both arcs grow by this many fundamental domains per level
};

// A parametrization seen through a lattice translation.
template <typename Param>
struct ShiftedParam {
    const Param* P;
    Vec2<double> shift;
    template <typename S>
    Vec2<S> eval_t(const S& t) const {
        Vec2<S> p = P->eval_t(t);
        return {p.x + shift.x, p.y + shift.y};
    }
    auto local_t(double t) const {
        auto L = P->local_t(t);
        L.p = L.p + shift;
        return L;
    }
    Vec2<double> tangent_t(double t) const { return P->tangent_t(t); }
};

// Polyline in t on [a, b], refined until every chord is short and turns
// little against its neighbours.
template <typename Curve>
void sample_arc(const Curve& C, double a, double b, double max_chord, double max_turn,
                std::vector<Vec2<double>>& pts, std::vector<double>& ts, std::size_t max_points = 400000) {
    pts.clear();
    ts.clear();
    const int coarse = 64;
    std::vector<double> tt;
    std::vector<Vec2<double>> pp;
    for (int i = 0; i <= coarse; ++i) {
        tt.push_back(a + (b - a) * i / coarse);
        pp.push_back(C.eval_t(tt.back()));
    }
    // A chord is accepted when short and when the midpoint deviates from it
    // by less than chord * turn / 4, which bounds the turn across it.
    struct Item {
        double t0, t1;
        Vec2<double> p0, p1;
        int depth;
    };
    std::vector<Item> stack;
    for (int i = coarse - 1; i >= 0; --i) stack.push_back({tt[i], tt[i + 1], pp[i], pp[i + 1], 0});
    pts.push_back(pp[0]);
    ts.push_back(tt[0]);
    while (!stack.empty()) {
        Item it = stack.back();
        stack.pop_back();
        double tm = 0.5 * (it.t0 + it.t1);
        Vec2<double> pm = C.eval_t(tm);
        Vec2<double> ch = it.p1 - it.p0;
        double l = norm(ch);
        double dev = l > 0 ? std::abs(cross(ch, pm - it.p0)) / l : norm(pm - it.p0);
        bool ok = l <= max_chord && dev <= 0.25 * l * max_turn && norm(pm - it.p0) <= max_chord;
        if (ok || it.depth > 40) {
            pts.push_back(it.p1);
            ts.push_back(it.t1);
            if (pts.size() > max_points) throw StageError("scan", "arc needs too many polyline points");
            continue;
        }
        stack.push_back({tm, it.t1, pm, it.p1, it.depth + 1});
        stack.push_back({it.t0, tm, it.p0, pm, it.depth + 1});
    }
}

// Segment crossings of two polylines with the crossing inside `box`; a
// bucket grid over the box keeps the cost near linear.
inline std::vector<std::pair<double, double>> crossings_in_box(const std::vector<Vec2<double>>& U,
                                                               const std::vector<Vec2<double>>& S, const Box& box,
                                                               int cells = 64) {
    std::vector<std::pair<double, double>> out;
    const double cw = (box.x1 - box.x0) / cells, chh = (box.y1 - box.y0) / cells;
    auto cell_range = [&](const Vec2<double>& a, const Vec2<double>& b, int& i0, int& i1, int& j0, int& j1) {
        double xa = std::min(a.x, b.x), xb = std::max(a.x, b.x), ya = std::min(a.y, b.y), yb = std::max(a.y, b.y);
        if (xb < box.x0 || xa > box.x1 || yb < box.y0 || ya > box.y1) return false;
        i0 = std::clamp(int(std::floor((xa - box.x0) / cw)), 0, cells - 1);
        i1 = std::clamp(int(std::floor((xb - box.x0) / cw)), 0, cells - 1);
        j0 = std::clamp(int(std::floor((ya - box.y0) / chh)), 0, cells - 1);
        j1 = std::clamp(int(std::floor((yb - box.y0) / chh)), 0, cells - 1);
        return true;
    };
    std::vector<std::vector<std::size_t>> bucket(std::size_t(cells) * cells);
    for (std::size_t j = 0; j + 1 < S.size(); ++j) {
        int i0, i1, j0, j1;
        if (!cell_range(S[j], S[j + 1], i0, i1, j0, j1)) continue;
        for (int a = i0; a <= i1; ++a)
            for (int b = j0; b <= j1; ++b) bucket[std::size_t(a) * cells + b].push_back(j);
    }
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i + 1 < U.size(); ++i) {
        int i0, i1, j0, j1;
        if (!cell_range(U[i], U[i + 1], i0, i1, j0, j1)) continue;
        cand.clear();
        for (int a = i0; a <= i1; ++a)
            for (int b = j0; b <= j1; ++b) {
                const auto& bk = bucket[std::size_t(a) * cells + b];
                cand.insert(cand.end(), bk.begin(), bk.end());
            }
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        Vec2<double> a = U[i], da = U[i + 1] - U[i];
        for (std::size_t j : cand) {
            Vec2<double> b = S[j], db = S[j + 1] - S[j];
            double den = cross(da, db);
            if (den == 0) continue;
            double u = cross(b - a, db) / den, v = cross(b - a, da) / den;
            if (u < 0 || u >= 1 || v < 0 || v >= 1) continue;
            if (!box.contains(a + da * u)) continue;
            out.emplace_back(double(i) + u, double(j) + v);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifold arcs of one family member.

template <typename Map>
struct ArcPair {
    double k = 0;
    SaddleData<double> saddle;
    Parametrization<double, Map> U;
    Parametrization<double, Inverted<Map>> S;
    double tu_lo = 0, tu_hi = 0, ts_lo = 0, ts_hi = 0;  // absolute parameter ranges
    Vec2<double> u_shift, s_shift;
    std::vector<Vec2<double>> up, sp;
    std::vector<double> ut, st;

    ShiftedParam<Parametrization<double, Map>> Uc() const { return {&U, u_shift}; }
    ShiftedParam<Parametrization<double, Inverted<Map>>> Sc() const { return {&S, s_shift}; }
};

template <typename Map>
ArcPair<Map> build_arcs(const Map& F, double k, const TrackerConfig& cfg, int depth) {
    ArcPair<Map> A;
    A.k = k;
    A.saddle = saddle_data<double>(F, cfg.saddle);
    if (!(A.saddle.lambda > 1)) throw StageError("scan", "saddle with negative eigenvalues is not tracked");
    A.U = parametrize<double>(F, cfg.saddle, A.saddle.lambda, A.saddle.v_u, cfg.order, cfg.defect_tol);
    A.S = parametrize<double>(invert(F), cfg.saddle, A.saddle.lambda, A.saddle.v_s, cfg.order, cfg.defect_tol);
    const double h = std::log(A.saddle.lambda), grow = cfg.extend_per_depth * h * depth;
    A.tu_lo = cfg.unstable.t_lo;
    A.tu_hi = cfg.unstable.t_hi + grow;
    A.ts_lo = cfg.stable.t_lo;
    A.ts_hi = cfg.stable.t_hi + grow;
    A.u_shift = cfg.unstable.shift;
    A.s_shift = cfg.stable.shift;
    sample_arc(A.Uc(), A.tu_lo, A.tu_hi, cfg.max_chord, cfg.max_turn, A.up, A.ut);
    sample_arc(A.Sc(), A.ts_lo, A.ts_hi, cfg.max_chord, cfg.max_turn, A.sp, A.st);
    return A;
}

struct Crossing {
    Vec2<double> point;
    double t_u = 0, t_s = 0;
    double angle = 0;
};

namespace detail {

inline double interp_param(const std::vector<double>& t, double idx) {
    std::size_t i = std::min(std::size_t(idx), t.size() - 2);
    double f = idx - double(i);
    return t[i] + (t[i + 1] - t[i]) * f;
}

template <typename Map>
std::optional<Crossing> refine_crossing(const ArcPair<Map>& A, double tu, double ts) {
    auto U = A.Uc();
    auto S = A.Sc();
    if (!detail::refine_intersection(U, S, tu, ts)) return std::nullopt;
    Crossing c;
    c.t_u = tu;
    c.t_s = ts;
    c.point = U.eval_t(tu);
    c.angle = crossing_angle(U.tangent_t(tu), S.tangent_t(ts));
    return c;
}

inline void add_unique(std::vector<Crossing>& v, const Crossing& c) {
    for (const auto& o : v)
        if (std::abs(o.t_u - c.t_u) < 1e-10 * (1 + std::abs(c.t_u)) &&
            std::abs(o.t_s - c.t_s) < 1e-10 * (1 + std::abs(c.t_s)))
            return;
    v.push_back(c);
}

}  // namespace detail

// Transversal crossings in the window: polyline hits refined by Newton on
// the exact parametrizations.
template <typename Map>
std::vector<Crossing> window_crossings(const ArcPair<Map>& A, const Box& box) {
    std::vector<Crossing> out;
    for (auto [iu, is] : crossings_in_box(A.up, A.sp, box)) {
        double tu = detail::interp_param(A.ut, iu), ts = detail::interp_param(A.st, is);
        auto c = detail::refine_crossing(A, tu, ts);
        if (!c || !box.contains(c->point)) continue;
        if (c->t_u < A.tu_lo || c->t_u > A.tu_hi || c->t_s < A.ts_lo || c->t_s > A.ts_hi) continue;
        detail::add_unique(out, *c);
    }
    std::sort(out.begin(), out.end(), [](const Crossing& a, const Crossing& b) { return a.t_u < b.t_u; });
    return out;
}

// Smallest distance between the two arcs near (tu, ts): Brent on the
// distance from U(t) to its foot point on S.
template <typename Map>
double local_arc_distance(const ArcPair<Map>& A, double tu, double ts, double half_width) {
    auto U = A.Uc();
    auto S = A.Sc();
    double s = ts;
    auto dist = [&](double t) {
        Vec2<double> q = U.eval_t(t);
        s = detail::foot_parameter(S, q, s, A.ts_lo, A.ts_hi);
        return norm(S.eval_t(s) - q);
    };
    auto r = boost::math::tools::brent_find_minima(dist, tu - half_width, tu + half_width, 40);
    return r.second;
}

// ---------------------------------------------------------------------------
// Scan tree.

struct TangencyRecord {
    double k_star = 0;
    double bracket_lo = 0, bracket_hi = 0;  // parameters with and without the merging pair
    double min_angle = 0;                    // crossing angle at the last resolved parameter
    Vec2<double> point;
    double beta = std::numeric_limits<double>::quiet_NaN();  // distance ~ |k - k*|^beta
    double beta_stderr = std::numeric_limits<double>::quiet_NaN();
};

struct ParameterSample {
    double k = 0;
    int crossings = -1;  // -1 when the arcs could not be built
    double min_angle = std::numeric_limits<double>::quiet_NaN();
};

struct ScanNode {
    int depth = 0;
    double lo = 0, hi = 0;
    int parent = -1;
    std::vector<int> children;
    std::vector<ParameterSample> samples;
    std::vector<TangencyRecord> tangencies;
    std::vector<std::pair<double, double>> undecided;
    std::vector<std::string> notes;
};

struct ScanTree {
    std::vector<ScanNode> nodes;  // nodes[0] is the root; children follow parents
    std::size_t budget = 0, used = 0;
    bool exhausted = false;

    // Children lie strictly inside their parent; siblings are disjoint.
    bool nested() const {
        for (const auto& n : nodes)
            for (int c : n.children) {
                const auto& ch = nodes[c];
                if (!(ch.lo > n.lo && ch.hi < n.hi && ch.lo < ch.hi) || ch.parent < 0 ||
                    &nodes[ch.parent] != &n || ch.depth != n.depth + 1)
                    return false;
            }
        return true;
    }
    bool siblings_disjoint() const {
        for (const auto& n : nodes) {
            std::vector<std::pair<double, double>> iv;
            for (int c : n.children) iv.emplace_back(nodes[c].lo, nodes[c].hi);
            std::sort(iv.begin(), iv.end());
            for (std::size_t i = 1; i < iv.size(); ++i)
                if (!(iv[i].first > iv[i - 1].second)) return false;
        }
        return true;
    }
    int max_depth() const {
        int d = 0;
        for (const auto& n : nodes) d = std::max(d, n.depth);
        return d;
    }
    // Measure of the depth-d intervals divided by the root length.
    double coverage(int depth) const {
        double s = 0;
        for (const auto& n : nodes)
            if (n.depth == depth) s += n.hi - n.lo;
        return nodes.empty() ? 0.0 : s / (nodes[0].hi - nodes[0].lo);
    }
    double undecided_measure() const {
        double s = 0;
        for (const auto& n : nodes)
            for (auto [a, b] : n.undecided) s += b - a;
        return s;
    }
    std::size_t undecided_count() const {
        std::size_t c = 0;
        for (const auto& n : nodes) c += n.undecided.size();
        return c;
    }
};

struct ScanOptions {
    int grid = 16;               // parameter steps per interval
    int depth = 1;               // levels below the root that are scanned
    std::size_t budget = 2000;   // arc constructions over the whole tree
    double k_tol = 1e-6;         // count bisection width
    double angle_threshold = 1e-3;
    bool fit_unfolding = true;
    double child_fraction = 0.45;  // child radius relative to the free space around k*
    int max_split = 4;             // halvings of a step with an ambiguous count change
};

namespace detail {

template <typename Family>
class Scanner {
public:
    using Map = decltype(std::declval<const Family&>().map_at(0.0));

    Scanner(const Family& fam, const TrackerConfig& cfg, const ScanOptions& opt, ScanTree& tree)
        : fam_(fam), cfg_(cfg), opt_(opt), tree_(tree) {}

    struct Snapshot {
        double k = 0;
        bool ok = false;
        std::string why;
        std::optional<ArcPair<Map>> arcs;
        std::vector<Crossing> xs;
    };

    Snapshot snapshot(double k, int depth) {
        Snapshot s;
        s.k = k;
        if (tree_.used >= tree_.budget) {
            tree_.exhausted = true;
            s.why = "budget exhausted";
            return s;
        }
        ++tree_.used;
        try {
            s.arcs.emplace(build_arcs(fam_.map_at(k), k, cfg_, depth));
            s.xs = window_crossings(*s.arcs, cfg_.window);
            s.ok = true;
        } catch (const std::exception& e) {
            s.why = e.what();
        }
        return s;
    }

    static double min_angle(const std::vector<Crossing>& xs) {
        double m = std::numeric_limits<double>::quiet_NaN();
        for (const auto& c : xs)
            if (!(c.angle >= m)) m = c.angle;
        return m;
    }

    // Crossings at the rich side without a partner at the poor side.
    static std::vector<Crossing> unmatched(const std::vector<Crossing>& rich, const std::vector<Crossing>& poor) {
        std::vector<Crossing> out;
        std::vector<bool> used(poor.size(), false);
        for (const auto& c : rich) {
            int best = -1;
            double bd = 1e-3;
            for (std::size_t j = 0; j < poor.size(); ++j) {
                double d = norm(poor[j].point - c.point);
                if (!used[j] && d < bd) { bd = d; best = int(j); }
            }
            if (best >= 0) used[best] = true; else out.push_back(c);
        }
        return out;
    }

    // One parameter step. A change by two is bisected and resolved; other
    // changes are split into halves up to opt.max_split times so that
    // events entering through an arc end or the window edge separate from
    // merging pairs. A change by one that survives to width k_tol is such
    // an event and is decided.
    void classify(const Snapshot& a, const Snapshot& b, int depth, int level, ScanNode& node,
                  std::vector<TangencyRecord>& found) {
        if (!a.ok || !b.ok) {
            node.undecided.emplace_back(std::min(a.k, b.k), std::max(a.k, b.k));
            node.notes.push_back(!a.ok ? a.why : b.why);
            return;
        }
        long diff = std::labs(long(a.xs.size()) - long(b.xs.size()));
        if (diff == 0) return;
        if (diff == 2) {
            resolve(a, b, depth, level, node, found);
            return;
        }
        if (std::abs(b.k - a.k) <= opt_.k_tol && diff == 1) {
            node.notes.push_back("crossing entered or left through an arc end or the window edge near k = " +
                                 std::to_string(0.5 * (a.k + b.k)));
            return;
        }
        if (level >= opt_.max_split && diff != 1) {
            node.undecided.emplace_back(std::min(a.k, b.k), std::max(a.k, b.k));
            node.notes.push_back("crossing count changed by " + std::to_string(diff));
            return;
        }
        Snapshot m = snapshot(0.5 * (a.k + b.k), depth);
        bool deep = level >= opt_.max_split;
        // Past max_split only a change by one is followed, by bisection.
        if (deep && m.ok && (m.xs.size() == a.xs.size() || m.xs.size() == b.xs.size())) {
            if (m.xs.size() == a.xs.size()) classify(m, b, depth, level, node, found);
            else classify(a, m, depth, level, node, found);
            return;
        }
        if (deep) {
            node.undecided.emplace_back(std::min(a.k, b.k), std::max(a.k, b.k));
            node.notes.push_back("crossing count not monotone near an arc-end event");
            return;
        }
        classify(a, m, depth, level + 1, node, found);
        classify(m, b, depth, level + 1, node, found);
    }

    void resolve(Snapshot a, Snapshot b, int depth, int level, ScanNode& node, std::vector<TangencyRecord>& found) {
        // Count bisection.
        while (std::abs(b.k - a.k) > opt_.k_tol) {
            Snapshot m = snapshot(0.5 * (a.k + b.k), depth);
            if (!m.ok) {
                node.undecided.emplace_back(std::min(a.k, b.k), std::max(a.k, b.k));
                node.notes.push_back("bisection: " + m.why);
                return;
            }
            if (m.xs.size() == a.xs.size()) a = std::move(m);
            else if (m.xs.size() == b.xs.size()) b = std::move(m);
            else if (level < opt_.max_split) {
                classify(a, m, depth, level + 1, node, found);
                classify(m, b, depth, level + 1, node, found);
                return;
            } else {
                node.undecided.emplace_back(std::min(a.k, b.k), std::max(a.k, b.k));
                node.notes.push_back("bisection: crossing count not monotone");
                return;
            }
        }
        Snapshot& rich = a.xs.size() > b.xs.size() ? a : b;
        Snapshot& poor = a.xs.size() > b.xs.size() ? b : a;
        auto extra = unmatched(rich.xs, poor.xs);
        if (extra.size() != 2) {
            node.notes.push_back("count change without an isolated merging pair");
            return;
        }
        Crossing A = extra[0], B = extra[1];
        double kr = rich.k, kp = poor.k;
        double angle = std::min(A.angle, B.angle);
        // Follow the pair towards the poor side with exact corrections.
        while (angle >= opt_.angle_threshold && std::abs(kr - kp) > 1e-13) {
            double km = 0.5 * (kr + kp);
            if (tree_.used >= tree_.budget) {
                tree_.exhausted = true;
                break;
            }
            ++tree_.used;
            std::optional<ArcPair<Map>> arcs;
            try {
                arcs.emplace(build_arcs(fam_.map_at(km), km, cfg_, depth));
            } catch (const std::exception& e) {
                node.notes.push_back(std::string("continuation: ") + e.what());
                break;
            }
            auto ca = refine_crossing(*arcs, A.t_u, A.t_s);
            auto cb = refine_crossing(*arcs, B.t_u, B.t_s);
            bool two = ca && cb && std::abs(ca->t_u - cb->t_u) > 1e-11 * (1 + std::abs(ca->t_u));
            if (two) {
                A = *ca;
                B = *cb;
                kr = km;
                angle = std::min(A.angle, B.angle);
            } else {
                kp = km;
            }
        }
        if (angle >= opt_.angle_threshold) {
            node.notes.push_back("crossing pair merged at angle " + std::to_string(angle) + " (not a tangency)");
            return;
        }
        TangencyRecord r;
        r.k_star = 0.5 * (kr + kp);
        r.bracket_lo = std::min(kr, kp);
        r.bracket_hi = std::max(kr, kp);
        r.min_angle = angle;
        r.point = (A.point + B.point) * 0.5;
        if (opt_.fit_unfolding) fit_unfolding(r, (A.t_u + B.t_u) * 0.5, (A.t_s + B.t_s) * 0.5, kp - kr, depth);
        found.push_back(r);
    }

    // Minimal distance on the side without the pair at offsets
    // 10^-5 .. 10^-2.5, fitted as c |k - k*|^beta.
    void fit_unfolding(TangencyRecord& r, double tu, double ts, double dir, int depth) {
        std::vector<double> lx, ly;
        double sgn = dir > 0 ? 1.0 : -1.0;
        for (double e = -5.0; e <= -2.49; e += 0.5) {
            double dk = std::pow(10.0, e);
            if (tree_.used >= tree_.budget) break;
            ++tree_.used;
            try {
                auto arcs = build_arcs(fam_.map_at(r.k_star + sgn * dk), r.k_star + sgn * dk, cfg_, depth);
                // Search over roughly 0.05 of arc length on either side.
                double hw = 0.05 / std::max(norm(arcs.U.tangent_t(tu)), 1e-12);
                double d = local_arc_distance(arcs, tu, ts, hw);
                if (d > 0) {
                    lx.push_back(std::log(dk));
                    ly.push_back(std::log(d));
                }
            } catch (const std::exception&) {
            }
        }
        if (lx.size() >= 3) {
            LinearFit f = fit_line(lx, ly);
            r.beta = f.slope;
            r.beta_stderr = f.slope_stderr;
        }
    }

    void scan_node(int idx) {
        const double lo = tree_.nodes[idx].lo, hi = tree_.nodes[idx].hi;
        const int depth = tree_.nodes[idx].depth;
        std::vector<Snapshot> snaps;
        for (int i = 0; i <= opt_.grid; ++i) {
            double k = lo + (hi - lo) * i / opt_.grid;
            snaps.push_back(snapshot(k, depth));
            ParameterSample ps;
            ps.k = k;
            if (snaps.back().ok) {
                ps.crossings = int(snaps.back().xs.size());
                ps.min_angle = min_angle(snaps.back().xs);
            }
            tree_.nodes[idx].samples.push_back(ps);
        }
        std::vector<TangencyRecord> found;
        for (int i = 0; i < opt_.grid; ++i) classify(snaps[i], snaps[i + 1], depth, 0, tree_.nodes[idx], found);
        std::sort(found.begin(), found.end(),
                  [](const TangencyRecord& x, const TangencyRecord& y) { return x.k_star < y.k_star; });
        tree_.nodes[idx].tangencies = found;
        // Children: open intervals around each tangency, strictly inside the
        // parent and pairwise disjoint.
        if (depth >= opt_.depth) return;
        std::vector<int> kids;
        const double step = (hi - lo) / opt_.grid;
        for (std::size_t i = 0; i < found.size(); ++i) {
            double k = found[i].k_star;
            double room = std::min({step, k - lo, hi - k});
            if (i > 0) room = std::min(room, 0.5 * (k - found[i - 1].k_star));
            if (i + 1 < found.size()) room = std::min(room, 0.5 * (found[i + 1].k_star - k));
            double r = opt_.child_fraction * room;
            if (!(r > 0)) continue;
            ScanNode ch;
            ch.depth = depth + 1;
            ch.lo = k - r;
            ch.hi = k + r;
            ch.parent = idx;
            tree_.nodes.push_back(ch);
            int ci = int(tree_.nodes.size()) - 1;
            tree_.nodes[idx].children.push_back(ci);
            kids.push_back(ci);
        }
        for (int c : kids) scan_node(c);
    }

private:
    const Family& fam_;
    const TrackerConfig& cfg_;
    const ScanOptions& opt_;
    ScanTree& tree_;
};

}  // namespace detail

// Scan [k_lo, k_hi] for tangencies between the tracked arcs; the tree has
// at most opt.depth + 1 levels. Intervals whose samples cannot be decided
// are recorded in `undecided`, never dropped.
template <typename Family>
ScanTree tangency_scan(const Family& fam, double k_lo, double k_hi, const TrackerConfig& cfg, const ScanOptions& opt) {
    if (!(k_hi > k_lo)) throw InputError("tangency_scan: empty parameter interval");
    if (opt.depth < 0 || opt.depth > 6) throw InputError("tangency_scan: depth must lie in 0..6");
    if (opt.grid < 2) throw InputError("tangency_scan: grid must be at least 2");
    ScanTree tree;
    tree.budget = opt.budget;
    ScanNode root;
    root.lo = k_lo;
    root.hi = k_hi;
    tree.nodes.push_back(root);
    detail::Scanner<Family> sc(fam, cfg, opt, tree);
    sc.scan_node(0);
    return tree;
}

// Arcs for f_k at the saddle (0, 0): the unstable branch and the downward
// stable branch lifted by (0, 1), both for t in [-3, 5.5], counted in
// [-10, 10]^2 of the lift.
inline TrackerConfig standard_tracker() {
    TrackerConfig c;
    c.unstable = {-3.0, 5.5, {0, 0}};
    c.stable = {-3.0, 5.5, {0, 1}};
    c.window = {-10, 10, -10, 10};
    c.extend_per_depth = 0.1;
    return c;
}

}  // namespace ssea
