#pragma once

// Construction of a sheared standard map with a quadratic tangency at a
// prescribed parameter. Uses only the plain standard map's parametrized
// manifolds and level-set bisection, none of the scanner's counting or
// continuation code.
//
// Geometry at the saddle (0, 0): for t in [-2.3, -0.3] the unstable branch
// is a graph x = u(y) over y in about [0.1, 0.5]; the downward stable branch
// lifted by (0, 1), t in [-1.5, 0.3], is a graph x = s(y) close to x = 0.
// The shear acts after f_k, so the sheared unstable arc is
// x = u(y) + sigma b(y), while the stable arc is unchanged because its
// forward orbit stays below the strip. The two touch exactly when sigma
// equals max_y (s - u) / b.

#include <boost/math/tools/minima.hpp>

#include "ssea/scan.hpp"
#include "ssea/stdmap.hpp"

namespace oracle {

struct ManufacturedTangency {
    ssea::LocalShear shear;
    double y_touch = 0;
    ssea::TrackerConfig tracker;
};

inline ManufacturedTangency manufacture_tangency(double k_star, double yc = 0.25, double w = 0.05) {
    using namespace ssea;
    auto m = standard_saddle_manifolds(k_star, 0.1);
    auto level = [](const auto& P, double dy, double y, double a, double b) {
        double fa = P.eval_t(a).y + dy - y;
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (a + b), fm = P.eval_t(mid).y + dy - y;
            if ((fm > 0) == (fa > 0)) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        return 0.5 * (a + b);
    };
    LocalShear sh;
    sh.yc = yc;
    sh.w = w;
    auto ratio = [&](double y) {
        double u = m.U.eval_t(level(m.U, 0.0, y, -2.3, -0.3)).x;
        double s = m.S.eval_t(level(m.S, 1.0, y, -1.5, 0.3)).x;
        double u_ = (y - yc) / w, b = (1 - u_ * u_) * (1 - u_ * u_) * (1 - u_ * u_);
        return (s - u) / b;
    };
    double best = -1e300, by = yc;
    for (int i = 1; i < 200; ++i) {
        double y = yc - w + 2 * w * i / 200.0;
        double r = ratio(y);
        if (r > best) {
            best = r;
            by = y;
        }
    }
    auto res = boost::math::tools::brent_find_minima([&](double y) { return -ratio(y); }, by - 2 * w / 200,
                                                     by + 2 * w / 200, 52);
    ManufacturedTangency out;
    sh.sigma = -res.second;
    out.shear = sh;
    out.y_touch = res.first;
    out.tracker.unstable = {-2.3, -0.3, {0, 0}};
    out.tracker.stable = {-1.5, 0.3, {0, 1}};
    out.tracker.window = {-0.1, 0.15, yc - 2 * w, yc + 2 * w};
    out.tracker.extend_per_depth = 0;
    return out;
}

}  // namespace oracle
