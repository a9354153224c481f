#pragma once

// Subcommand bodies. Each reads only the effective RunConfig, writes through
// RunOutput and returns an exit code; failures propagate as the typed errors
// of core/errors.hpp and exit_code() maps them.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "ssea/cantor.hpp"
#include "ssea/cli/config.hpp"
#include "ssea/cli/output.hpp"
#include "ssea/cli/parallel.hpp"
#include "ssea/core/errors.hpp"
#include "ssea/horseshoe.hpp"
#include "ssea/scan.hpp"
#include "ssea/separatrix.hpp"
#include "ssea/stdmap.hpp"

namespace ssea::cli {

using ojson = nlohmann::ordered_json;

enum ExitCode { ok = 0, input_error = 2, precision_refused = 3, stage_failed = 4, budget_exhausted = 5 };

// Supported significand widths: 0 (policy), 53 and 128.
inline int precision_bits(const RunConfig& c) {
    auto b = c.integer("precision.bits");
    if (b != 0 && b != 53 && b != 128) throw InputError("precision.bits must be 0, 53 or 128");
    return int(b);
}

// Width for a given h: the policy value, or the requested one when it is at
// least the policy value. Throws PrecisionError otherwise.
inline int bits_for_h(double h, int requested) {
    if (!(h > 0) || !std::isfinite(h)) throw InputError("h must be positive");
    const int need = required_precision_bits(h);
    if (need == 0)
        throw PrecisionError("h = " + num(h) + " is below 0.35; more than 128 significand bits would be required", 256);
    if (requested == 0) return need;
    if (requested < need)
        throw PrecisionError("h = " + num(h) + " needs " + std::to_string(need) + " significand bits, " +
                                 std::to_string(requested) + " requested",
                             need);
    return requested;
}

inline int jobs(const RunConfig& c) {
    auto j = c.integer("run.jobs");
    if (j < 1 || j > 256) throw InputError("run.jobs must lie in 1..256");
    return int(j);
}

inline std::size_t positive_count(const RunConfig& c, const std::string& key) {
    auto v = c.integer(key);
    if (v < 1) throw InputError(key + " must be positive");
    return std::size_t(v);
}

// ---------------------------------------------------------------------------
// cantor

inline ojson branch_json(const Branch& b) {
    return {{"ratio", b.ratio}, {"offset", b.offset}, {"orientation", b.orientation}};
}

// {"hull": [lo, hi], "branches": [{ratio, offset, orientation}, ...]} or
// {"affine": [r0, r1], "hull": [lo, hi]}.
inline CantorSystem parse_system(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("cantor: malformed JSON: ") + e.what());
    }
    try {
        Interval hull{0, 1};
        if (j.contains("hull")) {
            const auto& h = j.at("hull");
            if (!h.is_array() || h.size() != 2) throw InputError("cantor: hull must be [lo, hi]");
            hull = {h[0].get<double>(), h[1].get<double>()};
        }
        CantorSystem s;
        if (j.contains("affine")) {
            const auto& a = j.at("affine");
            if (!a.is_array() || a.size() != 2) throw InputError("cantor: affine must be [r0, r1]");
            s = affine_system(a[0].get<double>(), a[1].get<double>(), hull);
        } else if (j.contains("branches")) {
            const auto& b = j.at("branches");
            if (!b.is_array() || b.size() != 2) throw InputError("cantor: exactly two branches are required");
            s.hull = hull;
            for (int i = 0; i < 2; ++i)
                s.branch[i] = Branch::affine(b[i].at("ratio").get<double>(), b[i].at("offset").get<double>(),
                                             b[i].value("orientation", 1));
        } else {
            throw InputError("cantor: system needs 'affine' or 'branches'");
        }
        for (const auto& [key, v] : j.items())
            if (key != "hull" && key != "affine" && key != "branches")
                throw InputError("cantor: unknown system key '" + key + "'");
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("cantor: bad system description: ") + e.what());
    }
}

inline CantorSystem cantor_system(const RunConfig& c) {
    const std::string& b = c.text("cantor.builtin");
    const auto& a = c.list("cantor.affine");
    const std::string& path = c.text("cantor.system");
    const int given = int(!b.empty()) + int(!a.empty()) + int(!path.empty());
    if (given != 1) throw InputError("cantor: give exactly one of --builtin, --affine, --system");
    if (!b.empty()) {
        if (b == "middle-thirds") return middle_thirds();
        if (b == "middle-fifths") return middle_fifths();
        throw InputError("cantor: unknown builtin '" + b + "'");
    }
    if (!a.empty()) {
        if (a.size() != 2) throw InputError("cantor: --affine takes two ratios");
        CantorSystem s = affine_system(a[0], a[1]);
        s.validate();
        return s;
    }
    std::ifstream f(path);
    if (!f) throw InputError("cantor: cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_system(ss.str());
}

inline ojson bound_json(const DimensionBound& b) {
    return {{"d", b.d}, {"method", method_name(b.method)}, {"tolerance", b.tolerance}};
}

inline int cmd_cantor(const RunConfig& c, RunOutput& out) {
    const CantorSystem sys = cantor_system(c);
    const auto depth = c.integer("cantor.depth");
    if (depth < 1 || depth > 22) throw InputError("cantor: depth must lie in 1..22");
    const CylinderTree tree = refine(sys, int(depth));
    const ThicknessReport t = lateral_thickness(tree);
    ojson j;
    j["system"] = {{"hull", {sys.hull.lo, sys.hull.hi}}, {"branches", {branch_json(sys.branch[0]), branch_json(sys.branch[1])}}};
    j["thickness"] = {{"tau_L", t.tau_L}, {"tau_R", t.tau_R},   {"depth", t.depth},
                      {"argmin_L", t.argmin_L.str()}, {"argmin_R", t.argmin_R.str()}, {"gaps", t.gaps.size()}};
    j["bounds"] = {{"exact", bound_json(dimension_lower_bound_exact(t.tau_L, t.tau_R))},
                   {"log", bound_json(dimension_lower_bound_log(t.tau_L, t.tau_R))}};
    const Branch& b0 = sys.branch[0];
    const Branch& b1 = sys.branch[1];
    if (b0.ratio + b1.ratio < 1) j["moran"] = bound_json(moran_dimension(b0.ratio, b1.ratio));
    out.write_json("cantor.json", j);
    if (c.flag("output.plot_data")) {
        Csv p({"series", "x", "y"});
        for (int m = 0; m <= int(depth); ++m)
            for (const Interval& iv : tree.cover(m)) p.row("cover_" + std::to_string(m), iv.lo, iv.hi);
        out.write_csv("cantor_plot.csv", p);
    }
    return ok;
}

// ---------------------------------------------------------------------------
// splitting

struct SlopeInterval {
    SplittingFit fit;
    double lo = 0, hi = 0;  // 95% confidence interval of the slope
};

inline SlopeInterval slope_interval(const std::vector<double>& h, const std::vector<double>& area) {
    SlopeInterval s;
    s.fit = fit_splitting(h, area);
    const double dof = double(h.size()) - 2;
    double half = 0;
    if (dof >= 1) {
        boost::math::students_t dist(dof);
        half = boost::math::quantile(dist, 0.975) * s.fit.fit.slope_stderr;
    }
    s.lo = s.fit.fit.slope - half;
    s.hi = s.fit.fit.slope + half;
    return s;
}

inline std::vector<double> splitting_hs(const RunConfig& c) {
    std::vector<double> hs = c.list("splitting.h");
    if (hs.empty()) hs.push_back(c.real("rescaled.h"));
    return hs;
}

inline int cmd_splitting(const RunConfig& c, RunOutput& out) {
    const std::vector<double> hs = splitting_hs(c);
    const int req = precision_bits(c);
    const double theta1 = c.real("splitting.theta1");
    if (theta1 == 0) throw InputError("splitting: theta1 must be nonzero");
    std::vector<int> bits;
    for (double h : hs) bits.push_back(bits_for_h(h, req));  // refuse before any work
    auto reps = parallel_map<SplittingReport<double>>(hs.size(), jobs(c),
                                                      [&](std::size_t i) { return measure_splitting_bits(hs[i], bits[i]); });
    Csv t({"h", "precision_bits", "intersections", "angle", "lobe_area", "lobe_area_next", "accuracy",
           "predicted_area", "ln_area_h5"});
    std::vector<double> area;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const auto& r = reps[i];
        area.push_back(r.lobe_area);
        t.row(hs[i], r.precision_bits, r.intersections.size(), r.angle, r.lobe_area, r.lobe_area_next, r.accuracy,
              predicted_lobe_area(hs[i], theta1), std::log(r.lobe_area * std::pow(hs[i], 5)));
    }
    out.write_csv("splitting.csv", t);
    std::optional<SlopeInterval> fit;
    if (hs.size() >= 3) {
        fit = slope_interval(hs, area);
        Csv f({"n", "slope", "slope_stderr", "ci95_lo", "ci95_hi", "intercept", "residual_rms", "target",
               "relative_error"});
        f.row(hs.size(), fit->fit.fit.slope, fit->fit.fit.slope_stderr, fit->lo, fit->hi, fit->fit.fit.intercept,
              fit->fit.fit.residual_rms, fit->fit.target, fit->fit.relative_error());
        out.write_csv("splitting_fit.csv", f);
    }
    if (c.flag("output.plot_data")) {
        Csv p({"series", "x", "y"});
        for (std::size_t i = 0; i < hs.size(); ++i) p.row("measured", 1 / hs[i], std::log(area[i] * std::pow(hs[i], 5)));
        if (fit)
            for (double h : hs) p.row("fit", 1 / h, fit->fit.fit.intercept + fit->fit.fit.slope / h);
        out.write_csv("splitting_plot.csv", p);
    }
    return ok;
}

// ---------------------------------------------------------------------------
// horseshoe

inline HorseshoeConfig horseshoe_config(const RunConfig& c) {
    HorseshoeConfig h;
    h.nu = c.real("horseshoe.nu");
    h.theta1 = c.real("splitting.theta1");
    h.window = c.real("horseshoe.window");
    h.grid = int(c.integer("horseshoe.grid"));
    h.max_grid = int(c.integer("horseshoe.max_grid"));
    h.min_order = int(c.integer("horseshoe.min_order"));
    h.max_order = int(c.integer("horseshoe.max_order"));
    if (!(h.nu > 0)) throw InputError("horseshoe: nu must be positive");
    if (h.theta1 == 0) throw InputError("horseshoe: theta1 must be nonzero");
    if (h.grid < 3 || h.max_grid < h.grid) throw InputError("horseshoe: need 3 <= grid <= max_grid");
    if (h.min_order < 1 || h.max_order < h.min_order) throw InputError("horseshoe: need 1 <= min_order <= max_order");
    return h;
}

inline ojson margin_json(const ConditionMargin& m) { return {{"pass", m.pass}, {"worst", m.worst}}; }

inline ojson class_f_json(const ClassFReport& r) {
    return {{"pass", r.pass()},
            {"grid", r.grid},
            {"params", {{"C_star", r.params.C_star}, {"eps", r.params.eps}, {"gamma", r.params.gamma}}},
            {"det_tol", r.det_tol},
            {"diam_domain", margin_json(r.diam_domain)},
            {"diam_image", margin_json(r.diam_image)},
            {"det", margin_json(r.det)},
            {"d_small", margin_json(r.d_small)},
            {"a_large", margin_json(r.a_large)},
            {"a_bounded", margin_json(r.a_bounded)},
            {"bc_small", margin_json(r.bc_small)},
            {"tilde_first", margin_json(r.tilde_first)},
            {"mixed", margin_json(r.mixed)},
            {"tilde_second", margin_json(r.tilde_second)},
            {"diagonal", margin_json(r.diagonal)},
            {"variation_0", margin_json(r.variation[0])},
            {"variation_1", margin_json(r.variation[1])},
            {"gap_domain", margin_json(r.gap_domain)},
            {"gap_image", margin_json(r.gap_image)},
            {"gap_domain_size", r.gap_domain_size},
            {"gap_image_size", r.gap_image_size}};
}

inline ojson cone_branch_json(const ConeBranchResult& b) {
    return {{"unstable_ok", b.unstable_ok}, {"stable_ok", b.stable_ok}, {"worst_u", b.worst_u},
            {"worst_s", b.worst_s},         {"growth_u", b.growth_u},   {"growth_s", b.growth_s}};
}

inline ojson factor_json(const FactorBound& f) {
    return {{"tau_L", f.tau_L}, {"tau_R", f.tau_R}, {"interval_L", {f.interval_L.first, f.interval_L.second}},
            {"interval_R", {f.interval_R.first, f.interval_R.second}}, {"d", f.d}, {"d_log", f.d_log}};
}

inline ojson pipeline_json(const DimensionPipelineResult& r) {
    return {{"h", r.h},
            {"nu", r.nu},
            {"theta1", r.theta1},
            {"n", r.n},
            {"transit_count", r.transit_count},
            {"jet_order", r.jet_order},
            {"x_s", r.x_s},
            {"y_u", r.y_u},
            {"params", {{"C_star", r.params.C_star}, {"eps", r.params.eps}, {"gamma", r.params.gamma}}},
            {"D", r.D},
            {"class_f_pass", r.class_f_pass},
            {"cones",
             {{"pass", r.cones.pass},
              {"kappa", r.cones.kappa},
              {"kappa_lo", r.cones.kappa_lo},
              {"kappa_hi", r.cones.kappa_hi},
              {"growth_ok", r.cones.growth_ok},
              {"grid", r.cones.grid},
              {"s0", cone_branch_json(r.cones.s0)},
              {"s1", cone_branch_json(r.cones.s1)},
              {"note", r.cones.note}}},
            {"stable", factor_json(r.stable)},
            {"unstable", factor_json(r.unstable)},
            {"d_s", r.d_s},
            {"d_u", r.d_u},
            {"total", r.total},
            {"total_log", r.total_log},
            {"grid", r.grid},
            {"precision_bits", r.precision_bits},
            {"log_a_variation", r.log_a_variation}};
}

struct PipelineRun {
    DimensionPipelineResult result;
    ClassFReport class_f;
    double sigma = 1;
};

inline PipelineRun run_pipeline(double h, int bits, const HorseshoeConfig& cfg) {
    PipelineRun p;
    auto take = [&p](auto&& run) {
        p.result = run.result;
        p.class_f = run.class_f;
        p.sigma = run.sigma;
    };
    if (bits == 53)
        take(run_horseshoe(build_geometry<double>(h, cfg), cfg));
    else
        take(run_horseshoe(build_geometry<ext128>(ext128(h), cfg), cfg));
    return p;
}

inline PipelineRun run_synthetic(double tau_L, double tau_R, int grid) {
    PipelineRun p;
    p.result = synthetic_pipeline(tau_L, tau_R, grid);
    AffineHorseshoe m = AffineHorseshoe::from_thickness(tau_L, tau_R);
    p.class_f = classF_evaluate(sample_class_f(m.sampler(), m.rect(0), m.rect(1), grid), p.result.params);
    return p;
}

inline int cmd_horseshoe(const RunConfig& c, RunOutput& out) {
    const HorseshoeConfig cfg = horseshoe_config(c);
    PipelineRun p;
    const std::string& syn = c.text("horseshoe.synthetic");
    if (!syn.empty()) {
        if (syn != "affine") throw InputError("horseshoe: unknown synthetic model '" + syn + "'");
        const auto& tau = c.list("horseshoe.tau");
        if (tau.size() != 2) throw InputError("horseshoe: --tau takes two values");
        p = run_synthetic(tau[0], tau[1], cfg.grid);
    } else {
        const double h = c.real("rescaled.h");
        p = run_pipeline(h, bits_for_h(h, precision_bits(c)), cfg);
    }
    ojson j;
    j["model"] = syn.empty() ? "rescaled" : syn;
    j["result"] = pipeline_json(p.result);
    if (!syn.empty()) j["result"].erase("cones");  // the synthetic model has no cone field
    j["class_f"] = class_f_json(p.class_f);
    j["homothety"] = p.sigma;
    out.write_json("horseshoe.json", j);
    return ok;
}

inline int cmd_horseshoe_sweep(const RunConfig& c, RunOutput& out) {
    const HorseshoeConfig cfg = horseshoe_config(c);
    const auto& hs = c.list("horseshoe.sweep");
    if (hs.empty()) throw InputError("horseshoe sweep: no h values");
    const int req = precision_bits(c);
    std::vector<int> bits;
    for (double h : hs) bits.push_back(bits_for_h(h, req));
    auto runs = parallel_map<PipelineRun>(hs.size(), jobs(c), [&](std::size_t i) { return run_pipeline(hs[i], bits[i], cfg); });
    Csv t({"h", "n", "precision_bits", "grid", "D", "d_s", "d_u", "total", "total_log", "class_f_pass", "cones_pass",
           "x_s", "y_u", "tau_L_s", "tau_R_s", "tau_L_u", "tau_R_u"});
    for (const auto& p : runs) {
        const auto& r = p.result;
        t.row(r.h, r.n, r.precision_bits, r.grid, r.D, r.d_s, r.d_u, r.total, r.total_log, r.class_f_pass, r.cones.pass,
              r.x_s, r.y_u, r.stable.tau_L, r.stable.tau_R, r.unstable.tau_L, r.unstable.tau_R);
    }
    out.write_csv("horseshoe_sweep.csv", t);
    if (c.flag("output.plot_data")) {
        Csv pl({"series", "x", "y"});
        for (const auto& p : runs) pl.row("total", p.result.h, p.result.total);
        for (const auto& p : runs) pl.row("total_log", p.result.h, p.result.total_log);
        out.write_csv("horseshoe_plot.csv", pl);
    }
    return ok;
}

// ---------------------------------------------------------------------------
// stdmap

inline std::vector<LyapunovMethod> lyapunov_methods(const std::string& m) {
    if (m == "qr") return {LyapunovMethod::qr};
    if (m == "two-orbit") return {LyapunovMethod::two_orbit};
    if (m == "both") return {LyapunovMethod::qr, LyapunovMethod::two_orbit};
    throw InputError("stdmap: method must be qr, two-orbit or both");
}

inline double map_parameter(const RunConfig& c) {
    const double k = c.real("standard.k");
    if (!(k >= 0) || !std::isfinite(k)) throw InputError("stdmap: k must be finite and non-negative");
    return k;
}

// Seed i of a run is the first point drawn from run.seed + i.
inline std::uint64_t seed_of(const RunConfig& c, std::size_t i) { return std::uint64_t(c.integer("run.seed")) + i; }

inline void plot_orbit(Csv& p, const std::string& series, double k, const Vec2<double>& p0, std::size_t N) {
    const std::size_t stride = std::max<std::size_t>(1, N / 20000);
    for (const auto& q : sample_orbit(k, p0, N, stride).points) p.row(series, q.x, q.y);
}

inline int cmd_stdmap_lyapunov(const RunConfig& c, RunOutput& out) {
    const double k = map_parameter(c);
    const auto methods = lyapunov_methods(c.text("stdmap.method"));
    const std::size_t n = positive_count(c, "stdmap.seeds"), N = positive_count(c, "stdmap.n");
    const std::size_t tasks = n * methods.size();
    auto est = parallel_map<LyapunovEstimate>(tasks, jobs(c), [&](std::size_t i) {
        return lyapunov(k, seed_points(1, seed_of(c, i / methods.size()))[0], N, methods[i % methods.size()]);
    });
    Csv t({"k", "seed", "N", "value", "method"});
    for (std::size_t i = 0; i < tasks; ++i) t.row(k, seed_of(c, i / methods.size()), est[i].N, est[i].value, to_string(est[i].method));
    out.write_csv("lyapunov.csv", t);
    if (c.flag("output.plot_data")) {
        Csv p({"series", "x", "y"});
        for (std::size_t i = 0; i < tasks; ++i) p.row(to_string(est[i].method), double(seed_of(c, i / methods.size())), est[i].value);
        out.write_csv("lyapunov_plot.csv", p);
    }
    return ok;
}

inline int cmd_stdmap_islands(const RunConfig& c, RunOutput& out) {
    const double k = map_parameter(c);
    const auto q = c.integer("stdmap.period"), grid = c.integer("stdmap.grid");
    if (q < 1 || q > 64) throw InputError("stdmap: period must lie in 1..64");
    if (grid < 1 || grid > 1024) throw InputError("stdmap: grid must lie in 1..1024");
    auto isl = find_islands(k, int(q), int(grid));
    Csv t({"k", "q", "x", "y", "trace", "class"});
    for (const auto& r : isl) t.row(r.k, r.q, r.center.x, r.center.y, r.trace, to_string(r.cls));
    out.write_csv("islands.csv", t);
    if (c.flag("output.plot_data")) {
        Csv p({"series", "x", "y"});
        for (const auto& r : isl) p.row(to_string(r.cls), r.center.x, r.center.y);
        out.write_csv("islands_plot.csv", p);
    }
    return ok;
}

inline int cmd_stdmap_density(const RunConfig& c, RunOutput& out) {
    const double k = map_parameter(c);
    const std::size_t n = positive_count(c, "stdmap.seeds"), N = positive_count(c, "stdmap.n");
    const auto probes = c.integer("stdmap.probes");
    if (probes < 2 || probes > 4096) throw InputError("stdmap: probes must lie in 2..4096");
    auto reps = parallel_map<DensityReport>(n, jobs(c), [&](std::size_t i) {
        return density_check(k, seed_points(1, seed_of(c, i))[0], N, int(probes));
    });
    Csv t({"k", "delta_target", "achieved", "N", "seed", "probes", "pass"});
    for (std::size_t i = 0; i < n; ++i)
        t.row(k, reps[i].delta_target, reps[i].achieved, reps[i].N, seed_of(c, i), reps[i].probes, reps[i].pass);
    out.write_csv("density.csv", t);
    if (c.flag("output.plot_data")) {
        Csv p({"series", "x", "y"});
        for (std::size_t i = 0; i < n; ++i) plot_orbit(p, "orbit_" + std::to_string(seed_of(c, i)), k, seed_points(1, seed_of(c, i))[0], N);
        out.write_csv("density_plot.csv", p);
    }
    return ok;
}

inline int cmd_stdmap_boxdim(const RunConfig& c, RunOutput& out) {
    const double k = map_parameter(c);
    const std::size_t n = positive_count(c, "stdmap.seeds"), N = positive_count(c, "stdmap.n"),
                      stride = positive_count(c, "stdmap.stride");
    const auto lo = c.integer("stdmap.scale_lo"), hi = c.integer("stdmap.scale_hi");
    if (lo < 1 || hi > 20 || hi - lo < 2) throw InputError("stdmap: need 1 <= scale_lo, scale_hi <= 20, three scales");
    const auto r = chaotic_box_dimension(k, n, std::uint64_t(c.integer("run.seed")), N, stride, dyadic_scales(int(lo), int(hi)),
                                         c.real("stdmap.filter"));
    Csv t({"k", "d", "fit_residual", "kept", "rejected", "duarte_bound"});
    t.row(k, r.bound.d, r.bound.fit_residual, r.kept, r.rejected, k > 0 ? duarte_bound(k) : 0.0);
    out.write_csv("boxdim.csv", t);
    return ok;
}

inline ojson scan_json(const ScanTree& tree, double k_lo, double k_hi) {
    ojson nodes = ojson::array();
    for (const auto& n : tree.nodes) {
        ojson tg = ojson::array(), sm = ojson::array(), ud = ojson::array();
        for (const auto& t : n.tangencies)
            tg.push_back({{"k_star", t.k_star}, {"bracket", {t.bracket_lo, t.bracket_hi}}, {"min_angle", t.min_angle},
                          {"point", {t.point.x, t.point.y}}, {"beta", t.beta}, {"beta_stderr", t.beta_stderr}});
        for (const auto& s : n.samples) sm.push_back({{"k", s.k}, {"crossings", s.crossings}, {"min_angle", s.min_angle}});
        for (auto [a, b] : n.undecided) ud.push_back({a, b});
        nodes.push_back({{"depth", n.depth}, {"lo", n.lo}, {"hi", n.hi}, {"parent", n.parent}, {"children", n.children},
                         {"tangencies", tg}, {"undecided", ud}, {"notes", n.notes}, {"samples", sm}});
    }
    return {{"k", {k_lo, k_hi}},
            {"budget", tree.budget},
            {"used", tree.used},
            {"exhausted", tree.exhausted},
            {"nested", tree.nested()},
            {"siblings_disjoint", tree.siblings_disjoint()},
            {"undecided_measure", tree.undecided_measure()},
            {"nodes", nodes}};
}

// Fraction of the scanned parameter measure left undecided.
inline double undecided_fraction(const ScanTree& tree) {
    double total = 0;
    for (const auto& n : tree.nodes) total += n.hi - n.lo;
    return total > 0 ? tree.undecided_measure() / total : 0.0;
}

inline int cmd_stdmap_scan(const RunConfig& c, RunOutput& out) {
    const auto& kk = c.list("scan.k");
    if (kk.size() != 2) throw InputError("stdmap scan: --k takes an interval lo hi");
    ScanOptions opt;
    opt.depth = int(c.integer("scan.depth"));
    opt.grid = int(c.integer("scan.grid"));
    opt.budget = positive_count(c, "scan.budget");
    opt.k_tol = c.real("scan.k_tol");
    opt.angle_threshold = c.real("scan.angle");
    if (!(opt.k_tol > 0) || !(opt.angle_threshold > 0)) throw InputError("stdmap scan: k_tol and angle must be positive");
    const ScanTree tree = tangency_scan(StandardFamily{}, kk[0], kk[1], standard_tracker(), opt);
    out.write_json("scan.json", scan_json(tree, kk[0], kk[1]));
    Csv t({"depth", "lo", "hi", "k_star", "min_angle"});
    for (const auto& n : tree.nodes)
        for (const auto& r : n.tangencies) t.row(n.depth, n.lo, n.hi, r.k_star, r.min_angle);
    out.write_csv("scan.csv", t);
    if (c.flag("output.plot_data")) {
        Csv p({"series", "x", "y"});
        for (const auto& n : tree.nodes)
            for (const auto& s : n.samples) p.row("crossings_depth_" + std::to_string(n.depth), s.k, double(s.crossings));
        for (const auto& n : tree.nodes)
            for (const auto& r : n.tangencies) p.row("tangency", r.k_star, double(n.depth));
        out.write_csv("scan_plot.csv", p);
    }
    return tree.exhausted || undecided_fraction(tree) > 0.5 ? budget_exhausted : ok;
}

// ---------------------------------------------------------------------------

inline int exit_code(const std::exception& e) {
    if (dynamic_cast<const InputError*>(&e)) return input_error;
    if (dynamic_cast<const PrecisionError*>(&e)) return precision_refused;
    if (dynamic_cast<const StageError*>(&e)) return stage_failed;
    if (dynamic_cast<const BudgetError*>(&e)) return budget_exhausted;
    if (dynamic_cast<const std::domain_error*>(&e)) return input_error;
    return stage_failed;
}

}  // namespace ssea::cli
