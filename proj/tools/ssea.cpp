// ssea command-line tool: cantor, splitting, horseshoe and stdmap experiments.
//
// Precedence of settings: schema defaults < --config TOML < SSEA_* environment
// variables < command-line flags. Exit codes: 0 success, 2 input error,
// 3 precision refusal, 4 pipeline stage failure, 5 scan budget exhaustion.

#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssea/cli/commands.hpp"

using namespace ssea;
using namespace ssea::cli;

namespace {

// lo:hi:count, inclusive endpoints.
std::vector<double> parse_sweep(const std::string& s) {
    double lo = 0, hi = 0;
    int n = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%lf:%lf:%d%c", &lo, &hi, &n, &tail) != 3 || n < 1)
        throw InputError("sweep must be lo:hi:count, got '" + s + "'");
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    return v;
}

// Flags that override one config key each, applied after TOML and env.
class Overrides {
public:
    template <typename T>
    CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        auto v = std::make_shared<T>();
        CLI::Option* o = app->add_option(flag, *v, help);
        items_.push_back({o, [v, key](RunConfig& c) { c.set(key, to_value(*v)); }});
        return o;
    }
    CLI::Option* add_flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        auto v = std::make_shared<bool>(false);
        CLI::Option* o = app->add_flag(flag, *v, help);
        items_.push_back({o, [v, key](RunConfig& c) { c.set(key, *v); }});
        return o;
    }
    // Count-like values given as reals so that 1e7 is accepted.
    CLI::Option* add_count(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        auto v = std::make_shared<double>();
        CLI::Option* o = app->add_option(flag, *v, help);
        items_.push_back({o, [v, key, flag](RunConfig& c) {
                              if (*v != std::floor(*v) || std::abs(*v) > 9e15)
                                  throw InputError(flag + " expects an integer");
                              c.set(key, std::int64_t(*v));
                          }});
        return o;
    }
    void apply(RunConfig& c) const {
        for (const auto& [o, fn] : items_)
            if (o->count() > 0) fn(c);
    }

private:
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> items_;

    static Value to_value(double v) { return v; }
    static Value to_value(int v) { return std::int64_t(v); }
    static Value to_value(const std::string& v) { return v; }
    static Value to_value(const std::vector<double>& v) { return v; }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cantor thickness, separatrix splitting, horseshoe dimension and standard-map experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_flag("--help", "print help and exit");
    Overrides ov;

    std::string config_path;
    app.add_option("--config", config_path, "TOML configuration file")->check(CLI::ExistingFile);
    ov.add<int>(&app, "--jobs", "run.jobs", "worker threads for sweeps");
    ov.add<int>(&app, "--precision-bits", "precision.bits", "significand width: 53 or 128 (default: per-h policy)");
    ov.add<std::string>(&app, "--out", "output.dir", "write files and a manifest into this directory");
    ov.add_flag(&app, "--emit-plot-data", "output.plot_data", "also write tidy long-format CSV for plotting");
    ov.add<int>(&app, "--seed", "run.seed", "base RNG seed");

    std::string command;

    CLI::App* cantor = app.add_subcommand("cantor", "thickness and dimension bounds of a two-branch Cantor set");
    ov.add<std::string>(cantor, "--builtin", "cantor.builtin", "middle-thirds or middle-fifths");
    ov.add<std::vector<double>>(cantor, "--affine", "cantor.affine", "affine ratios r0 r1")->expected(2);
    ov.add<std::string>(cantor, "--system", "cantor.system", "JSON system description");
    ov.add_count(cantor, "--depth", "cantor.depth", "refinement depth");
    cantor->callback([&] { command = "cantor"; });

    std::optional<std::string> split_sweep;
    CLI::App* split = app.add_subcommand("splitting", "lobe areas over an h list and the exponential-scaling fit");
    ov.add<std::vector<double>>(split, "--h", "splitting.h", "h values")->expected(1, 1000);
    split->add_option("--sweep", split_sweep, "h grid lo:hi:count");
    ov.add<double>(split, "--theta1", "splitting.theta1", "Stokes constant");
    split->callback([&] { command = "splitting"; });

    CLI::App* hs = app.add_subcommand("horseshoe", "dimension pipeline at one h, or the synthetic affine model");
    ov.add<double>(hs, "--h", "rescaled.h", "step h");
    ov.add<double>(hs, "--nu", "horseshoe.nu", "iterate-count exponent");
    ov.add<std::string>(hs, "--synthetic", "horseshoe.synthetic", "affine");
    ov.add<std::vector<double>>(hs, "--tau", "horseshoe.tau", "synthetic factor thickness tau_L tau_R")->expected(2);
    ov.add<double>(hs, "--theta1", "splitting.theta1", "Stokes constant");
    hs->callback([&] {
        if (command.empty()) command = "horseshoe";
    });
    std::optional<std::string> hs_sweep;
    CLI::App* hss = hs->add_subcommand("sweep", "pipeline over several h values, one CSV row each");
    ov.add<std::vector<double>>(hss, "--h", "horseshoe.sweep", "h values")->expected(1, 1000);
    hss->add_option("--sweep", hs_sweep, "h grid lo:hi:count");
    ov.add<double>(hss, "--nu", "horseshoe.nu", "iterate-count exponent");
    hss->callback([&] { command = "horseshoe sweep"; });
    hss->fallthrough();

    CLI::App* sm = app.add_subcommand("stdmap", "standard-map experiments");
    sm->require_subcommand(1);
    sm->fallthrough();
    auto stdmap_sub = [&](const std::string& name, const std::string& help) {
        CLI::App* s = sm->add_subcommand(name, help);
        s->fallthrough();
        s->callback([&command, name] { command = "stdmap " + name; });
        return s;
    };
    CLI::App* ly = stdmap_sub("lyapunov", "finite-time Lyapunov exponents");
    ov.add<double>(ly, "--k", "standard.k", "map parameter");
    ov.add_count(ly, "--n", "stdmap.n", "orbit length");
    ov.add_count(ly, "--seeds", "stdmap.seeds", "number of seeds");
    ov.add<std::string>(ly, "--method", "stdmap.method", "qr, two-orbit or both");
    CLI::App* is = stdmap_sub("islands", "periodic orbits and their stability");
    ov.add<double>(is, "--k", "standard.k", "map parameter");
    ov.add_count(is, "--period", "stdmap.period", "period q");
    ov.add_count(is, "--grid", "stdmap.grid", "seed grid per axis");
    CLI::App* de = stdmap_sub("density", "covering radius of an orbit against 4 / k^(1/3)");
    ov.add<double>(de, "--k", "standard.k", "map parameter");
    ov.add_count(de, "--n", "stdmap.n", "orbit length");
    ov.add_count(de, "--seeds", "stdmap.seeds", "number of seeds");
    ov.add_count(de, "--probes", "stdmap.probes", "probe grid per axis");
    CLI::App* bx = stdmap_sub("boxdim", "box-counting dimension of chaotic orbits");
    ov.add<double>(bx, "--k", "standard.k", "map parameter");
    ov.add_count(bx, "--n", "stdmap.n", "orbit length per seed");
    ov.add_count(bx, "--seeds", "stdmap.seeds", "number of seeds before filtering");
    ov.add_count(bx, "--stride", "stdmap.stride", "orbit subsampling");
    ov.add_count(bx, "--scale-lo", "stdmap.scale_lo", "coarsest scale 2^-lo");
    ov.add_count(bx, "--scale-hi", "stdmap.scale_hi", "finest scale 2^-hi");
    ov.add<double>(bx, "--filter", "stdmap.filter", "chaotic-seed threshold");
    CLI::App* sc = stdmap_sub("scan", "homoclinic tangency scan tree");
    ov.add<std::vector<double>>(sc, "--k", "scan.k", "parameter interval lo hi")->expected(2);
    ov.add_count(sc, "--depth", "scan.depth", "tree depth");
    ov.add_count(sc, "--grid", "scan.grid", "steps per interval");
    ov.add_count(sc, "--budget", "scan.budget", "arc constructions");
    ov.add<double>(sc, "--k-tol", "scan.k_tol", "count bisection width");
    ov.add<double>(sc, "--angle", "scan.angle", "tangency angle threshold");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : input_error;
    }

    std::unique_ptr<RunOutput> out;
    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg.load_toml(config_path);
        cfg.apply_env();
        ov.apply(cfg);
        if (split_sweep) cfg.set("splitting.h", parse_sweep(*split_sweep));
        if (hs_sweep) cfg.set("horseshoe.sweep", parse_sweep(*hs_sweep));

        std::string line;
        for (int i = 1; i < argc; ++i) line += (i > 1 ? " " : "") + std::string(argv[i]);
        out = std::make_unique<RunOutput>(cfg, line);

        int code = ok;
        if (command == "cantor") code = cmd_cantor(cfg, *out);
        else if (command == "splitting") code = cmd_splitting(cfg, *out);
        else if (command == "horseshoe") code = cmd_horseshoe(cfg, *out);
        else if (command == "horseshoe sweep") code = cmd_horseshoe_sweep(cfg, *out);
        else if (command == "stdmap lyapunov") code = cmd_stdmap_lyapunov(cfg, *out);
        else if (command == "stdmap islands") code = cmd_stdmap_islands(cfg, *out);
        else if (command == "stdmap density") code = cmd_stdmap_density(cfg, *out);
        else if (command == "stdmap boxdim") code = cmd_stdmap_boxdim(cfg, *out);
        else if (command == "stdmap scan") code = cmd_stdmap_scan(cfg, *out);
        else throw InputError("no subcommand selected");
        out->finish();
        if (code == budget_exhausted) std::cerr << "ssea: scan budget exhausted or mostly undecided\n";
        return code;
    } catch (const std::exception& e) {
        if (out) out->finish();
        const int code = exit_code(e);
        std::cerr << "ssea: ";
        if (auto* s = dynamic_cast<const StageError*>(&e)) std::cerr << "stage failure [" << s->stage << "]: ";
        if (auto* p = dynamic_cast<const PrecisionError*>(&e)) std::cerr << "precision refused (" << p->required_bits << " bits required): ";
        std::cerr << e.what() << "\n";
        return code;
    }
}
