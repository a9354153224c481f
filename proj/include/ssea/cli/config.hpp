#pragma once

// Run configuration: a fixed schema of typed keys, filled from defaults,
// then a TOML file, then SSEA_<SECTION>_<KEY> environment variables, then
// command-line flags. The canonical echo is compact JSON with sorted keys;
// its SHA-256 is the config hash carried by every output file.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/sha.h>
#include <toml.hpp>

#include "ssea/core/errors.hpp"

namespace ssea::cli {

using Value = std::variant<std::int64_t, double, bool, std::string, std::vector<double>>;

struct KeySpec {
    Value value;
    const char* help = "";
};

class RunConfig {
public:
    RunConfig() {
        auto add = [this](const std::string& key, Value v, const char* help) { keys_[key] = {std::move(v), help}; };
        add("precision.bits", std::int64_t{0}, "significand width; 0 follows the per-h policy");
        add("output.dir", std::string{}, "directory for output files; empty writes to stdout");
        add("output.plot_data", false, "also write tidy long-format CSV for plotting");
        add("run.seed", std::int64_t{1}, "base RNG seed");
        add("run.jobs", std::int64_t{1}, "worker threads for sweeps");
        add("standard.k", 1000.0, "standard-map parameter");
        add("henon.a", -1.0, "Henon parameter (shared key, not read by any subcommand)");
        add("rescaled.h", 1.0, "step of the rescaled family");
        add("splitting.theta1", 1.0, "Stokes constant in mu(h)");
        add("splitting.h", std::vector<double>{}, "h sweep; empty uses rescaled.h");
        add("cantor.builtin", std::string{}, "middle-thirds or middle-fifths");
        add("cantor.affine", std::vector<double>{}, "affine ratios r0 r1");
        add("cantor.system", std::string{}, "path of a JSON system description");
        add("cantor.depth", std::int64_t{8}, "refinement depth");
        add("horseshoe.nu", 0.1, "iterate-count exponent");
        add("horseshoe.window", 0.15, "anchor window |z| bound");
        add("horseshoe.grid", std::int64_t{33}, "initial class-F sample grid");
        add("horseshoe.max_grid", std::int64_t{129}, "grid doubling limit");
        add("horseshoe.min_order", std::int64_t{3}, "lowest normal-form order tried");
        add("horseshoe.max_order", std::int64_t{12}, "highest normal-form order tried");
        add("horseshoe.sweep", std::vector<double>{}, "h values for the sweep");
        add("horseshoe.synthetic", std::string{}, "affine selects the synthetic model");
        add("horseshoe.tau", std::vector<double>{1.0, 1.0}, "synthetic factor thickness");
        add("stdmap.n", std::int64_t{100000}, "orbit length");
        add("stdmap.seeds", std::int64_t{1}, "number of seeds");
        add("stdmap.method", std::string{"both"}, "lyapunov estimator: qr, two-orbit or both");
        add("stdmap.period", std::int64_t{1}, "period for the island search");
        add("stdmap.grid", std::int64_t{16}, "seed grid per axis for the island search");
        add("stdmap.probes", std::int64_t{64}, "probe grid per axis for the density check");
        add("stdmap.stride", std::int64_t{1}, "orbit subsampling for box counting");
        add("stdmap.scale_lo", std::int64_t{3}, "coarsest box scale 2^-lo");
        add("stdmap.scale_hi", std::int64_t{8}, "finest box scale 2^-hi");
        add("stdmap.filter", 0.1, "chaotic-seed threshold on the finite-time exponent");
        add("scan.k", std::vector<double>{6.5, 7.5}, "parameter interval");
        add("scan.depth", std::int64_t{1}, "scan-tree depth");
        add("scan.grid", std::int64_t{16}, "parameter steps per interval");
        add("scan.budget", std::int64_t{2000}, "arc constructions over the whole tree");
        add("scan.k_tol", 1e-6, "count bisection width");
        add("scan.angle", 1e-3, "tangency angle threshold in radians");
    }

    const std::map<std::string, KeySpec>& keys() const { return keys_; }
    bool has(const std::string& key) const { return keys_.count(key) != 0; }

    std::int64_t integer(const std::string& key) const { return std::get<std::int64_t>(at(key)); }
    double real(const std::string& key) const { return std::get<double>(at(key)); }
    bool flag(const std::string& key) const { return std::get<bool>(at(key)); }
    const std::string& text(const std::string& key) const { return std::get<std::string>(at(key)); }
    const std::vector<double>& list(const std::string& key) const { return std::get<std::vector<double>>(at(key)); }

    // Type-checked assignment; an int is accepted for a real key and a
    // single number for a list key.
    void set(const std::string& key, const Value& v) {
        auto it = keys_.find(key);
        if (it == keys_.end()) throw InputError("config: unknown key '" + key + "'");
        Value& dst = it->second.value;
        if (dst.index() == v.index()) {
            dst = v;
        } else if (std::holds_alternative<double>(dst) && std::holds_alternative<std::int64_t>(v)) {
            dst = double(std::get<std::int64_t>(v));
        } else if (std::holds_alternative<std::vector<double>>(dst) && std::holds_alternative<double>(v)) {
            dst = std::vector<double>{std::get<double>(v)};
        } else if (std::holds_alternative<std::vector<double>>(dst) && std::holds_alternative<std::int64_t>(v)) {
            dst = std::vector<double>{double(std::get<std::int64_t>(v))};
        } else {
            throw InputError("config: wrong type for '" + key + "'");
        }
    }

    // Parses text in the key's own type, as used for environment variables.
    void set_text(const std::string& key, const std::string& s) {
        auto it = keys_.find(key);
        if (it == keys_.end()) throw InputError("config: unknown key '" + key + "'");
        std::visit([&](const auto& cur) { set(key, parse_as(cur, key, s)); }, it->second.value);
    }

    void load_toml(const std::string& path) {
        toml::table tbl;
        try {
            tbl = toml::parse_file(path);
        } catch (const toml::parse_error& e) {
            std::ostringstream m;
            m << "config: " << path << ": " << e.description();
            throw InputError(m.str());
        }
        for (auto&& [section, node] : tbl) {
            const std::string sec(section.str());
            const toml::table* t = node.as_table();
            if (!t) throw InputError("config: top-level key '" + sec + "' is not a table");
            for (auto&& [name, v] : *t) {
                const std::string key = sec + "." + std::string(name.str());
                if (!has(key)) throw InputError("config: unknown key '" + key + "'");
                set(key, from_toml(key, v));
            }
        }
    }

    // Applies SSEA_<SECTION>_<KEY> for every schema key that is set.
    void apply_env() {
        for (const auto& [key, spec] : keys_) {
            const char* v = std::getenv(env_name(key).c_str());
            if (v) set_text(key, v);
        }
    }

    static std::string env_name(const std::string& key) {
        std::string n = "SSEA_";
        for (char c : key) n += c == '.' ? '_' : char(std::toupper(static_cast<unsigned char>(c)));
        return n;
    }

    nlohmann::json echo() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [key, spec] : keys_) std::visit([&](const auto& v) { j[key] = v; }, spec.value);
        return j;
    }
    std::string echo_text() const { return echo().dump(); }
    std::string hash() const { return sha256_hex(echo_text()); }

    static std::string sha256_hex(const std::string& s) {
        unsigned char md[SHA256_DIGEST_LENGTH];
        SHA256(reinterpret_cast<const unsigned char*>(s.data()), s.size(), md);
        static const char* hexd = "0123456789abcdef";
        std::string out;
        for (unsigned char c : md) {
            out += hexd[c >> 4];
            out += hexd[c & 15];
        }
        return out;
    }

private:
    std::map<std::string, KeySpec> keys_;

    const Value& at(const std::string& key) const {
        auto it = keys_.find(key);
        if (it == keys_.end()) throw InputError("config: unknown key '" + key + "'");
        return it->second.value;
    }

    static double parse_real(const std::string& key, const std::string& s) {
        char* end = nullptr;
        double v = std::strtod(s.c_str(), &end);
        if (s.empty() || *end != '\0' || !std::isfinite(v)) throw InputError("config: '" + key + "' expects a number, got '" + s + "'");
        return v;
    }
    static Value parse_as(std::int64_t, const std::string& key, const std::string& s) {
        double v = parse_real(key, s);
        if (v != std::floor(v) || std::abs(v) > 9e15) throw InputError("config: '" + key + "' expects an integer, got '" + s + "'");
        return std::int64_t(v);
    }
    static Value parse_as(double, const std::string& key, const std::string& s) { return parse_real(key, s); }
    static Value parse_as(bool, const std::string& key, const std::string& s) {
        if (s == "1" || s == "true") return true;
        if (s == "0" || s == "false") return false;
        throw InputError("config: '" + key + "' expects true or false, got '" + s + "'");
    }
    static Value parse_as(const std::string&, const std::string&, const std::string& s) { return s; }
    static Value parse_as(const std::vector<double>&, const std::string& key, const std::string& s) {
        std::vector<double> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_real(key, item));
        return out;
    }

    static Value from_toml(const std::string& key, const toml::node& v) {
        if (auto i = v.value_exact<std::int64_t>()) return *i;
        if (auto d = v.value_exact<double>()) return *d;
        if (auto b = v.value_exact<bool>()) return *b;
        if (auto s = v.value_exact<std::string>()) return *s;
        if (const toml::array* a = v.as_array()) {
            std::vector<double> out;
            for (const auto& e : *a) {
                auto d = e.value<double>();
                if (!d) throw InputError("config: '" + key + "' must be an array of numbers");
                out.push_back(*d);
            }
            return out;
        }
        throw InputError("config: unsupported value type for '" + key + "'");
    }
};

}  // namespace ssea::cli
