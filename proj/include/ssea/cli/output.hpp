#pragma once

// Output files for one run. Each file starts with a header line
//   # ssea <version> file=<name> config-sha256=<hex> config=<echo>
// followed by CSV (with a header row) or JSON. Without an output directory
// the files go to stdout in emission order and no manifest is written; with
// one, manifest.json lists the files and is the only place timestamps appear.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssea/cli/config.hpp"
#include "ssea/core/errors.hpp"

#ifndef SSEA_VERSION
#define SSEA_VERSION "0.1.0"
#endif

namespace ssea::cli {

// Shortest text that reads back to the same double.
inline std::string num(double v) {
    char buf[32];
    for (int p = 15; p <= 17; ++p) {
        std::snprintf(buf, sizeof buf, "%.*g", p, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

class Csv {
public:
    explicit Csv(std::vector<std::string> columns) : ncol_(columns.size()) { row_strings(columns); }

    template <typename... A>
    void row(const A&... cells) {
        std::vector<std::string> r;
        (r.push_back(cell(cells)), ...);
        row_strings(r);
    }
    void row_strings(const std::vector<std::string>& r) {
        if (r.size() != ncol_) throw std::logic_error("csv: row width does not match the header");
        for (std::size_t i = 0; i < r.size(); ++i) out_ << (i ? "," : "") << r[i];
        out_ << '\n';
    }
    std::string str() const { return out_.str(); }

private:
    std::size_t ncol_;
    std::ostringstream out_;

    static std::string cell(double v) { return num(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(long v) { return std::to_string(v); }
    static std::string cell(long long v) { return std::to_string(v); }
    static std::string cell(unsigned long v) { return std::to_string(v); }
    static std::string cell(unsigned long long v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "true" : "false"; }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }
};

struct RunManifest {
    std::string command, config_hash, started, finished, version = SSEA_VERSION;
    std::vector<std::string> files;

    nlohmann::ordered_json json() const {
        return {{"command", command}, {"config_sha256", config_hash}, {"started", started},
                {"finished", finished}, {"files", files},         {"version", version}};
    }
};

inline std::string utc_now() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class RunOutput {
public:
    RunOutput(const RunConfig& cfg, std::string command, std::ostream& out = std::cout)
        : dir_(cfg.text("output.dir")), hash_(cfg.hash()), echo_(cfg.echo_text()), out_(out) {
        manifest_.command = std::move(command);
        manifest_.config_hash = hash_;
        manifest_.started = utc_now();
        if (!dir_.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(dir_, ec);
            if (ec) throw InputError("output: cannot create directory " + dir_ + ": " + ec.message());
        }
    }
    RunOutput(const RunOutput&) = delete;
    RunOutput& operator=(const RunOutput&) = delete;

    std::string header(const std::string& name) const {
        return "# ssea " SSEA_VERSION " file=" + name + " config-sha256=" + hash_ + " config=" + echo_ + "\n";
    }

    void write(const std::string& name, const std::string& body) {
        std::string text = header(name) + body;
        if (!text.empty() && text.back() != '\n') text += '\n';
        if (dir_.empty()) {
            out_ << text;
            out_.flush();
        } else {
            auto path = std::filesystem::path(dir_) / name;
            std::ofstream f(path, std::ios::binary);
            f << text;
            if (!f) throw InputError("output: cannot write " + path.string());
        }
        manifest_.files.push_back(name);
    }
    void write_json(const std::string& name, const nlohmann::ordered_json& j) { write(name, j.dump(2) + "\n"); }
    void write_csv(const std::string& name, const Csv& c) { write(name, c.str()); }

    // Writes the manifest once; later calls do nothing.
    void finish() {
        if (finished_) return;
        finished_ = true;
        if (dir_.empty()) return;
        manifest_.finished = utc_now();
        std::ofstream f(std::filesystem::path(dir_) / "manifest.json", std::ios::binary);
        f << manifest_.json().dump(2) << "\n";
    }
    const RunManifest& manifest() const { return manifest_; }
    bool to_stdout() const { return dir_.empty(); }

private:
    std::string dir_, hash_, echo_;
    std::ostream& out_;
    RunManifest manifest_;
    bool finished_ = false;
};

}  // namespace ssea::cli
