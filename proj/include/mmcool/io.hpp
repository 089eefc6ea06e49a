#ifndef MMCOOL_IO_HPP
#define MMCOOL_IO_HPP

// Manifests (JSON) and column datasets (CSV with a '#'-prefixed JSON header).
// Numbers are written in shortest round-trip form, so read(write(x)) == x.

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "config.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "sde_engine.hpp"

namespace mmcool {

using json = nlohmann::json;

inline constexpr const char* version_tag = "mmcool 1.0.0";

// Resolved parameters in SI and normalized units plus the config text that
// reproduces the run. No timestamp, so equal runs produce equal manifests.
inline json make_manifest(const Config& c, const std::string& command) {
    const Model m = c.model();
    const UnitSystem u = m.grid.units();
    const PhysicalParams& p = c.physics;
    json j;
    j["version"] = version_tag;
    j["command"] = command;
    j["seed"] = c.run.master_seed;
    j["config"] = emit_config(c);
    j["si"] = {
        {"mass_kg", p.mass},
        {"wavelength_m", p.wavelength},
        {"half_linewidth_rad_s", p.half_linewidth},
        {"detuning_rad_s", p.detuning},
        {"beam_waist_m", p.beam_waist},
        {"delay_s", p.delay},
        {"saturation", p.saturation},
        {"trap_center_m", c.trap_center()},
        {"trap_frequency_rad_s", c.trap_frequency},
        {"mirror_distance_m", m.grid.baseline()},
    };
    j["normalized"] = {
        {"mobility", m.mechanics.mobility},
        {"trap_frequency", m.mechanics.trap_frequency},
        {"trap_center_offset", m.mechanics.center},
        {"light_shift", m.coupling.light_shift},
        {"scattering_rate", m.coupling.scattering_rate},
        {"dt", c.run.dt},
        {"duration", c.run.duration},
        {"temperature_unit_K", u.temperature()},
    };
    j["grid"] = {{"modes", c.grid.count}, {"spacing_gamma", c.grid.spacing_in_gamma}};
    return j;
}

// Physics, trap and grid sections only: runs with equal fingerprints may be
// combined in one analysis.
inline std::string fingerprint(const json& manifest) {
    const std::string text = manifest.at("config").get<std::string>();
    const auto run = text.find("[run]");
    return text.substr(0, run);
}

inline std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

struct Dataset {
    json header;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data; // one vector per column

    const std::vector<double>& column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return data[i];
        throw ConfigError("dataset has no column '" + name + "'");
    }
    bool has(const std::string& name) const {
        return std::find(columns.begin(), columns.end(), name) != columns.end();
    }
    bool operator==(const Dataset&) const = default;
};

inline void write_dataset(const std::string& path, const Dataset& d) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << "# " << d.header.dump() << '\n';
    for (std::size_t i = 0; i < d.columns.size(); ++i) out << (i ? "," : "") << d.columns[i];
    out << '\n';
    const std::size_t rows = d.data.empty() ? 0 : d.data.front().size();
    char buf[64];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < d.data.size(); ++c) {
            if (c) out << ',';
            const auto res = std::to_chars(buf, buf + sizeof buf, d.data[c][r]);
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
    if (!out) throw Error("write failed for " + path);
}

inline std::optional<json> read_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::string line;
    if (!in || !std::getline(in, line) || line.rfind("# ", 0) != 0) return std::nullopt;
    try {
        return json::parse(line.substr(2));
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

inline Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    Dataset d;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw ConfigError(path + ": missing manifest header");
    try {
        d.header = json::parse(line.substr(2));
    } catch (const json::exception& e) {
        throw ConfigError(path + ": malformed manifest header: " + e.what());
    }
    if (!std::getline(in, line)) throw ConfigError(path + ": missing column header");
    {
        std::stringstream ss(line);
        std::string name;
        while (std::getline(ss, name, ',')) d.columns.push_back(name);
    }
    d.data.assign(d.columns.size(), {});
    int row = 2;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::size_t col = 0, pos = 0;
        while (pos <= line.size()) {
            auto end = line.find(',', pos);
            if (end == std::string::npos) end = line.size();
            if (col >= d.columns.size()) throw ConfigError(path + ": too many fields on line " + std::to_string(row));
            double v = 0.0;
            const auto r = std::from_chars(line.data() + pos, line.data() + end, v);
            if (r.ec != std::errc{} || r.ptr != line.data() + end)
                throw ConfigError(path + ": bad number on line " + std::to_string(row));
            d.data[col++].push_back(v);
            pos = end + 1;
        }
        if (col != d.columns.size()) throw ConfigError(path + ": too few fields on line " + std::to_string(row));
    }
    return d;
}

// Trajectory columns in normalized units: t in 1/Gamma, x as the pump phase
// offset k0 (x - L), p in hbar k0. photon_number is NaN when not recorded.
inline Dataset trajectory_dataset(const json& header, const Trajectory& tr) {
    Dataset d;
    d.header = header;
    d.columns = {"t", "x", "p", "p2", "photon_number"};
    std::vector<double> n = tr.photon_number;
    if (n.size() != tr.t.size()) n.assign(tr.t.size(), std::numeric_limits<double>::quiet_NaN());
    d.data = {tr.t, tr.x, tr.p, tr.p2, n};
    return d;
}

inline Trajectory trajectory_from(const Dataset& d) {
    Trajectory tr;
    tr.t = d.column("t");
    tr.x = d.column("x");
    tr.p = d.column("p");
    tr.p2 = d.column("p2");
    const auto& n = d.column("photon_number");
    if (!n.empty() && !std::isnan(n.front())) tr.photon_number = n;
    return tr;
}

// Ensemble statistics: t, <p^2>, its trajectory variance, and the mean of
// each sub-ensemble (columns sub0, sub1, ...). Counts go into the header.
inline Dataset ensemble_dataset(json header, const EnsembleResult& e, double initial_temperature) {
    header["ensemble"] = {
        {"initial_temperature_K", initial_temperature},
        {"completed", e.completed},
        {"aborted", e.aborted},
        {"subensemble_size", e.subensemble_size},
    };
    Dataset d;
    d.header = std::move(header);
    d.columns = {"t", "mean_p2", "var_p2"};
    d.data = {e.t, e.mean_p2, e.var_p2};
    for (std::size_t j = 0; j < e.subensemble_mean_p2.size(); ++j) {
        d.columns.push_back("sub" + std::to_string(j));
        d.data.push_back(e.subensemble_mean_p2[j]);
    }
    return d;
}

inline EnsembleResult ensemble_from(const Dataset& d) {
    const json& h = d.header.at("ensemble");
    EnsembleResult e;
    e.t = d.column("t");
    e.mean_p2 = d.column("mean_p2");
    e.var_p2 = d.column("var_p2");
    e.completed = h.at("completed").get<int>();
    e.aborted = h.at("aborted").get<int>();
    e.subensemble_size = h.at("subensemble_size").get<std::vector<int>>();
    for (std::size_t j = 0; j < e.subensemble_size.size(); ++j)
        e.subensemble_mean_p2.push_back(d.column("sub" + std::to_string(j)));
    return e;
}

inline json to_json(const FitResult& r) {
    json d = {
        {"method", r.diagnostics.method},
        {"residual_norm", r.diagnostics.residual_norm},
        {"window", {r.diagnostics.window_begin, r.diagnostics.window_end}},
        {"excluded_fraction", r.diagnostics.excluded_fraction},
        {"points", r.diagnostics.points},
        {"weighted", r.diagnostics.weighted},
        {"reduced_chi2", r.diagnostics.reduced_chi2},
        {"flags", r.diagnostics.flags},
        {"values", r.diagnostics.values},
    };
    return {{"value", r.value}, {"standard_error", r.standard_error}, {"diagnostics", d}};
}

struct ReportRow {
    double initial_temperature; // K
    double rate;                // K/s, or friction in 1/s for trajectories
    double error;
    std::string method;
    int trajectories;
};

inline void write_fit_report(const std::string& path, const std::vector<ReportRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << "T0,dTdt,dTdt_err,method,n_traj\n";
    for (const auto& r : rows)
        out << detail::format_number(r.initial_temperature) << ',' << detail::format_number(r.rate) << ','
            << detail::format_number(r.error) << ',' << r.method << ',' << r.trajectories << '\n';
}

inline void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

inline json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

} // namespace mmcool

#endif // MMCOOL_IO_HPP
