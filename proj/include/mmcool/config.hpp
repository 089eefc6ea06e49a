#ifndef MMCOOL_CONFIG_HPP
#define MMCOOL_CONFIG_HPP

// Run configuration in a small sectioned key = "value unit" format:
//
//   [physics]
//   species = "Rb87"
//   detuning = "-10 Gamma"
//   delay = "0.25 /Gamma"
//
// Every dimensioned quantity must carry a unit. Values are stored in SI,
// except run times and the mode spacing, which are kept in units of 1/Gamma
// and Gamma as the engine uses them.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "constants.hpp"
#include "core_physics.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "field_model.hpp"
#include "params.hpp"
#include "sde_engine.hpp"

namespace mmcool {

struct SweepConfig {
    double waist_min = 0.5e-6; // m
    double waist_max = 5e-6;   // m
    int waist_points = 91;
    double amplitude_max = 0.25; // wavelengths
    int amplitude_points = 251;
    std::vector<double> delays{1e-9, 10e-9, 100e-9, 1000e-9}; // s
    std::vector<double> waists{0.5e-6, 1e-6, 2e-6};           // m
    double saturation = 0.1;
    double friction_delay = 10e-9; // s

    bool operator==(const SweepConfig&) const = default;
};

struct Config {
    std::string species = "Rb87";
    PhysicalParams physics;
    // Trap center: a distance from the mirror if set, otherwise the point
    // near c*tau whose pump phase k0 x equals center_phase.
    std::optional<double> center;
    double center_phase = max_friction_phase_near_antinode;
    double trap_frequency = 0.5 * constants::two_pi * constants::rb87::half_linewidth; // rad/s
    double trap_amplitude = 0.0;                                                       // m
    bool pinned = false;
    GridSpec grid;
    RunConfig run;
    double initial_momentum = 0.0; // units of hbar k0
    std::vector<double> temperatures;
    Sampling sampling = Sampling::paired;
    int subensembles = 10;
    int workers = 1;
    std::string method = "2";
    bool refine_frequency = false;
    SweepConfig sweep;

    bool operator==(const Config& o) const {
        auto same_physics = [](const PhysicalParams& a, const PhysicalParams& b) {
            return a.mass == b.mass && a.wavelength == b.wavelength && a.half_linewidth == b.half_linewidth &&
                   a.detuning == b.detuning && a.beam_waist == b.beam_waist && a.delay == b.delay &&
                   a.saturation == b.saturation && a.pump_wavenumber == b.pump_wavenumber;
        };
        auto same_run = [](const RunConfig& a, const RunConfig& b) {
            return a.dt == b.dt && a.duration == b.duration && a.record_stride == b.record_stride &&
                   a.master_seed == b.master_seed && a.trajectory_count == b.trajectory_count &&
                   a.initial_temperature == b.initial_temperature && a.noise_enabled == b.noise_enabled &&
                   a.scheme == b.scheme && a.record_photon_number == b.record_photon_number;
        };
        return species == o.species && same_physics(physics, o.physics) && center == o.center &&
               center_phase == o.center_phase && trap_frequency == o.trap_frequency &&
               trap_amplitude == o.trap_amplitude && pinned == o.pinned && grid.count == o.grid.count &&
               grid.spacing_in_gamma == o.grid.spacing_in_gamma && same_run(run, o.run) &&
               initial_momentum == o.initial_momentum && temperatures == o.temperatures &&
               sampling == o.sampling && subensembles == o.subensembles && workers == o.workers &&
               method == o.method && refine_frequency == o.refine_frequency && sweep == o.sweep;
    }

    double trap_center() const {
        if (center) return *center;
        return position_with_phase(physics, constants::speed_of_light * physics.delay, center_phase);
    }
    TrapSpec trap() const {
        return TrapSpec::from_frequency(trap_center(), trap_frequency, physics.mass, trap_amplitude);
    }
    Model model() const {
        Model m = make_model(physics, trap(), grid);
        m.mechanics.pinned = pinned;
        return m;
    }
    EnsembleOptions ensemble_options() const {
        EnsembleOptions e;
        e.sampling = sampling;
        e.subensembles = subensembles;
        e.workers = workers;
        return e;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string format_number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::optional<double> parse_number(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

} // namespace detail

enum class Dimension { none, time, frequency, length, temperature, mass, momentum, angle };

// Converts "value unit" to SI for the given dimension. Gamma-relative units
// need the species linewidth, "lambda" the transition wavelength.
class UnitParser {
public:
    UnitParser(double half_linewidth, double wavelength) : gamma_(half_linewidth), lambda_(wavelength) {}

    std::optional<double> factor(Dimension d, std::string_view unit) const {
        using constants::two_pi;
        const std::string u(unit);
        switch (d) {
        case Dimension::time:
            if (u == "s") return 1.0;
            if (u == "ms") return 1e-3;
            if (u == "us") return 1e-6;
            if (u == "ns") return 1e-9;
            if (u == "/Gamma") return 1.0 / gamma_;
            break;
        case Dimension::frequency:
            if (u == "Gamma") return gamma_;
            if (u == "2pi*Gamma") return two_pi * gamma_;
            if (u == "rad/s") return 1.0;
            if (u == "Hz") return two_pi;
            if (u == "kHz") return two_pi * 1e3;
            if (u == "MHz") return two_pi * 1e6;
            break;
        case Dimension::length:
            if (u == "m") return 1.0;
            if (u == "um") return 1e-6;
            if (u == "nm") return 1e-9;
            if (u == "lambda") return lambda_;
            break;
        case Dimension::temperature:
            if (u == "K") return 1.0;
            if (u == "mK") return 1e-3;
            if (u == "uK") return 1e-6;
            break;
        case Dimension::mass:
            if (u == "kg") return 1.0;
            if (u == "amu") return constants::atomic_mass_unit;
            break;
        case Dimension::momentum:
            if (u == "hbar*k0") return 1.0;
            break;
        case Dimension::angle:
            if (u == "rad") return 1.0;
            if (u == "pi") return constants::pi;
            break;
        case Dimension::none:
            break;
        }
        return std::nullopt;
    }

    // One quantity; a bare number is accepted only for dimensionless keys.
    double parse(Dimension d, const std::string& text, const std::string& where) const {
        auto values = parse_list(d, text, where);
        if (values.size() != 1) throw ConfigError(where + ": expected a single value");
        return values.front();
    }

    // Splits "1, 2 unit" into its numbers and the trailing unit (may be empty).
    static std::pair<std::vector<double>, std::string> split(const std::string& text, const std::string& where) {
        std::string body = detail::trim(text);
        std::string unit;
        const auto sp = body.find_last_of(" \t");
        if (sp != std::string::npos && !detail::parse_number(detail::trim(body.substr(sp + 1)))) {
            unit = detail::trim(body.substr(sp + 1));
            body = detail::trim(body.substr(0, sp));
        }
        std::vector<double> out;
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto v = detail::parse_number(detail::trim(item));
            if (!v) throw ConfigError(where + ": cannot parse number '" + detail::trim(item) + "'");
            out.push_back(*v);
        }
        if (out.empty()) throw ConfigError(where + ": empty value");
        return {out, unit};
    }

    // Comma-separated numbers sharing one trailing unit: "0.1, 0.3 mK".
    std::vector<double> parse_list(Dimension d, const std::string& text, const std::string& where) const {
        auto [values, unit] = split(text, where);
        if (d == Dimension::none) {
            if (!unit.empty()) throw ConfigError(where + ": unexpected unit '" + unit + "' on a dimensionless value");
            return values;
        }
        if (unit.empty()) throw ConfigError(where + ": missing unit on a dimensioned value");
        const auto f = factor(d, unit);
        if (!f) throw ConfigError(where + ": unknown unit '" + unit + "'");
        for (double& v : values) v *= *f;
        return values;
    }

    // A quantity in units of `native` (e.g. 1/Gamma, lambda). Values given
    // in that unit are taken verbatim so that they round-trip exactly.
    double parse_relative(Dimension d, const std::string& native, double native_si, const std::string& text,
                          const std::string& where) const {
        auto [values, unit] = split(text, where);
        if (values.size() != 1) throw ConfigError(where + ": expected a single value");
        if (unit == native) return values.front();
        return parse(d, text, where) / native_si;
    }

private:
    double gamma_;
    double lambda_;
};

namespace detail {

struct Entry {
    std::string value;
    int line;
};

using Sections = std::map<std::string, std::map<std::string, Entry>>;

inline Sections tokenize(const std::string& text) {
    Sections out;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        bool quoted = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') quoted = !quoted;
            if (s[i] == '#' && !quoted) {
                s.resize(i);
                break;
            }
        }
        s = trim(s);
        if (s.empty()) continue;
        const std::string where = "line " + std::to_string(line);
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(std::string_view(s).substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        if (section.empty()) throw ConfigError(where + ": key outside of any section");
        const std::string key = trim(std::string_view(s).substr(0, eq));
        std::string value = trim(std::string_view(s).substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        else if (value.find('"') != std::string::npos)
            throw ConfigError(where + ": unbalanced quotes");
        if (out[section].count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        out[section][key] = {value, line};
    }
    return out;
}

inline bool parse_flag(const std::string& v, const std::string& where) {
    if (v == "on" || v == "true" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "no") return false;
    throw ConfigError(where + ": expected on/off");
}

inline long long parse_integer(const std::string& v, const std::string& where) {
    long long out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) throw ConfigError(where + ": expected an integer");
    return out;
}

} // namespace detail

inline Config parse_config(const std::string& text) {
    auto sections = detail::tokenize(text);
    Config c;

    auto take = [&](const std::string& sec, const std::string& key) -> std::optional<detail::Entry> {
        auto s = sections.find(sec);
        if (s == sections.end()) return std::nullopt;
        auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        detail::Entry e = k->second;
        s->second.erase(k);
        return e;
    };
    auto where = [](const std::string& sec, const std::string& key, const detail::Entry& e) {
        return "line " + std::to_string(e.line) + " [" + sec + "] " + key;
    };

    // Species first: it supplies the defaults and the Gamma and lambda units.
    if (auto e = take("physics", "species")) {
        if (e->value != "Rb87") throw ConfigError(where("physics", "species", *e) + ": unknown species '" + e->value + "'");
        c.species = e->value;
    }
    PhysicalParams& ph = c.physics;
    {
        UnitParser base(ph.half_linewidth, ph.wavelength);
        if (auto e = take("physics", "mass")) ph.mass = base.parse(Dimension::mass, e->value, where("physics", "mass", *e));
        if (auto e = take("physics", "wavelength"))
            ph.wavelength = base.parse(Dimension::length, e->value, where("physics", "wavelength", *e));
        auto half = take("physics", "half_linewidth");
        auto natural = take("physics", "natural_linewidth");
        if (half && natural)
            throw ConfigError(where("physics", "natural_linewidth", *natural) +
                              ": give either half_linewidth or natural_linewidth, not both");
        if (half) ph.half_linewidth = base.parse(Dimension::frequency, half->value, where("physics", "half_linewidth", *half));
        // The natural linewidth is the full decay rate 2 Gamma.
        if (natural)
            ph.half_linewidth =
                0.5 * base.parse(Dimension::frequency, natural->value, where("physics", "natural_linewidth", *natural));
    }
    const UnitParser units(ph.half_linewidth, ph.wavelength);
    auto quantity = [&](const std::string& sec, const std::string& key, Dimension d, double& out) {
        if (auto e = take(sec, key)) out = units.parse(d, e->value, where(sec, key, *e));
    };
    auto integer = [&](const std::string& sec, const std::string& key, auto& out) {
        if (auto e = take(sec, key))
            out = static_cast<std::remove_reference_t<decltype(out)>>(detail::parse_integer(e->value, where(sec, key, *e)));
    };
    auto flag = [&](const std::string& sec, const std::string& key, bool& out) {
        if (auto e = take(sec, key)) out = detail::parse_flag(e->value, where(sec, key, *e));
    };

    ph.detuning = -10.0 * ph.half_linewidth;
    ph.delay = 0.25 / ph.half_linewidth;
    quantity("physics", "detuning", Dimension::frequency, ph.detuning);
    quantity("physics", "beam_waist", Dimension::length, ph.beam_waist);
    quantity("physics", "delay", Dimension::time, ph.delay);
    quantity("physics", "saturation", Dimension::none, ph.saturation);
    ph.pump_wavenumber = PhysicalParams::pump_wavenumber_for(ph.wavelength, ph.detuning);
    c.trap_frequency = 0.5 * constants::two_pi * ph.half_linewidth;

    if (auto e = take("trap", "center")) c.center = units.parse(Dimension::length, e->value, where("trap", "center", *e));
    quantity("trap", "center_phase", Dimension::angle, c.center_phase);
    quantity("trap", "frequency", Dimension::frequency, c.trap_frequency);
    quantity("trap", "amplitude", Dimension::length, c.trap_amplitude);
    flag("trap", "pinned", c.pinned);

    integer("grid", "modes", c.grid.count);
    if (auto e = take("grid", "spacing"))
        c.grid.spacing_in_gamma =
            units.parse_relative(Dimension::frequency, "Gamma", ph.half_linewidth, e->value, where("grid", "spacing", *e));

    RunConfig& r = c.run;
    auto normalized_time = [&](const std::string& key, double& out) {
        if (auto e = take("run", key))
            out = units.parse_relative(Dimension::time, "/Gamma", 1.0 / ph.half_linewidth, e->value, where("run", key, *e));
    };
    normalized_time("dt", r.dt);
    normalized_time("duration", r.duration);
    integer("run", "record_stride", r.record_stride);
    integer("run", "seed", r.master_seed);
    integer("run", "trajectories", r.trajectory_count);
    flag("run", "noise", r.noise_enabled);
    flag("run", "photon_number", r.record_photon_number);
    if (auto e = take("run", "scheme")) {
        if (e->value == "split") r.scheme = Scheme::split;
        else if (e->value == "euler-maruyama") r.scheme = Scheme::euler_maruyama;
        else throw ConfigError(where("run", "scheme", *e) + ": expected split or euler-maruyama");
    }
    quantity("run", "initial_momentum", Dimension::momentum, c.initial_momentum);
    quantity("run", "initial_temperature", Dimension::temperature, r.initial_temperature);
    if (auto e = take("run", "temperatures"))
        c.temperatures = units.parse_list(Dimension::temperature, e->value, where("run", "temperatures", *e));
    if (auto e = take("run", "sampling")) {
        if (e->value == "paired") c.sampling = Sampling::paired;
        else if (e->value == "independent") c.sampling = Sampling::independent;
        else throw ConfigError(where("run", "sampling", *e) + ": expected paired or independent");
    }
    integer("run", "subensembles", c.subensembles);
    integer("run", "workers", c.workers);

    if (auto e = take("analysis", "method")) {
        if (e->value != "1" && e->value != "2" && e->value != "both")
            throw ConfigError(where("analysis", "method", *e) + ": expected 1, 2 or both");
        c.method = e->value;
    }
    flag("analysis", "refine_frequency", c.refine_frequency);

    SweepConfig& sw = c.sweep;
    quantity("sweep", "waist_min", Dimension::length, sw.waist_min);
    quantity("sweep", "waist_max", Dimension::length, sw.waist_max);
    integer("sweep", "waist_points", sw.waist_points);
    if (auto e = take("sweep", "amplitude_max"))
        sw.amplitude_max =
            units.parse_relative(Dimension::length, "lambda", ph.wavelength, e->value, where("sweep", "amplitude_max", *e));
    integer("sweep", "amplitude_points", sw.amplitude_points);
    if (auto e = take("sweep", "delays")) sw.delays = units.parse_list(Dimension::time, e->value, where("sweep", "delays", *e));
    if (auto e = take("sweep", "waists")) sw.waists = units.parse_list(Dimension::length, e->value, where("sweep", "waists", *e));
    quantity("sweep", "saturation", Dimension::none, sw.saturation);
    quantity("sweep", "friction_delay", Dimension::time, sw.friction_delay);

    for (const auto& [sec, keys] : sections)
        for (const auto& [key, e] : keys)
            throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + key + "' in [" + sec + "]");

    if (r.record_stride < 1) throw ConfigError("[run] record_stride must be >= 1");
    if (r.trajectory_count < 1) throw ConfigError("[run] trajectories must be >= 1");
    if (c.subensembles < 1) throw ConfigError("[run] subensembles must be >= 1");
    if (c.workers < 1) throw ConfigError("[run] workers must be >= 1");
    if (c.grid.count < 2) throw ConfigError("[grid] modes must be >= 2");
    if (sw.waist_points < 2 || sw.amplitude_points < 2) throw ConfigError("[sweep] need at least 2 points");
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// Emits every field with SI units so that parse_config(emit_config(c)) == c.
inline std::string emit_config(const Config& c) {
    using detail::format_number;
    auto list = [](const std::vector<double>& v, const char* unit) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
        return s + " " + unit;
    };
    const double g = c.physics.half_linewidth;
    std::ostringstream o;
    o << "[physics]\n"
      << "species = \"" << c.species << "\"\n"
      << "mass = \"" << format_number(c.physics.mass) << " kg\"\n"
      << "wavelength = \"" << format_number(c.physics.wavelength) << " m\"\n"
      << "half_linewidth = \"" << format_number(g) << " rad/s\"\n"
      << "detuning = \"" << format_number(c.physics.detuning) << " rad/s\"\n"
      << "beam_waist = \"" << format_number(c.physics.beam_waist) << " m\"\n"
      << "delay = \"" << format_number(c.physics.delay) << " s\"\n"
      << "saturation = \"" << format_number(c.physics.saturation) << "\"\n\n"
      << "[trap]\n";
    if (c.center) o << "center = \"" << format_number(*c.center) << " m\"\n";
    o << "center_phase = \"" << format_number(c.center_phase) << " rad\"\n"
      << "frequency = \"" << format_number(c.trap_frequency) << " rad/s\"\n"
      << "amplitude = \"" << format_number(c.trap_amplitude) << " m\"\n"
      << "pinned = \"" << (c.pinned ? "on" : "off") << "\"\n\n"
      << "[grid]\n"
      << "modes = \"" << c.grid.count << "\"\n"
      << "spacing = \"" << format_number(c.grid.spacing_in_gamma) << " Gamma\"\n\n"
      << "[run]\n"
      << "dt = \"" << format_number(c.run.dt) << " /Gamma\"\n"
      << "duration = \"" << format_number(c.run.duration) << " /Gamma\"\n"
      << "record_stride = \"" << c.run.record_stride << "\"\n"
      << "seed = \"" << c.run.master_seed << "\"\n"
      << "trajectories = \"" << c.run.trajectory_count << "\"\n"
      << "noise = \"" << (c.run.noise_enabled ? "on" : "off") << "\"\n"
      << "photon_number = \"" << (c.run.record_photon_number ? "on" : "off") << "\"\n"
      << "scheme = \"" << (c.run.scheme == Scheme::split ? "split" : "euler-maruyama") << "\"\n"
      << "initial_momentum = \"" << format_number(c.initial_momentum) << " hbar*k0\"\n"
      << "initial_temperature = \"" << format_number(c.run.initial_temperature) << " K\"\n";
    if (!c.temperatures.empty()) o << "temperatures = \"" << list(c.temperatures, "K") << "\"\n";
    o << "sampling = \"" << (c.sampling == Sampling::paired ? "paired" : "independent") << "\"\n"
      << "subensembles = \"" << c.subensembles << "\"\n"
      << "workers = \"" << c.workers << "\"\n\n"
      << "[analysis]\n"
      << "method = \"" << c.method << "\"\n"
      << "refine_frequency = \"" << (c.refine_frequency ? "on" : "off") << "\"\n\n"
      << "[sweep]\n"
      << "waist_min = \"" << format_number(c.sweep.waist_min) << " m\"\n"
      << "waist_max = \"" << format_number(c.sweep.waist_max) << " m\"\n"
      << "waist_points = \"" << c.sweep.waist_points << "\"\n"
      << "amplitude_max = \"" << format_number(c.sweep.amplitude_max) << " lambda\"\n"
      << "amplitude_points = \"" << c.sweep.amplitude_points << "\"\n"
      << "delays = \"" << list(c.sweep.delays, "s") << "\"\n"
      << "waists = \"" << list(c.sweep.waists, "m") << "\"\n"
      << "saturation = \"" << format_number(c.sweep.saturation) << "\"\n"
      << "friction_delay = \"" << format_number(c.sweep.friction_delay) << " s\"\n";
    return o.str();
}

} // namespace mmcool

#endif // MMCOOL_CONFIG_HPP
