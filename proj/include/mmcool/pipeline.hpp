#ifndef MMCOOL_PIPELINE_HPP
#define MMCOOL_PIPELINE_HPP

// Figure datasets and the cooling-rate study shared by the command-line
// tool and the acceptance checks.

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "config.hpp"
#include "core_physics.hpp"
#include "ensemble.hpp"
#include "io.hpp"

namespace mmcool {

// Default Fig. 5 grid of initial temperatures: 8 points from 0.1 to 1.6 mK.
inline std::vector<double> default_temperature_grid() {
    std::vector<double> t;
    for (int k = 0; k < 8; ++k) t.push_back((0.1 + 1.5 * k / 7.0) * 1e-3);
    return t;
}

// Largest whole multiple of dt below the field-periodicity bound.
inline double longest_allowed_duration(const Config& c) {
    const ModeGrid grid = c.model().grid;
    return std::floor(grid.max_duration() / c.run.dt) * c.run.dt * (1.0 - 1e-12);
}

// Fig. 5 parameters. "desk": 10^3 trajectories, 30/Gamma. "full": 10^4
// trajectories and the 60/Gamma duration capped at the field-periodicity
// bound of the 0.1 Gamma mode comb.
inline Config preset(const std::string& name) {
    Config c;
    c.center_phase = max_friction_phase_near_antinode;
    c.trap_frequency = 0.5 * constants::two_pi * c.physics.half_linewidth;
    c.temperatures = default_temperature_grid();
    c.run.dt = 1e-3;
    c.run.record_stride = 10;
    c.run.noise_enabled = true;
    c.sampling = Sampling::paired;
    c.subensembles = 10;
    if (name == "desk") {
        c.run.trajectory_count = 1000;
        c.run.duration = 30.0;
    } else if (name == "full") {
        c.run.trajectory_count = 10000;
        c.run.duration = std::min(60.0, longest_allowed_duration(c));
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected desk or full)");
    }
    return c;
}

// Noise-free single trajectory of the fitting example: atom starting at
// the trap center with 100 hbar k0.
inline Config fitting_example_config() {
    Config c;
    c.center_phase = max_friction_phase;
    c.initial_momentum = 100.0;
    c.run.noise_enabled = false;
    c.run.trajectory_count = 1;
    c.run.dt = 1e-3;
    c.run.record_stride = 10;
    c.run.duration = 59.0;
    c.temperatures.clear();
    return c;
}

inline PhysicalParams with(PhysicalParams p, double waist, double delay, double saturation) {
    p.beam_waist = waist;
    p.delay = delay;
    p.saturation = saturation;
    return p;
}

// Point of maximum friction next to the mirror distance c*tau.
inline double max_friction_position(const PhysicalParams& p) {
    return position_with_phase(p, constants::speed_of_light * p.delay, max_friction_phase);
}

inline std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, i / double(n - 1));
    return v;
}

// Cooling time 1/rho at maximum friction versus beam waist, one column per delay.
inline Dataset cooling_time_table(const Config& c) {
    Dataset d;
    d.header = {{"figure", "cooling_time"}, {"units", {{"w", "m"}, {"t_cool", "s"}}},
                {"saturation", c.sweep.saturation}, {"delays_s", c.sweep.delays}};
    d.columns = {"w"};
    d.data = {log_grid(c.sweep.waist_min, c.sweep.waist_max, c.sweep.waist_points)};
    for (std::size_t j = 0; j < c.sweep.delays.size(); ++j) {
        d.columns.push_back("t_cool_" + std::to_string(j));
        std::vector<double> col;
        for (double w : d.data[0]) {
            const PhysicalParams p = with(c.physics, w, c.sweep.delays[j], c.sweep.saturation);
            col.push_back(cooling_time(p, max_friction_position(p)));
        }
        d.data.push_back(std::move(col));
    }
    return d;
}

// Averaged friction versus oscillation amplitude for a trap at maximum
// friction, one column per beam waist.
inline Dataset averaged_friction_table(const Config& c) {
    Dataset d;
    d.header = {{"figure", "averaged_friction"}, {"units", {{"delta", "wavelengths"}, {"rho", "1/s"}}},
                {"saturation", c.sweep.saturation}, {"delay_s", c.sweep.friction_delay},
                {"waists_m", c.sweep.waists}};
    d.columns = {"delta"};
    std::vector<double> delta;
    for (int i = 0; i < c.sweep.amplitude_points; ++i)
        delta.push_back(c.sweep.amplitude_max * i / (c.sweep.amplitude_points - 1));
    d.data = {delta};
    for (std::size_t j = 0; j < c.sweep.waists.size(); ++j) {
        d.columns.push_back("rho_" + std::to_string(j));
        const PhysicalParams p = with(c.physics, c.sweep.waists[j], c.sweep.friction_delay, c.sweep.saturation);
        std::vector<double> col;
        for (double dl : delta) {
            TrapSpec t{max_friction_position(p), 0.0, dl * p.wavelength};
            col.push_back(averaged_friction(p, t));
        }
        d.data.push_back(std::move(col));
    }
    return d;
}

// Stationary temperature at maximum friction versus beam waist, one column
// per delay.
inline Dataset temperature_table(const Config& c) {
    Dataset d = cooling_time_table(c);
    d.header["figure"] = "stationary_temperature";
    d.header["units"] = {{"w", "m"}, {"T", "K"}};
    for (std::size_t j = 0; j < c.sweep.delays.size(); ++j) {
        d.columns[j + 1] = "T_" + std::to_string(j);
        for (std::size_t i = 0; i < d.data[0].size(); ++i) {
            const PhysicalParams p = with(c.physics, d.data[0][i], c.sweep.delays[j], c.sweep.saturation);
            d.data[j + 1][i] = stationary_temperature(p, max_friction_position(p));
        }
    }
    return d;
}

// First amplitude (in wavelengths) at which the averaged friction of a trap
// centered at maximum friction changes sign; bracketed on a grid and
// refined by bisection.
inline double friction_zero_crossing(const PhysicalParams& p, int nodes = default_quadrature_nodes) {
    const double x0 = max_friction_position(p);
    auto f = [&](double dl) { return averaged_friction(p, {x0, 0.0, dl * p.wavelength}, nodes); };
    double lo = 0.0, hi = 0.0;
    for (int i = 1; i <= 500; ++i) {
        hi = 0.5 * i / 500;
        if (f(hi) <= 0) break;
        lo = hi;
    }
    if (f(hi) > 0) throw InsufficientDataError("averaged friction does not change sign below 0.5 wavelengths");
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct RatePointResult {
    double initial_temperature = 0.0;
    EnsembleResult ensemble;
    TemperatureSeries series;
    FitResult rate;
};

// One ensemble at initial temperature t0 and its cooling rate.
inline RatePointResult run_rate_point(const Config& base, double t0) {
    Config c = base;
    c.run.initial_temperature = t0;
    const Model m = c.model();
    RatePointResult r;
    r.initial_temperature = t0;
    r.ensemble = run_ensemble(m, c.physics, c.run, c.ensemble_options());
    r.series = ensemble_temperature(r.ensemble, m);
    Method2Options o;
    o.refine_frequency = c.refine_frequency;
    r.rate = cooling_rate(r.series, c.trap_frequency, o);
    return r;
}

struct RateStudy {
    std::vector<RatePointResult> points;
    FitResult stationary;
    double analytic_temperature = 0.0; // K, at sin(4 k0 x) = +1
};

inline std::vector<RatePoint> rate_points(const std::vector<RatePointResult>& pts) {
    std::vector<RatePoint> out;
    for (const auto& p : pts) out.push_back({p.initial_temperature, p.rate.value, p.rate.standard_error});
    return out;
}

// Cooling rate over the configured T0 grid and the stationary temperature
// from a linear fit. `progress` is called after each ensemble.
inline RateStudy run_rate_study(const Config& c,
                                const std::function<void(const RatePointResult&)>& progress = {}) {
    if (c.temperatures.size() < 3) throw ConfigError("rate study needs at least 3 initial temperatures");
    RateStudy s;
    for (double t0 : c.temperatures) {
        s.points.push_back(run_rate_point(c, t0));
        if (progress) progress(s.points.back());
    }
    const auto pts = rate_points(s.points);
    s.stationary = stationary_temperature_fit(pts);
    s.analytic_temperature = stationary_temperature(c.physics, max_friction_position(c.physics));
    return s;
}

} // namespace mmcool

#endif // MMCOOL_PIPELINE_HPP
