// mmcool: analytic sweeps, trajectory/ensemble simulation, fitting, and the
// cooling-rate reproduction pipeline.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmcool/mmcool.hpp"

namespace fs = std::filesystem;
using namespace mmcool;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trajectories;
    std::optional<std::string> noise;
    std::optional<int> workers;
    std::string method;
    std::string out = ".";
    std::string preset;
};

void add_common(CLI::App* app, Common& o) {
    app->add_option("--config", o.config_path, "Configuration file");
    app->add_option("--seed", o.seed, "Master seed");
    app->add_option("--trajectories", o.trajectories, "Trajectories per ensemble")->check(CLI::PositiveNumber);
    app->add_option("--noise", o.noise, "Stochastic terms")->check(CLI::IsMember({"on", "off"}));
    app->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    app->add_option("--method", o.method, "Fit method")->check(CLI::IsMember({"1", "2", "both"}));
    app->add_option("--out", o.out, "Output directory");
}

Config resolve(const Common& o, std::optional<Config> base = std::nullopt) {
    Config c = base ? *base : Config{};
    if (!o.config_path.empty()) c = load_config(o.config_path);
    if (o.seed) c.run.master_seed = *o.seed;
    if (o.trajectories) c.run.trajectory_count = *o.trajectories;
    if (o.noise) c.run.noise_enabled = *o.noise == "on";
    if (o.workers) c.workers = *o.workers;
    if (!o.method.empty()) c.method = o.method;
    for (const auto& w : validate(c.physics)) std::cerr << "warning: " << w << '\n';
    return c;
}

std::string join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

// Gnuplot script plotting columns 2.. of a dataset against column 1.
std::string gnuplot_script(const std::string& data, const Dataset& d, const std::string& xlabel,
                           const std::string& ylabel, bool logx, bool logy) {
    std::string s = "set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n";
    s += "set xlabel '" + xlabel + "'\nset ylabel '" + ylabel + "'\n";
    if (logx) s += "set logscale x\n";
    if (logy) s += "set logscale y\n";
    s += "plot ";
    for (std::size_t j = 1; j < d.columns.size(); ++j)
        s += (j > 1 ? ", " : "") + std::string("'") + data + "' using 1:" + std::to_string(j + 1) + " with lines";
    return s + "\n";
}

void emit_table(const fs::path& dir, const std::string& stem, const Dataset& d, const std::string& xl,
                const std::string& yl, bool logx, bool logy) {
    write_dataset(join(dir, stem + ".csv"), d);
    write_text(join(dir, stem + ".gp"), gnuplot_script(stem + ".csv", d, xl, yl, logx, logy));
    std::cout << "wrote " << join(dir, stem + ".csv") << '\n';
}

int cmd_analytic(const Common& o, const std::string& figure) {
    const Config c = resolve(o);
    const fs::path dir(o.out);
    fs::create_directories(dir);
    if (figure == "fig2" || figure == "all")
        emit_table(dir, "fig2_cooling_time", cooling_time_table(c), "w (m)", "cooling time (s)", true, true);
    if (figure == "fig3" || figure == "all") {
        Dataset d = averaged_friction_table(c);
        std::vector<double> zeros;
        for (double w : c.sweep.waists)
            zeros.push_back(friction_zero_crossing(with(c.physics, w, c.sweep.friction_delay, c.sweep.saturation)));
        d.header["zero_crossing_wavelengths"] = zeros;
        emit_table(dir, "fig3_averaged_friction", d, "delta (wavelengths)", "<rho> (1/s)", false, false);
        for (std::size_t j = 0; j < zeros.size(); ++j)
            std::printf("w = %.3g um: averaged friction changes sign at delta = %.4f lambda\n",
                        c.sweep.waists[j] * 1e6, zeros[j]);
    }
    if (figure == "fig4" || figure == "all")
        emit_table(dir, "fig4_temperature", temperature_table(c), "w (m)", "T (K)", true, true);
    return 0;
}

// Writes one ensemble file per initial temperature, skipping files whose
// header already matches the requested run.
std::vector<std::string> simulate_ensembles(const Config& c, const fs::path& dir) {
    std::vector<std::string> files;
    const Model m = c.model();
    for (std::size_t k = 0; k < c.temperatures.size(); ++k) {
        Config ck = c;
        ck.run.initial_temperature = c.temperatures[k];
        const json header = make_manifest(ck, "simulate");
        const std::string path = join(dir, "ensemble_" + std::to_string(k) + ".csv");
        files.push_back(path);
        if (auto old = read_header(path)) {
            json h = *old;
            h.erase("ensemble");
            if (h == header) {
                std::cout << "up to date: " << path << '\n';
                continue;
            }
        }
        const EnsembleResult e = run_ensemble(m, ck.physics, ck.run, ck.ensemble_options());
        write_dataset(path, ensemble_dataset(header, e, ck.run.initial_temperature));
        std::printf("T0 = %.4g mK: %d trajectories (%d aborted) -> %s\n", ck.run.initial_temperature * 1e3,
                    e.completed, e.aborted, path.c_str());
        std::fflush(stdout);
    }
    return files;
}

std::vector<std::string> simulate_trajectories(const Config& c, const fs::path& dir) {
    std::vector<std::string> files;
    const Model m = c.model();
    const json header = make_manifest(c, "simulate");
    for (int i = 0; i < c.run.trajectory_count; ++i) {
        const std::string path = join(dir, "trajectory_" + std::to_string(i) + ".csv");
        files.push_back(path);
        json h = header;
        h["trajectory"] = i;
        if (auto old = read_header(path); old && *old == h) continue;
        SystemState s0 = initial_state(m, c.physics, c.initial_momentum);
        if (c.run.initial_temperature > 0) {
            RandomStream rng(c.run.master_seed, ~static_cast<std::uint64_t>(i));
            const ThermalSample z = sample_thermal(m, c.run.initial_temperature, rng);
            s0.x = z.x;
            s0.p = z.p;
        }
        const Trajectory tr = run_trajectory(m, c.run, s0, static_cast<std::uint64_t>(i));
        write_dataset(path, trajectory_dataset(h, tr));
    }
    std::cout << "wrote " << files.size() << " trajectory file(s) to " << dir.string() << '\n';
    return files;
}

void write_manifest(const Config& c, const fs::path& dir, const std::string& command,
                    const std::vector<std::string>& outputs) {
    json j = make_manifest(c, command);
    j["created"] = timestamp();
    j["outputs"] = outputs;
    write_json(join(dir, "manifest.json"), j);
}

std::vector<std::string> planned_outputs(const Config& c, const fs::path& dir) {
    std::vector<std::string> v;
    if (!c.temperatures.empty())
        for (std::size_t k = 0; k < c.temperatures.size(); ++k) v.push_back(join(dir, "ensemble_" + std::to_string(k) + ".csv"));
    else
        for (int i = 0; i < c.run.trajectory_count; ++i) v.push_back(join(dir, "trajectory_" + std::to_string(i) + ".csv"));
    return v;
}

int cmd_simulate(const Common& o, const std::vector<std::string>& temps) {
    Config c = resolve(o);
    if (!temps.empty()) {
        UnitParser u(c.physics.half_linewidth, c.physics.wavelength);
        std::string joined;
        // Accept both "0.2,0.4 mK" and a trailing unit given as its own argument.
        for (std::size_t i = 0; i < temps.size(); ++i) {
            const bool unit_only = !temps[i].empty() && std::isalpha(static_cast<unsigned char>(temps[i].front()));
            joined += (i == 0 ? "" : unit_only ? " " : ", ") + temps[i];
        }
        c.temperatures = u.parse_list(Dimension::temperature, joined, "--temperatures");
    }
    validate(c.run, c.model().grid);
    const fs::path dir(o.out);
    fs::create_directories(dir);
    write_manifest(c, dir, "simulate", planned_outputs(c, dir));
    if (!c.temperatures.empty())
        simulate_ensembles(c, dir);
    else
        simulate_trajectories(c, dir);
    return 0;
}

struct Analysis {
    std::vector<ReportRow> rows;
    json summary;
};

Analysis analyze_files(const std::vector<std::string>& inputs, const std::string& method) {
    if (inputs.empty()) throw Error("no input files given", ExitCode::usage);
    Analysis a;
    a.summary["inputs"] = inputs;
    a.summary["method"] = method;
    std::optional<std::string> print;
    std::vector<RatePoint> points;
    json fits = json::array();
    for (const auto& path : inputs) {
        const Dataset d = read_dataset(path);
        if (!d.header.contains("config")) throw ConfigError(path + ": header is not a run manifest");
        const std::string fp = fingerprint(d.header);
        if (!print) print = fp;
        else if (*print != fp) throw ConfigError(path + ": physics, trap or grid differ from the first input; refusing to mix runs");
        const Config c = parse_config(d.header.at("config").get<std::string>());
        const Model m = c.model();
        const double gamma = c.physics.half_linewidth;
        if (d.has("mean_p2")) {
            const EnsembleResult e = ensemble_from(d);
            const TemperatureSeries s = ensemble_temperature(e, m);
            Method2Options opt;
            opt.refine_frequency = c.refine_frequency;
            const FitResult r = cooling_rate(s, c.trap_frequency, opt);
            const double t0 = d.header.at("ensemble").at("initial_temperature_K").get<double>();
            a.rows.push_back({t0, r.value, r.standard_error, "2", e.completed});
            points.push_back({t0, r.value, r.standard_error});
            fits.push_back({{"input", path}, {"T0", t0}, {"fit", to_json(r)}});
        } else {
            const Trajectory tr = trajectory_from(d);
            const double w = m.mechanics.trap_frequency;
            json entry = {{"input", path}};
            if (method == "1" || method == "both") {
                const FitResult r = fit_method1(tr.t, tr.p, w);
                a.rows.push_back({c.run.initial_temperature, r.value * gamma, r.standard_error * gamma, "1", 1});
                entry["method1"] = to_json(r);
            }
            if (method == "2" || method == "both") {
                Method2Options opt;
                opt.refine_frequency = c.refine_frequency;
                const FitResult r = fit_method2_friction(tr.t, tr.p2, w, opt);
                a.rows.push_back({c.run.initial_temperature, r.value * gamma, r.standard_error * gamma, "2", 1});
                entry["method2"] = to_json(r);
            }
            fits.push_back(entry);
        }
    }
    a.summary["fits"] = fits;
    if (points.size() >= 3) {
        const FitResult ts = stationary_temperature_fit(points);
        a.summary["stationary_temperature_K"] = ts.value;
        a.summary["stationary_temperature_error_K"] = ts.standard_error;
        a.summary["stationary_fit"] = to_json(ts);
    }
    return a;
}

int cmd_analyze(const Common& o, const std::vector<std::string>& inputs) {
    const std::string method = o.method.empty() ? "both" : o.method;
    Analysis a = analyze_files(inputs, method);
    const fs::path dir(o.out);
    fs::create_directories(dir);
    write_fit_report(join(dir, "fit_report.csv"), a.rows);
    write_json(join(dir, "summary.json"), a.summary);
    for (const auto& r : a.rows)
        std::printf("T0 %.4g K, method %s: %.6g +- %.3g\n", r.initial_temperature, r.method.c_str(), r.rate, r.error);
    if (a.summary.contains("stationary_temperature_K"))
        std::printf("stationary temperature: %.3f +- %.3f mK\n", a.summary["stationary_temperature_K"].get<double>() * 1e3,
                    a.summary["stationary_temperature_error_K"].get<double>() * 1e3);
    std::cout << "wrote " << join(dir, "fit_report.csv") << " and summary.json\n";
    return 0;
}

int reproduce_fitting_example(const Common& o, const fs::path& dir) {
    Config c = resolve(o, fitting_example_config());
    const Model m = c.model();
    const json header = make_manifest(c, "reproduce fig4");
    const Trajectory tr = run_trajectory(m, c.run, initial_state(m, c.physics, c.initial_momentum));
    const std::string path = join(dir, "fig4_trajectory.csv");
    write_dataset(path, trajectory_dataset(header, tr));
    Method2Options refine;
    refine.refine_frequency = true;
    const FitResult f1 = fit_method1(tr.t, tr.p, m.mechanics.trap_frequency);
    const FitResult f2 = fit_method2_friction(tr.t, tr.p2, m.mechanics.trap_frequency, refine);
    const double amp = c.initial_momentum * m.mechanics.mobility / m.mechanics.trap_frequency / c.physics.pump_wavenumber;
    const double expected = trap_energy_damping_rate(c.physics, {c.trap_center(), 0.0, amp});
    const double g = c.physics.half_linewidth;
    std::printf("single trajectory, no noise: method 1 %.4g +- %.2g 1/s, method 2 %.4g +- %.2g 1/s, "
                "analytic 2<rho> %.4g 1/s\n",
                f1.value * g, f1.standard_error * g, f2.value * g, f2.standard_error * g, expected);
    json s = {{"method1", to_json(f1)}, {"method2", to_json(f2)}, {"analytic_energy_damping_rate_per_s", expected},
              {"units", "fit values in units of Gamma"}};
    write_json(join(dir, "fig4_fits.json"), s);
    write_text(join(dir, "fig4_trajectory.gp"),
               "set datafile separator ','\nset datafile commentschars '#'\nset xlabel 't (1/Gamma)'\n"
               "set ylabel 'p^2 (hbar k0)^2'\nplot 'fig4_trajectory.csv' using 1:4 with lines title 'p^2'\n");
    std::cout << "wrote " << path << '\n';
    return 0;
}

int reproduce_rates(const Common& o, const fs::path& dir) {
    const std::string name = o.preset.empty() ? "desk" : o.preset;
    Config c = resolve(o, preset(name));
    if (name == "full")
        std::cout << "note: the full preset runs " << c.run.trajectory_count * c.temperatures.size()
                  << " trajectories; use --preset desk on machines with few cores\n";
    validate(c.run, c.model().grid);
    write_manifest(c, dir, "reproduce fig5", planned_outputs(c, dir));
    const auto files = simulate_ensembles(c, dir);
    Analysis a = analyze_files(files, "2");
    write_fit_report(join(dir, "fig5_rates.csv"), a.rows);
    a.summary["preset"] = name;
    const double analytic = stationary_temperature(c.physics, max_friction_position(c.physics));
    a.summary["analytic_stationary_temperature_K"] = analytic;
    write_json(join(dir, "fig5_summary.json"), a.summary);
    write_text(join(dir, "fig5_rates.gp"),
               "set datafile separator ','\nset xlabel 'T0 (K)'\nset ylabel 'dT/dt (K/s)'\n"
               "plot 'fig5_rates.csv' every ::1 using 1:2:3 with yerrorbars title 'simulation'\n");
    std::printf("%-12s %-14s %-12s\n", "T0 (mK)", "dT/dt (K/s)", "error");
    for (const auto& r : a.rows) std::printf("%-12.4g %-14.5g %-12.3g\n", r.initial_temperature * 1e3, r.rate, r.error);
    const auto& fit = a.summary.at("stationary_fit");
    std::printf("stationary temperature: %.3f +- %.3f mK (reduced chi^2 %.2f)\n",
                a.summary["stationary_temperature_K"].get<double>() * 1e3,
                a.summary["stationary_temperature_error_K"].get<double>() * 1e3,
                fit.at("diagnostics").at("reduced_chi2").get<double>());
    std::printf("analytic prediction:    %.2f mK\n", analytic * 1e3);
    return 0;
}

int cmd_reproduce(const Common& o, const std::string& target) {
    const fs::path dir(o.out);
    fs::create_directories(dir);
    if (target == "fig2" || target == "fig3") return cmd_analytic(o, target);
    if (target == "fig4") {
        cmd_analytic(o, "fig4");
        return reproduce_fitting_example(o, dir);
    }
    return reproduce_rates(o, dir);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mirror-mediated optical cooling: analytic model, stochastic simulation and analysis"};
    app.require_subcommand(1);
    Common o;

    auto* analytic = app.add_subcommand("analytic", "Analytic sweeps (cooling time, averaged friction, temperature)");
    std::string figure = "all";
    add_common(analytic, o);
    analytic->add_option("--figure", figure)->check(CLI::IsMember({"fig2", "fig3", "fig4", "all"}));

    auto* simulate = app.add_subcommand("simulate", "Run trajectories or ensembles");
    std::vector<std::string> temps;
    add_common(simulate, o);
    simulate->add_option("--temperatures", temps, "Initial temperatures, e.g. 0.2,0.4,1.6 mK")->delimiter(',');

    auto* analyze = app.add_subcommand("analyze", "Fit trajectory or ensemble files");
    std::vector<std::string> inputs;
    add_common(analyze, o);
    analyze->add_option("inputs", inputs, "Dataset files");

    auto* reproduce = app.add_subcommand("reproduce", "Regenerate a figure dataset");
    std::string target;
    add_common(reproduce, o);
    reproduce->add_option("target", target)->required()->check(CLI::IsMember({"fig2", "fig3", "fig4", "fig5"}));
    reproduce->add_option("--preset", o.preset, "Ensemble scale for fig5")->check(CLI::IsMember({"desk", "full"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
    }

    try {
        if (*analytic) return cmd_analytic(o, figure);
        if (*simulate) return cmd_simulate(o, temps);
        if (*analyze) return cmd_analyze(o, inputs);
        if (*reproduce) return cmd_reproduce(o, target);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
