#ifndef MMCOOL_ANALYSIS_HPP
#define MMCOOL_ANALYSIS_HPP

// Friction, cooling-rate and stationary-temperature estimators.
//
// The fitters are unit-agnostic: times, frequencies and values may be given
// in SI or normalized units as long as they are consistent. Temperatures are
// kinetic, T = <p^2>/(m k_B), which equals the thermodynamic temperature of a
// 1D harmonic oscillator by equipartition.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "constants.hpp"
#include "ensemble.hpp"
#include "error.hpp"

namespace mmcool {

struct FitDiagnostics {
    std::string method;
    double residual_norm = 0.0;
    double window_begin = 0.0;
    double window_end = 0.0;
    double excluded_fraction = 0.0;
    int points = 0;
    bool weighted = false;
    double reduced_chi2 = 0.0;
    std::vector<std::string> flags;
    std::map<std::string, double> values;

    bool flagged(const std::string& f) const {
        return std::find(flags.begin(), flags.end(), f) != flags.end();
    }
};

struct FitResult {
    double value = 0.0;
    double standard_error = 0.0;
    FitDiagnostics diagnostics;
};

struct TemperatureSeries {
    std::vector<double> times;       // s
    std::vector<double> temperature; // K
    std::vector<double> error;       // K
    std::vector<std::vector<double>> subensembles;
    int trajectories = 0;
};

struct RatePoint {
    double initial_temperature;
    double rate;
    double error;
};

namespace detail {

struct LinearSolution {
    Eigen::VectorXd coef;
    Eigen::MatrixXd cov;
    double chi2 = 0.0; // weighted residual sum of squares
    double residual_norm = 0.0;
    int dof = 0;
};

// Least squares for y ~ X c. With weights the covariance is (X^T W X)^-1,
// i.e. the weights are taken as absolute inverse variances; without them it
// is scaled by the residual variance.
inline LinearSolution least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd* weights = nullptr) {
    Eigen::MatrixXd a = x;
    Eigen::VectorXd b = y;
    if (weights) {
        const Eigen::VectorXd s = weights->cwiseSqrt();
        a = s.asDiagonal() * x;
        b = s.cwiseProduct(y);
    }
    LinearSolution r;
    const auto qr = a.colPivHouseholderQr();
    r.coef = qr.solve(b);
    const Eigen::VectorXd res = b - a * r.coef;
    r.chi2 = res.squaredNorm();
    r.residual_norm = (y - x * r.coef).norm();
    r.dof = static_cast<int>(x.rows() - x.cols());
    const Eigen::MatrixXd ata = a.transpose() * a;
    r.cov = ata.ldlt().solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
    if (!weights) r.cov *= r.dof > 0 ? r.chi2 / r.dof : 0.0;
    return r;
}

inline void require_same_length(std::size_t a, std::size_t b) {
    if (a != b) throw DomainError("series arrays differ in length");
}

} // namespace detail

// Method 1: cut p(t) at its zero crossings, fit each half oscillation with
// a cos(w t) + b sin(w t), and regress the logarithm of the amplitudes on
// time. The amplitude decays at rho/2, so the returned value is
// rho = -2 * slope. The first trap period is discarded.
inline FitResult fit_method1(std::span<const double> t, std::span<const double> p,
                             double trap_frequency) {
    detail::require_same_length(t.size(), p.size());
    if (!(trap_frequency > 0)) throw DomainError("trap frequency must be positive");
    if (t.size() < 8) throw InsufficientDataError("trajectory too short for method 1");

    const double period = constants::two_pi / trap_frequency;
    const double start = t.front() + period;
    const double min_len = 0.25 * period;

    std::vector<double> crossings;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        if (t[i] < start) continue;
        if ((p[i] < 0) != (p[i + 1] < 0)) {
            const double f = p[i] / (p[i] - p[i + 1]);
            crossings.push_back(t[i] + f * (t[i + 1] - t[i]));
        }
    }

    std::vector<double> when, log_amp;
    std::size_t i = 0;
    for (std::size_t c = 0; c + 1 < crossings.size(); ++c) {
        const double a = crossings[c], b = crossings[c + 1];
        if (b - a < min_len) continue;
        while (i < t.size() && t[i] < a) ++i;
        std::size_t j = i;
        while (j < t.size() && t[j] <= b) ++j;
        if (j - i < 4) continue;
        const double mid = 0.5 * (a + b);
        Eigen::MatrixXd x(static_cast<Eigen::Index>(j - i), 2);
        Eigen::VectorXd y(x.rows());
        for (std::size_t k = i; k < j; ++k) {
            const auto r = static_cast<Eigen::Index>(k - i);
            x(r, 0) = std::cos(trap_frequency * (t[k] - mid));
            x(r, 1) = std::sin(trap_frequency * (t[k] - mid));
            y(r) = p[k];
        }
        const auto fit = detail::least_squares(x, y);
        const double amp = std::hypot(fit.coef(0), fit.coef(1));
        if (!(amp > 0)) continue;
        when.push_back(mid);
        log_amp.push_back(std::log(amp));
    }
    if (when.size() < 6)
        throw InsufficientDataError("fewer than 3 resolvable oscillations for method 1");

    const double tc = std::accumulate(when.begin(), when.end(), 0.0) / static_cast<double>(when.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(when.size()), 2);
    Eigen::VectorXd y(x.rows());
    for (std::size_t k = 0; k < when.size(); ++k) {
        x(static_cast<Eigen::Index>(k), 0) = 1.0;
        x(static_cast<Eigen::Index>(k), 1) = when[k] - tc;
        y(static_cast<Eigen::Index>(k)) = log_amp[k];
    }
    const auto fit = detail::least_squares(x, y);

    FitResult r;
    r.value = -2.0 * fit.coef(1);
    r.standard_error = 2.0 * std::sqrt(std::max(0.0, fit.cov(1, 1)));
    auto& d = r.diagnostics;
    d.method = "method1";
    d.residual_norm = fit.residual_norm;
    d.window_begin = start;
    d.window_end = t.back();
    d.excluded_fraction = (start - t.front()) / (t.back() - t.front());
    d.points = static_cast<int>(when.size());
    d.reduced_chi2 = fit.dof > 0 ? fit.chi2 / fit.dof : 0.0;
    d.values["half_oscillations"] = static_cast<double>(when.size());
    d.values["amplitude_at_center"] = std::exp(fit.coef(0));
    d.values["window_center"] = tc;
    return r;
}

struct Method2Options {
    // Refine the oscillation frequency around 2 w_t by minimizing the
    // residual; falls back to the fixed frequency when the search fails.
    bool refine_frequency = false;
    // Use 1/error^2 weights when errors are supplied and all positive.
    bool use_weights = true;
};

namespace detail {

struct SineLineFit {
    LinearSolution full;
    double center;
    double frequency;
};

inline SineLineFit sine_line_fit(std::span<const double> t, std::span<const double> y,
                                 const Eigen::VectorXd* w, double frequency, double center) {
    const auto n = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd x(n, 4);
    Eigen::VectorXd v(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double s = t[static_cast<std::size_t>(k)] - center;
        x(k, 0) = 1.0;
        x(k, 1) = s;
        x(k, 2) = std::sin(frequency * s);
        x(k, 3) = std::cos(frequency * s);
        v(k) = y[static_cast<std::size_t>(k)];
    }
    return {least_squares(x, v, w), center, frequency};
}

} // namespace detail

// Method 2: least-squares fit of offset + slope + a single sinusoid at twice
// the trap frequency to a p^2(t) or T(t) series, subtraction of the
// sinusoid, and a straight-line fit to what remains. The value is the slope.
inline FitResult fit_method2(std::span<const double> t, std::span<const double> y,
                             double trap_frequency, std::span<const double> errors = {},
                             const Method2Options& options = {}) {
    detail::require_same_length(t.size(), y.size());
    if (!errors.empty()) detail::require_same_length(t.size(), errors.size());
    if (!(trap_frequency > 0)) throw DomainError("trap frequency must be positive");
    if (t.size() < 8) throw InsufficientDataError("series too short for method 2");

    const double period = constants::two_pi / trap_frequency;
    const double start = t.front() + period;
    const auto first = static_cast<std::size_t>(
        std::lower_bound(t.begin(), t.end(), start - 1e-12 * period) - t.begin());
    const auto tw = t.subspan(first);
    const auto yw = y.subspan(first);
    if (tw.size() < 8 || tw.back() - tw.front() < 2.5 * period)
        throw InsufficientDataError("series spans fewer than 5 oscillations of the p^2 signal");

    bool weighted = false;
    Eigen::VectorXd w;
    if (options.use_weights && !errors.empty()) {
        const auto ew = errors.subspan(first);
        weighted = std::all_of(ew.begin(), ew.end(), [](double e) { return e > 0; });
        if (weighted) {
            w.resize(static_cast<Eigen::Index>(ew.size()));
            for (std::size_t k = 0; k < ew.size(); ++k)
                w(static_cast<Eigen::Index>(k)) = 1.0 / (ew[k] * ew[k]);
        }
    }
    const Eigen::VectorXd* wp = weighted ? &w : nullptr;

    const double center = 0.5 * (tw.front() + tw.back());
    const double nominal = 2.0 * trap_frequency;
    auto fit = detail::sine_line_fit(tw, yw, wp, nominal, center);

    std::vector<std::string> flags;
    if (options.refine_frequency) {
        // Golden-section search on the residual over +-5% of the nominal
        // frequency.
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double lo = 0.95 * nominal, hi = 1.05 * nominal;
        auto rss = [&](double f) { return detail::sine_line_fit(tw, yw, wp, f, center).full.chi2; };
        double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
        double fa = rss(a), fb = rss(b);
        for (int it = 0; it < 80 && hi - lo > 1e-10 * nominal; ++it) {
            if (fa < fb) {
                hi = b;
                b = a;
                fb = fa;
                a = hi - g * (hi - lo);
                fa = rss(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + g * (hi - lo);
                fb = rss(b);
            }
        }
        const double best = 0.5 * (lo + hi);
        const auto refined = detail::sine_line_fit(tw, yw, wp, best, center);
        const bool at_edge = best < 0.951 * nominal || best > 1.049 * nominal;
        if (!at_edge && std::isfinite(refined.full.chi2) && refined.full.chi2 <= fit.full.chi2)
            fit = refined;
        else
            flags.push_back("frequency refinement failed; fixed-frequency fit used");
    }

    // Subtract the oscillation and fit a line to the remainder.
    const auto n = static_cast<Eigen::Index>(tw.size());
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd v(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double s = tw[static_cast<std::size_t>(k)] - center;
        x(k, 0) = 1.0;
        x(k, 1) = s;
        v(k) = yw[static_cast<std::size_t>(k)] - fit.full.coef(2) * std::sin(fit.frequency * s) -
               fit.full.coef(3) * std::cos(fit.frequency * s);
    }
    auto line = detail::least_squares(x, v, wp);
    if (weighted && line.dof > 0) line.cov *= std::max(1.0, line.chi2 / line.dof);

    FitResult r;
    r.value = line.coef(1);
    r.standard_error = std::sqrt(std::max(0.0, line.cov(1, 1)));
    auto& d = r.diagnostics;
    d.method = "method2";
    d.residual_norm = line.residual_norm;
    d.window_begin = tw.front();
    d.window_end = tw.back();
    d.excluded_fraction = static_cast<double>(first) / static_cast<double>(t.size());
    d.points = static_cast<int>(tw.size());
    d.weighted = weighted;
    d.reduced_chi2 = line.dof > 0 ? line.chi2 / line.dof : 0.0;
    d.flags = std::move(flags);
    d.values["intercept"] = line.coef(0);
    d.values["window_center"] = center;
    d.values["oscillation_amplitude"] = std::hypot(fit.full.coef(2), fit.full.coef(3));
    d.values["oscillation_frequency"] = fit.frequency;
    return r;
}

// Friction from method 2 applied to p^2(t): rho = -slope / level, where the
// level is the fitted line at the window center.
inline FitResult fit_method2_friction(std::span<const double> t, std::span<const double> p2,
                                      double trap_frequency, const Method2Options& options = {}) {
    FitResult r = fit_method2(t, p2, trap_frequency, {}, options);
    const double level = r.diagnostics.values.at("intercept");
    if (!(level > 0)) throw InsufficientDataError("non-positive p^2 level in method 2");
    r.value = -r.value / level;
    r.standard_error /= level;
    r.diagnostics.method = "method2_friction";
    return r;
}

// T(t) = <p^2>/(m k_B) in SI units from normalized ensemble statistics.
// Per-bin errors come from the spread of sub-ensemble means when there are
// at least two, otherwise from the trajectory spread.
inline TemperatureSeries ensemble_temperature(const EnsembleResult& e, const Model& model) {
    if (e.completed < 2) throw InsufficientDataError("temperature series needs at least 2 trajectories");
    const UnitSystem u = model.grid.units();
    const double eta = model.mechanics.mobility;
    auto to_kelvin = [&](double p2) { return u.from_temperature(eta * p2); };

    TemperatureSeries s;
    s.trajectories = e.completed;
    const std::size_t n = e.t.size();
    s.times.resize(n);
    s.temperature.resize(n);
    s.error.resize(n);
    for (const auto& sub : e.subensemble_mean_p2) {
        std::vector<double> v(n);
        for (std::size_t k = 0; k < n; ++k) v[k] = to_kelvin(sub[k]);
        s.subensembles.push_back(std::move(v));
    }
    const auto m = static_cast<double>(s.subensembles.size());
    for (std::size_t k = 0; k < n; ++k) {
        s.times[k] = u.from_time(e.t[k]);
        s.temperature[k] = to_kelvin(e.mean_p2[k]);
        if (s.subensembles.size() >= 2) {
            double mean = 0.0;
            for (const auto& sub : s.subensembles) mean += sub[k];
            mean /= m;
            double ss = 0.0;
            for (const auto& sub : s.subensembles) ss += (sub[k] - mean) * (sub[k] - mean);
            s.error[k] = std::sqrt(ss / (m - 1.0) / m);
        } else {
            s.error[k] = to_kelvin(std::sqrt(e.var_p2[k] / e.completed));
        }
    }
    return s;
}

// dT/dt from method 2 on T(t). With two or more sub-ensembles the standard
// error is the spread of the sub-ensemble slopes, which accounts for the
// strong correlation between time bins.
inline FitResult cooling_rate(const TemperatureSeries& series, double trap_frequency,
                              const Method2Options& options = {}) {
    FitResult r = fit_method2(series.times, series.temperature, trap_frequency, series.error, options);
    r.diagnostics.method = "cooling_rate";
    r.diagnostics.values["trajectories"] = series.trajectories;
    const std::size_t m = series.subensembles.size();
    if (m >= 2) {
        std::vector<double> slopes;
        for (const auto& sub : series.subensembles)
            slopes.push_back(fit_method2(series.times, sub, trap_frequency, {}, options).value);
        const double mean = std::accumulate(slopes.begin(), slopes.end(), 0.0) / static_cast<double>(m);
        double ss = 0.0;
        for (double v : slopes) ss += (v - mean) * (v - mean);
        r.diagnostics.values["fit_standard_error"] = r.standard_error;
        r.diagnostics.values["subensembles"] = static_cast<double>(m);
        r.standard_error = std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
        r.diagnostics.flags.push_back("error from sub-ensemble spread");
    }
    return r;
}

// Weighted line dT/dt = a - b T0 through the points; returns the root
// T_s = a/b with Gaussian error propagation from the fit covariance.
inline FitResult stationary_temperature_fit(std::span<const RatePoint> points) {
    if (points.size() < 3) throw InsufficientDataError("stationary temperature fit needs at least 3 points");
    const auto n = static_cast<Eigen::Index>(points.size());
    const bool weighted = std::all_of(points.begin(), points.end(), [](const RatePoint& q) { return q.error > 0; });

    double scale = 0.0;
    for (const auto& q : points) scale = std::max(scale, std::abs(q.initial_temperature));
    if (!(scale > 0)) throw DomainError("initial temperatures must not all be zero");

    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n), w(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& q = points[static_cast<std::size_t>(k)];
        x(k, 0) = 1.0;
        x(k, 1) = q.initial_temperature / scale;
        y(k) = q.rate;
        w(k) = weighted ? 1.0 / (q.error * q.error) : 1.0;
    }
    const auto fit = detail::least_squares(x, y, weighted ? &w : nullptr);
    const double a = fit.coef(0);
    const double b = -fit.coef(1) / scale;
    if (!(b > 0)) throw InsufficientDataError("no stable stationary temperature: dT/dt does not decrease with T0");

    const double va = fit.cov(0, 0);
    const double vb = fit.cov(1, 1) / (scale * scale);
    const double cab = -fit.cov(0, 1) / scale;
    const double ts = a / b;
    const double var = va / (b * b) + a * a * vb / (b * b * b * b) - 2.0 * a * cab / (b * b * b);

    FitResult r;
    r.value = ts;
    r.standard_error = std::sqrt(std::max(0.0, var));
    auto& d = r.diagnostics;
    d.method = "stationary_temperature";
    d.residual_norm = fit.residual_norm;
    d.points = static_cast<int>(n);
    d.weighted = weighted;
    d.reduced_chi2 = fit.dof > 0 ? fit.chi2 / fit.dof : 0.0;
    d.values["intercept"] = a;
    d.values["slope"] = -b;
    d.values["intercept_error"] = std::sqrt(std::max(0.0, va));
    d.values["slope_error"] = std::sqrt(std::max(0.0, vb));
    auto tmin = std::min_element(points.begin(), points.end(),
                                 [](auto& l, auto& r2) { return l.initial_temperature < r2.initial_temperature; });
    auto tmax = std::max_element(points.begin(), points.end(),
                                 [](auto& l, auto& r2) { return l.initial_temperature < r2.initial_temperature; });
    d.window_begin = tmin->initial_temperature;
    d.window_end = tmax->initial_temperature;
    const bool any_pos = std::any_of(points.begin(), points.end(), [](auto& q) { return q.rate > 0; });
    const bool any_neg = std::any_of(points.begin(), points.end(), [](auto& q) { return q.rate < 0; });
    if (!(any_pos && any_neg)) d.flags.push_back("outside sampled range");
    return r;
}

} // namespace mmcool

#endif // MMCOOL_ANALYSIS_HPP
