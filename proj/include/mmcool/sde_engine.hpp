#ifndef MMCOOL_SDE_ENGINE_HPP
#define MMCOOL_SDE_ENGINE_HPP

// Stochastic integration of the coupled atom/mode equations.
//
// Two schemes are provided. `euler_maruyama` is the plain explicit Ito
// scheme. `split` (the default) treats every deterministic sub-flow exactly
// and composes them symmetrically:
//
//   noise(h) . I(h/2) . [R(h) T(h)] . I(h/2)
//
// where R is the free rotation alpha_k -> exp(i Delta_k h) alpha_k, T the
// harmonic trap (or free flight) flow, and I the atom-field interaction at
// fixed position, which is a rank-one linear flow for the amplitudes whose
// momentum kick integrates in closed form. Noise coefficients are taken at
// the start of the step, so the scheme converges to the Ito solution.

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "field_model.hpp"
#include "random.hpp"

namespace mmcool {

enum class Scheme { split, euler_maruyama };

// Ito increments for one step, each N(0, dt).
struct NoiseChannels {
    double dw0 = 0.0;
    double dw_plus = 0.0;
    double dw_minus = 0.0;

    static NoiseChannels draw(RandomStream& rng, double dt, double sign = 1.0) {
        const double sd = sign * std::sqrt(dt);
        NoiseChannels n;
        n.dw0 = sd * rng.normal();
        n.dw_plus = sd * rng.normal();
        n.dw_minus = sd * rng.normal();
        return n;
    }
};

// dP and the common factor c of dA_k = c f_k.
struct NoiseIncrement {
    double dp = 0.0;
    complex mode_factor;
};

// dP = sqrt(4 gamma / 5) |E| dW0 + sqrt(2 gamma) |dE/dxi| dW+
// dA_k = sqrt(gamma / 2) f_k (dE/dxi)/|dE/dxi| (i dW+ - dW-)
// The unit phase factor is replaced by 1 where the gradient vanishes.
inline NoiseIncrement noise_from_probe(const AtomFieldCoupling& coupling, const FieldProbe& probe,
                                       const NoiseChannels& dw) {
    using namespace std::complex_literals;
    const double gamma = coupling.scattering_rate;
    if (!(gamma > 0)) return {};
    const double grad = std::abs(probe.gradient);
    const complex unit = grad > 0 ? probe.gradient / grad : complex{1.0, 0.0};
    NoiseIncrement n;
    n.dp = std::sqrt(0.8 * gamma) * std::abs(probe.field) * dw.dw0 +
           std::sqrt(2.0 * gamma) * grad * dw.dw_plus;
    n.mode_factor = std::sqrt(0.5 * gamma) * unit * (1i * dw.dw_plus - dw.dw_minus);
    return n;
}

struct ModeNoise {
    double dp = 0.0;
    std::vector<complex> da;
};

// Full per-mode noise increments at the given state.
inline ModeNoise noise_increments(const Model& model, const SystemState& state, double dt,
                                  RandomStream& rng) {
    ModeFunctions mf(model.grid);
    mf.evaluate(state.x);
    const FieldProbe probe = FieldProbe::measure(mf, state.field.amplitudes);
    const NoiseIncrement inc = noise_from_probe(model.coupling, probe, NoiseChannels::draw(rng, dt));
    ModeNoise out;
    out.dp = inc.dp;
    const auto f = mf.values();
    out.da.resize(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) out.da[k] = inc.mode_factor * f[k];
    return out;
}

// Run parameters in normalized units (times in 1/Gamma).
struct RunConfig {
    double dt = 1e-3;
    double duration = 30.0;
    int record_stride = 10;
    std::uint64_t master_seed = 1;
    int trajectory_count = 1;
    double initial_temperature = 0.0; // K
    bool noise_enabled = true;
    Scheme scheme = Scheme::split;
    bool record_photon_number = false;

    long long step_count() const {
        return static_cast<long long>(std::floor(duration / dt + 1e-9));
    }
    long long sample_count() const { return step_count() / record_stride + 1; }
};

inline void validate(const RunConfig& c, const ModeGrid& grid) {
    if (!(c.dt > 0)) throw ConfigError("dt must be positive");
    if (!(c.duration > 0)) throw ConfigError("duration must be positive");
    if (c.record_stride < 1) throw ConfigError("record_stride must be >= 1");
    if (c.trajectory_count < 1) throw ConfigError("trajectory_count must be >= 1");
    if (!(c.initial_temperature >= 0)) throw ConfigError("initial temperature must be >= 0");
    const double bound = grid.units().to_time(grid.max_duration());
    if (c.duration > bound) {
        throw ConfigError("duration " + std::to_string(c.duration) +
                          "/Gamma exceeds the field periodicity bound 0.95 * 2pi/dw = " +
                          std::to_string(bound) + "/Gamma; the discrete comb revives after 2pi/dw");
    }
}

// Reusable per-trajectory scratch data for the split scheme.
class Stepper {
public:
    Stepper(const Model& model, double dt)
        : model_(&model), dt_(dt), mf_(model.grid), rotation_(model.grid.detunings().size()) {
        const auto det = model.grid.detunings();
        for (std::size_t k = 0; k < rotation_.size(); ++k)
            rotation_[k] = std::polar(1.0, det[k] * dt);
        const double w = model.mechanics.trap_frequency;
        cos_wt_ = std::cos(w * dt);
        sin_wt_ = std::sin(w * dt);
    }

    // Must be called when the state changes other than through step().
    void attach(const SystemState& s) {
        mf_.evaluate(s.x);
        probe_ = FieldProbe::measure(mf_, s.field.amplitudes);
    }

    const FieldProbe& probe() const { return probe_; }
    const ModeFunctions& mode_functions() const { return mf_; }

    void step(SystemState& s, const NoiseChannels* dw) {
        const AtomFieldCoupling& cp = model_->coupling;
        auto alpha = std::span<complex>(s.field.amplitudes);
        if (dw != nullptr) {
            const NoiseIncrement n = noise_from_probe(cp, probe_, *dw);
            s.p += n.dp;
            const auto f = mf_.values();
            for (std::size_t k = 0; k < alpha.size(); ++k) alpha[k] += n.mode_factor * f[k];
            probe_.field += n.mode_factor * probe_.overlap;
            probe_.gradient += n.mode_factor * probe_.cross;
        }
        interact(s, 0.5 * dt_);
        for (std::size_t k = 0; k < alpha.size(); ++k) alpha[k] *= rotation_[k];
        move(s);
        attach(s);
        interact(s, 0.5 * dt_);
        s.t += dt_;
    }

private:
    // (1 - exp(-a h)) / a
    static complex decay_integral(complex a, double h) {
        const complex z = a * h;
        if (std::abs(z) < 1e-4) return h * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0);
        return (1.0 - std::exp(-z)) / a;
    }

    // Exact atom-field flow over h at fixed position.
    void interact(SystemState& s, double h) {
        using namespace std::complex_literals;
        const double S = probe_.overlap;
        if (!(S > 0)) return;
        const double u0 = model_->coupling.light_shift;
        const double gamma = model_->coupling.scattering_rate;
        const complex kappa = (1i * u0 + gamma) * S;
        const complex e0 = probe_.field;
        const complex g0 = probe_.gradient;
        const double r = probe_.cross / S;
        const complex decay = std::exp(-kappa * h);

        const complex phi_c = decay_integral(std::conj(kappa), h);
        const complex z = phi_c * std::conj(e0) * g0 +
                          r * std::norm(e0) * (decay_integral(2.0 * kappa.real(), h) - phi_c);
        s.p += -2.0 * u0 * z.real() + 2.0 * gamma * z.imag();

        const complex w = (decay - 1.0) * e0 / S;
        const auto f = mf_.values();
        auto alpha = std::span<complex>(s.field.amplitudes);
        for (std::size_t k = 0; k < alpha.size(); ++k) alpha[k] += w * f[k];
        probe_.field = decay * e0;
        probe_.gradient = g0 + (decay - 1.0) * r * e0;
    }

    // Exact trap / free-flight flow over dt.
    void move(SystemState& s) const {
        const Mechanics& m = model_->mechanics;
        const double u = s.x - m.center;
        if (m.pinned) {
            s.p -= m.spring() * u * dt_;
            return;
        }
        const double v = m.mobility * s.p;
        const double w = m.trap_frequency;
        if (w > 0) {
            s.x = m.center + u * cos_wt_ + v * sin_wt_ / w;
            s.p = (-u * w * sin_wt_ + v * cos_wt_) / m.mobility;
        } else {
            s.x += v * dt_;
        }
    }

    const Model* model_;
    double dt_;
    ModeFunctions mf_;
    FieldProbe probe_;
    std::vector<complex> rotation_;
    double cos_wt_ = 1.0;
    double sin_wt_ = 0.0;
};

// One explicit Euler-Maruyama step of all variables.
inline void euler_maruyama_step(const Model& model, SystemState& s, double dt,
                                const NoiseChannels* dw) {
    const StateDerivative d = drift(model, s);
    NoiseIncrement n;
    std::vector<double> f;
    if (dw != nullptr) {
        ModeFunctions mf(model.grid);
        mf.evaluate(s.x);
        n = noise_from_probe(model.coupling, FieldProbe::measure(mf, s.field.amplitudes), *dw);
        f.assign(mf.values().begin(), mf.values().end());
    }
    s.x += d.dx * dt;
    s.p += d.dp * dt + n.dp;
    for (std::size_t k = 0; k < d.dalpha.size(); ++k) {
        s.field.amplitudes[k] += d.dalpha[k] * dt;
        if (dw != nullptr) s.field.amplitudes[k] += n.mode_factor * f[k];
    }
    s.t += dt;
}

// Advance `state` by one step of the chosen scheme. The split scheme keeps
// no state between calls here; Stepper is the efficient interface.
inline SystemState step(const Model& model, SystemState state, double dt, RandomStream* rng,
                        Scheme scheme = Scheme::split) {
    NoiseChannels dw;
    const NoiseChannels* pdw = nullptr;
    if (rng != nullptr) {
        dw = NoiseChannels::draw(*rng, dt);
        pdw = &dw;
    }
    if (scheme == Scheme::euler_maruyama) {
        euler_maruyama_step(model, state, dt, pdw);
    } else {
        Stepper st(model, dt);
        st.attach(state);
        st.step(state, pdw);
    }
    return state;
}

inline double state_norm(const SystemState& s) {
    return std::sqrt(s.x * s.x + s.p * s.p + s.field.photon_number());
}

inline bool finite(const SystemState& s) {
    return std::isfinite(s.x) && std::isfinite(s.p) && std::isfinite(s.field.photon_number());
}

// Integrate from `state` for config.step_count() steps. `observe(sample,
// state)` is called at every recorded step, including the initial one.
// noise_sign = -1 gives the antithetic partner of the same noise path.
template <class Observer>
void integrate(const Model& model, const RunConfig& config, SystemState& state,
               RandomStream& rng, Observer&& observe, double noise_sign = 1.0) {
    const long long steps = config.step_count();
    const int stride = config.record_stride;
    const bool noisy = config.noise_enabled && model.coupling.scattering_rate > 0;
    NoiseChannels dw;

    long long sample = 0;
    observe(sample++, state);
    if (config.scheme == Scheme::split) {
        Stepper st(model, config.dt);
        st.attach(state);
        for (long long n = 1; n <= steps; ++n) {
            if (noisy) dw = NoiseChannels::draw(rng, config.dt, noise_sign);
            st.step(state, noisy ? &dw : nullptr);
            if (!std::isfinite(state.p) || !std::isfinite(std::norm(st.probe().field)))
                throw NumericalAbort("non-finite state at step " + std::to_string(n), n,
                                     state_norm(state));
            if (n % stride == 0) observe(sample++, state);
        }
    } else {
        for (long long n = 1; n <= steps; ++n) {
            if (noisy) dw = NoiseChannels::draw(rng, config.dt, noise_sign);
            euler_maruyama_step(model, state, config.dt, noisy ? &dw : nullptr);
            if (!finite(state))
                throw NumericalAbort("non-finite state at step " + std::to_string(n), n,
                                     state_norm(state));
            if (n % stride == 0) observe(sample++, state);
        }
    }
}

struct Trajectory {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> p;
    std::vector<double> p2;
    std::vector<double> photon_number; // empty unless recorded
    std::uint64_t stream = 0;
    SystemState final_state;

    std::size_t size() const { return t.size(); }
};

inline Trajectory run_trajectory(const Model& model, const RunConfig& config, SystemState initial,
                                 std::uint64_t stream = 0) {
    validate(config, model.grid);
    RandomStream rng(config.master_seed, stream);
    Trajectory tr;
    tr.stream = stream;
    const auto n = static_cast<std::size_t>(config.sample_count());
    tr.t.reserve(n);
    tr.x.reserve(n);
    tr.p.reserve(n);
    tr.p2.reserve(n);
    integrate(model, config, initial, rng, [&](long long, const SystemState& s) {
        tr.t.push_back(s.t);
        tr.x.push_back(s.x);
        tr.p.push_back(s.p);
        tr.p2.push_back(s.p * s.p);
        if (config.record_photon_number) tr.photon_number.push_back(s.field.photon_number());
    });
    tr.final_state = std::move(initial);
    return tr;
}

// Atom at the trap center (or the given offset) with momentum p0 and the
// field in the calibrated pump state.
inline SystemState initial_state(const Model& model, const PhysicalParams& params, double p0,
                                 double offset_from_center = 0.0) {
    SystemState s;
    s.x = model.mechanics.center + offset_from_center;
    s.p = p0;
    s.field = pump_initial_state(model.grid, params);
    return s;
}

} // namespace mmcool

#endif // MMCOOL_SDE_ENGINE_HPP
