#ifndef MMCOOL_FIELD_MODEL_HPP
#define MMCOOL_FIELD_MODEL_HPP

// Discrete-mode field model. The continuum of standing-wave modes
// sin(omega x / c) is replaced by an equally spaced comb around the pump,
// written in a frame rotating at the pump frequency.
//
// Engine-side quantities use the Gamma-normalized unit system (see
// UnitSystem): times in 1/Gamma, rates in Gamma, momenta in hbar k0, and
// atomic positions as the offset xi = k0 (x - L) from the mode-grid baseline
// L, a distance of order metres.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "core_physics.hpp"
#include "error.hpp"
#include "params.hpp"

namespace mmcool {

using complex = std::complex<double>;

class ModeGrid {
public:
    // count modes spaced by `spacing` (rad/s); the pump sits at index count/2,
    // so the comb holds count/2 modes below and count/2 - 1 above the pump.
    ModeGrid(const PhysicalParams& params, int count, double spacing, double baseline)
        : count_(count),
          spacing_(spacing),
          pump_frequency_(params.pump_frequency()),
          baseline_(baseline),
          units_(params) {
        if (count < 2 || count % 2 != 0) throw ConfigError("mode count must be even and >= 2");
        if (!(spacing > 0)) throw ConfigError("mode spacing must be positive");
        if (!(baseline > 0)) throw ConfigError("grid baseline must be positive");

        const std::size_t n = static_cast<std::size_t>(count);
        detuning_.resize(n);
        relative_wavenumber_.resize(n);
        base_sin_.resize(n);
        base_cos_.resize(n);
        const long double c = constants::speed_of_light;
        const long double two_pi = 6.283185307179586476925286766559L;
        // omega_k L / c = k0 L + (omega_k - omega0) L / c; the large first
        // term is reduced once in extended precision.
        long double common = std::fmod(static_cast<long double>(pump_frequency_) / c * baseline_,
                                       two_pi);
        for (std::size_t k = 0; k < n; ++k) {
            const double offset = (static_cast<double>(k) - count / 2) * spacing_;
            detuning_[k] = -units_.to_frequency(offset);
            relative_wavenumber_[k] = offset / pump_frequency_;
            const long double phase = common + static_cast<long double>(offset) * baseline_ / c;
            base_sin_[k] = static_cast<double>(std::sin(phase));
            base_cos_[k] = static_cast<double>(std::cos(phase));
        }
    }

    // Grid for the given delay: baseline c * delay rounded to a whole number
    // of pump wavelengths, so that the pump phase at offset xi is xi itself.
    static ModeGrid for_params(const PhysicalParams& params, int count, double spacing) {
        const double raw = constants::speed_of_light * params.delay;
        const double lambda = params.pump_wavelength();
        const double baseline = std::max(1.0, std::nearbyint(raw / lambda)) * lambda;
        return ModeGrid(params, count, spacing, baseline);
    }

    int count() const { return count_; }
    int pump_index() const { return count_ / 2; }
    double spacing() const { return spacing_; }
    double pump_frequency() const { return pump_frequency_; }
    double baseline() const { return baseline_; }
    double frequency(int k) const { return pump_frequency_ + (k - count_ / 2) * spacing_; }
    // Delta_k = omega0 - omega_k, rad/s
    double frame_detuning(int k) const { return pump_frequency_ - frequency(k); }
    // Field revival time 2 pi / spacing, s.
    double period() const { return constants::two_pi / spacing_; }
    double max_duration() const { return 0.95 * period(); }
    const UnitSystem& units() const { return units_; }

    // Normalized (Gamma units) frame detunings.
    std::span<const double> detunings() const { return detuning_; }
    // (omega_k - omega0) / omega0
    std::span<const double> relative_wavenumbers() const { return relative_wavenumber_; }
    std::span<const double> base_sin() const { return base_sin_; }
    std::span<const double> base_cos() const { return base_cos_; }

    // Normalized offset xi = k0 (x - L) of a distance x from the mirror.
    double offset_of(double x) const {
        const long double k0 = static_cast<long double>(pump_frequency_) / constants::speed_of_light;
        return static_cast<double>(k0 * (static_cast<long double>(x) - baseline_));
    }
    double position_of(double xi) const {
        const long double k0 = static_cast<long double>(pump_frequency_) / constants::speed_of_light;
        return static_cast<double>(baseline_ + xi / k0);
    }

private:
    int count_;
    double spacing_;
    double pump_frequency_;
    double baseline_;
    UnitSystem units_;
    std::vector<double> detuning_;
    std::vector<double> relative_wavenumber_;
    std::vector<double> base_sin_;
    std::vector<double> base_cos_;
};

// Semiclassical coherent amplitudes alpha_k, one per mode.
struct FieldState {
    std::vector<complex> amplitudes;

    double photon_number() const {
        double n = 0.0;
        for (const auto& a : amplitudes) n += std::norm(a);
        return n;
    }
    friend bool operator==(const FieldState&, const FieldState&) = default;
};

// Per-photon light shift U0 and scattering rate gamma, in units of Gamma.
struct AtomFieldCoupling {
    double light_shift = 0.0;
    double scattering_rate = 0.0;

    // U0 = g^2 dw / Delta and gamma = g^2 dw Gamma / Delta^2, with g^2 the
    // continuum coupling constant and dw the comb spacing.
    static AtomFieldCoupling from_params(const PhysicalParams& p, const ModeGrid& grid) {
        const double g2_mode = coupling_constant(p) * grid.spacing();
        const double delta = p.detuning;
        AtomFieldCoupling c;
        c.light_shift = g2_mode / delta / p.half_linewidth;
        c.scattering_rate = g2_mode * p.half_linewidth / (delta * delta) / p.half_linewidth;
        return c;
    }
};

// Mode functions f_k = sin(omega_k x / c) and their derivatives with respect
// to xi at one atomic position.
class ModeFunctions {
public:
    explicit ModeFunctions(const ModeGrid& grid)
        : grid_(&grid), f_(static_cast<std::size_t>(grid.count())), df_(f_.size()) {}

    void evaluate(double xi) {
        const auto bs = grid_->base_sin();
        const auto bc = grid_->base_cos();
        const auto eps = grid_->relative_wavenumbers();
        const std::size_t n = f_.size();
        xi_ = xi;
        // theta_k = phi_k + xi + eps_k xi. The last term is below 1e-5 rad
        // for any offset of practical interest and is applied to second order.
        const double max_shift = std::abs(eps[0] * xi);
        if (max_shift < 1e-5) {
            const double s0 = std::sin(xi), c0 = std::cos(xi);
            for (std::size_t k = 0; k < n; ++k) {
                const double sp = bs[k] * c0 + bc[k] * s0;
                const double cp = bc[k] * c0 - bs[k] * s0;
                const double d = eps[k] * xi;
                const double h = 1.0 - 0.5 * d * d;
                f_[k] = sp * h + cp * d;
                df_[k] = (1.0 + eps[k]) * (cp * h - sp * d);
            }
        } else {
            for (std::size_t k = 0; k < n; ++k) {
                const double th = xi * (1.0 + eps[k]);
                const double s = std::sin(th), c = std::cos(th);
                f_[k] = bs[k] * c + bc[k] * s;
                df_[k] = (1.0 + eps[k]) * (bc[k] * c - bs[k] * s);
            }
        }
    }

    double position() const { return xi_; }
    std::span<const double> values() const { return f_; }
    std::span<const double> derivatives() const { return df_; }

private:
    const ModeGrid* grid_;
    std::vector<double> f_;
    std::vector<double> df_;
    double xi_ = 0.0;
};

// Field quantities at the atom needed by the dynamics.
struct FieldProbe {
    complex field;        // E = sum_k alpha_k f_k
    complex gradient;     // dE/dxi
    double overlap = 0.0; // sum_k f_k^2
    double cross = 0.0;   // sum_k f_k f'_k

    static FieldProbe measure(const ModeFunctions& mf, std::span<const complex> alpha) {
        const auto f = mf.values();
        const auto df = mf.derivatives();
        double er = 0, ei = 0, gr = 0, gi = 0, s = 0, q = 0;
        for (std::size_t k = 0; k < f.size(); ++k) {
            const double ar = alpha[k].real(), ai = alpha[k].imag();
            er += ar * f[k];
            ei += ai * f[k];
            gr += ar * df[k];
            gi += ai * df[k];
            s += f[k] * f[k];
            q += f[k] * df[k];
        }
        return {{er, ei}, {gr, gi}, s, q};
    }
};

// Mechanical part of the model in normalized units.
struct Mechanics {
    double mobility = 0.0;       // hbar k0^2 / (m Gamma): dxi/dt = mobility * p
    double trap_frequency = 0.0; // omega_t / Gamma
    double center = 0.0;         // trap center offset xi_0
    bool pinned = false;         // hold the position fixed (infinite mass)

    double spring() const {
        return mobility > 0 ? trap_frequency * trap_frequency / mobility : 0.0;
    }
};

// Everything the engine needs to advance one trajectory.
struct Model {
    ModeGrid grid;
    AtomFieldCoupling coupling;
    Mechanics mechanics;
};

struct GridSpec {
    int count = 128;
    double spacing_in_gamma = 0.1;
};

inline Mechanics make_mechanics(const PhysicalParams& p, const TrapSpec& trap, const ModeGrid& grid) {
    const UnitSystem& u = grid.units();
    Mechanics m;
    m.mobility = 1.0 / u.to_mass(p.mass);
    m.trap_frequency = trap.spring_constant > 0
                           ? u.to_frequency(std::sqrt(trap.spring_constant / p.mass))
                           : 0.0;
    m.center = grid.offset_of(trap.center);
    return m;
}

inline Model make_model(const PhysicalParams& p, const TrapSpec& trap, const GridSpec& spec = {}) {
    ModeGrid grid = ModeGrid::for_params(p, spec.count, spec.spacing_in_gamma * p.half_linewidth);
    AtomFieldCoupling coupling = AtomFieldCoupling::from_params(p, grid);
    Mechanics mech = make_mechanics(p, trap, grid);
    return {std::move(grid), coupling, mech};
}

// Total field E(x) = sum_k alpha_k sin(omega_k x / c) at distance x (m).
inline complex total_field(const ModeGrid& grid, const FieldState& field, double x) {
    ModeFunctions mf(grid);
    mf.evaluate(grid.offset_of(x));
    return FieldProbe::measure(mf, field.amplitudes).field;
}

// dE/dx at distance x, per metre.
inline complex field_gradient(const ModeGrid& grid, const FieldState& field, double x) {
    ModeFunctions mf(grid);
    mf.evaluate(grid.offset_of(x));
    const double k0 = grid.pump_frequency() / constants::speed_of_light;
    return k0 * FieldProbe::measure(mf, field.amplitudes).gradient;
}

// Normalized phase-space point of the atom plus the mode amplitudes.
struct SystemState {
    double x = 0.0; // offset xi from the grid baseline, 1/k0
    double p = 0.0; // hbar k0
    FieldState field;
    double t = 0.0; // 1/Gamma

    friend bool operator==(const SystemState&, const SystemState&) = default;
};

struct StateDerivative {
    double dx = 0.0;
    double dp = 0.0;
    std::vector<complex> dalpha;
};

// Deterministic right-hand side of the stochastic equations:
//   dxi/dt     = mobility p
//   dp/dt      = i gamma [E dE*/dxi - E* dE/dxi] - U0 [E dE*/dxi + E* dE/dxi] - k (xi - xi0)
//   dalpha_k/dt = i Delta_k alpha_k - (i U0 + gamma) E f_k
// The trap term is restoring.
inline StateDerivative drift(const Model& model, const SystemState& state) {
    using namespace std::complex_literals;
    ModeFunctions mf(model.grid);
    mf.evaluate(state.x);
    const FieldProbe probe = FieldProbe::measure(mf, state.field.amplitudes);
    const double u0 = model.coupling.light_shift;
    const double gamma = model.coupling.scattering_rate;
    const Mechanics& mech = model.mechanics;

    const complex z = std::conj(probe.field) * probe.gradient; // E* dE
    StateDerivative d;
    d.dx = mech.pinned ? 0.0 : mech.mobility * state.p;
    d.dp = 2.0 * gamma * z.imag() - 2.0 * u0 * z.real() - mech.spring() * (state.x - mech.center);
    const auto f = mf.values();
    const auto det = model.grid.detunings();
    d.dalpha.resize(f.size());
    const complex c = -(1i * u0 + gamma) * probe.field;
    for (std::size_t k = 0; k < f.size(); ++k)
        d.dalpha[k] = 1i * det[k] * state.field.amplitudes[k] + c * f[k];
    return d;
}

// Pump coherent state: every amplitude zero except the pump mode, whose
// photon number s Delta^2 / (g^2 dw) makes U0 |alpha|^2 = s Delta and
// gamma |alpha|^2 = s Gamma at an antinode.
inline FieldState pump_initial_state(const ModeGrid& grid, const PhysicalParams& p) {
    const double mismatch = std::abs(grid.pump_frequency() - p.pump_frequency());
    if (mismatch > 1e-12 * grid.pump_frequency())
        throw ConfigError("pump frequency is not on the mode comb");
    FieldState field;
    field.amplitudes.assign(static_cast<std::size_t>(grid.count()), complex{});
    const double g2_mode = coupling_constant(p) * grid.spacing();
    const double n = p.saturation * p.detuning * p.detuning / g2_mode;
    field.amplitudes[static_cast<std::size_t>(grid.pump_index())] = std::sqrt(n);
    return field;
}

} // namespace mmcool

#endif // MMCOOL_FIELD_MODEL_HPP
