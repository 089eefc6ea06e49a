#ifndef MMCOOL_PARAMS_HPP
#define MMCOOL_PARAMS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "constants.hpp"
#include "error.hpp"

namespace mmcool {

// Atomic and optical parameters, SI units throughout.
//
// half_linewidth is Gamma, the half width of the transition: the excited
// state decays at 2*Gamma. Callers holding a natural (full) linewidth must
// halve it before filling this field.
struct PhysicalParams {
    double mass = constants::rb87::mass;                     // kg
    double wavelength = constants::rb87::wavelength;         // m
    double half_linewidth = constants::rb87::half_linewidth; // rad/s
    double detuning = -10.0 * constants::rb87::half_linewidth; // rad/s, laser - atom
    double beam_waist = 0.7e-6;                              // m
    double delay = 0.25 / constants::rb87::half_linewidth;   // s, one way
    double saturation = 0.076;
    double pump_wavenumber = pump_wavenumber_for(constants::rb87::wavelength,
                                                 -10.0 * constants::rb87::half_linewidth);

    static constexpr double pump_wavenumber_for(double wavelength, double detuning) {
        return constants::two_pi / wavelength + detuning / constants::speed_of_light;
    }

    double cross_section() const {
        return 3.0 * wavelength * wavelength / constants::two_pi;
    }
    double pump_frequency() const { return pump_wavenumber * constants::speed_of_light; }
    double pump_wavelength() const { return constants::two_pi / pump_wavenumber; }
    // sigma_a / (pi w^2)
    double geometric_factor() const {
        return cross_section() / (constants::pi * beam_waist * beam_waist);
    }
};

// Harmonic trap. center is measured from the mirror.
struct TrapSpec {
    double center = 0.0;          // m
    double spring_constant = 0.0; // N/m
    double amplitude = 0.0;       // m, maximum displacement delta

    static TrapSpec from_frequency(double center, double angular_frequency, double mass,
                                   double amplitude = 0.0) {
        return {center, mass * angular_frequency * angular_frequency, amplitude};
    }
    double angular_frequency(double mass) const { return std::sqrt(spring_constant / mass); }
};

// Below this |Delta|/Gamma the adiabatic elimination behind the model is
// questionable; reported as a warning only.
inline constexpr double adiabatic_warning_ratio = 5.0;

// Throws DomainError on hard violations, returns soft diagnostics.
inline std::vector<std::string> validate(const PhysicalParams& p) {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw DomainError(msg);
    };
    require(std::isfinite(p.mass) && p.mass > 0, "mass must be positive");
    require(std::isfinite(p.wavelength) && p.wavelength > 0, "wavelength must be positive");
    require(std::isfinite(p.half_linewidth) && p.half_linewidth > 0,
            "half_linewidth must be positive");
    require(std::isfinite(p.beam_waist) && p.beam_waist > 0, "beam_waist must be positive");
    require(std::isfinite(p.delay) && p.delay >= 0, "delay must be non-negative");
    require(std::isfinite(p.saturation) && p.saturation >= 0, "saturation must be non-negative");
    require(std::isfinite(p.detuning), "detuning must be finite");
    require(std::isfinite(p.pump_wavenumber) && p.pump_wavenumber > 0,
            "pump_wavenumber must be positive");

    std::vector<std::string> warnings;
    if (std::abs(p.detuning) < adiabatic_warning_ratio * p.half_linewidth) {
        warnings.push_back("|detuning| < 5 Gamma: adiabatic elimination of the excited state "
                           "is not well justified");
    }
    return warnings;
}

inline void validate(const TrapSpec& t) {
    if (!(std::isfinite(t.spring_constant) && t.spring_constant > 0))
        throw DomainError("trap spring constant must be positive");
    if (!(std::isfinite(t.amplitude) && t.amplitude >= 0))
        throw DomainError("trap amplitude must be non-negative");
    if (!std::isfinite(t.center)) throw DomainError("trap center must be finite");
}

// Gamma-normalized unit system: time 1/Gamma, frequency Gamma, length 1/k0,
// momentum hbar k0, energy hbar Gamma.
class UnitSystem {
public:
    UnitSystem(double half_linewidth, double pump_wavenumber)
        : gamma_(half_linewidth), k0_(pump_wavenumber) {}
    explicit UnitSystem(const PhysicalParams& p) : UnitSystem(p.half_linewidth, p.pump_wavenumber) {}

    double time() const { return 1.0 / gamma_; }
    double frequency() const { return gamma_; }
    double length() const { return 1.0 / k0_; }
    double momentum() const { return constants::hbar * k0_; }
    double energy() const { return constants::hbar * gamma_; }
    double temperature() const { return energy() / constants::boltzmann; }
    double mass() const { return momentum() / (length() * gamma_); }
    double spring_constant() const { return energy() / (length() * length()); }

    double to_time(double si) const { return si / time(); }
    double from_time(double t) const { return t * time(); }
    double to_frequency(double si) const { return si / frequency(); }
    double from_frequency(double w) const { return w * frequency(); }
    double to_length(double si) const { return si / length(); }
    double from_length(double x) const { return x * length(); }
    double to_momentum(double si) const { return si / momentum(); }
    double from_momentum(double p) const { return p * momentum(); }
    double to_energy(double si) const { return si / energy(); }
    double from_energy(double e) const { return e * energy(); }
    double to_temperature(double si) const { return si / temperature(); }
    double from_temperature(double t) const { return t * temperature(); }
    double to_mass(double si) const { return si / mass(); }
    double from_mass(double m) const { return m * mass(); }

private:
    double gamma_;
    double k0_;
};

} // namespace mmcool

#endif // MMCOOL_PARAMS_HPP
