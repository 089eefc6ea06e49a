#ifndef MMCOOL_CORE_PHYSICS_HPP
#define MMCOOL_CORE_PHYSICS_HPP

// Closed-form perturbative results for an atom in a pump beam retro-reflected
// by a distant mirror: coupling, first-order field corrections, friction,
// diffusion and the friction/diffusion equilibrium temperature.
//
// All functions are pure and take SI quantities. Positions are distances
// from the mirror (x = 0); phases of the form k x with x of order metres are
// reduced in long double before the trigonometric call.

#include <cmath>
#include <complex>
#include <utility>

#include "constants.hpp"
#include "error.hpp"
#include "params.hpp"

namespace mmcool {

namespace detail {

// (k * x) mod 2pi, evaluated in extended precision.
inline double reduced_phase(long double k, long double x) {
    const long double two_pi = 6.283185307179586476925286766559L;
    long double phi = std::fmod(k * x, two_pi);
    if (phi < 0) phi += two_pi;
    return static_cast<double>(phi);
}

inline double sin4k0x(const PhysicalParams& p, double x) {
    return std::sin(reduced_phase(4.0L * p.pump_wavenumber, x));
}

} // namespace detail

// g^2 from 2 pi g^2 = Gamma * 4 sigma_a / (pi w^2), in 1/s.
inline double coupling_constant(const PhysicalParams& p) {
    if (!(p.beam_waist > 0)) throw DomainError("beam waist must be positive");
    return p.half_linewidth * 4.0 * p.geometric_factor() / constants::two_pi;
}

// First-order (in g^2/Delta) field corrections a1 and b1 of the mode at
// angular frequency omega, normalized by the pump amplitude A, for an atom
// passing x at time t0 with velocity v:
//     a(omega, t0) = A delta(omega - omega0) + g^2/Delta [a1 + v b1] + ...
// a1/A is dimensionless * s, b1/A is s^2/m.
struct FirstOrderAmplitudes {
    std::complex<double> a1;
    std::complex<double> b1;
};

// Below this |omega - omega0| t0 the closed forms are replaced by their
// Taylor series around the removable singularity.
inline constexpr double first_order_series_threshold = 1e-6;

inline FirstOrderAmplitudes first_order_amplitudes(const PhysicalParams& p, double x, double t0,
                                                   double omega) {
    using namespace std::complex_literals;
    const double omega0 = p.pump_frequency();
    const double c = constants::speed_of_light;
    const long double inv_c = 1.0L / c;
    const double th = detail::reduced_phase(omega * inv_c, x);
    const double th0 = detail::reduced_phase(omega0 * inv_c, x);
    const double s = std::sin(th), co = std::cos(th);
    const double s0 = std::sin(th0), c0 = std::cos(th0);

    const double delta = omega - omega0;
    const double y = delta * t0;

    // (exp(-i y) - 1) / delta and ((1 + i y) exp(-i y) - 1) / delta^2
    std::complex<double> kernel_a;
    std::complex<double> kernel_b;
    if (std::abs(y) < first_order_series_threshold) {
        kernel_a = t0 * (-1i - y / 2.0 + 1i * y * y / 6.0);
        kernel_b = t0 * t0 * (0.5 - 1i * y / 3.0 - y * y / 8.0);
    } else {
        const std::complex<double> e = std::exp(-1i * y);
        kernel_a = (e - 1.0) / delta;
        kernel_b = ((1.0 + 1i * y) * e - 1.0) / (delta * delta);
    }
    const double spatial_b = (omega0 * s * c0 + omega * co * s0) / c;
    return {kernel_a * s * s0, 1i * spatial_b * kernel_b};
}

// Velocity-linear part of the mirror-mediated force, N. Leading order in
// x/lambda with the atom at distance c*delay from the mirror. The sign is
// the one obtained from the mode equations with fields evolving as
// exp(-i omega t): the reflected wave returns with phase exp(+i k0 (x + x')).
inline double velocity_force(const PhysicalParams& p, double x, double v) {
    const double k0 = p.pump_wavenumber;
    // |A|^2 g^4 / Delta^2 = s g^2
    return -constants::two_pi * constants::hbar * k0 * k0 * v * p.delay * p.saturation *
           coupling_constant(p) * detail::sin4k0x(p, x);
}

// Spatially dependent friction coefficient rho(x), 1/s; F_v = -rho m v.
// Positive values cool; cooling is strongest where sin(4 k0 x) = +1.
inline double friction_coefficient(const PhysicalParams& p, double x) {
    const double k0 = p.pump_wavenumber;
    return 4.0 * p.saturation * p.half_linewidth * p.geometric_factor() *
           (constants::hbar * k0 * k0 / p.mass) * p.delay * detail::sin4k0x(p, x);
}

// 1/e velocity cooling time 1/rho(x).
inline double cooling_time(const PhysicalParams& p, double x) {
    const double rho = friction_coefficient(p, x);
    if (!(rho > 0)) throw NoCoolingError("no cooling at this position (rho <= 0)");
    return 1.0 / rho;
}

inline constexpr int default_quadrature_nodes = 256;

// Friction averaged over one harmonic oscillation of amplitude trap.amplitude
// about trap.center:
//   <rho> = prefactor (1/2pi) int_0^2pi sin[4 k0 x0 + 4 k0 delta sin T] cos^2 T dT
// evaluated with the periodic trapezoid rule. <rho>(delta = 0) = rho(x0) / 2.
// The phase argument carries the k0 that makes it dimensionless.
inline double averaged_friction(const PhysicalParams& p, const TrapSpec& trap,
                                int nodes = default_quadrature_nodes) {
    if (!(trap.amplitude >= 0)) throw DomainError("trap amplitude must be non-negative");
    if (nodes < 2) throw DomainError("quadrature needs at least two nodes");
    const double k0 = p.pump_wavenumber;
    const double prefactor = 4.0 * p.saturation * p.half_linewidth * p.geometric_factor() *
                             (constants::hbar * k0 * k0 / p.mass) * p.delay;
    const double phase = detail::reduced_phase(4.0L * k0, trap.center);
    const double z = 4.0 * k0 * trap.amplitude;
    const double h = constants::two_pi / nodes;
    double sum = 0.0;
    for (int j = 0; j < nodes; ++j) {
        const double T = j * h;
        const double cT = std::cos(T);
        sum += std::sin(phase + z * std::sin(T)) * cT * cT;
    }
    return prefactor * sum / nodes;
}

// Energy damping rate of a trapped atom, dE/dt = -rate * E. Twice the
// oscillation-averaged friction, so it reduces to rho(x0) for a small trap
// and matches the decay rate of the squared momentum maxima.
inline double trap_energy_damping_rate(const PhysicalParams& p, const TrapSpec& trap,
                                       int nodes = default_quadrature_nodes) {
    return 2.0 * averaged_friction(p, trap, nodes);
}

// Momentum diffusion constant D = hbar^2 k0^2 Gamma s, (kg m/s)^2 / s.
inline double diffusion_constant(const PhysicalParams& p) {
    const double hk = constants::hbar * p.pump_wavenumber;
    return hk * hk * p.half_linewidth * p.saturation;
}

// Stationary temperature k_B T = D / (m rho(x)), K. Independent of s and Delta.
inline double stationary_temperature(const PhysicalParams& p, double x) {
    const double sn = detail::sin4k0x(p, x);
    if (!(sn > 0)) throw NoCoolingError("no stationary cooling temperature (sin(4 k0 x) <= 0)");
    if (!(p.delay > 0)) throw NoCoolingError("no stationary cooling temperature (zero delay)");
    const double kT = (constants::hbar / p.delay) / (4.0 * p.geometric_factor()) / sn;
    return kT / constants::boltzmann;
}

// Distance from the mirror closest to `near` whose pump phase k0 x equals
// `phase` modulo 2 pi.
inline double position_with_phase(const PhysicalParams& p, double near, double phase) {
    const long double two_pi = 6.283185307179586476925286766559L;
    const long double k0 = p.pump_wavenumber;
    const long double n = std::nearbyint((k0 * near - phase) / two_pi);
    return static_cast<double>((n * two_pi + phase) / k0);
}

// Pump phases k0 x (mod pi) of maximum cooling, sin(4 k0 x) = +1: one next
// to a pump node, one next to an antinode.
inline constexpr double max_friction_phase = constants::pi / 8.0;
inline constexpr double max_friction_phase_near_antinode = 5.0 * constants::pi / 8.0;

} // namespace mmcool

#endif // MMCOOL_CORE_PHYSICS_HPP
