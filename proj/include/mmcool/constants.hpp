#ifndef MMCOOL_CONSTANTS_HPP
#define MMCOOL_CONSTANTS_HPP

#include <numbers>

namespace mmcool::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018 exact / recommended values, SI.
inline constexpr double hbar = 1.054571817e-34;           // J s
inline constexpr double speed_of_light = 299792458.0;     // m/s
inline constexpr double boltzmann = 1.380649e-23;         // J/K
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg

// 87Rb D2 line (Steck, "Rubidium 87 D Line Data").
namespace rb87 {
inline constexpr double mass = 86.909180527 * atomic_mass_unit;
inline constexpr double wavelength = 780.241209686e-9;
// Natural linewidth 2pi x 6.0666 MHz; the model uses the half width.
inline constexpr double half_linewidth = 0.5 * two_pi * 6.0666e6;
} // namespace rb87

} // namespace mmcool::constants

#endif // MMCOOL_CONSTANTS_HPP
