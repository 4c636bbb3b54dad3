#pragma once

#include <numbers>

namespace mimtwin::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018 exact / recommended values, SI units
inline constexpr double speed_of_light = 299792458.0;
inline constexpr double planck = 6.62607015e-34;
inline constexpr double hbar = planck / two_pi;
inline constexpr double boltzmann = 1.380649e-23;

} // namespace mimtwin::constants
