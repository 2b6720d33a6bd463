#pragma once

#include <numbers>

namespace optolev::constants {

inline constexpr double hbar = 1.054571817e-34;   ///< [J s]
inline constexpr double k_boltzmann = 1.380649e-23; ///< [J/K]
inline constexpr double pi = std::numbers::pi;

} // namespace optolev::constants
