#pragma once

#include <cmath>

#include "errors.hpp"

namespace magictrap {

/// Fixed physical constants. Energies are carried internally as E/h in Hz.
struct PhysicalConstants {
    static constexpr double planck_h = 6.62607015e-34;           // J s
    static constexpr double boltzmann_kB = 1.380649e-23;         // J/K
    static constexpr double bohr_magneton_over_h = 1.399624604e6; // Hz/G
    static constexpr double rb87_hyperfine_nu0 = 6.834682611e9;  // Hz

    static constexpr double kB_over_h = boltzmann_kB / planck_h; // Hz/K
};

static_assert(PhysicalConstants::planck_h > 0 && PhysicalConstants::boltzmann_kB > 0
              && PhysicalConstants::bohr_magneton_over_h > 0
              && PhysicalConstants::rb87_hyperfine_nu0 > 0);

/// Signed conversion of a temperature (or energy expressed in kelvin) to Hz.
inline double hz_from_kelvin(double kelvin)
{
    detail::require(std::isfinite(kelvin), ErrorCode::InvalidArgument,
                    "hz_from_kelvin: non-finite input");
    return kelvin * PhysicalConstants::kB_over_h;
}

inline double kelvin_from_hz(double hz)
{
    detail::require(std::isfinite(hz), ErrorCode::InvalidArgument,
                    "kelvin_from_hz: non-finite input");
    return hz / PhysicalConstants::kB_over_h;
}

/// Thermal energy k_B T / h in Hz for a strictly positive temperature.
inline double thermal_energy_hz(double kelvin)
{
    detail::require(std::isfinite(kelvin) && kelvin > 0, ErrorCode::InvalidArgument,
                    "temperature must be positive and finite");
    return hz_from_kelvin(kelvin);
}

// CLI-facing helpers: trap depths are typed as positive millikelvin and stored
// as negative light shifts in Hz.
inline double depth_hz_from_mk(double depth_mk)
{
    detail::require(std::isfinite(depth_mk) && depth_mk >= 0, ErrorCode::InvalidArgument,
                    "trap depth in mK must be a finite non-negative number");
    return -hz_from_kelvin(depth_mk * 1e-3);
}

inline double depth_mk_from_hz(double depth_hz) { return -kelvin_from_hz(depth_hz) * 1e3; }

} // namespace magictrap
