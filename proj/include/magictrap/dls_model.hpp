#pragma once

#include <cmath>
#include <string>

#include "constants.hpp"
#include "errors.hpp"

namespace magictrap {

/// Coefficients of the differential light shift
///   dnu(B, U) = beta1 U + beta2 B U + beta4 U^2
/// with U the (negative) ground-state light shift in Hz and B in gauss.
struct TrapCoefficients {
    double beta1 = 0.0;          // dimensionless
    double beta2 = 0.0;          // 1/G
    double beta4 = 0.0;          // 1/Hz
    double polarization_A = 0.0; // degree of circular polarization

    friend bool operator==(const TrapCoefficients&, const TrapCoefficients&) = default;
};

/// Atomic-structure inputs from which beta2 and beta4 follow.
struct AtomicInput {
    double vector_to_scalar_ratio = 0.0; // alpha^a / alpha of the ground state
    double beta1 = 0.0;
    double polarization_A = 0.0;
};

namespace presets {

/// Fitted experimental values at 830 nm, circular polarization.
inline constexpr TrapCoefficients experimental{3.47e-4, -0.99e-4, 4.6e-12, 1.0};
/// Computed atomic-structure values at 830 nm, circular polarization.
inline constexpr TrapCoefficients theory{3.47e-4, -1.03e-4, 4.64e-12, 1.0};
/// Linear polarization: only the hyperfine-mediated term survives.
inline constexpr TrapCoefficients linear{3.67e-4, 0.0, 0.0, 0.0};

/// alpha^a/alpha at 830 nm, obtained by inverting the theory beta4.
inline constexpr double vector_ratio_830nm = 0.2518;

} // namespace presets

inline void validate(const TrapCoefficients& c)
{
    detail::require(std::isfinite(c.beta1) && std::isfinite(c.beta2) && std::isfinite(c.beta4)
                        && std::isfinite(c.polarization_A),
                    ErrorCode::InvalidArgument, "trap coefficients must be finite");
    detail::require(c.beta4 >= 0, ErrorCode::InvalidArgument, "beta4 must be non-negative");
    detail::require(std::abs(c.polarization_A) <= 1, ErrorCode::InvalidArgument,
                    "polarization_A must lie in [-1, 1]");
}

namespace detail {

inline void require_trap_depth(double depth_hz, const char* who)
{
    require(std::isfinite(depth_hz), ErrorCode::InvalidArgument,
            std::string(who) + ": non-finite trap depth");
    require(depth_hz <= 0, ErrorCode::ConventionViolation,
            std::string(who) + ": trap depth must be <= 0 Hz (negative light shift); got "
                + std::to_string(depth_hz));
}

inline void require_field(double b_gauss, const char* who)
{
    require(std::isfinite(b_gauss), ErrorCode::InvalidArgument,
            std::string(who) + ": non-finite magnetic field");
}

} // namespace detail

/// Linear slope of the shift at fixed field: beta1 + beta2 B.
inline double linear_coefficient(const TrapCoefficients& c, double b_gauss)
{
    return c.beta1 + c.beta2 * b_gauss;
}

/// Unchecked evaluation of the parabola; callers have validated their inputs.
inline double dls_unchecked(const TrapCoefficients& c, double b_gauss, double depth_hz) noexcept
{
    return (c.beta1 + c.beta2 * b_gauss) * depth_hz + c.beta4 * depth_hz * depth_hz;
}

/// Differential light shift in Hz.
inline double dls(const TrapCoefficients& c, double b_gauss, double depth_hz)
{
    detail::require_field(b_gauss, "dls");
    detail::require_trap_depth(depth_hz, "dls");
    return dls_unchecked(c, b_gauss, depth_hz);
}

/// Vertex of the parabola, U_M = -(beta1 + beta2 B) / (2 beta4).
inline double magic_depth(const TrapCoefficients& c, double b_gauss)
{
    detail::require_field(b_gauss, "magic_depth");
    detail::require(c.beta4 > 0, ErrorCode::NoMagicPoint,
                    "magic_depth: beta4 must be > 0 for a magic intensity to exist");
    return -linear_coefficient(c, b_gauss) / (2 * c.beta4);
}

/// Shift at the vertex, -(beta1 + beta2 B)^2 / (4 beta4).
inline double dls_minimum(const TrapCoefficients& c, double b_gauss)
{
    detail::require_field(b_gauss, "dls_minimum");
    detail::require(c.beta4 > 0, ErrorCode::NoMagicPoint,
                    "dls_minimum: beta4 must be > 0 for a magic intensity to exist");
    const double k = linear_coefficient(c, b_gauss);
    return -k * k / (4 * c.beta4);
}

/// Field at which the magic depth reaches zero, -beta1/beta2.
inline double zero_crossing_field(const TrapCoefficients& c)
{
    detail::require(c.beta2 != 0, ErrorCode::NoCrossing,
                    "zero_crossing_field: beta2 = 0 (no vector light shift)");
    return -c.beta1 / c.beta2;
}

/// Builds beta2 and beta4 from the ground-state vector/scalar polarizability
/// ratio. beta1 is passed through unchanged.
inline TrapCoefficients coeffs_from_atomic(const AtomicInput& in,
                                           double nu0_hz = PhysicalConstants::rb87_hyperfine_nu0)
{
    detail::require(std::isfinite(in.vector_to_scalar_ratio) && std::isfinite(in.beta1),
                    ErrorCode::InvalidArgument, "coeffs_from_atomic: non-finite input");
    detail::require(std::abs(in.polarization_A) <= 1, ErrorCode::InvalidArgument,
                    "coeffs_from_atomic: |A| must be <= 1");
    detail::require(std::isfinite(nu0_hz) && nu0_hz > 0, ErrorCode::InvalidArgument,
                    "coeffs_from_atomic: nu0 must be > 0");
    const double a = in.polarization_A;
    const double r = in.vector_to_scalar_ratio;
    TrapCoefficients out;
    out.beta1 = in.beta1;
    out.beta2 = -2 * a * PhysicalConstants::bohr_magneton_over_h * r / nu0_hz;
    out.beta4 = (a * a / (2 * nu0_hz)) * r * r;
    out.polarization_A = a;
    return out;
}

/// Zeeman-equivalent field of the vector light shift, ratio |U| / (2 mu_B/h).
inline double effective_field(double vector_to_scalar_ratio, double depth_hz)
{
    detail::require(std::isfinite(vector_to_scalar_ratio), ErrorCode::InvalidArgument,
                    "effective_field: non-finite ratio");
    detail::require_trap_depth(depth_hz, "effective_field");
    return vector_to_scalar_ratio * std::abs(depth_hz)
           / (2 * PhysicalConstants::bohr_magneton_over_h);
}

/// Inverts the linear-polarization model to calibrate a trap depth.
inline double depth_from_linear_dls(double measured_dls_hz, double beta1)
{
    detail::require(std::isfinite(measured_dls_hz) && std::isfinite(beta1),
                    ErrorCode::InvalidArgument, "depth_from_linear_dls: non-finite input");
    detail::require(beta1 != 0, ErrorCode::InvalidArgument,
                    "depth_from_linear_dls: beta1 must be non-zero");
    return measured_dls_hz / beta1;
}

} // namespace magictrap
