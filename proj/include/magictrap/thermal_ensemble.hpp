#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "constants.hpp"
#include "errors.hpp"
#include "quadrature.hpp"

namespace magictrap {

/// Thermal energy distribution of atoms in a 3D harmonic trap,
///   p(E) = E^2 / (2 (kT)^3) exp(-E / kT),
/// truncated at the trap depth. All energies are E/h in Hz.
struct ThermalEnsemble {
    double temperature_k = 0.0;
    double truncation_hz = std::numeric_limits<double>::infinity();
    /// Divide the density by the retained mass so it integrates to one.
    /// Disabled, the bare density is integrated up to the truncation.
    bool renormalize = true;
};

namespace detail {

/// Regularized lower incomplete gamma function P(3, x).
inline double gamma3_lower(double x) noexcept
{
    if (x <= 0)
        return 0.0;
    if (std::isinf(x))
        return 1.0;
    if (x < 1.0) {
        // e^{-x} sum_{k>=3} x^k / k!, free of cancellation for small x.
        double term = x * x * x / 6.0;
        double sum = 0.0;
        for (int k = 4; term > 1e-18 * sum && k < 60; ++k) {
            sum += term;
            term *= x / k;
        }
        return std::exp(-x) * sum;
    }
    return 1.0 - std::exp(-x) * (1.0 + x + 0.5 * x * x);
}

/// Complement Q(3, x) = 1 - P(3, x).
inline double gamma3_upper(double x) noexcept
{
    if (x <= 0)
        return 1.0;
    if (std::isinf(x))
        return 0.0;
    if (x < 1.0)
        return 1.0 - gamma3_lower(x);
    return std::exp(-x) * (1.0 + x + 0.5 * x * x);
}

inline double gamma3_density(double x) noexcept { return 0.5 * x * x * std::exp(-x); }

/// Solves P(3, x) = q for x by safeguarded Newton iteration. `q_complement`
/// is 1 - q supplied separately to keep precision in the upper tail.
inline double gamma3_quantile(double q, double q_complement)
{
    if (q <= 0)
        return 0.0;
    if (q_complement <= 0)
        return std::numeric_limits<double>::infinity();
    const bool upper = q > 0.5;
    auto residual = [&](double x) {
        return upper ? q_complement - gamma3_upper(x) : gamma3_lower(x) - q;
    };
    double lo = 0.0;
    double hi = 8.0;
    while (residual(hi) < 0)
        hi *= 2;
    double x = q < 0.05 ? std::cbrt(6.0 * q) : 2.0 + (q - 0.5) * 4.0;
    if (!(x > lo && x < hi))
        x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 100; ++iter) {
        const double r = residual(x);
        if (r == 0)
            return x;
        if (r < 0)
            lo = x;
        else
            hi = x;
        const double d = gamma3_density(x);
        double next = d > 0 ? x - r / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * x || hi - lo <= 1e-15 * hi)
            return next;
        x = next;
    }
    return x;
}

inline void validate(const ThermalEnsemble& ens)
{
    require(std::isfinite(ens.temperature_k) && ens.temperature_k > 0,
            ErrorCode::InvalidArgument, "thermal ensemble: temperature must be > 0");
    require(!std::isnan(ens.truncation_hz) && ens.truncation_hz >= 0,
            ErrorCode::InvalidArgument,
            "thermal ensemble: truncation energy must be >= 0 or infinite");
}

} // namespace detail

/// Probability that an untruncated atom has E below the truncation.
inline double truncation_mass(const ThermalEnsemble& ens)
{
    detail::validate(ens);
    return detail::gamma3_lower(ens.truncation_hz / thermal_energy_hz(ens.temperature_k));
}

/// Density in 1/Hz; zero above the truncation.
inline double pdf(const ThermalEnsemble& ens, double energy_hz)
{
    detail::validate(ens);
    detail::require(std::isfinite(energy_hz) && energy_hz >= 0, ErrorCode::InvalidArgument,
                    "pdf: energy must be finite and >= 0");
    if (energy_hz > ens.truncation_hz)
        return 0.0;
    const double kt = thermal_energy_hz(ens.temperature_k);
    const double density = detail::gamma3_density(energy_hz / kt) / kt;
    if (!ens.renormalize)
        return density;
    const double mass = truncation_mass(ens);
    detail::require(mass > 0, ErrorCode::NumericalFailure,
                    "pdf: truncation removes the whole distribution");
    return density / mass;
}

/// Cumulative distribution of the renormalized truncated density.
inline double cdf(const ThermalEnsemble& ens, double energy_hz)
{
    detail::validate(ens);
    if (energy_hz <= 0)
        return 0.0;
    if (energy_hz >= ens.truncation_hz)
        return 1.0;
    const double kt = thermal_energy_hz(ens.temperature_k);
    return detail::gamma3_lower(energy_hz / kt) / truncation_mass(ens);
}

/// Mean total energy. Exactly 3 kT without truncation; by quadrature otherwise.
inline double mean_energy(const ThermalEnsemble& ens)
{
    detail::validate(ens);
    const double kt = thermal_energy_hz(ens.temperature_k);
    if (std::isinf(ens.truncation_hz))
        return 3.0 * kt;
    const double top = ens.truncation_hz / kt;
    const double mass = detail::gamma3_lower(top);
    detail::require(mass > 0, ErrorCode::NumericalFailure,
                    "mean_energy: truncation removes the whole distribution");
    const auto first_moment = quad::integrate<double>(
        [](double x) { return x * detail::gamma3_density(x); }, 0.0, top,
        quad::Options{1e-12, 0.0, 2000});
    return kt * first_moment.value / mass;
}

/// Draws n energies from the renormalized truncated density by inverting the
/// Gamma(3) CDF on the retained probability mass. Deterministic per seed.
inline std::vector<double> sample(const ThermalEnsemble& ens, std::size_t n, std::uint64_t seed)
{
    detail::validate(ens);
    detail::require(n >= 1, ErrorCode::InvalidArgument, "sample: n must be >= 1");
    const double kt = thermal_energy_hz(ens.temperature_k);
    const double top = ens.truncation_hz / kt;
    const double mass = detail::gamma3_lower(top);
    const double tail = detail::gamma3_upper(top);
    detail::require(mass > 0, ErrorCode::NumericalFailure,
                    "sample: truncation removes the whole distribution");

    std::mt19937_64 rng(seed);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Uniform in (0, 1) from the top 53 bits; never 0 or 1.
        const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
        const double q = u * mass;
        const double q_complement = (1.0 - u) * mass + tail;
        double x = detail::gamma3_quantile(q, q_complement);
        if (x > top)
            x = top;
        out.push_back(x * kt);
    }
    return out;
}

} // namespace magictrap
