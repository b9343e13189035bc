#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "constants.hpp"
#include "dls_model.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "thermal_ensemble.hpp"

namespace magictrap {

/// Everything needed to evaluate the thermally averaged Ramsey signal.
struct TrapFieldConfig {
    TrapCoefficients coeffs;
    double b_field_gauss = 0.0;
    double mean_depth_hz = 0.0; // U_a, thermal-average depth, <= 0
    double temperature_k = 0.0;
    double detuning_hz = 0.0;   // microwave detuning from the free-space resonance
};

struct RamseyOptions {
    bool renormalize = true;
    double rel_tol = 1e-8;
    double abs_tol = 1e-13;
    std::size_t max_intervals = 40000;
    double t2_horizon_s = 1e4;
    double t2_rel_tol = 1e-4;
};

struct RamseyTrace {
    std::vector<double> times;
    std::vector<double> population;
    TrapFieldConfig config;
};

struct VisibilityCurve {
    std::vector<double> times;
    std::vector<double> visibility;
};

/// Depth at the trap minimum, U_0 = U_a - (3/2) kT/h.
inline double bottom_depth(double mean_depth_hz, double temperature_k)
{
    detail::require_trap_depth(mean_depth_hz, "bottom_depth");
    detail::require(std::isfinite(temperature_k) && temperature_k >= 0,
                    ErrorCode::InvalidArgument, "bottom_depth: temperature must be >= 0");
    const double u0 = mean_depth_hz - 1.5 * hz_from_kelvin(temperature_k);
    detail::require(u0 < 0, ErrorCode::UnphysicalConfiguration,
                    "bottom_depth: trap bottom must be below zero (no confinement)");
    return u0;
}

/// Depth averaged over the orbit of an atom with total energy E (harmonic).
inline double local_depth(double bottom_depth_hz, double energy_hz)
{
    detail::require_trap_depth(bottom_depth_hz, "local_depth");
    detail::require(std::isfinite(energy_hz) && energy_hz >= 0
                        && energy_hz <= std::abs(bottom_depth_hz),
                    ErrorCode::OutOfRange, "local_depth: energy outside [0, |U0|]");
    return bottom_depth_hz + 0.5 * energy_hz;
}

/// Shift of an atom of energy E relative to the vertex when the mean depth is magic.
inline double residual_shift(const TrapCoefficients& c, double temperature_k, double energy_hz)
{
    detail::require(std::isfinite(energy_hz) && energy_hz >= 0, ErrorCode::InvalidArgument,
                    "residual_shift: energy must be >= 0");
    detail::require(std::isfinite(temperature_k) && temperature_k >= 0,
                    ErrorCode::InvalidArgument, "residual_shift: temperature must be >= 0");
    const double half = 0.5 * (energy_hz - 3.0 * hz_from_kelvin(temperature_k));
    return c.beta4 * half * half;
}

inline void validate(const TrapFieldConfig& cfg)
{
    validate(cfg.coeffs);
    detail::require_field(cfg.b_field_gauss, "config");
    detail::require(std::isfinite(cfg.detuning_hz), ErrorCode::InvalidArgument,
                    "config: non-finite detuning");
    detail::require(std::isfinite(cfg.temperature_k) && cfg.temperature_k > 0,
                    ErrorCode::InvalidArgument, "config: temperature must be > 0");
    (void)bottom_depth(cfg.mean_depth_hz, cfg.temperature_k);
}

/// Thermal ensemble implied by a configuration: truncated at |U_0|.
inline ThermalEnsemble ensemble_of(const TrapFieldConfig& cfg, bool renormalize = true)
{
    return {cfg.temperature_k, std::abs(bottom_depth(cfg.mean_depth_hz, cfg.temperature_k)),
            renormalize};
}

namespace detail {

struct Dephasing {
    std::complex<double> characteristic; // relative to reference_hz
    double reference_hz;                 // dls at the mean depth
    double mass;                         // normalization of the integrated density
};

// Beyond this many kT the density is below 1e-30 and contributes nothing.
inline constexpr double density_cutoff_x = 80.0;

/// int p(E) exp(i 2 pi [dnu(U(E)) - ref] t) dE over the allowed energies, with
/// x = E / kT. Removing the reference shift keeps the integrand slowly varying.
inline Dephasing dephasing(const TrapFieldConfig& cfg, double t, const RamseyOptions& opt)
{
    validate(cfg);
    require(std::isfinite(t) && t >= 0, ErrorCode::InvalidArgument, "time must be >= 0");
    const double kt = hz_from_kelvin(cfg.temperature_k);
    const double u0 = bottom_depth(cfg.mean_depth_hz, cfg.temperature_k);
    const double top = std::abs(u0) / kt;
    const double mass_truncated = gamma3_lower(top);
    require(mass_truncated > 0, ErrorCode::NumericalFailure,
            "ramsey: truncation removes the whole thermal distribution");
    const double reference = dls_unchecked(cfg.coeffs, cfg.b_field_gauss, cfg.mean_depth_hz);
    const double upper = std::min(top, density_cutoff_x);

    const double omega = 2.0 * std::numbers::pi * t;
    auto phase = [&](double x) {
        const double u = u0 + 0.5 * x * kt;
        return omega * (dls_unchecked(cfg.coeffs, cfg.b_field_gauss, u) - reference);
    };

    // Count oscillations of the quadratic phase to seed the subdivision.
    double variation = std::abs(phase(upper) - phase(0.0));
    if (cfg.coeffs.beta4 > 0) {
        const double u_vertex = magic_depth(cfg.coeffs, cfg.b_field_gauss);
        const double x_vertex = 2.0 * (u_vertex - u0) / kt;
        if (x_vertex > 0 && x_vertex < upper)
            variation = std::abs(phase(x_vertex) - phase(0.0))
                        + std::abs(phase(upper) - phase(x_vertex));
    }
    const auto cycles = static_cast<std::size_t>(variation / (2.0 * std::numbers::pi));
    const std::size_t pieces = std::min<std::size_t>(cycles + 1, opt.max_intervals / 4);

    const auto result = quad::integrate<std::complex<double>>(
        [&](double x) { return gamma3_density(x) * std::polar(1.0, phase(x)); }, 0.0, upper,
        quad::Options{opt.rel_tol, opt.abs_tol, opt.max_intervals}, pieces);

    const double norm = opt.renormalize ? mass_truncated : 1.0;
    return {result.value / norm, reference, opt.renormalize ? 1.0 : mass_truncated};
}

} // namespace detail

/// Population of |0> after a Ramsey sequence of free time t, averaged over
/// the truncated thermal ensemble.
inline double ramsey_population(const TrapFieldConfig& cfg, double t, const RamseyOptions& opt = {})
{
    const auto d = detail::dephasing(cfg, t, opt);
    const double carrier = 2.0 * std::numbers::pi * (cfg.detuning_hz + d.reference_hz) * t;
    const double fringe = (std::polar(1.0, carrier) * d.characteristic).real();
    return std::clamp(0.5 * (d.mass + fringe), 0.0, 1.0);
}

/// Fringe amplitude: modulus of the dephasing characteristic function.
inline double visibility(const TrapFieldConfig& cfg, double t, const RamseyOptions& opt = {})
{
    return std::min(1.0, std::abs(detail::dephasing(cfg, t, opt).characteristic));
}

inline RamseyTrace ramsey_trace(const TrapFieldConfig& cfg, const std::vector<double>& times,
                                const RamseyOptions& opt = {})
{
    RamseyTrace trace{times, {}, cfg};
    trace.population.reserve(times.size());
    for (double t : times)
        trace.population.push_back(ramsey_population(cfg, t, opt));
    return trace;
}

inline VisibilityCurve visibility_curve(const TrapFieldConfig& cfg, const std::vector<double>& times,
                                        const RamseyOptions& opt = {})
{
    VisibilityCurve curve{times, {}};
    curve.visibility.reserve(times.size());
    for (double t : times)
        curve.visibility.push_back(visibility(cfg, t, opt));
    return curve;
}

/// First 1/e crossing of the visibility. Brackets by doubling, then bisects.
/// Returns +infinity when the visibility stays above 1/e up to the horizon.
inline double t2_star(const TrapFieldConfig& cfg, const RamseyOptions& opt = {})
{
    validate(cfg);
    const double threshold = std::exp(-1.0);
    auto above = [&](double t) { return visibility(cfg, t, opt) > threshold; };

    double lo = 1e-3;
    double hi = lo;
    if (!above(lo)) {
        while (!above(lo)) {
            hi = lo;
            lo *= 0.5;
            detail::require(lo > 1e-12, ErrorCode::NumericalFailure,
                            "t2_star: visibility below 1/e at vanishing time");
        }
    } else {
        while (above(hi)) {
            lo = hi;
            if (hi >= opt.t2_horizon_s)
                return std::numeric_limits<double>::infinity();
            hi = std::min(2.0 * hi, opt.t2_horizon_s);
        }
    }
    while (hi - lo > opt.t2_rel_tol * lo) {
        const double mid = 0.5 * (lo + hi);
        (above(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// 1/tau = 1/T1 + 1/T2' + 1/T2*. Infinite inputs drop out.
inline double combine_coherence(double t1_s, double t2prime_s, double t2star_s)
{
    for (double v : {t1_s, t2prime_s, t2star_s})
        detail::require(!std::isnan(v) && v > 0, ErrorCode::InvalidArgument,
                        "combine_coherence: times must be > 0");
    const double rate = 1.0 / t1_s + 1.0 / t2prime_s + 1.0 / t2star_s;
    return rate > 0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
}

struct CoherencePoint {
    double ratio = 0.0;
    double t2_star_s = 0.0;
    double tau_s = 0.0;
};

/// Coherence time versus U_a/U_M: each ratio sets the mean depth to ratio*U_M.
inline std::vector<CoherencePoint> coherence_vs_depth(const TrapFieldConfig& base,
                                                      const std::vector<double>& ratios,
                                                      double t1_s, double t2prime_s,
                                                      const RamseyOptions& opt = {},
                                                      std::size_t threads = 1)
{
    const double u_m = magic_depth(base.coeffs, base.b_field_gauss);
    for (double r : ratios)
        detail::require(std::isfinite(r) && r > 0, ErrorCode::InvalidArgument,
                        "coherence_vs_depth: ratios must be > 0");
    return parallel_map<CoherencePoint>(
        ratios.size(),
        [&](std::size_t i) {
            TrapFieldConfig cfg = base;
            cfg.mean_depth_hz = ratios[i] * u_m;
            const double t2s = t2_star(cfg, opt);
            return CoherencePoint{ratios[i], t2s, combine_coherence(t1_s, t2prime_s, t2s)};
        },
        threads);
}

} // namespace magictrap
