#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "magictrap/constants.hpp"
#include "magictrap/dls_model.hpp"
#include "magictrap/fitting.hpp"

using namespace magictrap;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> depths()
{
    std::vector<double> d;
    for (int i = 1; i <= 12; ++i)
        d.push_back(depth_hz_from_mk(0.05 * i));
    return d;
}

std::vector<DlsDataset> dls_sets(double sigma, std::uint64_t seed)
{
    std::vector<DlsDataset> out;
    std::uint64_t k = 0;
    for (double b : {0.5, 1.5, 3.115, 4.5})
        out.push_back(synth_dls(presets::experimental, b, depths(), sigma, seed * 10 + k++));
    return out;
}

std::vector<double> times(double span, std::size_t n, double t0 = 0.0)
{
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = t0 + span * static_cast<double>(i) / static_cast<double>(n - 1);
    return t;
}

const DampedSinusoid ramsey_truth{0.92, 0.206, 12.5, 0.4, 0.5};

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

} // namespace

TEST_CASE("noiseless global DLS fit is exact")
{
    const auto fit = fit_dls_global(dls_sets(0.0, 1), presets::experimental.beta1);
    CHECK_THAT(fit.value("beta2"), WithinRel(-0.99e-4, 1e-9));
    CHECK_THAT(fit.value("beta4"), WithinRel(4.6e-12, 1e-9));
    CHECK(fit.chi_square < 1e-12);
    CHECK(fit.dof == 46);

    DlsFitOptions free;
    free.free_beta1 = true;
    const auto f3 = fit_dls_global(dls_sets(0.0, 1), 0.0, free);
    CHECK_THAT(f3.value("beta1"), WithinRel(3.47e-4, 1e-9));
    CHECK_THAT(f3.value("beta2"), WithinRel(-0.99e-4, 1e-9));
}

TEST_CASE("DLS fit coverage and chi-square")
{
    int covered2 = 0, covered4 = 0;
    double chi = 0.0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        const auto fit = fit_dls_global(dls_sets(0.5, 100 + s), presets::experimental.beta1);
        covered2 += std::abs(fit.value("beta2") + 0.99e-4) <= 3 * fit.std_error("beta2");
        covered4 += std::abs(fit.value("beta4") - 4.6e-12) <= 3 * fit.std_error("beta4");
        chi += fit.reduced_chi_square();
    }
    CHECK(covered2 >= 95);
    CHECK(covered4 >= 95);
    CHECK_THAT(chi / seeds, WithinAbs(1.0, 0.1));
}

TEST_CASE("covariance scales with sigma squared")
{
    auto sets = dls_sets(0.5, 9);
    const auto a = fit_dls_global(sets, presets::experimental.beta1);
    for (auto& ds : sets)
        for (auto& p : ds.points)
            p.sigma_hz *= 3.0;
    const auto b = fit_dls_global(sets, presets::experimental.beta1);
    CHECK_THAT(b.value("beta4"), WithinRel(a.value("beta4"), 1e-10));
    CHECK_THAT(b.covariance(0, 0), WithinRel(9.0 * a.covariance(0, 0), 1e-8));
    CHECK_THAT(b.covariance(1, 1), WithinRel(9.0 * a.covariance(1, 1), 1e-8));
    CHECK_THAT(b.chi_square, WithinRel(a.chi_square / 9.0, 1e-8));

    DlsFitOptions scaled;
    scaled.scale_covariance = true;
    const auto c = fit_dls_global(sets, presets::experimental.beta1, scaled);
    const auto d = fit_dls_global(dls_sets(0.5, 9), presets::experimental.beta1, scaled);
    CHECK_THAT(c.covariance(1, 1), WithinRel(d.covariance(1, 1), 1e-8));
}

TEST_CASE("DLS fit rejects unidentifiable data")
{
    auto one = dls_sets(0.0, 1);
    one.resize(1);
    CHECK(code_of([&] { fit_dls_global(one, 3.47e-4); }) == ErrorCode::RankDeficient);
    std::vector<DlsDataset> flat{synth_dls(presets::experimental, 1.0, {-1e6}, 0.0, 1),
                                 synth_dls(presets::experimental, 2.0, {-1e6}, 0.0, 2)};
    CHECK(code_of([&] { fit_dls_global(flat, 3.47e-4); }) == ErrorCode::RankDeficient);
    auto bad = dls_sets(0.0, 1);
    bad[0].points[0].sigma_hz = 0.0;
    CHECK_THROWS_AS(fit_dls_global(bad, 3.47e-4), Error);
}

TEST_CASE("magic depth uncertainty matches numerical propagation")
{
    const auto fit = fit_dls_global(dls_sets(0.5, 4), presets::experimental.beta1);
    const double b1 = presets::experimental.beta1, b = 3.115;
    auto um = [&](double b2, double b4) { return -(b1 + b2 * b) / (2 * b4); };
    const double b2 = fit.value("beta2"), b4 = fit.value("beta4");
    const double h2 = std::abs(b2) * 1e-6, h4 = b4 * 1e-6;
    const double g2 = (um(b2 + h2, b4) - um(b2 - h2, b4)) / (2 * h2);
    const double g4 = (um(b2, b4 + h4) - um(b2, b4 - h4)) / (2 * h4);
    const auto& c = fit.covariance;
    const double var = g2 * g2 * c(0, 0) + 2 * g2 * g4 * c(0, 1) + g4 * g4 * c(1, 1);
    CHECK_THAT(magic_depth_uncertainty(fit, b1, b), WithinRel(std::sqrt(var), 1e-5));
}

TEST_CASE("noiseless damped sinusoid is recovered")
{
    const auto s = synth_ramsey(ramsey_truth, times(1.0, 201), 0.0, 1);
    const auto fit = fit_damped_sinusoid(s);
    CHECK_THAT(fit.value("V0"), WithinRel(ramsey_truth.v0, 1e-6));
    CHECK_THAT(fit.value("tau"), WithinRel(ramsey_truth.tau_s, 1e-6));
    CHECK_THAT(fit.value("delta"), WithinRel(ramsey_truth.delta_hz, 1e-6));
    CHECK_THAT(fit.value("phi"), WithinRel(ramsey_truth.phi, 1e-6));
    CHECK_THAT(fit.value("offset"), WithinRel(ramsey_truth.offset, 1e-6));
}

TEST_CASE("damped sinusoid coverage")
{
    int covered = 0;
    double chi = 0.0;
    for (int seed = 0; seed < 100; ++seed) {
        const auto fit = fit_damped_sinusoid(synth_ramsey(ramsey_truth, times(1.0, 201), 0.05, 500 + seed));
        covered += std::abs(fit.value("tau") - ramsey_truth.tau_s) <= 3 * fit.std_error("tau");
        chi += fit.reduced_chi_square();
    }
    CHECK(covered >= 95);
    CHECK_THAT(chi / 100, WithinAbs(1.0, 0.1));
}

TEST_CASE("time shift changes only amplitude and phase")
{
    const double t0 = 0.05;
    const auto grid = times(1.0, 201);
    auto shifted = synth_ramsey(ramsey_truth, times(1.0, 201, t0), 0.0, 1);
    for (std::size_t i = 0; i < grid.size(); ++i)
        shifted[i].t_s = grid[i];
    const auto a = fit_damped_sinusoid(synth_ramsey(ramsey_truth, grid, 0.0, 1));
    const auto b = fit_damped_sinusoid(shifted);
    CHECK_THAT(b.value("tau"), WithinRel(a.value("tau"), 1e-6));
    CHECK_THAT(b.value("delta"), WithinRel(a.value("delta"), 1e-6));
    CHECK_THAT(b.value("offset"), WithinRel(a.value("offset"), 1e-6));
    CHECK_THAT(b.value("V0"), WithinRel(a.value("V0") * std::exp(-t0 / a.value("tau")), 1e-6));
    const double dphi = std::remainder(b.value("phi") - a.value("phi")
                                           - 2 * std::numbers::pi * a.value("delta") * t0,
                                       2 * std::numbers::pi);
    CHECK_THAT(dphi, WithinAbs(0.0, 1e-6));
}

TEST_CASE("damped sinusoid rejects ambiguous frequencies")
{
    // fewer than one oscillation in the window
    DampedSinusoid slow = ramsey_truth;
    slow.delta_hz = 0.5;
    CHECK(code_of([&] { fit_damped_sinusoid(synth_ramsey(slow, times(1.0, 101), 0.0, 1)); })
          == ErrorCode::FrequencyAmbiguity);
    // above the sampling limit
    DampedSinusoid fast = ramsey_truth;
    fast.delta_hz = 49.9;
    CHECK(code_of([&] { fit_damped_sinusoid(synth_ramsey(fast, times(1.0, 101), 0.0, 1)); })
          == ErrorCode::FrequencyAmbiguity);
    CHECK_THROWS_AS(fit_damped_sinusoid(synth_ramsey(ramsey_truth, times(1.0, 5), 0.0, 1)), Error);
}

TEST_CASE("envelope fit")
{
    std::vector<TimeSample> s;
    for (double t : times(0.6, 31))
        s.push_back({t, std::exp(-t / 0.205), 0.01});
    const auto fit = fit_envelope(s);
    CHECK_THAT(fit.value("tau"), WithinRel(0.205, 1e-12));
    CHECK(fit.chi_square < 1e-20);

    std::vector<TimeSample> grow;
    for (double t : times(0.6, 31))
        grow.push_back({t, std::exp(t), 0.01});
    CHECK(code_of([&] { fit_envelope(grow); }) == ErrorCode::FitFailure);
    grow[3].value = -0.1;
    CHECK_THROWS_AS(fit_envelope(grow), Error);
}

TEST_CASE("synthetic generators are deterministic")
{
    CHECK(synth_ramsey(ramsey_truth, times(1.0, 50), 0.05, 7).back().value
          == synth_ramsey(ramsey_truth, times(1.0, 50), 0.05, 7).back().value);
    CHECK(synth_dls(presets::experimental, 1.0, depths(), 0.2, 3).points[4].dls_hz
          == synth_dls(presets::experimental, 1.0, depths(), 0.2, 3).points[4].dls_hz);
    CHECK_THROWS_AS(synth_dls(presets::experimental, 1.0, depths(), -1.0, 3), Error);
}
