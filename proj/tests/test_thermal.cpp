#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "magictrap/constants.hpp"
#include "magictrap/thermal_ensemble.hpp"

using namespace magictrap;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Regularized lower incomplete gamma P(n, x) for integer n, closed form.
double lower_gamma_int(int n, double x)
{
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < n; ++k) {
        term *= x / k;
        sum += term;
    }
    return 1.0 - std::exp(-x) * sum;
}

double simpson(auto&& f, double a, double b, int n)
{
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

} // namespace

TEST_CASE("untruncated density is Gamma(3) in kT")
{
    const ThermalEnsemble ens{17e-6};
    const double kt = thermal_energy_hz(17e-6);
    for (double x : {0.1, 1.0, 2.0, 5.0, 12.0})
        CHECK_THAT(pdf(ens, x * kt), WithinRel(x * x * std::exp(-x) / (2.0 * kt), 1e-13));
    CHECK_THAT(simpson([&](double e) { return pdf(ens, e); }, 0.0, 60 * kt, 20000), WithinRel(1.0, 1e-10));
    CHECK_THAT(mean_energy(ens), WithinRel(3.0 * kt, 1e-15));
    CHECK(truncation_mass(ens) == 1.0);
}

TEST_CASE("truncated and renormalized density")
{
    const double kt = thermal_energy_hz(30e-6);
    const ThermalEnsemble ens{30e-6, 4.0 * kt, true};
    const double mass = lower_gamma_int(3, 4.0);
    CHECK_THAT(truncation_mass(ens), WithinRel(mass, 1e-13));
    CHECK(pdf(ens, 4.5 * kt) == 0.0);
    CHECK_THAT(simpson([&](double e) { return pdf(ens, e); }, 0.0, 4.0 * kt, 4000), WithinRel(1.0, 1e-10));
    for (double x : {0.3, 1.0, 2.5, 3.9})
        CHECK_THAT(cdf(ens, x * kt), WithinRel(lower_gamma_int(3, x) / mass, 1e-12));
    CHECK(cdf(ens, 5.0 * kt) == 1.0);
    // first moment: int x p3 = 3 P(4, a)
    CHECK_THAT(mean_energy(ens), WithinRel(kt * 3.0 * lower_gamma_int(4, 4.0) / mass, 1e-10));

    const ThermalEnsemble raw{30e-6, 4.0 * kt, false};
    CHECK_THAT(simpson([&](double e) { return pdf(raw, e); }, 0.0, 4.0 * kt, 4000), WithinRel(mass, 1e-10));
}

TEST_CASE("small-argument cdf keeps relative precision")
{
    const ThermalEnsemble ens{10e-6};
    const double kt = thermal_energy_hz(10e-6);
    for (double x : {1e-6, 1e-3, 0.05, 0.5, 0.99}) {
        // P(3, x) = exp(-x) sum_{n>=3} x^n / n!
        double series = 0.0;
        for (int n = 3; n < 60; ++n)
            series += std::pow(x, n) / std::tgamma(n + 1.0);
        CHECK_THAT(cdf(ens, x * kt), WithinRel(std::exp(-x) * series, 1e-12));
    }
}

TEST_CASE("samples follow the truncated distribution (KS)")
{
    const double kt = thermal_energy_hz(20e-6);
    for (double top : {std::numeric_limits<double>::infinity(), 2.5 * kt, 9.0 * kt}) {
        const ThermalEnsemble ens{20e-6, top, true};
        auto s = sample(ens, 20000, 99);
        std::sort(s.begin(), s.end());
        double d = 0.0;
        const double n = static_cast<double>(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double f = cdf(ens, s[i]);
            d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
        }
        CHECK(d < 1.63 / std::sqrt(n)); // 1% critical value
        CHECK(s.back() <= top);
        CHECK(s.front() >= 0.0);
    }
}

TEST_CASE("sample moments")
{
    const ThermalEnsemble ens{12e-6};
    const double kt = thermal_energy_hz(12e-6);
    const auto s = sample(ens, 200000, 3);
    double m = 0.0, m2 = 0.0;
    for (double e : s) {
        m += e;
        m2 += e * e;
    }
    m /= s.size();
    const double var = m2 / s.size() - m * m;
    CHECK_THAT(m, WithinAbs(3.0 * kt, 5.0 * std::sqrt(3.0 / s.size()) * kt));
    CHECK_THAT(var, WithinRel(3.0 * kt * kt, 0.03));
}

TEST_CASE("sampling is deterministic per seed")
{
    const ThermalEnsemble ens{8e-6, thermal_energy_hz(8e-6) * 5.0};
    CHECK(sample(ens, 1000, 42) == sample(ens, 1000, 42));
    CHECK(sample(ens, 1000, 42) != sample(ens, 1000, 43));
}

TEST_CASE("ensemble validation")
{
    CHECK_THROWS_AS(pdf(ThermalEnsemble{0.0}, 1.0), Error);
    CHECK_THROWS_AS(pdf(ThermalEnsemble{1e-6}, -1.0), Error);
    CHECK_THROWS_AS(sample(ThermalEnsemble{1e-6}, 0, 1), Error);
    CHECK_THROWS_AS(sample(ThermalEnsemble{1e-6, 0.0}, 10, 1), Error);
}

TEST_CASE("tail of the untruncated distribution")
{
    CHECK(detail::gamma3_upper(std::numeric_limits<double>::infinity()) == 0.0);
    CHECK(detail::gamma3_lower(std::numeric_limits<double>::infinity()) == 1.0);
    CHECK_THAT(detail::gamma3_upper(30.0), WithinRel(std::exp(-30.0) * (1 + 30 + 450), 1e-14));
}
