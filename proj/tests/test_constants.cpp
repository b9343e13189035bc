#include "catch_amalgamated.hpp"

#include <cmath>
#include <limits>

#include "magictrap/constants.hpp"
#include "magictrap/errors.hpp"

using namespace magictrap;
using Catch::Matchers::WithinRel;

TEST_CASE("kelvin to hertz uses k_B/h")
{
    // CODATA 2018: k_B/h = 2.083661912e10 Hz/K (exact ratio of defined constants)
    CHECK_THAT(hz_from_kelvin(1.0), WithinRel(2.083661912e10, 1e-9));
    CHECK_THAT(hz_from_kelvin(17e-6), WithinRel(17e-6 * 2.083661912e10, 1e-9));
}

TEST_CASE("round trips between kelvin and hertz")
{
    for (double k : {1e-9, 3e-6, 17e-6, 2e-4, 1.0, 300.0})
        CHECK_THAT(kelvin_from_hz(hz_from_kelvin(k)), WithinRel(k, 1e-15));
    for (double mk : {0.0, 0.017, 0.201438, 0.6, 5.0})
        CHECK(depth_mk_from_hz(depth_hz_from_mk(mk)) == Catch::Approx(mk).epsilon(1e-14));
}

TEST_CASE("depths are negative light shifts")
{
    CHECK(depth_hz_from_mk(0.6) < 0);
    CHECK_THAT(depth_hz_from_mk(0.6), WithinRel(-0.6e-3 * 1.380649e-23 / 6.62607015e-34, 1e-14));
    CHECK(depth_hz_from_mk(0.0) == 0.0);
    CHECK_THROWS_AS(depth_hz_from_mk(-0.1), Error);
}

TEST_CASE("thermal energy needs a positive finite temperature")
{
    CHECK_THAT(thermal_energy_hz(8e-6), WithinRel(hz_from_kelvin(8e-6), 1e-15));
    CHECK_THROWS_AS(thermal_energy_hz(0.0), Error);
    CHECK_THROWS_AS(thermal_energy_hz(-1e-6), Error);
    CHECK_THROWS_AS(hz_from_kelvin(std::numeric_limits<double>::quiet_NaN()), Error);
    CHECK_THROWS_AS(kelvin_from_hz(std::numeric_limits<double>::infinity()), Error);
}

TEST_CASE("fixed constants")
{
    CHECK(PhysicalConstants::planck_h == 6.62607015e-34);
    CHECK(PhysicalConstants::boltzmann_kB == 1.380649e-23);
    CHECK(PhysicalConstants::bohr_magneton_over_h == 1.399624604e6);
    CHECK(PhysicalConstants::rb87_hyperfine_nu0 == 6.834682611e9);
}
