#include "catch_amalgamated.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "magictrap/errors.hpp"
#include "magictrap/quadrature.hpp"

using namespace magictrap;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("smooth integrals")
{
    const auto r = quad::integrate<double>([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
    CHECK_THAT(r.value, WithinRel(2.0, 1e-12));
    const auto g = quad::integrate<double>([](double x) { return std::exp(-x * x); }, -10.0, 10.0);
    CHECK_THAT(g.value, WithinRel(std::sqrt(std::numbers::pi), 1e-12));
    CHECK(quad::integrate<double>([](double) { return 1.0; }, 2.0, 2.0).value == 0.0);
}

TEST_CASE("oscillatory complex integrand")
{
    // int_0^1 exp(i k x) dx = (exp(ik) - 1) / (ik)
    for (double k : {1.0, 50.0, 2000.0}) {
        const auto r = quad::integrate<std::complex<double>>(
            [k](double x) { return std::polar(1.0, k * x); }, 0.0, 1.0, {1e-10, 1e-14, 20000},
            static_cast<std::size_t>(k / 6.0) + 1);
        const std::complex<double> exact = (std::polar(1.0, k) - 1.0) / std::complex<double>(0.0, k);
        CHECK_THAT(std::abs(r.value - exact), WithinAbs(0.0, 1e-10 * std::max(1.0, std::abs(exact))));
    }
}

TEST_CASE("endpoint singularity converges adaptively")
{
    const auto r = quad::integrate<double>([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0,
                                           {1e-9, 0.0, 20000});
    CHECK_THAT(r.value, WithinRel(2.0, 1e-8));
}

TEST_CASE("non-convergence is reported")
{
    auto f = [](double x) { return std::sin(1e6 * x); };
    try {
        quad::integrate<double>(f, 0.0, 100.0, {1e-12, 0.0, 8});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NumericalFailure);
    }
    CHECK_THROWS_AS(quad::integrate<double>(f, 1.0, 0.0), Error);
}
