#include "catch_amalgamated.hpp"

#include <cmath>

#include "magictrap/acceptance.hpp"
#include "magictrap/transfer.hpp"

using namespace magictrap;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

TransferSegment seg(TransferPhase p, double d, std::optional<double> t2 = 25e-3)
{
    const auto c = presets::experimental;
    return {p, d, {c, 3.115, depth_hz_from_mk(0.2), 10e-6, 0.0}, t2};
}

TransferTimeline minimal()
{
    TransferTimeline tl;
    tl.t1_s = 4.0;
    tl.t2prime_s = 0.3;
    tl.segments = {seg(TransferPhase::Overlap, 1e-4), seg(TransferPhase::Move, 1e-3, 0.5),
                   seg(TransferPhase::Return, 1e-4)};
    tl.register_config = tl.segments[0].config;
    return tl;
}

ViolationKind kind_of(const TransferTimeline& tl)
{
    const auto v = validate_timeline(tl);
    REQUIRE_FALSE(v.ok());
    return v.violation->kind;
}

} // namespace

TEST_CASE("phase names round trip")
{
    for (auto p : {TransferPhase::Hold, TransferPhase::Overlap, TransferPhase::RampUp,
                   TransferPhase::Move, TransferPhase::Return, TransferPhase::RampDown})
        CHECK(phase_from_string(to_string(p)) == p);
    CHECK_FALSE(phase_from_string("Teleport").has_value());
}

TEST_CASE("timeline grammar")
{
    CHECK(validate_timeline(acceptance::reference_timeline()).ok());
    CHECK(validate_timeline(minimal()).ok());

    auto full = minimal();
    full.segments.insert(full.segments.begin(), seg(TransferPhase::Hold, 1e-3));
    full.segments.insert(full.segments.begin() + 2, seg(TransferPhase::RampUp, 1e-4));
    full.segments.insert(full.segments.end(), seg(TransferPhase::RampDown, 1e-4));
    full.segments.push_back(seg(TransferPhase::Hold, 0.0));
    CHECK(validate_timeline(full).ok());

    auto no_overlap = minimal();
    no_overlap.segments.erase(no_overlap.segments.begin());
    CHECK(kind_of(no_overlap) == ViolationKind::MissingOverlap);

    auto no_move = minimal();
    no_move.segments.erase(no_move.segments.begin() + 1);
    CHECK(kind_of(no_move) == ViolationKind::MissingMove);

    auto no_return = minimal();
    no_return.segments.pop_back();
    CHECK(kind_of(no_return) == ViolationKind::MissingReturn);

    auto swapped = minimal();
    std::swap(swapped.segments[1], swapped.segments[2]);
    CHECK(kind_of(swapped) == ViolationKind::BadOrder);

    auto hold_inside = minimal();
    hold_inside.segments.insert(hold_inside.segments.begin() + 1, seg(TransferPhase::Hold, 1e-3));
    hold_inside.segments.push_back(seg(TransferPhase::Overlap, 1e-4));
    CHECK(kind_of(hold_inside) == ViolationKind::BadOrder);

    auto negative = minimal();
    negative.segments[1].duration_s = -1e-3;
    CHECK(kind_of(negative) == ViolationKind::NegativeDuration);

    auto bad_override = minimal();
    bad_override.segments[0].t2_override_s = 0.0;
    CHECK(kind_of(bad_override) == ViolationKind::InvalidOverride);
}

TEST_CASE("budget multiplies per-segment factors")
{
    const auto tl = minimal();
    const auto r = coherence_budget(tl, 12e-6);
    const double expected = std::exp(-1e-4 / 25e-3) * std::exp(-1e-3 / 0.5) * std::exp(-1e-4 / 25e-3);
    CHECK_THAT(r.retained_coherence, WithinRel(expected, 1e-14));
    REQUIRE(r.per_segment.size() == 3);
    CHECK(r.per_segment[1].override_used);
    CHECK(r.per_segment[1].effective_t2_s == 0.5);
    CHECK(std::isfinite(r.per_segment[1].model_t2_s));
}

TEST_CASE("splitting a segment leaves the budget unchanged")
{
    auto tl = minimal();
    tl.segments[1].t2_override_s.reset();
    const auto whole = coherence_budget(tl, 12e-6);
    auto split = tl;
    split.segments[1].duration_s *= 0.3;
    auto second = tl.segments[1];
    second.duration_s *= 0.7;
    split.segments.insert(split.segments.begin() + 2, second);
    const auto parts = coherence_budget(split, 12e-6);
    CHECK_THAT(parts.retained_coherence, WithinRel(whole.retained_coherence, 1e-12));
    CHECK_FALSE(whole.notes.empty());
}

TEST_CASE("zero-duration segments cost nothing")
{
    auto tl = minimal();
    tl.segments.push_back(seg(TransferPhase::Hold, 0.0, std::nullopt));
    const auto r = coherence_budget(tl, 12e-6);
    CHECK(r.per_segment.back().amplitude_factor == 1.0);
}

TEST_CASE("reference transfer loses about a tenth of the coherence time")
{
    auto tl = acceptance::reference_timeline();
    tl.t2star_static_override_s = 6.6;
    tl.t2star_mobile_override_s = 1.9;
    const auto r = coherence_budget(tl, 16e-6);
    const double tau_s = 1 / (0.25 + 1 / 0.3 + 1 / 6.6);
    const double tau_m = 1 / (0.25 + 1 / 0.3 + 1 / 1.9);
    CHECK_THAT(r.fractional_tau_loss, WithinRel(1 - tau_m / tau_s, 1e-12));
    CHECK_THAT(r.fractional_tau_loss, WithinAbs(0.091, 0.01));
    CHECK(r.per_segment[1].amplitude_factor > 0.99);

    // model values instead of the quoted ones
    const auto model = coherence_budget(acceptance::reference_timeline(), 16e-6);
    CHECK_THAT(model.t2star_static_s, WithinRel(t2_star(*tl.register_config), 1e-12));
    CHECK(model.t2star_mobile_s < model.t2star_static_s);
    CHECK(model.fractional_tau_loss > 0.0);
}

TEST_CASE("cooling across the transfer is clamped to zero loss")
{
    auto tl = minimal();
    tl.register_config->temperature_k = 20e-6;
    const auto r = coherence_budget(tl, 5e-6);
    CHECK(r.fractional_tau_loss == 0.0);
    CHECK(r.tau_mobile_s > r.tau_static_s);
    CHECK_FALSE(r.notes.empty());
}

TEST_CASE("budget is independent of the worker count")
{
    auto tl = acceptance::reference_timeline();
    const auto a = coherence_budget(tl, 16e-6, {}, 1);
    const auto b = coherence_budget(tl, 16e-6, {}, 3);
    CHECK(a.retained_coherence == b.retained_coherence);
    CHECK(a.fractional_tau_loss == b.fractional_tau_loss);
}

TEST_CASE("invalid timelines are rejected")
{
    auto tl = minimal();
    tl.segments.pop_back();
    try {
        coherence_budget(tl, 16e-6);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidTimeline);
    }
    CHECK_THROWS_AS(coherence_budget(minimal(), 0.0), Error);
    CHECK_THROWS_AS(segment_t2(seg(TransferPhase::Move, 1.0, -1.0)), Error);
}
