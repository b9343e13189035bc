#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "ramsey.hpp"

namespace magictrap {

enum class TransferPhase { Hold, Overlap, RampUp, Move, Return, RampDown };

inline constexpr std::string_view to_string(TransferPhase p) noexcept
{
    switch (p) {
    case TransferPhase::Hold: return "Hold";
    case TransferPhase::Overlap: return "Overlap";
    case TransferPhase::RampUp: return "RampUp";
    case TransferPhase::Move: return "Move";
    case TransferPhase::Return: return "Return";
    case TransferPhase::RampDown: return "RampDown";
    }
    return "?";
}

inline std::optional<TransferPhase> phase_from_string(std::string_view s) noexcept
{
    for (auto p : {TransferPhase::Hold, TransferPhase::Overlap, TransferPhase::RampUp,
                   TransferPhase::Move, TransferPhase::Return, TransferPhase::RampDown})
        if (s == to_string(p))
            return p;
    return std::nullopt;
}

struct TransferSegment {
    TransferPhase phase = TransferPhase::Hold;
    double duration_s = 0.0;
    TrapFieldConfig config;
    /// Measured dephasing time that supersedes the model for this segment.
    std::optional<double> t2_override_s;
};

struct TransferTimeline {
    std::vector<TransferSegment> segments;
    double t1_s = 0.0;
    double t2prime_s = 0.0;
    /// Static register trap before the transfer; defaults to the first Hold.
    std::optional<TrapFieldConfig> register_config;
    /// Measured or quoted T2* of the register before/after the transfer. When
    /// set they replace the model values in the coherence-time comparison.
    std::optional<double> t2star_static_override_s;
    std::optional<double> t2star_mobile_override_s;
};

enum class ViolationKind {
    BadOrder,
    NegativeDuration,
    InvalidOverride,
    MissingOverlap,
    MissingMove,
    MissingReturn,
};

inline constexpr std::string_view to_string(ViolationKind k) noexcept
{
    switch (k) {
    case ViolationKind::BadOrder: return "bad-order";
    case ViolationKind::NegativeDuration: return "negative-duration";
    case ViolationKind::InvalidOverride: return "invalid-override";
    case ViolationKind::MissingOverlap: return "missing-overlap";
    case ViolationKind::MissingMove: return "missing-move";
    case ViolationKind::MissingReturn: return "missing-return";
    }
    return "?";
}

struct TimelineViolation {
    ViolationKind kind;
    std::optional<std::size_t> segment;
    std::string message;
};

struct TimelineVerdict {
    std::optional<TimelineViolation> violation;
    [[nodiscard]] bool ok() const noexcept { return !violation.has_value(); }
};

/// Checks the phase grammar
///   Hold? Overlap RampUp? Move Return RampDown? Hold?
/// Consecutive repeats of a phase are allowed so that a segment can be split.
inline TimelineVerdict validate_timeline(const TransferTimeline& tl)
{
    // Rank of each phase in the grammar; Hold ranks 0 before Overlap, 6 after.
    auto rank = [](TransferPhase p, int previous) {
        switch (p) {
        case TransferPhase::Hold: return previous <= 0 ? 0 : 6;
        case TransferPhase::Overlap: return 1;
        case TransferPhase::RampUp: return 2;
        case TransferPhase::Move: return 3;
        case TransferPhase::Return: return 4;
        case TransferPhase::RampDown: return 5;
        }
        return -1;
    };
    auto violation = [](ViolationKind k, std::optional<std::size_t> i, std::string msg) {
        return TimelineVerdict{TimelineViolation{k, i, std::move(msg)}};
    };

    int previous = -1;
    bool seen[7] = {};
    for (std::size_t i = 0; i < tl.segments.size(); ++i) {
        const auto& seg = tl.segments[i];
        if (!(std::isfinite(seg.duration_s) && seg.duration_s >= 0))
            return violation(ViolationKind::NegativeDuration, i,
                             "segment " + std::to_string(i) + " has a negative duration");
        if (seg.t2_override_s && !(*seg.t2_override_s > 0))
            return violation(ViolationKind::InvalidOverride, i,
                             "segment " + std::to_string(i) + " has a non-positive T2 override");
        const int r = rank(seg.phase, previous);
        if (r < previous)
            return violation(ViolationKind::BadOrder, i,
                             "segment " + std::to_string(i) + " (" + std::string(to_string(seg.phase))
                                 + ") is out of order");
        previous = r;
        seen[r] = true;
    }
    if (!seen[3])
        return violation(ViolationKind::MissingMove, std::nullopt, "timeline has no Move segment");
    if (!seen[4])
        return violation(ViolationKind::MissingReturn, std::nullopt,
                         "timeline has no Return segment");
    if (!seen[1])
        return violation(ViolationKind::MissingOverlap, std::nullopt,
                         "timeline has no Overlap segment");
    return {};
}

/// Dephasing time used for a segment: the override when given, else the model T2*.
inline double segment_t2(const TransferSegment& seg, const RamseyOptions& opt = {})
{
    if (seg.t2_override_s) {
        detail::require(*seg.t2_override_s > 0, ErrorCode::InvalidArgument,
                        "segment_t2: override must be > 0");
        return *seg.t2_override_s;
    }
    return t2_star(seg.config, opt);
}

struct SegmentBudget {
    TransferPhase phase = TransferPhase::Hold;
    double duration_s = 0.0;
    double effective_t2_s = 0.0;
    double model_t2_s = 0.0;
    bool override_used = false;
    double amplitude_factor = 1.0;
};

struct BudgetReport {
    std::vector<SegmentBudget> per_segment;
    double retained_coherence = 1.0;
    double t2star_static_s = 0.0;
    double t2star_mobile_s = 0.0;
    double tau_static_s = 0.0;
    double tau_mobile_s = 0.0;
    double fractional_tau_loss = 0.0;
    std::vector<std::string> notes;
};

/// Multiplicative dephasing budget of a transfer, plus the change of the
/// register coherence time caused by heating during the transfer.
inline BudgetReport coherence_budget(const TransferTimeline& tl, double post_transfer_temperature_k,
                                     const RamseyOptions& opt = {}, std::size_t threads = 1)
{
    const auto verdict = validate_timeline(tl);
    if (!verdict.ok())
        detail::fail(ErrorCode::InvalidTimeline,
                     std::string(to_string(verdict.violation->kind)) + ": "
                         + verdict.violation->message);
    detail::require(std::isfinite(post_transfer_temperature_k) && post_transfer_temperature_k > 0,
                    ErrorCode::InvalidArgument,
                    "coherence_budget: post-transfer temperature must be > 0");

    BudgetReport report;
    report.per_segment = parallel_map<SegmentBudget>(
        tl.segments.size(),
        [&](std::size_t i) {
            const auto& seg = tl.segments[i];
            SegmentBudget b;
            b.phase = seg.phase;
            b.duration_s = seg.duration_s;
            b.override_used = seg.t2_override_s.has_value();
            if (b.override_used) {
                // Reported side by side only; the measured value governs.
                try {
                    b.model_t2_s = t2_star(seg.config, opt);
                } catch (const Error&) {
                    b.model_t2_s = std::numeric_limits<double>::quiet_NaN();
                }
            } else {
                b.model_t2_s = t2_star(seg.config, opt);
            }
            b.effective_t2_s = b.override_used ? *seg.t2_override_s : b.model_t2_s;
            b.amplitude_factor = std::exp(-seg.duration_s / b.effective_t2_s);
            return b;
        },
        threads);
    for (const auto& b : report.per_segment) {
        report.retained_coherence *= b.amplitude_factor;
        if (b.phase == TransferPhase::Move && !b.override_used)
            report.notes.emplace_back(
                "Move segment T2* assumes the register-trap coefficients apply to the moving trap");
    }

    TrapFieldConfig reg;
    if (tl.register_config) {
        reg = *tl.register_config;
    } else {
        const TransferSegment* hold = nullptr;
        for (const auto& seg : tl.segments)
            if (seg.phase == TransferPhase::Hold) {
                hold = &seg;
                break;
            }
        detail::require(hold != nullptr, ErrorCode::InvalidTimeline,
                        "coherence_budget: no register trap (give one or add a Hold segment)");
        reg = hold->config;
    }
    TrapFieldConfig after = reg;
    after.temperature_k = post_transfer_temperature_k;

    report.t2star_static_s = tl.t2star_static_override_s ? *tl.t2star_static_override_s
                                                          : t2_star(reg, opt);
    report.t2star_mobile_s = tl.t2star_mobile_override_s ? *tl.t2star_mobile_override_s
                                                         : t2_star(after, opt);
    report.tau_static_s = combine_coherence(tl.t1_s, tl.t2prime_s, report.t2star_static_s);
    report.tau_mobile_s = combine_coherence(tl.t1_s, tl.t2prime_s, report.t2star_mobile_s);
    const double loss = 1.0 - report.tau_mobile_s / report.tau_static_s;
    if (loss < 0)
        report.notes.emplace_back("register coherence time increased across the transfer");
    report.fractional_tau_loss = std::max(0.0, loss);
    return report;
}

} // namespace magictrap
