#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace magictrap {

/// Machine-readable failure category carried by every library error.
enum class ErrorCode {
    InvalidArgument,
    ConventionViolation,
    NoMagicPoint,
    NoCrossing,
    UnphysicalConfiguration,
    OutOfRange,
    NumericalFailure,
    RankDeficient,
    IllConditioned,
    FitFailure,
    FrequencyAmbiguity,
    InvalidTimeline,
    Io,
    Parse,
};

inline constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::ConventionViolation: return "convention-violation";
    case ErrorCode::NoMagicPoint: return "no-magic-point";
    case ErrorCode::NoCrossing: return "no-crossing";
    case ErrorCode::UnphysicalConfiguration: return "unphysical-configuration";
    case ErrorCode::OutOfRange: return "out-of-range";
    case ErrorCode::NumericalFailure: return "numerical-failure";
    case ErrorCode::RankDeficient: return "rank-deficient";
    case ErrorCode::IllConditioned: return "ill-conditioned";
    case ErrorCode::FitFailure: return "fit-failure";
    case ErrorCode::FrequencyAmbiguity: return "frequency-ambiguity";
    case ErrorCode::InvalidTimeline: return "invalid-timeline";
    case ErrorCode::Io: return "io-error";
    case ErrorCode::Parse: return "parse-error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code)
    {
    }

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, const std::string& message)
{
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message)
{
    if (!condition)
        fail(code, message);
}

} // namespace detail
} // namespace magictrap
