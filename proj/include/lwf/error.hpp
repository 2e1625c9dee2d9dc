#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lwf {

/// Every failure the toolkit reports carries one of these codes. The CLI maps
/// any lwf::Error to exit status 1; argument errors are handled separately.
enum class ErrorCode {
    InvalidInput,
    InvalidRequirement,
    InvalidScore,
    JudgeFormat,

    // model client
    Auth,
    RateLimit,
    Timeout,
    MalformedResponse,
    Transport,
    BudgetExhausted,
    ReplayMiss,

    // agent
    OutlineFormat,
    StepOutOfRange,
    AgentAborted,

    // datapipe
    VerificationAmbiguous,
    InsufficientPool,
    DeckSize,
    InfeasibleTarget,
    SearchExhausted,

    // dpo
    EmptySequence,
    NoSignal,

    // bench
    SuiteShape,
    BaselineIncomplete,

    // annotate
    Duplicate,
    BadCredential,
    ExpiredToken,
    Forbidden,
    NotFound,
    Locked,
    InvalidTransition,
    NotReady,

    Io,
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view name);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    Error(ErrorCode code, const std::string& message, ErrorCode cause)
        : std::runtime_error(message), code_(code), cause_(cause) {}

    ErrorCode code() const noexcept { return code_; }
    /// Underlying failure for wrapping errors such as BudgetExhausted.
    std::optional<ErrorCode> cause() const noexcept { return cause_; }

private:
    ErrorCode code_;
    std::optional<ErrorCode> cause_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace lwf
