#include "lwf/error.hpp"

namespace lwf {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidInput: return "invalid-input";
        case ErrorCode::InvalidRequirement: return "invalid-requirement";
        case ErrorCode::InvalidScore: return "invalid-score";
        case ErrorCode::JudgeFormat: return "judge-format";
        case ErrorCode::Auth: return "auth";
        case ErrorCode::RateLimit: return "rate-limit";
        case ErrorCode::Timeout: return "timeout";
        case ErrorCode::MalformedResponse: return "malformed-response";
        case ErrorCode::Transport: return "transport";
        case ErrorCode::BudgetExhausted: return "budget-exhausted";
        case ErrorCode::ReplayMiss: return "replay-miss";
        case ErrorCode::OutlineFormat: return "outline-format";
        case ErrorCode::StepOutOfRange: return "step-out-of-range";
        case ErrorCode::AgentAborted: return "agent-aborted";
        case ErrorCode::VerificationAmbiguous: return "verification-ambiguous";
        case ErrorCode::InsufficientPool: return "insufficient-pool";
        case ErrorCode::DeckSize: return "deck-size";
        case ErrorCode::InfeasibleTarget: return "infeasible-target";
        case ErrorCode::SearchExhausted: return "search-exhausted";
        case ErrorCode::EmptySequence: return "empty-sequence";
        case ErrorCode::NoSignal: return "no-signal";
        case ErrorCode::SuiteShape: return "suite-shape";
        case ErrorCode::BaselineIncomplete: return "baseline-incomplete";
        case ErrorCode::Duplicate: return "duplicate";
        case ErrorCode::BadCredential: return "bad-credential";
        case ErrorCode::ExpiredToken: return "expired-token";
        case ErrorCode::Forbidden: return "forbidden";
        case ErrorCode::NotFound: return "not-found";
        case ErrorCode::Locked: return "locked";
        case ErrorCode::InvalidTransition: return "invalid-transition";
        case ErrorCode::NotReady: return "not-ready";
        case ErrorCode::Io: return "io";
    }
    return "unknown";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(ErrorCode::Io); ++i) {
        const auto code = static_cast<ErrorCode>(i);
        if (to_string(code) == name) return code;
    }
    return std::nullopt;
}

}  // namespace lwf
