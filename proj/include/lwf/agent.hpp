#pragma once

// Plan-and-write long-form generation: one call produces a section outline
// with word budgets, then each section is written in order, conditioned on
// the images, the instruction, the outline and every section before it.

#include "lwf/client.hpp"
#include "lwf/metrics.hpp"
#include "lwf/text.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lwf::agent {

inline constexpr std::size_t kMaxImages = 30;
inline constexpr std::string_view kSectionSeparator = "\n\n";

struct WritingTask {
    std::vector<ImageRef> images;
    std::string instruction;
    std::optional<TextLength> required_length;
    Language language = Language::En;

    /// Non-empty instruction and at most kMaxImages images.
    void validate() const;
};

struct OutlineSection {
    int index = 0;
    std::string main_point;
    std::uint64_t target_units = 0;

    friend bool operator==(const OutlineSection&, const OutlineSection&) = default;
};

struct Outline {
    std::vector<OutlineSection> sections;
    bool reindexed = false;
    std::vector<std::string> warnings;
};

/// Canonical "Section k - Main Point: ... - Word Count: n words" lines.
std::string render_outline(const Outline& outline);

struct AgentCall {
    std::string stage;  // "plan" or "section"
    int step = 0;       // 0 for the plan call
    std::string prompt;
    std::string response;
    std::uint64_t prompt_units = 0;
    std::uint64_t completion_units = 0;
};

struct AgentTranscript {
    WritingTask task;
    Outline outline;
    std::vector<std::string> section_texts;
    std::string final_text;
    std::vector<AgentCall> calls;
};

/// Raised when a section call fails after retries; carries everything
/// produced before the failure.
class AgentError : public Error {
public:
    AgentError(const std::string& message, ErrorCode cause, AgentTranscript partial)
        : Error(ErrorCode::AgentAborted, message, cause), partial_(std::move(partial)) {}

    const AgentTranscript& partial() const { return partial_; }

private:
    AgentTranscript partial_;
};

std::string build_plan_prompt(const WritingTask& task);

/// Accepts lines shaped like
///   Section <k> - Main Point: <text> - Word Count: <n>[-<m>] words
/// ignoring markdown emphasis and any other lines. A range resolves to its
/// midpoint rounded down. Out-of-order indices are renumbered in encounter
/// order and flagged; budgets outside [200, 1000] are kept with a warning.
Outline parse_outline(std::string_view raw);

/// `step` is 1-based. `previous_text` is the concatenation of sections
/// 1..step-1 and must be empty for step 1.
std::string build_section_prompt(const WritingTask& task, const Outline& outline, std::string_view previous_text,
                                 int step);

struct AgentConfig {
    GenerationConfig generation;
    RetryPolicy retry;
};

/// Exactly 1 + n model calls for an n-section outline.
AgentTranscript run_agent(const WritingTask& task, ChatClient& client, const AgentConfig& config);

void to_json(nlohmann::json& j, const WritingTask& t);
void from_json(const nlohmann::json& j, WritingTask& t);
void to_json(nlohmann::json& j, const Outline& o);
void to_json(nlohmann::json& j, const AgentTranscript& t);

}  // namespace lwf::agent
