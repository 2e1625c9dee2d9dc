#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace lwf {

/// Length in mixed-language units: one per Latin-script word, one per CJK
/// character.
struct TextLength {
    std::uint64_t units = 0;

    friend auto operator<=>(const TextLength&, const TextLength&) = default;
};

/// Runs of Latin letters, digits, apostrophes and hyphens count once if they
/// contain at least one letter or digit. Every CJK code point counts once.
/// Everything else separates runs and counts zero.
TextLength count_length_units(std::string_view text);

/// Closeness of an output length to a required length on a 0-100 scale.
/// Overshoot is penalised over three multiples of the requirement, undershoot
/// over two. An empty output scores zero.
double length_score(TextLength produced, TextLength required);

struct QualityJudgment {
    std::string analysis;
    int relevance = 0;
    int accuracy = 0;
    int coherence = 0;
    int clarity = 0;
    int breadth_depth = 0;
    int reading_experience = 0;

    std::array<int, 6> ratings() const {
        return {relevance, accuracy, coherence, clarity, breadth_depth, reading_experience};
    }
};

/// JSON keys in rubric order, as the judge is asked to emit them.
inline constexpr std::array<std::string_view, 6> kRubricKeys = {
    "Relevance", "Accuracy", "Coherence", "Clarity", "Breadth and Depth", "Reading Experience"};

std::string build_judge_prompt(std::string_view instruction, std::string_view response);

/// Finds the first JSON object in `raw` that carries "Analysis" and all six
/// rubric keys with integer ratings in 1..5. Prose and code fences around the
/// object are ignored. Throws ErrorCode::JudgeFormat with the raw text.
QualityJudgment parse_judgment(std::string_view raw);

/// Renders a judgment in the exact shape the judge is asked to produce.
std::string render_judgment(const QualityJudgment& j);

/// (mean rating / 5) * 100, so the range is [20, 100].
double quality_score(const QualityJudgment& j);

struct ScoreTriple {
    double length_score = 0;
    double quality_score = 0;
    double overall = 0;
};

ScoreTriple overall_score(double length, double quality);

}  // namespace lwf
