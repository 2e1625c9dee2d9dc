#include "lwf/metrics.hpp"

#include "lwf/error.hpp"
#include "lwf/prompts.hpp"
#include "lwf/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

namespace lwf {

using json = nlohmann::json;

namespace {

bool is_word_char(char32_t cp) {
    return is_latin_letter(cp) || (cp >= '0' && cp <= '9') || cp == '\'' || cp == 0x2019 || cp == '-';
}

bool is_anchor_char(char32_t cp) {
    return is_latin_letter(cp) || (cp >= '0' && cp <= '9');
}

// End offset (exclusive) of the balanced object opening at `open`, honoring
// JSON string escapes. npos if unbalanced.
std::size_t match_object(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

}  // namespace

TextLength count_length_units(std::string_view text) {
    std::uint64_t units = 0;
    bool in_run = false;
    bool run_anchored = false;
    std::size_t pos = 0;
    const auto close_run = [&] {
        if (in_run && run_anchored) ++units;
        in_run = false;
        run_anchored = false;
    };
    while (pos < text.size()) {
        const char32_t cp = next_codepoint(text, pos);
        if (is_cjk(cp)) {
            close_run();
            ++units;
        } else if (is_word_char(cp)) {
            in_run = true;
            run_anchored = run_anchored || is_anchor_char(cp);
        } else {
            close_run();
        }
    }
    close_run();
    return TextLength{units};
}

double length_score(TextLength produced, TextLength required) {
    if (required.units == 0) fail(ErrorCode::InvalidRequirement, "required length must be positive");
    if (produced.units == 0) return 0.0;
    const double lv = static_cast<double>(produced.units);
    const double lr = static_cast<double>(required.units);
    if (lv > lr) return 100.0 * std::max(0.0, 1.0 - (lv / lr - 1.0) / 3.0);
    return 100.0 * std::max(0.0, 1.0 - (lr / lv - 1.0) / 2.0);
}

std::string build_judge_prompt(std::string_view instruction, std::string_view response) {
    if (instruction.empty()) fail(ErrorCode::InvalidInput, "judge prompt needs a non-empty instruction");
    if (response.empty()) fail(ErrorCode::InvalidInput, "judge prompt needs a non-empty response");
    const std::pair<std::string_view, std::string_view> values[] = {
        {prompts::kInst, instruction}, {prompts::kResponse, response}};
    return substitute(prompts::kJudgeQuality, values);
}

QualityJudgment parse_judgment(std::string_view raw) {
    const auto judge_error = [&](const std::string& why) {
        fail(ErrorCode::JudgeFormat, why + "; raw judge output: " + std::string(raw));
    };

    std::optional<std::string> first_problem;
    for (std::size_t open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
        const std::size_t end = match_object(raw, open);
        if (end == std::string_view::npos) continue;
        const json obj = json::parse(raw.substr(open, end - open), nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) continue;

        std::optional<std::string> missing;
        if (!obj.contains("Analysis")) missing = "Analysis";
        for (const auto key : kRubricKeys) {
            if (!missing && !obj.contains(std::string(key))) missing = std::string(key);
        }
        if (missing) {
            if (!first_problem) first_problem = "judge output is missing key '" + *missing + "'";
            continue;
        }

        QualityJudgment j;
        const json& analysis = obj["Analysis"];
        j.analysis = analysis.is_string() ? analysis.get<std::string>() : analysis.dump();
        int* slots[] = {&j.relevance, &j.accuracy,      &j.coherence,
                        &j.clarity,   &j.breadth_depth, &j.reading_experience};
        for (std::size_t k = 0; k < kRubricKeys.size(); ++k) {
            const json& v = obj[std::string(kRubricKeys[k])];
            if (!v.is_number_integer()) {
                judge_error("rating '" + std::string(kRubricKeys[k]) + "' is not an integer");
            }
            const auto rating = v.get<std::int64_t>();
            if (rating < 1 || rating > 5) {
                judge_error("rating '" + std::string(kRubricKeys[k]) + "' = " + std::to_string(rating) +
                            " is outside 1..5");
            }
            *slots[k] = static_cast<int>(rating);
        }
        return j;
    }
    fail(ErrorCode::JudgeFormat,
         first_problem.value_or("no JSON object found in judge output") + "; raw judge output: " + std::string(raw));
}

std::string render_judgment(const QualityJudgment& j) {
    json obj = json::object();
    obj["Analysis"] = j.analysis;
    const auto ratings = j.ratings();
    for (std::size_t k = 0; k < kRubricKeys.size(); ++k) obj[std::string(kRubricKeys[k])] = ratings[k];
    return obj.dump();
}

double quality_score(const QualityJudgment& j) {
    const auto ratings = j.ratings();
    int sum = 0;
    for (const int r : ratings) sum += r;
    // mean/5*100 == sum*100/30, which is exact for integer sums
    return static_cast<double>(sum) * 100.0 / 30.0;
}

ScoreTriple overall_score(double length, double quality) {
    const auto in_range = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 100.0; };
    if (!in_range(length) || !in_range(quality)) {
        fail(ErrorCode::InvalidScore, "scores must lie in [0, 100]");
    }
    return ScoreTriple{length, quality, (length + quality) / 2.0};
}

}  // namespace lwf
