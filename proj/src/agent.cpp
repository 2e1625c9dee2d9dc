#include "lwf/agent.hpp"

#include "lwf/prompts.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

namespace lwf::agent {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kMinSectionUnits = 200;
constexpr std::uint64_t kMaxSectionUnits = 1000;

std::uint64_t parse_count(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), ','), s.end());
    return std::stoull(s);
}

std::string strip_decoration(std::string_view line) {
    std::string out;
    out.reserve(line.size());
    for (const char c : line) {
        if (c != '*' && c != '#' && c != '`') out += c;
    }
    return trim(out);
}

std::vector<ChatMessage> user_turn(const WritingTask& task, std::string prompt) {
    return {ChatMessage::user(std::move(prompt), task.images)};
}

}  // namespace

void WritingTask::validate() const {
    if (trim(instruction).empty()) fail(ErrorCode::InvalidInput, "writing task has an empty instruction");
    if (images.size() > kMaxImages) {
        fail(ErrorCode::InvalidInput,
             "writing task has " + std::to_string(images.size()) + " images; at most 30 are supported");
    }
}

std::string render_outline(const Outline& outline) {
    std::ostringstream out;
    for (std::size_t i = 0; i < outline.sections.size(); ++i) {
        const auto& s = outline.sections[i];
        if (i) out << '\n';
        out << "Section " << s.index << " - Main Point: " << s.main_point << " - Word Count: " << s.target_units
            << " words";
    }
    return out.str();
}

std::string build_plan_prompt(const WritingTask& task) {
    task.validate();
    const std::pair<std::string_view, std::string_view> values[] = {{prompts::kUserInstruction, task.instruction}};
    return substitute(prompts::kPlanOutline, values);
}

Outline parse_outline(std::string_view raw) {
    static const std::regex kLine(
        R"(^(?:[-+]\s*)?Section\s+(\d+)\s*(?:-|–|—|:|\.)\s*Main\s+Point\s*:\s*(.+?)\s*(?:-|–|—)\s*Word\s+Count\s*:\s*\[?\s*(\d[\d,]*)\s*(?:(?:-|–|—|~|to)\s*(\d[\d,]*))?\s*\]?.*$)",
        std::regex::icase | std::regex::ECMAScript);

    Outline outline;
    int expected = 1;
    std::istringstream lines{std::string(raw)};
    std::string line;
    while (std::getline(lines, line)) {
        const std::string clean = strip_decoration(line);
        std::smatch m;
        if (clean.empty() || !std::regex_match(clean, m, kLine)) continue;

        OutlineSection section;
        section.index = std::stoi(m[1].str());
        section.main_point = trim(m[2].str());
        std::uint64_t low = parse_count(m[3].str());
        if (m[4].matched) {
            std::uint64_t high = parse_count(m[4].str());
            if (high < low) std::swap(low, high);
            section.target_units = (low + high) / 2;
        } else {
            section.target_units = low;
        }
        if (section.target_units == 0) {
            outline.warnings.push_back("skipped section " + m[1].str() + " with a zero word budget");
            continue;
        }
        if (section.index != expected) {
            outline.reindexed = true;
            outline.warnings.push_back("section numbered " + std::to_string(section.index) + " renumbered to " +
                                       std::to_string(expected));
            section.index = expected;
        }
        if (section.target_units < kMinSectionUnits || section.target_units > kMaxSectionUnits) {
            outline.warnings.push_back("section " + std::to_string(section.index) + " budget " +
                                       std::to_string(section.target_units) + " is outside [200, 1000]");
        }
        outline.sections.push_back(std::move(section));
        ++expected;
    }
    if (outline.sections.empty()) {
        fail(ErrorCode::OutlineFormat, "no outline sections found in planner output: " +
                                           std::string(raw.substr(0, std::min<std::size_t>(raw.size(), 400))));
    }
    return outline;
}

std::string build_section_prompt(const WritingTask& task, const Outline& outline, std::string_view previous_text,
                                 int step) {
    if (step < 1 || static_cast<std::size_t>(step) > outline.sections.size()) {
        fail(ErrorCode::StepOutOfRange, "section step " + std::to_string(step) + " is outside 1.." +
                                            std::to_string(outline.sections.size()));
    }
    if (step == 1 && !previous_text.empty()) {
        fail(ErrorCode::InvalidInput, "the first section has no previous text");
    }
    const std::string plan = render_outline(outline);
    const std::string step_text = std::to_string(step);
    const std::pair<std::string_view, std::string_view> values[] = {
        {prompts::kUserInstruction, task.instruction},
        {prompts::kPlan, plan},
        {prompts::kText, previous_text},
        {prompts::kStep, step_text},
    };
    return substitute(prompts::kWriteSection, values);
}

AgentTranscript run_agent(const WritingTask& task, ChatClient& client, const AgentConfig& config) {
    AgentTranscript transcript;
    transcript.task = task;

    const std::string plan_prompt = build_plan_prompt(task);
    const ChatResult plan = chat_with_retry(client, user_turn(task, plan_prompt), config.generation, config.retry);
    transcript.calls.push_back({"plan", 0, plan_prompt, plan.text, plan.prompt_units, plan.completion_units});
    transcript.outline = parse_outline(plan.text);

    const int n = static_cast<int>(transcript.outline.sections.size());
    for (int step = 1; step <= n; ++step) {
        const std::string prompt = build_section_prompt(task, transcript.outline, transcript.final_text, step);
        ChatResult section;
        try {
            section = chat_with_retry(client, user_turn(task, prompt), config.generation, config.retry);
        } catch (const Error& e) {
            throw AgentError("section " + std::to_string(step) + " of " + std::to_string(n) + " failed: " + e.what(),
                             e.code(), transcript);
        }
        transcript.calls.push_back(
            {"section", step, prompt, section.text, section.prompt_units, section.completion_units});
        if (step > 1) transcript.final_text += kSectionSeparator;
        transcript.final_text += section.text;
        transcript.section_texts.push_back(std::move(section.text));
    }
    return transcript;
}

void to_json(json& j, const WritingTask& t) {
    json images = json::array();
    for (const auto& img : t.images) images.push_back(img.source);
    j = {{"images", images}, {"instruction", t.instruction}, {"language", to_string(t.language)}};
    if (t.required_length) j["required_length"] = t.required_length->units;
}

void from_json(const json& j, WritingTask& t) {
    t = WritingTask{};
    for (const auto& img : j.value("images", json::array())) t.images.push_back({img.get<std::string>(), ""});
    t.instruction = j.at("instruction").get<std::string>();
    t.language = parse_language(j.value("language", "en"));
    if (j.contains("required_length") && !j["required_length"].is_null()) {
        t.required_length = TextLength{j["required_length"].get<std::uint64_t>()};
    }
}

void to_json(json& j, const Outline& o) {
    json sections = json::array();
    for (const auto& s : o.sections) {
        sections.push_back({{"index", s.index}, {"main_point", s.main_point}, {"target_units", s.target_units}});
    }
    j = {{"sections", sections}, {"reindexed", o.reindexed}, {"warnings", o.warnings}};
}

void to_json(json& j, const AgentTranscript& t) {
    json calls = json::array();
    for (const auto& c : t.calls) {
        calls.push_back({{"stage", c.stage},
                         {"step", c.step},
                         {"prompt", c.prompt},
                         {"response", c.response},
                         {"prompt_units", c.prompt_units},
                         {"completion_units", c.completion_units}});
    }
    j = {{"task", t.task},
         {"outline", t.outline},
         {"sections", t.section_texts},
         {"final_text", t.final_text},
         {"calls", calls}};
}

}  // namespace lwf::agent
