#include "lwf/bench.hpp"

#include "lwf/parallel.hpp"
#include "lwf/prompts.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>
#include <tuple>

namespace lwf::bench {

using json = nlohmann::json;

namespace {

std::vector<ImageRef> image_refs(const std::vector<std::string>& images) {
    std::vector<ImageRef> refs;
    for (const auto& s : images) refs.push_back({s, ""});
    return refs;
}

std::string_view category_name(Category c) {
    return c == Category::Professional ? "professional" : "creative";
}

Category parse_category(std::string_view s) {
    if (s == "professional") return Category::Professional;
    if (s == "creative") return Category::Creative;
    fail(ErrorCode::InvalidInput, "unknown category '" + std::string(s) + "'");
}

std::string fmt_score(const std::optional<double>& v) {
    return v ? fmt::format("{:.1f}", *v) : "-";
}

json optional_number(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::vector<BenchInstruction> make_ruler_suite(const std::vector<BenchInstruction>& base,
                                               const std::vector<std::uint64_t>& lengths) {
    if (base.size() != kRulerBaseSize) {
        fail(ErrorCode::SuiteShape, "ruler base needs 8 instructions, got " + std::to_string(base.size()));
    }
    const auto en = std::count_if(base.begin(), base.end(), [](const auto& b) { return b.language == Language::En; });
    if (en != 4) {
        fail(ErrorCode::SuiteShape, "ruler base needs four English and four Chinese instructions, got " +
                                        std::to_string(en) + " English");
    }
    if (lengths.empty() || std::find(lengths.begin(), lengths.end(), 0u) != lengths.end()) {
        fail(ErrorCode::SuiteShape, "ruler lengths must be non-empty and positive");
    }
    std::vector<BenchInstruction> suite;
    suite.reserve(base.size() * lengths.size());
    for (const auto& b : base) {
        for (const auto len : lengths) {
            const std::string n = std::to_string(len);
            const std::pair<std::string_view, std::string_view> values[] = {{"{L}", n}};
            BenchInstruction p = b;
            p.id = b.id + "-L" + n;
            p.instruction =
                substitute(b.language == Language::En ? prompts::kRulerEn : prompts::kRulerZh, values);
            p.required_length = TextLength{len};
            suite.push_back(std::move(p));
        }
    }
    return suite;
}

std::string_view bucket_label(Bucket b) {
    switch (b) {
        case Bucket::Upto1500: return "[0,1500)";
        case Bucket::From1500: return "[1500,2000)";
        case Bucket::From2000: return "[2000,3000)";
        case Bucket::From3000: return "[3000,4000)";
    }
    return "?";
}

Bucket bucketize(TextLength required_length) {
    const auto l = required_length.units;
    if (l == 0) fail(ErrorCode::InvalidRequirement, "required length must be positive");
    if (l < 1500) return Bucket::Upto1500;
    if (l < 2000) return Bucket::From1500;
    if (l < 3000) return Bucket::From2000;
    return Bucket::From3000;
}

std::vector<ScoredInstruction> evaluate_run(const std::vector<BenchInstruction>& instructions,
                                            const std::map<std::string, std::string>& responses,
                                            ChatClient& judge_client, const EvalOptions& options) {
    return parallel_map(instructions.size(), options.workers, [&](std::size_t i) {
        const BenchInstruction& inst = instructions[i];
        ScoredInstruction s;
        s.instruction_id = inst.id;
        s.model_id = options.model_id;
        s.required_length = inst.required_length;

        const auto it = responses.find(inst.id);
        if (it == responses.end()) {
            s.flags.push_back("missing-response");
            return s;
        }
        s.response = it->second;
        s.length_score = length_score(count_length_units(s.response), inst.required_length);
        if (s.response.empty()) {
            s.flags.push_back("empty-response");
            return s;
        }

        const std::vector<ChatMessage> messages = {
            ChatMessage::user(build_judge_prompt(inst.instruction, s.response), image_refs(inst.images))};
        for (int attempt = 0; attempt <= options.judge_format_retries; ++attempt) {
            try {
                const ChatResult reply = judge_client.chat(messages, options.judge);
                s.judgment = parse_judgment(reply.text);
                s.quality_score = quality_score(*s.judgment);
                return s;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::JudgeFormat) {
                    s.flags.push_back("judge-error:" + std::string(to_string(e.code())));
                    return s;
                }
            }
        }
        s.flags.push_back("judge-format");
        return s;
    });
}

BucketedReport aggregate_report(const std::vector<ScoredInstruction>& scored) {
    std::vector<const ScoredInstruction*> order;
    order.reserve(scored.size());
    for (const auto& s : scored) order.push_back(&s);
    // Fixed summation order makes the report independent of input order.
    std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        return std::tie(a->instruction_id, a->model_id, a->length_score, a->quality_score, a->required_length) <
               std::tie(b->instruction_id, b->model_id, b->length_score, b->quality_score, b->required_length);
    });

    struct Acc {
        std::size_t count = 0;
        double sl = 0;
        std::size_t q_count = 0;
        double sq = 0;

        void add(const ScoredInstruction& s) {
            ++count;
            sl += s.length_score;
            if (s.quality_score) {
                ++q_count;
                sq += *s.quality_score;
            }
        }
        std::optional<double> q_mean() const {
            return q_count ? std::optional<double>(sq / static_cast<double>(q_count)) : std::nullopt;
        }
    };

    Acc all;
    std::array<Acc, 4> per_bucket;
    BucketedReport report;
    std::set<std::string> models;
    for (const auto* s : order) {
        all.add(*s);
        per_bucket[static_cast<std::size_t>(bucketize(s->required_length))].add(*s);
        if (!s->flags.empty()) ++report.flagged;
        models.insert(s->model_id);
    }
    if (models.size() == 1) report.model_id = *models.begin();

    report.overall.count = all.count;
    if (all.count) {
        report.overall.length_score = all.sl / static_cast<double>(all.count);
        report.overall.quality_score = all.q_mean();
        if (report.overall.quality_score) {
            report.overall.overall = overall_score(report.overall.length_score, *report.overall.quality_score).overall;
        }
    }
    for (std::size_t b = 0; b < per_bucket.size(); ++b) {
        if (!per_bucket[b].count) continue;
        report.buckets[b] = BucketStats{per_bucket[b].count, per_bucket[b].sl / static_cast<double>(per_bucket[b].count),
                                        per_bucket[b].q_mean()};
    }
    return report;
}

std::string render_report_table(const std::vector<BucketedReport>& reports) {
    std::size_t model_width = 5;
    for (const auto& r : reports) model_width = std::max(model_width, r.model_id.size());
    constexpr int kCol = 6;

    std::string out = fmt::format("{:<{}} | {:^{}} |", "", model_width, "Overall", 3 * kCol + 2);
    for (const auto b : kBuckets) out += fmt::format(" {:^{}} |", bucket_label(b), 2 * kCol + 1);
    out += '\n';
    out += fmt::format("{:<{}} | {:>{}} {:>{}} {:>{}} |", "Model", model_width, "S", kCol, "S_l", kCol, "S_q", kCol);
    for (std::size_t b = 0; b < kBuckets.size(); ++b) out += fmt::format(" {:>{}} {:>{}} |", "S_l", kCol, "S_q", kCol);
    out += '\n';
    out += std::string(out.find('\n'), '-') + '\n';
    for (const auto& r : reports) {
        const std::optional<double> sl =
            r.overall.count ? std::optional<double>(r.overall.length_score) : std::nullopt;
        out += fmt::format("{:<{}} | {:>{}} {:>{}} {:>{}} |", r.model_id, model_width, fmt_score(r.overall.overall), kCol,
                           fmt_score(sl), kCol, fmt_score(r.overall.quality_score), kCol);
        for (const auto& bucket : r.buckets) {
            const std::optional<double> bsl = bucket ? std::optional<double>(bucket->length_score) : std::nullopt;
            const std::optional<double> bsq = bucket ? bucket->quality_score : std::nullopt;
            out += fmt::format(" {:>{}} {:>{}} |", fmt_score(bsl), kCol, fmt_score(bsq), kCol);
        }
        out += '\n';
    }
    return out;
}

CaptionBaselineConfig make_caption_baseline_config(std::string caption_model, std::string llm_model,
                                                   bool short_output_model) {
    CaptionBaselineConfig c;
    c.caption.model_id = std::move(caption_model);
    c.caption.max_new_tokens = kCaptionMaxNewTokens;
    c.final.model_id = std::move(llm_model);
    c.final.max_new_tokens = short_output_model ? kShortOutputMaxNewTokens : kFinalMaxNewTokens;
    return c;
}

CaptionBaselineResult caption_then_llm(const BenchInstruction& instruction, ChatClient& vlm_client,
                                       ChatClient& llm_client, const CaptionBaselineConfig& config) {
    if (instruction.images.empty()) {
        fail(ErrorCode::InvalidInput, "caption baseline needs at least one image for '" + instruction.id + "'");
    }
    CaptionBaselineResult result;
    for (std::size_t i = 0; i < instruction.images.size(); ++i) {
        const ImageRef image{instruction.images[i], ""};
        try {
            const ChatResult caption = vlm_client.chat(
                {ChatMessage::user(std::string(prompts::kCaptionImage), std::span<const ImageRef>(&image, 1))},
                config.caption);
            result.captions.push_back(trim(caption.text));
        } catch (const Error& e) {
            throw Error(ErrorCode::BaselineIncomplete,
                        "caption for image " + std::to_string(i + 1) + " of '" + instruction.id + "' failed: " + e.what(),
                        e.code());
        }
    }
    std::string captions;
    for (std::size_t i = 0; i < result.captions.size(); ++i) {
        if (i) captions += "\n\n";
        captions += "Image " + std::to_string(i + 1) + ": " + result.captions[i];
    }
    const std::pair<std::string_view, std::string_view> values[] = {
        {prompts::kUserInstruction, instruction.instruction}, {prompts::kCaptions, captions}};
    result.response =
        llm_client.chat({ChatMessage::user(substitute(prompts::kCaptionResponse, values))}, config.final).text;
    return result;
}

std::map<std::string, std::string> generate_responses(const std::vector<BenchInstruction>& instructions,
                                                      ChatClient& client, const GenerationConfig& config,
                                                      std::size_t workers) {
    const auto texts = parallel_map(instructions.size(), workers, [&](std::size_t i) {
        const auto& inst = instructions[i];
        return client.chat({ChatMessage::user(inst.instruction, image_refs(inst.images))}, config).text;
    });
    std::map<std::string, std::string> out;
    for (std::size_t i = 0; i < instructions.size(); ++i) out[instructions[i].id] = texts[i];
    return out;
}

std::optional<double> WinRateMatrix::rate(const std::string& row, const std::string& col) const {
    if (row == col) return std::nullopt;
    const auto it = tallies.find({row, col});
    if (it == tallies.end() || it->second.second == 0) return std::nullopt;
    return static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
}

WinRateMatrix win_rate_matrix(const std::vector<VoteRecord>& votes) {
    WinRateMatrix m;
    std::set<std::string> models;
    for (const auto& v : votes) {
        if (v.model_a == v.model_b) {
            fail(ErrorCode::InvalidInput, "vote on '" + v.instruction_id + "' compares a model with itself");
        }
        models.insert(v.model_a);
        models.insert(v.model_b);
        const std::string& winner = v.winner_is_a ? v.model_a : v.model_b;
        const std::string& loser = v.winner_is_a ? v.model_b : v.model_a;
        auto& won = m.tallies[{winner, loser}];
        ++won.first;
        ++won.second;
        ++m.tallies[{loser, winner}].second;
    }
    m.models.assign(models.begin(), models.end());
    return m;
}

std::string render_win_rate_table(const WinRateMatrix& m) {
    std::size_t width = 6;
    for (const auto& model : m.models) width = std::max(width, model.size());
    std::string out = fmt::format("{:<{}}", "", width);
    for (const auto& c : m.models) out += fmt::format(" {:>{}}", c, width);
    out += '\n';
    for (const auto& r : m.models) {
        out += fmt::format("{:<{}}", r, width);
        for (const auto& c : m.models) {
            const auto v = m.rate(r, c);
            out += fmt::format(" {:>{}}", v ? fmt::format("{:.3f}", *v) : "-", width);
        }
        out += '\n';
    }
    return out;
}

void to_json(json& j, const BenchInstruction& b) {
    j = {{"id", b.id},
         {"category", category_name(b.category)},
         {"task_type", b.task_type},
         {"language", to_string(b.language)},
         {"images", b.images},
         {"instruction", b.instruction},
         {"required_length", b.required_length.units}};
}

void from_json(const json& j, BenchInstruction& b) {
    b = BenchInstruction{};
    b.id = j.at("id").get<std::string>();
    b.category = parse_category(j.at("category").get<std::string>());
    b.task_type = j.value("task_type", "");
    b.language = parse_language(j.at("language").get<std::string>());
    b.images = j.value("images", std::vector<std::string>{});
    b.instruction = j.at("instruction").get<std::string>();
    b.required_length = TextLength{j.at("required_length").get<std::uint64_t>()};
    if (b.required_length.units == 0) {
        fail(ErrorCode::InvalidInput, "benchmark instruction '" + b.id + "' needs a positive required_length");
    }
}

void to_json(json& j, const ScoredInstruction& s) {
    j = {{"instruction_id", s.instruction_id},
         {"model_id", s.model_id},
         {"response", s.response},
         {"required_length", s.required_length.units},
         {"S_l", s.length_score},
         {"S_q", optional_number(s.quality_score)},
         {"flags", s.flags}};
    if (s.judgment) j["judgment"] = json::parse(render_judgment(*s.judgment));
}

void from_json(const json& j, ScoredInstruction& s) {
    s = ScoredInstruction{};
    s.instruction_id = j.at("instruction_id").get<std::string>();
    s.model_id = j.value("model_id", "");
    s.response = j.value("response", "");
    s.required_length = TextLength{j.at("required_length").get<std::uint64_t>()};
    s.length_score = j.at("S_l").get<double>();
    if (j.contains("S_q") && !j["S_q"].is_null()) s.quality_score = j["S_q"].get<double>();
    s.flags = j.value("flags", std::vector<std::string>{});
}

void to_json(json& j, const BucketedReport& r) {
    json buckets = json::object();
    for (std::size_t b = 0; b < kBuckets.size(); ++b) {
        if (!r.buckets[b]) continue;
        buckets[std::string(bucket_label(kBuckets[b]))] = {{"count", r.buckets[b]->count},
                                                            {"S_l", r.buckets[b]->length_score},
                                                            {"S_q", optional_number(r.buckets[b]->quality_score)}};
    }
    j = {{"model_id", r.model_id},
         {"overall",
          {{"count", r.overall.count},
           {"S", optional_number(r.overall.overall)},
           {"S_l", r.overall.count ? json(r.overall.length_score) : json(nullptr)},
           {"S_q", optional_number(r.overall.quality_score)}}},
         {"buckets", buckets},
         {"flagged", r.flagged}};
}

void from_json(const json& j, VoteRecord& v) {
    v.annotator_id = j.value("annotator_id", "");
    v.instruction_id = j.value("instruction_id", "");
    v.model_a = j.at("model_a").get<std::string>();
    v.model_b = j.at("model_b").get<std::string>();
    const std::string winner = j.at("winner").get<std::string>();
    if (winner != "a" && winner != "b") fail(ErrorCode::InvalidInput, "vote winner must be 'a' or 'b'");
    v.winner_is_a = winner == "a";
}

void to_json(json& j, const VoteRecord& v) {
    j = {{"annotator_id", v.annotator_id},
         {"instruction_id", v.instruction_id},
         {"model_a", v.model_a},
         {"model_b", v.model_b},
         {"winner", v.winner_is_a ? "a" : "b"}};
}

void to_json(json& j, const WinRateMatrix& m) {
    json rows = json::object();
    for (const auto& r : m.models) {
        json row = json::object();
        for (const auto& c : m.models) {
            if (const auto v = m.rate(r, c)) row[c] = *v;
        }
        rows[r] = row;
    }
    j = {{"models", m.models}, {"win_rate", rows}};
}

}  // namespace lwf::bench
