#include "lwf/datapipe.hpp"

#include "lwf/parallel.hpp"
#include "lwf/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace lwf::datapipe {

using json = nlohmann::json;

namespace {

std::vector<ImageRef> image_refs(const std::vector<std::string>& images) {
    std::vector<ImageRef> refs;
    refs.reserve(images.size());
    for (const auto& s : images) refs.push_back({s, ""});
    return refs;
}

// Unbiased draw from [0, bound) by rejection; std::uniform_int_distribution
// differs between standard libraries.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % bound;
}

}  // namespace

SftRecord SftRecord::from_output(std::string id, std::vector<std::string> images, std::string instruction,
                                 std::string output) {
    SftRecord r;
    r.id = std::move(id);
    r.images = std::move(images);
    r.instruction = std::move(instruction);
    r.output_length = count_length_units(output);
    r.output = std::move(output);
    return r;
}

FilterResult filter_by_output_length(const std::vector<InstructionRecord>& records, std::uint64_t min_units) {
    FilterResult result;
    for (const auto& r : records) {
        if (!r.response) {
            result.dropped.push_back({r.id, "missing-response"});
            continue;
        }
        const auto units = count_length_units(*r.response).units;
        if (units > min_units) {
            result.kept.push_back(r);
        } else {
            result.dropped.push_back({r.id, "too-short:" + std::to_string(units)});
        }
    }
    return result;
}

std::string build_verification_prompt(std::string_view instruction) {
    const std::pair<std::string_view, std::string_view> values[] = {{prompts::kUserInstruction, instruction}};
    return substitute(prompts::kLongOutputSelection, values);
}

bool parse_yes_no(std::string_view reply) {
    std::size_t pos = 0;
    // Skip whitespace, quotes and markdown emphasis before the verdict word.
    while (pos < reply.size()) {
        std::size_t probe = pos;
        const char32_t cp = next_codepoint(reply, probe);
        const bool skippable = cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '"' || cp == '\'' ||
                               cp == '*' || cp == '`' || cp == 0x201C || cp == 0x201D || cp == 0x2018 ||
                               cp == 0x2019;
        if (!skippable) break;
        pos = probe;
    }
    const std::string_view rest = reply.substr(pos);
    const auto word_ends_at = [&](std::size_t len) {
        return rest.size() == len || !std::isalpha(static_cast<unsigned char>(rest[len]));
    };
    if (starts_with_icase(rest, "yes") && word_ends_at(3)) return true;
    if (starts_with_icase(rest, "no") && word_ends_at(2)) return false;
    fail(ErrorCode::VerificationAmbiguous,
         "verifier reply has no leading yes/no: " + std::string(reply.substr(0, std::min<std::size_t>(reply.size(), 120))));
}

bool verify_long_output(const InstructionRecord& record, ChatClient& client, const GenerationConfig& config) {
    if (trim(record.instruction).empty()) fail(ErrorCode::InvalidInput, "record '" + record.id + "' has no instruction");
    if (record.images.empty()) fail(ErrorCode::InvalidInput, "record '" + record.id + "' has no image");
    const auto images = image_refs(record.images);
    const ChatResult reply =
        client.chat({ChatMessage::user(build_verification_prompt(record.instruction), images)}, config);
    return parse_yes_no(reply.text);
}

VerifyResult verify_records(const std::vector<InstructionRecord>& records, ChatClient& client,
                            const GenerationConfig& config, std::size_t workers) {
    struct Outcome {
        enum Kind { Accept, Reject, Quarantine } kind;
        std::string reason;
    };
    const auto outcomes = parallel_map(records.size(), workers, [&](std::size_t i) -> Outcome {
        try {
            return verify_long_output(records[i], client, config) ? Outcome{Outcome::Accept, ""}
                                                                  : Outcome{Outcome::Reject, "verifier-no"};
        } catch (const Error& e) {
            return {Outcome::Quarantine, std::string(to_string(e.code())) + ": " + e.what()};
        }
    });
    VerifyResult result;
    for (std::size_t i = 0; i < records.size(); ++i) {
        switch (outcomes[i].kind) {
            case Outcome::Accept: result.accepted.push_back(records[i]); break;
            case Outcome::Reject: result.rejected.push_back({records[i].id, outcomes[i].reason}); break;
            case Outcome::Quarantine: result.quarantined.push_back({records[i].id, outcomes[i].reason}); break;
        }
    }
    return result;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k > n) fail(ErrorCode::InsufficientPool, "cannot sample " + std::to_string(k) + " of " + std::to_string(n));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(draw_below(rng, n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

std::string build_multi_image_prompt(std::size_t image_count, const std::array<std::string, 3>& exemplars,
                                     std::string_view instruction) {
    const std::string count = std::to_string(image_count);
    const std::pair<std::string_view, std::string_view> values[] = {
        {prompts::kImageNumber, count},     {prompts::kExample1, exemplars[0]},
        {prompts::kExample2, exemplars[1]}, {prompts::kExample3, exemplars[2]},
        {prompts::kUserInstruction, instruction},
    };
    return substitute(prompts::kMultiImageRewrite, values);
}

InstructionRecord synthesize_multi_image(const InstructionRecord& seed, const std::vector<std::string>& image_pool,
                                         std::size_t k, const std::array<std::string, 3>& exemplars,
                                         ChatClient& client, const GenerationConfig& config, std::uint64_t rng_seed) {
    if (k != 2 && k != 4) fail(ErrorCode::InvalidInput, "multi-image synthesis samples 2 or 4 images, got " + std::to_string(k));
    if (image_pool.size() < k) {
        fail(ErrorCode::InsufficientPool, "image pool has " + std::to_string(image_pool.size()) + " images, need " +
                                              std::to_string(k));
    }
    InstructionRecord out;
    for (const std::size_t i : sample_indices(image_pool.size(), k, rng_seed)) out.images.push_back(image_pool[i]);

    const std::string prompt = build_multi_image_prompt(k, exemplars, seed.instruction);
    const ChatResult reply = client.chat({ChatMessage::user(prompt, image_refs(out.images))}, config);
    out.instruction = trim(reply.text);
    if (out.instruction.empty()) fail(ErrorCode::MalformedResponse, "rewrite for '" + seed.id + "' came back empty");

    out.id = seed.id + "-multi" + std::to_string(k) + "-s" + std::to_string(rng_seed);
    out.language = seed.language;
    out.source = "multi-image";
    return out;
}

InstructionRecord slides_to_instruction(std::string id, const std::vector<std::string>& slide_images,
                                        Language language) {
    if (slide_images.size() < kMinDeckPages || slide_images.size() > kMaxDeckPages) {
        fail(ErrorCode::DeckSize, "deck '" + id + "' has " + std::to_string(slide_images.size()) +
                                      " pages; expected 2 to 30");
    }
    InstructionRecord r;
    r.id = std::move(id);
    r.images = slide_images;
    r.instruction = std::string(prompts::kLectureScriptInstruction);
    r.language = language;
    r.source = "slides";
    return r;
}

std::string length_requirement(std::uint64_t units) {
    const std::string n = std::to_string(units);
    const std::pair<std::string_view, std::string_view> values[] = {{"{L}", n}};
    return substitute(prompts::kLengthRequirement, values);
}

SftRecord backtranslate_length(const SftRecord& record, ChatClient& client, const GenerationConfig& config) {
    if (record.output.empty()) fail(ErrorCode::InvalidInput, "record '" + record.id + "' has no output to measure");
    const std::uint64_t units = count_length_units(record.output).units;
    if (record.required_length && record.required_length->units == units && record.augmented) return record;
    const std::string n = std::to_string(units);
    const std::string combined = trim(record.instruction) + " " + length_requirement(units);

    const std::pair<std::string_view, std::string_view> values[] = {{"{L}", n},
                                                                     {prompts::kUserInstruction, combined}};
    std::string rephrased;
    try {
        rephrased = trim(client.chat({ChatMessage::user(substitute(prompts::kRephraseInstruction, values))}, config).text);
    } catch (const Error&) {
        SftRecord unchanged = record;
        unchanged.augmented = false;
        return unchanged;
    }

    SftRecord out = record;
    out.output_length = TextLength{units};
    out.instruction = rephrased.find(n) != std::string::npos ? rephrased : combined;
    out.required_length = TextLength{units};
    out.augmented = true;
    return out;
}

std::vector<SftRecord> sample_by_mean_length(const std::vector<SftRecord>& records, const SampleOptions& options) {
    const std::size_t total = records.size();
    const std::size_t n = options.n;
    if (n == 0 || n > total) {
        fail(ErrorCode::InvalidInput, "subset size " + std::to_string(n) + " must be in 1.." + std::to_string(total));
    }
    if (!(options.target_mean > 0) || !(options.tolerance >= 0)) {
        fail(ErrorCode::InvalidInput, "target mean must be positive and tolerance non-negative");
    }

    std::vector<std::uint64_t> len(total);
    for (std::size_t i = 0; i < total; ++i) len[i] = records[i].output_length.units;

    const double target_sum = options.target_mean * static_cast<double>(n);
    const double band = options.tolerance * options.target_mean * static_cast<double>(n);

    std::vector<std::uint64_t> sorted = len;
    std::sort(sorted.begin(), sorted.end());
    const auto min_sum = static_cast<double>(std::accumulate(sorted.begin(), sorted.begin() + n, std::uint64_t{0}));
    const auto max_sum = static_cast<double>(std::accumulate(sorted.end() - n, sorted.end(), std::uint64_t{0}));
    if (target_sum - band > max_sum || target_sum + band < min_sum) {
        fail(ErrorCode::InfeasibleTarget,
             "no " + std::to_string(n) + "-subset can reach mean " + std::to_string(options.target_mean) +
                 "; achievable means span [" + std::to_string(min_sum / n) + ", " + std::to_string(max_sum / n) + "]");
    }

    const std::size_t swaps = options.swaps_per_restart ? options.swaps_per_restart : 4 * total + 16;
    for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
        const std::uint64_t seed = options.rng_seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(restart);
        std::vector<std::size_t> chosen = sample_indices(total, n, seed);
        std::vector<bool> in_set(total, false);
        for (const auto i : chosen) in_set[i] = true;
        std::multimap<std::uint64_t, std::size_t> outside;
        for (std::size_t i = 0; i < total; ++i) {
            if (!in_set[i]) outside.emplace(len[i], i);
        }
        double sum = 0;
        for (const auto i : chosen) sum += static_cast<double>(len[i]);

        std::mt19937_64 rng(seed ^ 0xD1B54A32D192ED03ULL);
        for (std::size_t iter = 0;; ++iter) {
            const double deficit = target_sum - sum;
            if (std::abs(deficit) <= band) {
                std::sort(chosen.begin(), chosen.end());
                std::vector<SftRecord> out;
                out.reserve(n);
                for (const auto i : chosen) out.push_back(records[i]);
                return out;
            }
            if (iter >= swaps || outside.empty()) break;

            // Swap a random member for the outsider whose length best closes the gap.
            const std::size_t slot = static_cast<std::size_t>(draw_below(rng, n));
            const double x = static_cast<double>(len[chosen[slot]]);
            const double want = x + deficit;
            auto it = outside.lower_bound(want <= 0 ? 0 : static_cast<std::uint64_t>(std::llround(want)));
            auto best = outside.end();
            double best_gap = std::abs(deficit);
            for (auto cand : {it, it == outside.begin() ? outside.end() : std::prev(it)}) {
                if (cand == outside.end()) continue;
                const double gap = std::abs(deficit - (static_cast<double>(cand->first) - x));
                if (gap < best_gap) {
                    best_gap = gap;
                    best = cand;
                }
            }
            if (best == outside.end()) continue;
            const std::size_t incoming = best->second;
            outside.erase(best);
            outside.emplace(len[chosen[slot]], chosen[slot]);
            sum += static_cast<double>(len[incoming]) - x;
            chosen[slot] = incoming;
        }
    }
    fail(ErrorCode::SearchExhausted, "no subset with mean within tolerance found after " +
                                         std::to_string(std::max(1, options.restarts)) + " restarts");
}

void to_json(json& j, const InstructionRecord& r) {
    j = {{"id", r.id},
         {"images", r.images},
         {"instruction", r.instruction},
         {"language", to_string(r.language)},
         {"source", r.source}};
    if (r.response) j["response"] = *r.response;
    if (r.required_length) j["required_length"] = r.required_length->units;
}

void from_json(const json& j, InstructionRecord& r) {
    r = InstructionRecord{};
    r.id = j.at("id").get<std::string>();
    r.images = j.value("images", std::vector<std::string>{});
    r.instruction = j.at("instruction").get<std::string>();
    if (j.contains("response") && !j["response"].is_null()) r.response = j["response"].get<std::string>();
    r.language = parse_language(j.value("language", "en"));
    if (j.contains("required_length") && !j["required_length"].is_null()) {
        r.required_length = TextLength{j["required_length"].get<std::uint64_t>()};
    }
    r.source = j.value("source", "");
}

void to_json(json& j, const SftRecord& r) {
    j = {{"images", r.images},
         {"instruction", r.instruction},
         {"output", r.output},
         {"output_length", r.output_length.units}};
    if (!r.id.empty()) j["id"] = r.id;
    if (r.required_length) j["required_length"] = r.required_length->units;
    if (!r.augmented) j["augmented"] = false;
}

void from_json(const json& j, SftRecord& r) {
    r = SftRecord::from_output(j.value("id", ""), j.value("images", std::vector<std::string>{}),
                               j.at("instruction").get<std::string>(), j.at("output").get<std::string>());
    if (j.contains("required_length") && !j["required_length"].is_null()) {
        r.required_length = TextLength{j["required_length"].get<std::uint64_t>()};
    }
    r.augmented = j.value("augmented", true);
}

void to_json(json& j, const DropEntry& d) {
    j = {{"id", d.id}, {"reason", d.reason}};
}

}  // namespace lwf::datapipe
