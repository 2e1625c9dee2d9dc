#pragma once

// Building blocks for long-output SFT data: length filtering, model-based
// verification, multi-image instruction synthesis, slide-deck instructions,
// length backtranslation and subset selection by mean output length.

#include "lwf/client.hpp"
#include "lwf/metrics.hpp"
#include "lwf/text.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lwf::datapipe {

struct InstructionRecord {
    std::string id;
    std::vector<std::string> images;
    std::string instruction;
    std::optional<std::string> response;
    Language language = Language::En;
    std::optional<TextLength> required_length;
    std::string source;
};

struct SftRecord {
    std::string id;
    std::vector<std::string> images;
    std::string instruction;
    std::string output;
    TextLength output_length;
    std::optional<TextLength> required_length;
    /// False when backtranslation was attempted and the model call failed.
    bool augmented = true;

    static SftRecord from_output(std::string id, std::vector<std::string> images, std::string instruction,
                                 std::string output);
};

struct DropEntry {
    std::string id;
    std::string reason;
};

struct FilterResult {
    std::vector<InstructionRecord> kept;
    std::vector<DropEntry> dropped;
};

inline constexpr std::uint64_t kDefaultMinUnits = 128;

/// Keeps records whose response is strictly longer than `min_units`. Every
/// other record lands in the drop report, so kept + dropped == input.
FilterResult filter_by_output_length(const std::vector<InstructionRecord>& records,
                                     std::uint64_t min_units = kDefaultMinUnits);

std::string build_verification_prompt(std::string_view instruction);

/// Reads a leading yes/no from the reply, case-insensitively, skipping
/// quotes and emphasis. Throws VerificationAmbiguous otherwise.
bool parse_yes_no(std::string_view reply);

bool verify_long_output(const InstructionRecord& record, ChatClient& client, const GenerationConfig& config);

struct VerifyResult {
    std::vector<InstructionRecord> accepted;
    std::vector<DropEntry> rejected;
    std::vector<DropEntry> quarantined;
};

/// Record-parallel verification on up to `workers` threads. Output order
/// follows input order regardless of completion order.
VerifyResult verify_records(const std::vector<InstructionRecord>& records, ChatClient& client,
                            const GenerationConfig& config, std::size_t workers);

/// Chooses `k` distinct indices from [0, n) as a seeded partial Fisher-Yates
/// shuffle over std::mt19937_64, so the choice is stable across platforms.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

std::string build_multi_image_prompt(std::size_t image_count, const std::array<std::string, 3>& exemplars,
                                     std::string_view instruction);

InstructionRecord synthesize_multi_image(const InstructionRecord& seed, const std::vector<std::string>& image_pool,
                                         std::size_t k, const std::array<std::string, 3>& exemplars,
                                         ChatClient& client, const GenerationConfig& config, std::uint64_t rng_seed);

inline constexpr std::size_t kMinDeckPages = 2;
inline constexpr std::size_t kMaxDeckPages = 30;

InstructionRecord slides_to_instruction(std::string id, const std::vector<std::string>& slide_images,
                                        Language language = Language::En);

std::string length_requirement(std::uint64_t units);

/// Appends the length requirement and asks the model to rephrase the result.
/// A rephrasing that loses the number is discarded in favour of the plain
/// concatenation. On model failure the input comes back with augmented=false.
SftRecord backtranslate_length(const SftRecord& record, ChatClient& client, const GenerationConfig& config);

struct SampleOptions {
    std::size_t n = 0;
    double target_mean = 0;
    double tolerance = 0.01;  // relative to target_mean
    std::uint64_t rng_seed = 0;
    int restarts = 16;
    std::size_t swaps_per_restart = 0;  // 0: 4 * pool size
};

/// Picks an n-subset whose mean output_length is within tolerance*target of
/// the target, preserving input order. Throws InfeasibleTarget before searching
/// when no n-subset can reach the band, SearchExhausted when the budget runs out.
std::vector<SftRecord> sample_by_mean_length(const std::vector<SftRecord>& records, const SampleOptions& options);

void to_json(nlohmann::json& j, const InstructionRecord& r);
void from_json(const nlohmann::json& j, InstructionRecord& r);
void to_json(nlohmann::json& j, const SftRecord& r);
void from_json(const nlohmann::json& j, SftRecord& r);
void to_json(nlohmann::json& j, const DropEntry& d);

}  // namespace lwf::datapipe
