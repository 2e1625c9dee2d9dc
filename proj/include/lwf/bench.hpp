#pragma once

// Long-output benchmark harness: ruler suites, response generation (direct
// or caption-then-LLM), length/quality scoring, bucketed reports and pairwise
// human-vote win rates.

#include "lwf/client.hpp"
#include "lwf/metrics.hpp"
#include "lwf/text.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lwf::bench {

enum class Category { Professional, Creative };

struct BenchInstruction {
    std::string id;
    Category category = Category::Professional;
    std::string task_type;
    Language language = Language::En;
    std::vector<std::string> images;
    std::string instruction;
    TextLength required_length;
};

inline constexpr std::array<std::uint64_t, 4> kRulerLengths = {500, 1000, 2000, 4000};
inline constexpr std::size_t kRulerBaseSize = 8;

/// Every base instruction repeated once per length with the fixed
/// "Write an L-word article for the given pictures" request in its language.
/// The base must hold exactly four English and four Chinese instructions.
std::vector<BenchInstruction> make_ruler_suite(const std::vector<BenchInstruction>& base,
                                               const std::vector<std::uint64_t>& lengths = {kRulerLengths.begin(),
                                                                                            kRulerLengths.end()});

enum class Bucket { Upto1500, From1500, From2000, From3000 };
inline constexpr std::array<Bucket, 4> kBuckets = {Bucket::Upto1500, Bucket::From1500, Bucket::From2000,
                                                   Bucket::From3000};

std::string_view bucket_label(Bucket b);

/// Half-open intervals [0,1500), [1500,2000), [2000,3000), [3000,4000);
/// anything from 4000 up joins the top bucket.
Bucket bucketize(TextLength required_length);

struct ScoredInstruction {
    std::string instruction_id;
    std::string model_id;
    std::string response;
    TextLength required_length;
    double length_score = 0;
    std::optional<double> quality_score;  // absent when the judge could not score
    std::optional<QualityJudgment> judgment;
    std::vector<std::string> flags;
};

struct EvalOptions {
    std::string model_id;
    GenerationConfig judge;
    /// Re-asks after a malformed judgment before giving up on the item.
    int judge_format_retries = 2;
    std::size_t workers = 1;
};

/// Scores every instruction; `responses` maps instruction id to response
/// text. Missing or empty responses score S_l = 0 and are not judged.
/// Judge failures leave S_q unset and add a flag.
std::vector<ScoredInstruction> evaluate_run(const std::vector<BenchInstruction>& instructions,
                                            const std::map<std::string, std::string>& responses,
                                            ChatClient& judge_client, const EvalOptions& options);

struct BucketStats {
    std::size_t count = 0;
    double length_score = 0;
    std::optional<double> quality_score;
};

struct OverallStats {
    std::size_t count = 0;
    double length_score = 0;
    std::optional<double> quality_score;
    std::optional<double> overall;
};

struct BucketedReport {
    std::string model_id;
    OverallStats overall;
    std::array<std::optional<BucketStats>, 4> buckets;  // absent when empty
    std::size_t flagged = 0;
};

/// Unweighted instruction means; input order does not affect the result.
BucketedReport aggregate_report(const std::vector<ScoredInstruction>& scored);

/// Aligned plain-text table, one row per report, columns as
/// Model | S S_l S_q | per bucket S_l S_q.
std::string render_report_table(const std::vector<BucketedReport>& reports);

struct CaptionBaselineConfig {
    GenerationConfig caption;  // max_new_tokens 1024
    GenerationConfig final;    // 8192, or 4096 for short-output models
};

inline constexpr int kCaptionMaxNewTokens = 1024;
inline constexpr int kFinalMaxNewTokens = 8192;
inline constexpr int kShortOutputMaxNewTokens = 4096;

CaptionBaselineConfig make_caption_baseline_config(std::string caption_model, std::string llm_model,
                                                   bool short_output_model = false);

struct CaptionBaselineResult {
    std::vector<std::string> captions;
    std::string response;
};

/// One caption call per image, then one text-only call with the captions.
/// Throws BaselineIncomplete if any caption call fails.
CaptionBaselineResult caption_then_llm(const BenchInstruction& instruction, ChatClient& vlm_client,
                                       ChatClient& llm_client, const CaptionBaselineConfig& config);

/// Direct image+instruction generation, one call per instruction.
std::map<std::string, std::string> generate_responses(const std::vector<BenchInstruction>& instructions,
                                                      ChatClient& client, const GenerationConfig& config,
                                                      std::size_t workers);

struct VoteRecord {
    std::string annotator_id;
    std::string instruction_id;
    std::string model_a;
    std::string model_b;
    bool winner_is_a = true;
};

struct WinRateMatrix {
    std::vector<std::string> models;  // sorted
    std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> tallies;  // (wins, votes)

    /// Share of votes between r and c that r won; absent on the diagonal and
    /// for pairs that never met.
    std::optional<double> rate(const std::string& row, const std::string& col) const;
};

/// Votes from every annotator are pooled before dividing.
WinRateMatrix win_rate_matrix(const std::vector<VoteRecord>& votes);

std::string render_win_rate_table(const WinRateMatrix& m);

void to_json(nlohmann::json& j, const BenchInstruction& b);
void from_json(const nlohmann::json& j, BenchInstruction& b);
void to_json(nlohmann::json& j, const ScoredInstruction& s);
void from_json(const nlohmann::json& j, ScoredInstruction& s);
void to_json(nlohmann::json& j, const BucketedReport& r);
void from_json(const nlohmann::json& j, VoteRecord& v);
void to_json(nlohmann::json& j, const VoteRecord& v);
void to_json(nlohmann::json& j, const WinRateMatrix& m);

}  // namespace lwf::bench
