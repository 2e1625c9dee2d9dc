#pragma once

// Preference-pair construction and DPO loss math over caller-supplied token
// log-probabilities. Segment-level revisions of a paged script expand into
// one pair per cumulative page prefix; the iterative loss is the sum of the
// standard DPO loss over those prefixes.

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace lwf::dpo {

struct ScriptPage {
    int page_index = 0;
    std::string image_ref;
    std::string original_text;
    std::optional<std::string> revised_text;
};

struct SegmentedScript {
    std::string instruction;
    std::vector<ScriptPage> pages;

    /// page_index contiguous from 1 and every original_text non-empty.
    void validate() const;
};

enum class PairOrigin { HumanIter, AiFeedback };

struct PreferencePair {
    std::vector<std::string> images;
    std::string instruction;
    std::string chosen;
    std::string rejected;
    PairOrigin origin = PairOrigin::HumanIter;
    std::optional<int> prefix_index;
};

inline constexpr std::string_view kPageSeparator = "\n\n";

/// One pair per page prefix 1..i: chosen joins revised-or-original pages,
/// rejected joins original pages. Prefixes in which nothing was revised yet
/// produce identical texts and are skipped. Throws NoSignal when no page
/// carries a revision that differs from its original.
std::vector<PreferencePair> expand_iter_pairs(const SegmentedScript& script);

struct SequenceLogProbs {
    std::vector<double> policy_chosen;
    std::vector<double> ref_chosen;
    std::vector<double> policy_rejected;
    std::vector<double> ref_rejected;

    /// Non-empty, matching lengths per side, every value <= 0.
    void validate() const;
};

/// Strong type for the KL-penalty coefficient; must be positive.
class Beta {
public:
    explicit Beta(double value);
    double value() const { return value_; }

private:
    double value_;
};

inline constexpr double kDefaultBeta = 0.1;

/// beta * (chosen log-ratio - rejected log-ratio)
double preference_margin(const SequenceLogProbs& lp, Beta beta);

/// -log sigmoid(z) evaluated as softplus(-z).
double dpo_loss(const SequenceLogProbs& lp, Beta beta);

struct DpoGradient {
    std::vector<double> policy_chosen;
    std::vector<double> policy_rejected;
    // The reference model is frozen, so these are all zero.
    std::vector<double> ref_chosen;
    std::vector<double> ref_rejected;
};

/// d loss / d policy token: -beta*sigmoid(-z) on chosen tokens,
/// +beta*sigmoid(-z) on rejected tokens.
DpoGradient dpo_grad(const SequenceLogProbs& lp, Beta beta);

/// Sum of dpo_loss over the prefixes, in order.
double iterdpo_loss(const std::vector<SequenceLogProbs>& prefix_lps, Beta beta);

struct ScoredResponse {
    std::string response;
    double length_score = 0;
    double quality_score = 0;
};

struct InstructionResponses {
    std::string instruction;
    std::vector<std::string> images;
    std::vector<ScoredResponse> responses;
};

struct FeedbackSkip {
    std::string instruction;
    std::string reason;
};

struct FeedbackPairs {
    std::vector<PreferencePair> pairs;
    std::vector<FeedbackSkip> skipped;
};

/// Per instruction, pairs the best against the worst response by
/// (S_l + S_q) / 2 when the gap is at least `margin`. Ties go to the lowest
/// response index.
FeedbackPairs build_ai_feedback_pairs(const std::vector<InstructionResponses>& items, double margin);

void to_json(nlohmann::json& j, const SegmentedScript& s);
void from_json(const nlohmann::json& j, SegmentedScript& s);
void to_json(nlohmann::json& j, const PreferencePair& p);
void from_json(const nlohmann::json& j, PreferencePair& p);
void to_json(nlohmann::json& j, const SequenceLogProbs& lp);
void from_json(const nlohmann::json& j, SequenceLogProbs& lp);
void from_json(const nlohmann::json& j, InstructionResponses& r);
void to_json(nlohmann::json& j, const DpoGradient& g);

}  // namespace lwf::dpo
