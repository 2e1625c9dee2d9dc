#include "lwf/dpo.hpp"

#include "lwf/error.hpp"

#include <cmath>
#include <numeric>

namespace lwf::dpo {

using json = nlohmann::json;

namespace {

double sum(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0);
}

// log(1 + exp(x)) without overflow or cancellation.
double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::string_view origin_name(PairOrigin o) {
    return o == PairOrigin::HumanIter ? "human-iter" : "ai-feedback";
}

}  // namespace

void SegmentedScript::validate() const {
    for (std::size_t i = 0; i < pages.size(); ++i) {
        if (pages[i].page_index != static_cast<int>(i) + 1) {
            fail(ErrorCode::InvalidInput, "page indices must run 1.." + std::to_string(pages.size()) + "; found " +
                                              std::to_string(pages[i].page_index) + " at position " +
                                              std::to_string(i + 1));
        }
        if (pages[i].original_text.empty()) {
            fail(ErrorCode::InvalidInput, "page " + std::to_string(i + 1) + " has an empty original script");
        }
    }
}

std::vector<PreferencePair> expand_iter_pairs(const SegmentedScript& script) {
    script.validate();
    std::vector<PreferencePair> pairs;
    std::string chosen;
    std::string rejected;
    std::vector<std::string> images;
    for (const auto& page : script.pages) {
        if (!images.empty()) {
            chosen += kPageSeparator;
            rejected += kPageSeparator;
        }
        chosen += page.revised_text.value_or(page.original_text);
        rejected += page.original_text;
        images.push_back(page.image_ref);
        if (chosen == rejected) continue;
        pairs.push_back({images, script.instruction, chosen, rejected, PairOrigin::HumanIter, page.page_index});
    }
    if (pairs.empty()) fail(ErrorCode::NoSignal, "script has no page whose revision differs from the original");
    return pairs;
}

void SequenceLogProbs::validate() const {
    if (policy_chosen.empty() || policy_rejected.empty()) {
        fail(ErrorCode::EmptySequence, "log-probability sequences must be non-empty");
    }
    if (policy_chosen.size() != ref_chosen.size() || policy_rejected.size() != ref_rejected.size()) {
        fail(ErrorCode::InvalidInput, "policy and reference log-probabilities differ in length");
    }
    for (const auto* v : {&policy_chosen, &ref_chosen, &policy_rejected, &ref_rejected}) {
        for (const double x : *v) {
            if (!(x <= 0.0)) fail(ErrorCode::InvalidInput, "log-probabilities must be finite and <= 0");
        }
    }
}

Beta::Beta(double value) : value_(value) {
    if (!(value > 0.0) || !std::isfinite(value)) fail(ErrorCode::InvalidInput, "beta must be a positive number");
}

double preference_margin(const SequenceLogProbs& lp, Beta beta) {
    lp.validate();
    const double chosen_ratio = sum(lp.policy_chosen) - sum(lp.ref_chosen);
    const double rejected_ratio = sum(lp.policy_rejected) - sum(lp.ref_rejected);
    return beta.value() * (chosen_ratio - rejected_ratio);
}

double dpo_loss(const SequenceLogProbs& lp, Beta beta) {
    return softplus(-preference_margin(lp, beta));
}

DpoGradient dpo_grad(const SequenceLogProbs& lp, Beta beta) {
    const double z = preference_margin(lp, beta);
    const double g = beta.value() * sigmoid(-z);
    DpoGradient grad;
    grad.policy_chosen.assign(lp.policy_chosen.size(), -g);
    grad.policy_rejected.assign(lp.policy_rejected.size(), g);
    grad.ref_chosen.assign(lp.ref_chosen.size(), 0.0);
    grad.ref_rejected.assign(lp.ref_rejected.size(), 0.0);
    return grad;
}

double iterdpo_loss(const std::vector<SequenceLogProbs>& prefix_lps, Beta beta) {
    if (prefix_lps.empty()) fail(ErrorCode::EmptySequence, "iterative DPO needs at least one prefix");
    double total = 0.0;
    for (const auto& lp : prefix_lps) total += dpo_loss(lp, beta);
    return total;
}

FeedbackPairs build_ai_feedback_pairs(const std::vector<InstructionResponses>& items, double margin) {
    FeedbackPairs out;
    for (const auto& item : items) {
        if (item.responses.size() < 2) {
            out.skipped.push_back({item.instruction, "fewer than 2 responses"});
            continue;
        }
        const auto total = [&](std::size_t i) {
            return (item.responses[i].length_score + item.responses[i].quality_score) / 2.0;
        };
        std::size_t best = 0;
        std::size_t worst = 0;
        for (std::size_t i = 1; i < item.responses.size(); ++i) {
            if (total(i) > total(best)) best = i;
            if (total(i) < total(worst)) worst = i;
        }
        if (best == worst || item.responses[best].response == item.responses[worst].response) {
            out.skipped.push_back({item.instruction, "no distinct best and worst response"});
            continue;
        }
        if (total(best) - total(worst) < margin) {
            out.skipped.push_back({item.instruction, "score gap below margin"});
            continue;
        }
        out.pairs.push_back({item.images, item.instruction, item.responses[best].response,
                             item.responses[worst].response, PairOrigin::AiFeedback, std::nullopt});
    }
    return out;
}

void to_json(json& j, const SegmentedScript& s) {
    json pages = json::array();
    for (const auto& p : s.pages) {
        json page = {{"page_index", p.page_index}, {"image_ref", p.image_ref}, {"original_text", p.original_text}};
        if (p.revised_text) page["revised_text"] = *p.revised_text;
        pages.push_back(std::move(page));
    }
    j = {{"instruction", s.instruction}, {"pages", pages}};
}

void from_json(const json& j, SegmentedScript& s) {
    s = SegmentedScript{};
    s.instruction = j.at("instruction").get<std::string>();
    for (const auto& p : j.at("pages")) {
        ScriptPage page;
        page.page_index = p.at("page_index").get<int>();
        page.image_ref = p.value("image_ref", "");
        page.original_text = p.at("original_text").get<std::string>();
        if (p.contains("revised_text") && !p["revised_text"].is_null()) {
            page.revised_text = p["revised_text"].get<std::string>();
        }
        s.pages.push_back(std::move(page));
    }
}

void to_json(json& j, const PreferencePair& p) {
    j = {{"images", p.images},
         {"instruction", p.instruction},
         {"chosen", p.chosen},
         {"rejected", p.rejected},
         {"origin", origin_name(p.origin)}};
    if (p.prefix_index) j["prefix_index"] = *p.prefix_index;
}

void from_json(const json& j, PreferencePair& p) {
    p = PreferencePair{};
    p.images = j.value("images", std::vector<std::string>{});
    p.instruction = j.at("instruction").get<std::string>();
    p.chosen = j.at("chosen").get<std::string>();
    p.rejected = j.at("rejected").get<std::string>();
    const std::string origin = j.at("origin").get<std::string>();
    if (origin == "human-iter") {
        p.origin = PairOrigin::HumanIter;
    } else if (origin == "ai-feedback") {
        p.origin = PairOrigin::AiFeedback;
    } else {
        fail(ErrorCode::InvalidInput, "unknown pair origin '" + origin + "'");
    }
    if (j.contains("prefix_index") && !j["prefix_index"].is_null()) p.prefix_index = j["prefix_index"].get<int>();
}

void to_json(json& j, const SequenceLogProbs& lp) {
    j = {{"policy_chosen", lp.policy_chosen},
         {"ref_chosen", lp.ref_chosen},
         {"policy_rejected", lp.policy_rejected},
         {"ref_rejected", lp.ref_rejected}};
}

void from_json(const json& j, SequenceLogProbs& lp) {
    lp.policy_chosen = j.at("policy_chosen").get<std::vector<double>>();
    lp.ref_chosen = j.at("ref_chosen").get<std::vector<double>>();
    lp.policy_rejected = j.at("policy_rejected").get<std::vector<double>>();
    lp.ref_rejected = j.at("ref_rejected").get<std::vector<double>>();
}

void from_json(const json& j, InstructionResponses& r) {
    r = InstructionResponses{};
    r.instruction = j.at("instruction").get<std::string>();
    r.images = j.value("images", std::vector<std::string>{});
    for (const auto& item : j.at("responses")) {
        r.responses.push_back(
            {item.at("response").get<std::string>(), item.at("S_l").get<double>(), item.at("S_q").get<double>()});
    }
}

void to_json(json& j, const DpoGradient& g) {
    j = {{"policy_chosen", g.policy_chosen},
         {"policy_rejected", g.policy_rejected},
         {"ref_chosen", g.ref_chosen},
         {"ref_rejected", g.ref_rejected}};
}

}  // namespace lwf::dpo
