#include "lwf/dpo.hpp"
#include "lwf/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lwf;
using namespace lwf::dpo;

namespace {

SegmentedScript script(const std::vector<std::optional<std::string>>& revisions) {
    SegmentedScript s;
    s.instruction = "Write a lecture script for these slides";
    for (std::size_t i = 0; i < revisions.size(); ++i) {
        s.pages.push_back({static_cast<int>(i) + 1, "p" + std::to_string(i + 1) + ".png",
                           "original " + std::to_string(i + 1), revisions[i]});
    }
    return s;
}

SequenceLogProbs random_lp(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> len(1, 12);
    std::uniform_real_distribution<double> lp(-6.0, 0.0);
    SequenceLogProbs s;
    const int c = len(rng), r = len(rng);
    for (int i = 0; i < c; ++i) {
        s.policy_chosen.push_back(lp(rng));
        s.ref_chosen.push_back(lp(rng));
    }
    for (int i = 0; i < r; ++i) {
        s.policy_rejected.push_back(lp(rng));
        s.ref_rejected.push_back(lp(rng));
    }
    return s;
}

SequenceLogProbs zeros() {
    return {{0.0}, {0.0}, {0.0}, {0.0}};
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::Io;
}

const Beta kBeta{0.1};

}  // namespace

TEST(Expand, AllRevised) {
    const auto pairs = expand_iter_pairs(script({"r1", "r2", "r3"}));
    ASSERT_EQ(pairs.size(), 3u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(pairs[i].prefix_index, i + 1);
        EXPECT_EQ(pairs[i].images.size(), static_cast<std::size_t>(i + 1));
        EXPECT_EQ(pairs[i].origin, PairOrigin::HumanIter);
    }
    EXPECT_EQ(pairs[2].chosen, "r1\n\nr2\n\nr3");
    EXPECT_EQ(pairs[2].rejected, "original 1\n\noriginal 2\n\noriginal 3");
    EXPECT_EQ(pairs[1].images, (std::vector<std::string>{"p1.png", "p2.png"}));
}

TEST(Expand, UnrevisedPrefixIsDropped) {
    const auto pairs = expand_iter_pairs(script({std::nullopt, "r2", "r3"}));
    ASSERT_EQ(pairs.size(), 2u);
    EXPECT_EQ(pairs[0].prefix_index, 2);
    EXPECT_EQ(pairs[1].prefix_index, 3);
    EXPECT_EQ(pairs[0].chosen, "original 1\n\nr2");
}

TEST(Expand, SinglePageAndNoSignal) {
    EXPECT_EQ(expand_iter_pairs(script({"r"})).size(), 1u);
    EXPECT_EQ(code_of([] { expand_iter_pairs(script({std::nullopt, std::nullopt})); }), ErrorCode::NoSignal);
    // A revision identical to the original carries no signal either.
    EXPECT_EQ(code_of([] { expand_iter_pairs(script({"original 1"})); }), ErrorCode::NoSignal);
}

TEST(Expand, ValidatesPages) {
    auto s = script({"a", "b"});
    s.pages[1].page_index = 3;
    EXPECT_EQ(code_of([&] { expand_iter_pairs(s); }), ErrorCode::InvalidInput);
    s = script({"a"});
    s.pages[0].original_text.clear();
    EXPECT_EQ(code_of([&] { expand_iter_pairs(s); }), ErrorCode::InvalidInput);
}

TEST(Expand, PairsRespectInvariants) {
    std::mt19937 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + rng() % 12;
        std::vector<std::optional<std::string>> revs;
        for (int i = 0; i < n; ++i) {
            if (rng() % 3) revs.push_back("rev " + std::to_string(i));
            else revs.push_back(std::nullopt);
        }
        const auto s = script(revs);
        std::vector<PreferencePair> pairs;
        try {
            pairs = expand_iter_pairs(s);
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::NoSignal);
            continue;
        }
        EXPECT_LE(pairs.size(), static_cast<std::size_t>(n));
        for (const auto& p : pairs) {
            EXPECT_NE(p.chosen, p.rejected);
            std::string expect_rejected;
            for (int i = 0; i < *p.prefix_index; ++i) {
                if (i) expect_rejected += "\n\n";
                expect_rejected += s.pages[i].original_text;
            }
            EXPECT_EQ(p.rejected, expect_rejected);
            EXPECT_EQ(p.images.size(), static_cast<std::size_t>(*p.prefix_index));
        }
    }
}

TEST(Loss, IdenticalListsGiveLn2) {
    EXPECT_NEAR(dpo_loss(zeros(), kBeta), std::log(2.0), 1e-12);
    SequenceLogProbs same{{-1, -2}, {-1, -2}, {-3}, {-3}};
    EXPECT_NEAR(dpo_loss(same, kBeta), std::log(2.0), 1e-12);
}

TEST(Loss, ScalarExample) {
    // chosen log-ratio 2.0, rejected log-ratio -1.0, beta 0.1 -> z = 0.3
    SequenceLogProbs lp{{-1.0}, {-3.0}, {-3.0}, {-2.0}};
    EXPECT_NEAR(preference_margin(lp, kBeta), 0.3, 1e-12);
    EXPECT_NEAR(dpo_loss(lp, kBeta), std::log1p(std::exp(-0.3)), 1e-12);
    EXPECT_NEAR(dpo_loss(lp, kBeta), 0.554355, 1e-6);
}

TEST(Loss, SaturatesWithoutOverflow) {
    SequenceLogProbs strong{{0.0}, {-1e5}, {-1e5}, {0.0}};
    const double l = dpo_loss(strong, kBeta);
    EXPECT_GE(l, 0.0);
    EXPECT_LT(l, 1e-300 + 1e-12);
    SequenceLogProbs weak{{-1e5}, {0.0}, {0.0}, {-1e5}};
    EXPECT_NEAR(dpo_loss(weak, kBeta), 2e4, 1e-6);
    EXPECT_TRUE(std::isfinite(dpo_loss(weak, Beta(1e3))));
}

TEST(Loss, DecreasesAsMarginGrows) {
    double prev = INFINITY;
    for (double d = -10; d <= 10; d += 0.5) {
        SequenceLogProbs lp{{std::min(0.0, d)}, {std::min(0.0, -d)}, {-5.0}, {-5.0}};
        const double l = dpo_loss(lp, kBeta);
        EXPECT_LE(l, prev);
        prev = l;
    }
}

TEST(Loss, InvariantToSharedShift) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; ++i) {
        auto lp = random_lp(rng);
        auto shifted = lp;
        for (auto& x : shifted.policy_chosen) x -= 0.7;
        for (auto& x : shifted.ref_chosen) x -= 0.7;
        EXPECT_NEAR(dpo_loss(lp, kBeta), dpo_loss(shifted, kBeta), 1e-9);
    }
}

TEST(Loss, Validation) {
    EXPECT_EQ(code_of([] { dpo_loss({{}, {}, {-1}, {-1}}, kBeta); }), ErrorCode::EmptySequence);
    EXPECT_EQ(code_of([] { dpo_loss({{-1, -1}, {-1}, {-1}, {-1}}, kBeta); }), ErrorCode::InvalidInput);
    EXPECT_EQ(code_of([] { dpo_loss({{0.5}, {-1}, {-1}, {-1}}, kBeta); }), ErrorCode::InvalidInput);
    EXPECT_EQ(code_of([] { dpo_loss({{std::nan("")}, {-1}, {-1}, {-1}}, kBeta); }), ErrorCode::InvalidInput);
    EXPECT_EQ(code_of([] { Beta b(0.0); }), ErrorCode::InvalidInput);
    EXPECT_EQ(code_of([] { Beta b(-1.0); }), ErrorCode::InvalidInput);
}

TEST(Grad, ZeroMarginValues) {
    const auto g = dpo_grad(SequenceLogProbs{{-1, -1, -1}, {-1, -1, -1}, {-2}, {-2}}, kBeta);
    for (double x : g.policy_chosen) EXPECT_NEAR(x, -0.05, 1e-15);
    for (double x : g.policy_rejected) EXPECT_NEAR(x, 0.05, 1e-15);
    for (double x : g.ref_chosen) EXPECT_EQ(x, 0.0);
    EXPECT_EQ(g.policy_chosen.size(), 3u);
}

TEST(Grad, SaturatedMarginVanishes) {
    const auto g = dpo_grad(SequenceLogProbs{{0.0}, {-1e4}, {-1e4}, {0.0}}, kBeta);
    EXPECT_NEAR(g.policy_chosen[0], 0.0, 1e-12);
}

TEST(Grad, MatchesCentralDifferences) {
    std::mt19937_64 rng(8);
    const double h = 1e-5;
    for (int i = 0; i < 100; ++i) {
        const auto lp = random_lp(rng);
        const Beta beta(0.05 + 0.5 * std::generate_canonical<double, 53>(rng));
        const auto g = dpo_grad(lp, beta);
        auto check = [&](std::vector<double> SequenceLogProbs::*side, const std::vector<double>& grad) {
            for (std::size_t t = 0; t < (lp.*side).size(); ++t) {
                auto up = lp, down = lp;
                (down.*side)[t] -= h;
                (up.*side)[t] = std::min(0.0, (up.*side)[t] + h);
                const double step = (up.*side)[t] - (down.*side)[t];
                const double fd = (dpo_loss(up, beta) - dpo_loss(down, beta)) / step;
                EXPECT_NEAR(fd, grad[t], 1e-6 * std::max(1e-3, std::abs(grad[t])));
            }
        };
        check(&SequenceLogProbs::policy_chosen, g.policy_chosen);
        check(&SequenceLogProbs::policy_rejected, g.policy_rejected);
    }
}

TEST(IterDpo, Reductions) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        const auto a = random_lp(rng), b = random_lp(rng), c = random_lp(rng);
        EXPECT_EQ(iterdpo_loss({a}, kBeta), dpo_loss(a, kBeta));
        EXPECT_EQ(iterdpo_loss({a, a}, kBeta), 2 * dpo_loss(a, kBeta));
        EXPECT_NEAR(iterdpo_loss({a, b, c}, kBeta), dpo_loss(a, kBeta) + dpo_loss(b, kBeta) + dpo_loss(c, kBeta),
                    1e-12);
    }
    EXPECT_EQ(code_of([] { iterdpo_loss({}, kBeta); }), ErrorCode::EmptySequence);
}

namespace {

InstructionResponses item(std::vector<double> totals) {
    InstructionResponses r;
    r.instruction = "inst";
    for (std::size_t i = 0; i < totals.size(); ++i) r.responses.push_back({"resp" + std::to_string(i), totals[i], totals[i]});
    return r;
}

}  // namespace

TEST(AiFeedback, MarginGate) {
    auto r = build_ai_feedback_pairs({item({80, 60})}, 10);
    ASSERT_EQ(r.pairs.size(), 1u);
    EXPECT_EQ(r.pairs[0].chosen, "resp0");
    EXPECT_EQ(r.pairs[0].rejected, "resp1");
    EXPECT_EQ(r.pairs[0].origin, PairOrigin::AiFeedback);
    EXPECT_FALSE(r.pairs[0].prefix_index);

    EXPECT_TRUE(build_ai_feedback_pairs({item({70, 65})}, 10).pairs.empty());
    EXPECT_TRUE(build_ai_feedback_pairs({item({70, 70})}, 0).pairs.empty());
}

TEST(AiFeedback, TotalsAreMeanOfBothScoresAndTiesPickLowestIndex) {
    InstructionResponses r;
    r.instruction = "i";
    r.responses = {{"a", 100, 40}, {"b", 40, 100}, {"c", 90, 90}, {"d", 20, 20}, {"e", 20, 20}};
    const auto out = build_ai_feedback_pairs({r}, 0);
    ASSERT_EQ(out.pairs.size(), 1u);
    EXPECT_EQ(out.pairs[0].chosen, "c");
    EXPECT_EQ(out.pairs[0].rejected, "d");
}

TEST(AiFeedback, TooFewResponsesAreReported) {
    const auto out = build_ai_feedback_pairs({item({50}), item({90, 10})}, 0);
    EXPECT_EQ(out.pairs.size(), 1u);
    ASSERT_EQ(out.skipped.size(), 1u);
}

TEST(Json, PairAndScriptRoundTrip) {
    const auto s = script({std::nullopt, "r2"});
    const auto back = nlohmann::json(s).get<SegmentedScript>();
    EXPECT_EQ(expand_iter_pairs(back).size(), 1u);
    const auto p = expand_iter_pairs(s)[0];
    const auto pj = nlohmann::json(p);
    EXPECT_EQ(pj["origin"], "human-iter");
    EXPECT_EQ(pj["prefix_index"], 2);
    const auto pb = pj.get<PreferencePair>();
    EXPECT_EQ(pb.chosen, p.chosen);
    EXPECT_EQ(pb.images, p.images);
}
