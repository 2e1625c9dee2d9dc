#include "fakes.hpp"

#include "lwf/datapipe.hpp"
#include "lwf/error.hpp"
#include "lwf/jsonl.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>

using namespace lwf;
using namespace lwf::datapipe;
using lwf::testing::ScriptedClient;
using lwf::testing::words;

namespace {

InstructionRecord rec(std::string id, std::optional<std::string> response, std::vector<std::string> images = {"a.png"}) {
    InstructionRecord r;
    r.id = std::move(id);
    r.images = std::move(images);
    r.instruction = "Describe " + r.id;
    r.response = std::move(response);
    return r;
}

SftRecord sft(std::string id, std::size_t units) {
    return SftRecord::from_output(id, {"a.png"}, "Write about " + id, words(units));
}

GenerationConfig cfg() {
    GenerationConfig c;
    c.model_id = "m";
    return c;
}

const std::array<std::string, 3> kExemplars = {"ex one", "ex two", "ex three"};

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::Io;
}

}  // namespace

TEST(Filter, StrictThreshold) {
    const auto r = filter_by_output_length(
        {rec("a", words(200)), rec("b", words(128)), rec("c", ""), rec("d", std::nullopt), rec("e", words(129))});
    ASSERT_EQ(r.kept.size(), 2u);
    EXPECT_EQ(r.kept[0].id, "a");
    EXPECT_EQ(r.kept[1].id, "e");
    ASSERT_EQ(r.dropped.size(), 3u);
    EXPECT_EQ(r.dropped[0].id, "b");
    EXPECT_EQ(r.dropped[2].reason, "missing-response");
}

TEST(Filter, KeptIsSubsequenceAndCountsAddUp) {
    std::mt19937 rng(3);
    std::vector<InstructionRecord> in;
    for (int i = 0; i < 300; ++i) {
        const int kind = rng() % 10;
        in.push_back(rec("r" + std::to_string(i), kind == 0 ? std::nullopt : std::optional(words(rng() % 300))));
    }
    const auto r = filter_by_output_length(in);
    EXPECT_EQ(r.kept.size() + r.dropped.size(), in.size());
    std::size_t j = 0;
    for (const auto& k : r.kept) {
        while (j < in.size() && in[j].id != k.id) ++j;
        ASSERT_LT(j, in.size());
        ++j;
    }
    // Idempotent on its own output.
    EXPECT_EQ(filter_by_output_length(r.kept).kept.size(), r.kept.size());
}

TEST(Verify, YesNoParsing) {
    EXPECT_TRUE(parse_yes_no("yes"));
    EXPECT_TRUE(parse_yes_no("  **Yes**."));
    EXPECT_TRUE(parse_yes_no("\"YES\""));
    EXPECT_FALSE(parse_yes_no("No, the instruction is unrelated"));
    EXPECT_FALSE(parse_yes_no("no"));
    EXPECT_EQ(code_of([] { parse_yes_no("maybe"); }), ErrorCode::VerificationAmbiguous);
    EXPECT_EQ(code_of([] { parse_yes_no("Yesterday"); }), ErrorCode::VerificationAmbiguous);
    EXPECT_EQ(code_of([] { parse_yes_no("Nothing"); }), ErrorCode::VerificationAmbiguous);
    EXPECT_EQ(code_of([] { parse_yes_no(""); }), ErrorCode::VerificationAmbiguous);
}

TEST(Verify, SendsSelectionPromptWithImages) {
    auto client = ScriptedClient::sequence({"yes"});
    EXPECT_TRUE(verify_long_output(rec("a", words(10), {"x.png", "y.png"}), client, cfg()));
    const auto calls = client.calls();
    ASSERT_EQ(calls.size(), 1u);
    const auto p = lwf::testing::prompt_text(calls[0].messages);
    EXPECT_NE(p.find("more than 1,000 words in English"), std::string::npos);
    EXPECT_NE(p.find("Describe a"), std::string::npos);
    EXPECT_EQ(lwf::testing::image_count(calls[0].messages), 2u);
}

TEST(Verify, RecordsSplitByVerdictInInputOrder) {
    ScriptedClient client([](const auto& m, const auto&) -> std::string {
        const auto p = lwf::testing::prompt_text(m);
        if (p.find("Describe r1") != std::string::npos) return "no";
        if (p.find("Describe r2") != std::string::npos) return "perhaps";
        return "Yes.";
    });
    std::vector<InstructionRecord> in;
    for (int i = 0; i < 6; ++i) in.push_back(rec("r" + std::to_string(i), words(300)));
    const auto r = verify_records(in, client, cfg(), 3);
    EXPECT_EQ(r.accepted.size() + r.rejected.size() + r.quarantined.size(), 6u);
    ASSERT_EQ(r.quarantined.size(), 1u);
    EXPECT_EQ(r.quarantined[0].id, "r2");
    for (std::size_t i = 1; i < r.accepted.size(); ++i) EXPECT_LT(r.accepted[i - 1].id, r.accepted[i].id);
}

TEST(Sampling, IndicesAreDistinctAndSeeded) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto a = sample_indices(20, 7, seed);
        EXPECT_EQ(a, sample_indices(20, 7, seed));
        EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 7u);
        for (auto i : a) EXPECT_LT(i, 20u);
    }
    EXPECT_NE(sample_indices(1000, 5, 1), sample_indices(1000, 5, 2));
    EXPECT_EQ(code_of([] { sample_indices(3, 4, 0); }), ErrorCode::InsufficientPool);
}

TEST(MultiImage, DeterministicSelection) {
    const std::vector<std::string> pool = {"p0", "p1", "p2", "p3", "p4"};
    auto run = [&] {
        auto client = ScriptedClient::sequence({"  Rewritten instruction  "});
        return synthesize_multi_image(rec("s", std::nullopt), pool, 2, kExemplars, client, cfg(), 42);
    };
    const auto a = run(), b = run();
    EXPECT_EQ(a.images, b.images);
    EXPECT_EQ(a.images.size(), 2u);
    EXPECT_EQ(a.instruction, "Rewritten instruction");
    EXPECT_EQ(a.source, "multi-image");
}

TEST(MultiImage, PromptAndErrors) {
    const auto p = build_multi_image_prompt(2, kExemplars, "seed instruction");
    EXPECT_NE(p.find("more than 2,000 words in English"), std::string::npos);
    EXPECT_NE(p.find("ex one"), std::string::npos);
    EXPECT_NE(p.find("ex three"), std::string::npos);
    EXPECT_NE(p.find("seed instruction"), std::string::npos);
    EXPECT_EQ(p.find("{Image Number}"), std::string::npos);

    auto client = ScriptedClient::sequence({"x"});
    EXPECT_EQ(code_of([&] {
                  synthesize_multi_image(rec("s", std::nullopt), {"a", "b", "c"}, 4, kExemplars, client, cfg(), 1);
              }),
              ErrorCode::InsufficientPool);
    EXPECT_EQ(code_of([&] {
                  synthesize_multi_image(rec("s", std::nullopt), {"a", "b", "c"}, 3, kExemplars, client, cfg(), 1);
              }),
              ErrorCode::InvalidInput);
    EXPECT_TRUE(client.calls().empty());
}

TEST(Slides, DeckSizeBounds) {
    std::vector<std::string> deck;
    for (int i = 0; i < 15; ++i) deck.push_back("slide" + std::to_string(i) + ".png");
    const auto r = slides_to_instruction("deck", deck);
    EXPECT_EQ(r.images, deck);
    EXPECT_EQ(r.instruction, "Write a lecture script for these slides");
    EXPECT_EQ(code_of([] { slides_to_instruction("d", {"one"}); }), ErrorCode::DeckSize);
    EXPECT_EQ(code_of([] { slides_to_instruction("d", std::vector<std::string>(31, "s")); }), ErrorCode::DeckSize);
    EXPECT_NO_THROW(slides_to_instruction("d", std::vector<std::string>(2, "s")));
    EXPECT_NO_THROW(slides_to_instruction("d", std::vector<std::string>(30, "s")));
}

TEST(Backtranslate, AddsMeasuredRequirement) {
    EXPECT_EQ(length_requirement(2400), "Please write 2400-word in total.");
    auto client = ScriptedClient([](const auto& m, const auto&) {
        const auto p = lwf::testing::prompt_text(m);
        EXPECT_NE(p.find("Please write 2400-word in total."), std::string::npos);
        return std::string("Write a 2400-word piece about x.");
    });
    const auto out = backtranslate_length(sft("x", 2400), client, cfg());
    EXPECT_EQ(out.required_length, TextLength{2400});
    EXPECT_EQ(out.instruction, "Write a 2400-word piece about x.");
    EXPECT_EQ(out.output, words(2400));
    EXPECT_TRUE(out.augmented);
}

TEST(Backtranslate, VerbatimRephraseIsAccepted) {
    const auto in = sft("y", 300);
    const std::string combined = in.instruction + " Please write 300-word in total.";
    auto client = ScriptedClient::sequence({combined});
    EXPECT_EQ(backtranslate_length(in, client, cfg()).instruction, combined);
}

TEST(Backtranslate, RephraseThatDropsTheNumberIsDiscarded) {
    const auto in = sft("y", 300);
    auto client = ScriptedClient::sequence({"Write a long essay."});
    EXPECT_EQ(backtranslate_length(in, client, cfg()).instruction, in.instruction + " Please write 300-word in total.");
}

TEST(Backtranslate, ClientFailureFlagsRecord) {
    auto client = ScriptedClient([](const auto&, const auto&) -> std::string { fail(ErrorCode::Timeout, "t"); });
    const auto in = sft("z", 500);
    const auto out = backtranslate_length(in, client, cfg());
    EXPECT_FALSE(out.augmented);
    EXPECT_EQ(out.instruction, in.instruction);
    EXPECT_FALSE(out.required_length);
}

TEST(Backtranslate, EmptyOutputAndIdempotence) {
    auto client = ScriptedClient::sequence({"Write 300 words. 300"});
    SftRecord empty = sft("e", 0);
    EXPECT_EQ(code_of([&] { backtranslate_length(empty, client, cfg()); }), ErrorCode::InvalidInput);
    const auto once = backtranslate_length(sft("i", 300), client, cfg());
    const auto twice = backtranslate_length(once, client, cfg());
    EXPECT_EQ(twice.instruction, once.instruction);
    EXPECT_EQ(client.calls().size(), 1u);
}

TEST(SampleByMean, ThreeElementExample) {
    const std::vector<SftRecord> pool = {sft("a", 1000), sft("b", 2800), sft("c", 4600)};
    SampleOptions o;
    o.n = 2;
    o.target_mean = 2800;
    o.tolerance = 0.01;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        o.rng_seed = seed;
        const auto r = sample_by_mean_length(pool, o);
        ASSERT_EQ(r.size(), 2u);
        EXPECT_EQ(r[0].output_length.units, 1000u);
        EXPECT_EQ(r[1].output_length.units, 4600u);
    }
}

TEST(SampleByMean, WholePoolAndInfeasible) {
    const std::vector<SftRecord> pool = {sft("a", 100), sft("b", 200), sft("c", 300)};
    SampleOptions o;
    o.n = 3;
    o.target_mean = 200;
    EXPECT_EQ(sample_by_mean_length(pool, o).size(), 3u);
    o.target_mean = 250;
    EXPECT_EQ(code_of([&] { sample_by_mean_length(pool, o); }), ErrorCode::InfeasibleTarget);
    o.n = 2;
    o.target_mean = 3000;
    EXPECT_EQ(code_of([&] { sample_by_mean_length(pool, o); }), ErrorCode::InfeasibleTarget);
    o.n = 4;
    EXPECT_EQ(code_of([&] { sample_by_mean_length(pool, o); }), ErrorCode::InvalidInput);
}

TEST(SampleByMean, ResultsSatisfyToleranceAndAreReproducible) {
    std::mt19937_64 rng(9);
    std::vector<SftRecord> pool;
    for (int i = 0; i < 400; ++i) {
        auto r = sft("r" + std::to_string(i), 0);
        r.output_length = TextLength{200 + rng() % 6000};
        pool.push_back(r);
    }
    SampleOptions o;
    o.n = 100;
    o.target_mean = 2800;
    o.rng_seed = 17;
    const auto a = sample_by_mean_length(pool, o);
    const auto b = sample_by_mean_length(pool, o);
    ASSERT_EQ(a.size(), 100u);
    double sum = 0;
    for (const auto& r : a) sum += double(r.output_length.units);
    EXPECT_LE(std::abs(sum / 100 - 2800), 28.0);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].id, b[i].id);
}

TEST(Records, JsonRoundTrip) {
    auto r = rec("a", "resp");
    r.required_length = TextLength{50};
    r.language = Language::Zh;
    const auto back = nlohmann::json(r).get<InstructionRecord>();
    EXPECT_EQ(back.id, r.id);
    EXPECT_EQ(back.response, r.response);
    EXPECT_EQ(back.required_length, r.required_length);
    EXPECT_EQ(back.language, Language::Zh);

    auto s = sft("s", 12);
    s.required_length = TextLength{12};
    const auto sb = nlohmann::json(s).get<SftRecord>();
    EXPECT_EQ(sb.output_length, TextLength{12});
    EXPECT_EQ(sb.required_length, s.required_length);
}
