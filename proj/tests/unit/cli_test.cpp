#include "fakes.hpp"

#include "lwf/bench.hpp"
#include "lwf/jsonl.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sys/wait.h>

using namespace lwf;
using lwf::testing::ScriptedClient;
using lwf::testing::TempDir;
using json = nlohmann::json;

namespace {

struct Run {
    int rc = -1;
    std::string out;
};

Run lwf_cli(const std::string& args) {
    const std::string cmd = std::string(LWF_CLI_PATH) + " " + args + " 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

void write(const std::filesystem::path& p, const std::string& s) {
    std::ofstream(p, std::ios::binary) << s;
}

std::string q(const std::filesystem::path& p) {
    return "'" + p.string() + "'";
}

std::string judgment(int r) {
    QualityJudgment j;
    j.analysis = "ok";
    j.relevance = j.accuracy = j.coherence = j.clarity = j.breadth_depth = j.reading_experience = r;
    return render_judgment(j);
}

// Judge inputs plus a transcript recorded with the same request shape the CLI sends.
void make_judge_fixture(const TempDir& dir, const std::string& judge_model) {
    std::string in;
    std::vector<bench::BenchInstruction> items;
    std::map<std::string, std::string> responses;
    for (int i = 0; i < 3; ++i) {
        bench::BenchInstruction b;
        b.id = "q" + std::to_string(i);
        b.instruction = "Write about topic " + std::to_string(i);
        b.required_length = TextLength{100};
        responses[b.id] = lwf::testing::words(80 + 10 * i);
        in += json{{"id", b.id}, {"instruction", b.instruction}, {"response", responses[b.id]},
                   {"required_length", 100}}.dump() + "\n";
        items.push_back(b);
    }
    write(dir / "judge_in.jsonl", in);
    ScriptedClient judge([](const auto& m, const auto&) {
        const auto p = lwf::testing::prompt_text(m);
        return judgment(p.find("topic 1") != std::string::npos ? 3 : 4);
    });
    RecordingClient rec(judge, dir / "transcript.jsonl");
    bench::EvalOptions o;
    o.judge.model_id = judge_model;
    o.judge.max_new_tokens = 8192;
    bench::evaluate_run(items, responses, rec, o);
}

}  // namespace

TEST(Cli, UnknownSubcommandIsUsageError) {
    EXPECT_EQ(lwf_cli("frobnicate").rc, 2);
    EXPECT_EQ(lwf_cli("").rc, 2);
    EXPECT_EQ(lwf_cli("dpo loss").rc, 2);
}

TEST(Cli, ReplayExcludesBaseUrl) {
    TempDir dir;
    write(dir / "t.jsonl", "");
    const auto r = lwf_cli("--replay " + q(dir / "t.jsonl") + " --base-url http://x judge score --in " +
                           q(dir / "t.jsonl") + " --out " + q(dir / "o"));
    EXPECT_EQ(r.rc, 2);
}

TEST(Cli, DpoLossAtZero) {
    TempDir dir;
    write(dir / "lp.json",
          R"({"policy_chosen":[-1,-2],"ref_chosen":[-1,-2],"policy_rejected":[-3],"ref_rejected":[-3]})");
    const auto r = lwf_cli("dpo loss --pairs " + q(dir / "lp.json") + " --beta 0.1");
    EXPECT_EQ(r.rc, 0) << r.out;
    EXPECT_EQ(r.out, "0.693147\n");
}

TEST(Cli, BadInputExitsOne) {
    TempDir dir;
    write(dir / "lp.json", R"({"policy_chosen":[1],"ref_chosen":[-1],"policy_rejected":[-3],"ref_rejected":[-3]})");
    const auto r = lwf_cli("dpo loss --pairs " + q(dir / "lp.json"));
    EXPECT_EQ(r.rc, 1);
    EXPECT_NE(r.out.find("error"), std::string::npos);
}

TEST(Cli, RulerSuite) {
    TempDir dir;
    std::string base;
    for (int i = 0; i < 8; ++i) {
        base += json{{"id", "b" + std::to_string(i)}, {"category", "creative"}, {"language", i < 4 ? "en" : "zh"},
                     {"images", {"p.png"}}, {"instruction", "x"}, {"required_length", 1}}.dump() + "\n";
    }
    write(dir / "base.jsonl", base);
    const auto r = lwf_cli("bench ruler --base " + q(dir / "base.jsonl") + " --out " + q(dir / "ruler.jsonl"));
    ASSERT_EQ(r.rc, 0) << r.out;
    EXPECT_EQ(io::read_jsonl(dir / "ruler.jsonl").size(), 32u);
}

TEST(Cli, JudgeReplayIsByteReproducible) {
    TempDir dir;
    make_judge_fixture(dir, "gpt-4o-2024-05-13");
    const std::string common = "--replay " + q(dir / "transcript.jsonl") + " judge score --in " +
                               q(dir / "judge_in.jsonl") + " --out ";
    const auto a = lwf_cli(common + q(dir / "a.jsonl"));
    const auto b = lwf_cli("--concurrency 1 " + common + q(dir / "b.jsonl"));
    ASSERT_EQ(a.rc, 0) << a.out;
    ASSERT_EQ(b.rc, 0) << b.out;
    const auto bytes = io::read_file(dir / "a.jsonl");
    EXPECT_EQ(bytes, io::read_file(dir / "b.jsonl"));
    const auto rows = io::read_jsonl(dir / "a.jsonl");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_DOUBLE_EQ(rows[1]["S_q"].get<double>(), 60.0);
    EXPECT_DOUBLE_EQ(rows[0]["S_q"].get<double>(), 80.0);
}

TEST(Cli, ConfigFileSetsDefaults) {
    TempDir dir;
    make_judge_fixture(dir, "custom-judge");
    write(dir / "lwf.ini", "judge-model = \"custom-judge\"\n");
    const std::string tail = "--replay " + q(dir / "transcript.jsonl") + " judge score --in " +
                             q(dir / "judge_in.jsonl") + " --out " + q(dir / "o.jsonl");
    const auto without = lwf_cli(tail);
    EXPECT_EQ(without.rc, 0);
    // Without the config the judge model differs, so every call misses and is flagged.
    EXPECT_NE(without.out.find("3 flagged"), std::string::npos) << without.out;
    const auto with = lwf_cli("--config " + q(dir / "lwf.ini") + " " + tail);
    ASSERT_EQ(with.rc, 0) << with.out;
    EXPECT_NE(with.out.find("0 flagged"), std::string::npos) << with.out;
}
