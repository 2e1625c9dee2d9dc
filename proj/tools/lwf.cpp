// lwf: command-line entry point for the agent, data pipeline, DPO, benchmark,
// judge and annotation tools.

#include "lwf/agent.hpp"
#include "lwf/annotate.hpp"
#include "lwf/bench.hpp"
#include "lwf/client.hpp"
#include "lwf/datapipe.hpp"
#include "lwf/dpo.hpp"
#include "lwf/jsonl.hpp"
#include "lwf/metrics.hpp"
#include "lwf/parallel.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <csignal>
#include <iostream>
#include <memory>
#include <thread>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string replay;
    std::string record;
    std::string base_url;
    std::string model = "gpt-4o";
    std::string judge_model = "gpt-4o-2024-05-13";
    int max_new_tokens = 8192;
    std::uint64_t seed = 0;
    std::size_t concurrency = 4;
};

// Builds the client stack on first use so offline subcommands never need
// credentials.
class ClientStack {
public:
    explicit ClientStack(const Globals& g) : g_(g) {}

    lwf::ChatClient& get() {
        if (top_) return *top_;
        if (!g_.replay.empty()) {
            base_ = std::make_unique<lwf::ReplayClient>(fs::path(g_.replay));
        } else {
            auto opts = lwf::OpenAiOptions::from_env();
            if (!g_.base_url.empty()) opts.base_url = g_.base_url;
            base_ = std::make_unique<lwf::OpenAiClient>(opts);
        }
        lwf::ChatClient* inner = base_.get();
        if (!g_.record.empty()) {
            recorder_ = std::make_unique<lwf::RecordingClient>(*inner, fs::path(g_.record));
            inner = recorder_.get();
        }
        bounded_ = std::make_unique<lwf::BoundedClient>(*inner, static_cast<std::ptrdiff_t>(g_.concurrency));
        lwf::RetryPolicy policy;
        policy.jitter_seed = g_.seed;
        if (!g_.replay.empty()) policy.sleep = [](std::chrono::milliseconds) {};
        top_ = std::make_unique<lwf::RetryingClient>(*bounded_, policy);
        return *top_;
    }

private:
    const Globals& g_;
    std::unique_ptr<lwf::ChatClient> base_;
    std::unique_ptr<lwf::ChatClient> recorder_;
    std::unique_ptr<lwf::ChatClient> bounded_;
    std::unique_ptr<lwf::ChatClient> top_;
};

lwf::GenerationConfig generation(const Globals& g, const std::string& model) {
    lwf::GenerationConfig c;
    c.model_id = model;
    c.max_new_tokens = g.max_new_tokens;
    return c;
}

template <typename T>
void write_jsonl(const std::string& path, const std::vector<T>& items) {
    lwf::io::write_jsonl_as(path, items);
}

void write_json(const std::string& path, const json& j) {
    lwf::io::write_file_atomic(path, j.dump(2) + "\n");
}

std::array<std::string, 3> read_exemplars(const std::string& path) {
    const json j = lwf::io::read_json(path);
    if (!j.is_array() || j.size() != 3) lwf::fail(lwf::ErrorCode::InvalidInput, "exemplar file must hold 3 strings");
    return {j[0].get<std::string>(), j[1].get<std::string>(), j[2].get<std::string>()};
}

void add_agent(CLI::App& app, Globals& g, ClientStack& clients) {
    auto* agent = app.add_subcommand("agent", "plan-and-write long-output agent");
    agent->require_subcommand(1);
    auto* run = agent->add_subcommand("run", "write one long response from a task file");
    static std::string task_path, out_path, text_path;
    run->add_option("--task", task_path, "WritingTask JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_path, "transcript JSON")->required();
    run->add_option("--text", text_path, "also write the final text here");
    run->callback([&g, &clients] {
        const auto task = lwf::io::read_json(task_path).get<lwf::agent::WritingTask>();
        lwf::agent::AgentConfig cfg;
        cfg.generation = generation(g, g.model);
        cfg.retry.max_attempts = 1;  // the client stack already retries
        try {
            const auto t = lwf::agent::run_agent(task, clients.get(), cfg);
            write_json(out_path, t);
            if (!text_path.empty()) lwf::io::write_file_atomic(text_path, t.final_text);
            fmt::print("{} sections, {} calls\n", t.outline.sections.size(), t.calls.size());
        } catch (const lwf::agent::AgentError& e) {
            write_json(out_path, {{"error", e.what()}, {"partial", e.partial()}});
            throw;
        }
    });
}

void add_pipeline(CLI::App& app, Globals& g, ClientStack& clients) {
    auto* p = app.add_subcommand("pipeline", "SFT data synthesis steps");
    p->require_subcommand(1);
    static std::string in, out, dropped, rejected, quarantined, pool, exemplars;
    static std::uint64_t min_units = lwf::datapipe::kDefaultMinUnits;
    static std::size_t k = 2, n = 0;
    static double target = 0, tolerance = 0.01;

    auto* filter = p->add_subcommand("filter", "keep records whose response exceeds the length floor");
    filter->add_option("--in", in)->required()->check(CLI::ExistingFile);
    filter->add_option("--out", out)->required();
    filter->add_option("--dropped", dropped, "drop report JSONL");
    filter->add_option("--min-units", min_units)->capture_default_str();
    filter->callback([] {
        const auto r = lwf::datapipe::filter_by_output_length(
            lwf::io::read_jsonl_as<lwf::datapipe::InstructionRecord>(in), min_units);
        write_jsonl(out, r.kept);
        if (!dropped.empty()) write_jsonl(dropped, r.dropped);
        fmt::print("kept {} dropped {}\n", r.kept.size(), r.dropped.size());
    });

    auto* verify = p->add_subcommand("verify", "ask the model whether each instruction needs a long answer");
    verify->add_option("--in", in)->required()->check(CLI::ExistingFile);
    verify->add_option("--out", out)->required();
    verify->add_option("--rejected", rejected);
    verify->add_option("--quarantined", quarantined);
    verify->callback([&g, &clients] {
        const auto r = lwf::datapipe::verify_records(lwf::io::read_jsonl_as<lwf::datapipe::InstructionRecord>(in),
                                                     clients.get(), generation(g, g.model), g.concurrency);
        write_jsonl(out, r.accepted);
        if (!rejected.empty()) write_jsonl(rejected, r.rejected);
        if (!quarantined.empty()) write_jsonl(quarantined, r.quarantined);
        fmt::print("accepted {} rejected {} quarantined {}\n", r.accepted.size(), r.rejected.size(),
                   r.quarantined.size());
    });

    auto* multi = p->add_subcommand("multiimage", "rewrite single-image seeds into multi-image instructions");
    multi->add_option("--in", in, "seed records JSONL")->required()->check(CLI::ExistingFile);
    multi->add_option("--pool", pool, "JSON array of same-category image refs")->required()->check(CLI::ExistingFile);
    multi->add_option("--exemplars", exemplars, "JSON array of 3 example rewrites")->required()->check(CLI::ExistingFile);
    multi->add_option("--k", k, "images per instruction")->check(CLI::IsMember({2, 4}))->capture_default_str();
    multi->add_option("--out", out)->required();
    multi->callback([&g, &clients] {
        const auto seeds = lwf::io::read_jsonl_as<lwf::datapipe::InstructionRecord>(in);
        const auto images = lwf::io::read_json(pool).get<std::vector<std::string>>();
        const auto ex = read_exemplars(exemplars);
        const auto cfg = generation(g, g.model);
        auto& client = clients.get();
        const auto records = lwf::parallel_map(seeds.size(), g.concurrency, [&](std::size_t i) {
            return lwf::datapipe::synthesize_multi_image(seeds[i], images, k, ex, client, cfg, g.seed + i);
        });
        write_jsonl(out, records);
        fmt::print("{} instructions\n", records.size());
    });

    auto* slides = p->add_subcommand("slides", "turn slide decks into lecture-script instructions");
    slides->add_option("--in", in, "JSONL of {id, images, language}")->required()->check(CLI::ExistingFile);
    slides->add_option("--out", out)->required();
    slides->callback([] {
        std::vector<lwf::datapipe::InstructionRecord> records;
        for (const auto& j : lwf::io::read_jsonl(in)) {
            records.push_back(lwf::datapipe::slides_to_instruction(j.at("id").get<std::string>(),
                                                                   j.at("images").get<std::vector<std::string>>(),
                                                                   lwf::parse_language(j.value("language", "en"))));
        }
        write_jsonl(out, records);
        fmt::print("{} instructions\n", records.size());
    });

    auto* bt = p->add_subcommand("backtranslate", "attach a length requirement to each SFT record");
    bt->add_option("--in", in)->required()->check(CLI::ExistingFile);
    bt->add_option("--out", out)->required();
    bt->callback([&g, &clients] {
        const auto records = lwf::io::read_jsonl_as<lwf::datapipe::SftRecord>(in);
        const auto cfg = generation(g, g.model);
        auto& client = clients.get();
        const auto result = lwf::parallel_map(records.size(), g.concurrency, [&](std::size_t i) {
            return lwf::datapipe::backtranslate_length(records[i], client, cfg);
        });
        write_jsonl(out, result);
        const auto failed = std::count_if(result.begin(), result.end(), [](const auto& r) { return !r.augmented; });
        fmt::print("{} records, {} not augmented\n", result.size(), failed);
    });

    auto* sample = p->add_subcommand("sample", "choose a subset with a target mean output length");
    sample->add_option("--in", in)->required()->check(CLI::ExistingFile);
    sample->add_option("--out", out)->required();
    sample->add_option("--n", n)->required();
    sample->add_option("--target-mean", target)->required();
    sample->add_option("--tolerance", tolerance, "relative to the target")->capture_default_str();
    sample->callback([&g] {
        lwf::datapipe::SampleOptions opts;
        opts.n = n;
        opts.target_mean = target;
        opts.tolerance = tolerance;
        opts.rng_seed = g.seed;
        const auto picked =
            lwf::datapipe::sample_by_mean_length(lwf::io::read_jsonl_as<lwf::datapipe::SftRecord>(in), opts);
        write_jsonl(out, picked);
        double total = 0;
        for (const auto& r : picked) total += static_cast<double>(r.output_length.units);
        fmt::print("{} records, mean length {:.1f}\n", picked.size(), total / static_cast<double>(picked.size()));
    });
}

void add_dpo(CLI::App& app) {
    auto* d = app.add_subcommand("dpo", "preference pairs and DPO loss");
    d->require_subcommand(1);
    static std::string in, out, skipped;
    static double beta = lwf::dpo::kDefaultBeta, margin = 0;
    static bool grad = false;

    auto* expand = d->add_subcommand("expand", "expand a revised script into prefix preference pairs");
    expand->add_option("--script", in, "SegmentedScript JSON")->required()->check(CLI::ExistingFile);
    expand->add_option("--out", out)->required();
    expand->callback([] {
        const auto pairs = lwf::dpo::expand_iter_pairs(lwf::io::read_json(in).get<lwf::dpo::SegmentedScript>());
        write_jsonl(out, pairs);
        fmt::print("{} pairs\n", pairs.size());
    });

    auto* loss = d->add_subcommand("loss", "DPO loss over supplied log-probabilities");
    loss->add_option("--pairs", in, "one log-prob object, or an array of prefixes for the iterative loss")
        ->required()
        ->check(CLI::ExistingFile);
    loss->add_option("--beta", beta)->capture_default_str();
    loss->add_flag("--grad", grad, "also print the gradient of a single object as JSON");
    loss->callback([] {
        const json j = lwf::io::read_json(in);
        const lwf::dpo::Beta b(beta);
        if (j.is_array()) {
            fmt::print("{:.6f}\n", lwf::dpo::iterdpo_loss(j.get<std::vector<lwf::dpo::SequenceLogProbs>>(), b));
            return;
        }
        const auto lp = j.get<lwf::dpo::SequenceLogProbs>();
        fmt::print("{:.6f}\n", lwf::dpo::dpo_loss(lp, b));
        if (grad) fmt::print("{}\n", json(lwf::dpo::dpo_grad(lp, b)).dump());
    });

    auto* ai = d->add_subcommand("aipairs", "best-vs-worst pairs from scored responses");
    ai->add_option("--in", in, "JSONL of {instruction, images, responses:[{response, S_l, S_q}]}")
        ->required()
        ->check(CLI::ExistingFile);
    ai->add_option("--margin", margin, "minimum score gap")->capture_default_str();
    ai->add_option("--out", out)->required();
    ai->add_option("--skipped", skipped, "skip report JSONL");
    ai->callback([] {
        const auto r =
            lwf::dpo::build_ai_feedback_pairs(lwf::io::read_jsonl_as<lwf::dpo::InstructionResponses>(in), margin);
        write_jsonl(out, r.pairs);
        if (!skipped.empty()) {
            std::vector<json> lines;
            for (const auto& s : r.skipped) lines.push_back({{"instruction", s.instruction}, {"reason", s.reason}});
            lwf::io::write_jsonl_atomic(skipped, lines);
        }
        fmt::print("{} pairs, {} skipped\n", r.pairs.size(), r.skipped.size());
    });
}

std::vector<lwf::bench::ScoredInstruction> judge_items(const std::vector<lwf::bench::BenchInstruction>& suite,
                                                       const std::map<std::string, std::string>& responses,
                                                       const Globals& g, ClientStack& clients) {
    lwf::bench::EvalOptions opts;
    opts.model_id = g.model;
    opts.judge = generation(g, g.judge_model);
    opts.workers = g.concurrency;
    return lwf::bench::evaluate_run(suite, responses, clients.get(), opts);
}

void add_bench(CLI::App& app, Globals& g, ClientStack& clients) {
    auto* b = app.add_subcommand("bench", "benchmark suites, runs and reports");
    b->require_subcommand(1);
    static std::string base, suite_path, out, responses_in, responses_out, caption_model, votes;
    static std::vector<std::string> scored_files;
    static bool caption = false, short_output = false;

    auto* ruler = b->add_subcommand("ruler", "expand 8 base instructions into the 32-prompt length ruler");
    ruler->add_option("--base", base)->required()->check(CLI::ExistingFile);
    ruler->add_option("--out", out)->required();
    ruler->callback([] {
        const auto suite =
            lwf::bench::make_ruler_suite(lwf::io::read_jsonl_as<lwf::bench::BenchInstruction>(base));
        write_jsonl(out, suite);
        fmt::print("{} prompts\n", suite.size());
    });

    auto* run = b->add_subcommand("run", "generate (unless given) and score responses");
    run->add_option("--suite", suite_path)->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "scored JSONL")->required();
    run->add_option("--responses", responses_in, "JSONL of {id, response}; skips generation")
        ->check(CLI::ExistingFile);
    run->add_option("--responses-out", responses_out, "write generated responses here");
    run->add_flag("--caption-baseline", caption, "caption every image, then answer from captions");
    run->add_option("--caption-model", caption_model, "captioning model for the baseline");
    run->add_flag("--short-output", short_output, "final model is limited to 4096 new tokens");
    run->callback([&g, &clients] {
        const auto suite = lwf::io::read_jsonl_as<lwf::bench::BenchInstruction>(suite_path);
        std::map<std::string, std::string> responses;
        if (!responses_in.empty()) {
            for (const auto& j : lwf::io::read_jsonl(responses_in)) {
                responses[j.at("id").get<std::string>()] = j.at("response").get<std::string>();
            }
        } else if (caption) {
            const auto cfg = lwf::bench::make_caption_baseline_config(
                caption_model.empty() ? g.model : caption_model, g.model, short_output);
            auto& client = clients.get();
            const auto results = lwf::parallel_map(suite.size(), g.concurrency, [&](std::size_t i) {
                return lwf::bench::caption_then_llm(suite[i], client, client, cfg).response;
            });
            for (std::size_t i = 0; i < suite.size(); ++i) responses[suite[i].id] = results[i];
        } else {
            responses = lwf::bench::generate_responses(suite, clients.get(), generation(g, g.model), g.concurrency);
        }
        if (!responses_out.empty()) {
            std::vector<json> lines;
            for (const auto& inst : suite) {
                if (const auto it = responses.find(inst.id); it != responses.end()) {
                    lines.push_back({{"id", inst.id}, {"response", it->second}});
                }
            }
            lwf::io::write_jsonl_atomic(responses_out, lines);
        }
        const auto scored = judge_items(suite, responses, g, clients);
        write_jsonl(out, scored);
        fmt::print("{}", lwf::bench::render_report_table({lwf::bench::aggregate_report(scored)}));
    });

    auto* report = b->add_subcommand("report", "bucketed report from scored runs");
    report->add_option("--scored", scored_files, "scored JSONL, one per model")->required()->check(CLI::ExistingFile);
    report->add_option("--out", out, "report JSON");
    report->callback([] {
        std::vector<lwf::bench::BucketedReport> reports;
        for (const auto& f : scored_files) {
            reports.push_back(lwf::bench::aggregate_report(lwf::io::read_jsonl_as<lwf::bench::ScoredInstruction>(f)));
        }
        if (!out.empty()) write_json(out, reports);
        fmt::print("{}", lwf::bench::render_report_table(reports));
    });

    auto* winrate = b->add_subcommand("winrate", "pairwise win-rate matrix from human votes");
    winrate->add_option("--votes", votes)->required()->check(CLI::ExistingFile);
    winrate->add_option("--out", out, "matrix JSON");
    winrate->callback([] {
        const auto m = lwf::bench::win_rate_matrix(lwf::io::read_jsonl_as<lwf::bench::VoteRecord>(votes));
        if (!out.empty()) write_json(out, m);
        fmt::print("{}", lwf::bench::render_win_rate_table(m));
    });
}

void add_judge(CLI::App& app, Globals& g, ClientStack& clients) {
    auto* j = app.add_subcommand("judge", "LLM-as-judge scoring");
    j->require_subcommand(1);
    auto* score = j->add_subcommand("score", "score responses on the six-dimension rubric");
    static std::string in, out;
    score->add_option("--in", in, "JSONL of {id, instruction, response, images?, required_length}")
        ->required()
        ->check(CLI::ExistingFile);
    score->add_option("--out", out)->required();
    score->callback([&g, &clients] {
        std::vector<lwf::bench::BenchInstruction> items;
        std::map<std::string, std::string> responses;
        for (const auto& line : lwf::io::read_jsonl(in)) {
            lwf::bench::BenchInstruction b;
            b.id = line.at("id").get<std::string>();
            b.instruction = line.at("instruction").get<std::string>();
            b.images = line.value("images", std::vector<std::string>{});
            b.required_length = lwf::TextLength{line.at("required_length").get<std::uint64_t>()};
            responses[b.id] = line.at("response").get<std::string>();
            items.push_back(std::move(b));
        }
        const auto scored = judge_items(items, responses, g, clients);
        write_jsonl(out, scored);
        const auto flagged = std::count_if(scored.begin(), scored.end(), [](const auto& s) { return !s.flags.empty(); });
        fmt::print("{} scored, {} flagged\n", scored.size(), flagged);
    });
}

void add_annotate(CLI::App& app) {
    auto* a = app.add_subcommand("annotate", "script revision service");
    a->require_subcommand(1);
    auto* serve = a->add_subcommand("serve", "run the HTTP service until interrupted");
    static std::string data = "data", host = "127.0.0.1", static_dir;
    static int port = 8080;
    static std::vector<std::string> admins;
    serve->add_option("--data", data, "data directory (decks/<id>.json, accounts.json)")->capture_default_str();
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port)->capture_default_str();
    serve->add_option("--admin", admins, "admin account as user:password")->take_all();
    serve->add_option("--static", static_dir, "directory served at /")->check(CLI::ExistingDirectory);
    serve->callback([] {
        sigset_t signals;
        sigemptyset(&signals);
        sigaddset(&signals, SIGINT);
        sigaddset(&signals, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &signals, nullptr);

        lwf::annotate::Service service{lwf::annotate::Store(data)};
        for (const auto& spec : admins) {
            const auto colon = spec.find(':');
            if (colon == std::string::npos) throw CLI::ValidationError("--admin", "expected user:password");
            service.ensure_admin(spec.substr(0, colon), spec.substr(colon + 1));
        }
        lwf::annotate::HttpServer server(service, static_dir.empty() ? std::nullopt
                                                                     : std::optional<fs::path>(static_dir));
        const int bound = server.bind(host, port);
        fmt::print("listening on {}:{}\n", host, bound);
        std::fflush(stdout);
        std::jthread waiter([&] {
            int sig = 0;
            sigwait(&signals, &sig);
            server.stop();
        });
        server.listen();
        // Wake the waiter if listen returned for another reason.
        pthread_kill(waiter.native_handle(), SIGTERM);
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Long-output vision-language writing toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI or TOML file with option defaults");

    Globals g;
    auto* replay = app.add_option("--replay", g.replay, "answer model calls from a recorded transcript")
                       ->check(CLI::ExistingFile);
    auto* base_url = app.add_option("--base-url", g.base_url, "OpenAI-compatible endpoint (else LWF_BASE_URL)");
    replay->excludes(base_url);
    app.add_option("--record", g.record, "append every model call to this transcript")->excludes(replay);
    app.add_option("--model", g.model, "generation model")->capture_default_str();
    app.add_option("--judge-model", g.judge_model, "judge model")->capture_default_str();
    app.add_option("--max-new-tokens", g.max_new_tokens)->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "RNG seed")->capture_default_str();
    app.add_option("--concurrency", g.concurrency, "max in-flight model calls")
        ->capture_default_str()
        ->check(CLI::Range(1, 1024));

    ClientStack clients(g);
    add_agent(app, g, clients);
    add_pipeline(app, g, clients);
    add_dpo(app);
    add_bench(app, g, clients);
    add_judge(app, g, clients);
    add_annotate(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
        return 2;
    } catch (const lwf::Error& e) {
        std::cerr << "error [" << lwf::to_string(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error [invalid-input]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
