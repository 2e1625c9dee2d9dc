#pragma once

#include "lwf/client.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

namespace lwf::testing {

/// Concatenated text parts of the last message.
inline std::string prompt_text(const std::vector<ChatMessage>& messages) {
    std::string out;
    for (const auto& p : messages.back().parts) {
        if (p.kind == ContentPart::Kind::Text) out += p.text;
    }
    return out;
}

inline std::size_t image_count(const std::vector<ChatMessage>& messages) {
    std::size_t n = 0;
    for (const auto& m : messages) {
        for (const auto& p : m.parts) n += p.kind == ContentPart::Kind::Image;
    }
    return n;
}

struct RecordedCall {
    std::vector<ChatMessage> messages;
    GenerationConfig config;
};

/// Answers through a caller-supplied function and keeps every request.
class ScriptedClient final : public ChatClient {
public:
    using Script = std::function<std::string(const std::vector<ChatMessage>&, const GenerationConfig&)>;

    explicit ScriptedClient(Script script) : script_(std::move(script)) {}

    /// Replies from `replies` in order; throws once they run out.
    static ScriptedClient sequence(std::vector<std::string> replies) {
        auto shared = std::make_shared<std::vector<std::string>>(std::move(replies));
        auto next = std::make_shared<std::size_t>(0);
        auto mu = std::make_shared<std::mutex>();
        return ScriptedClient([shared, next, mu](const auto&, const auto&) {
            std::lock_guard lock(*mu);
            if (*next >= shared->size()) fail(ErrorCode::ReplayMiss, "script exhausted");
            return (*shared)[(*next)++];
        });
    }

    ChatResult chat(const std::vector<ChatMessage>& messages, const GenerationConfig& config) override {
        {
            std::lock_guard lock(mu_);
            calls_.push_back({messages, config});
        }
        ChatResult r;
        r.text = script_(messages, config);
        r.completion_units = count_units(r.text);
        return r;
    }

    std::vector<RecordedCall> calls() const {
        std::lock_guard lock(mu_);
        return calls_;
    }

private:
    static std::uint64_t count_units(const std::string& s) { return s.size(); }

    Script script_;
    mutable std::mutex mu_;
    std::vector<RecordedCall> calls_;
};

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("lwf-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// n words of filler text.
inline std::string words(std::size_t n, const std::string& word = "word") {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += word;
    }
    return s;
}

}  // namespace lwf::testing
