#pragma once

#include "lwf/error.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

namespace lwf {

/// An image as given by the caller: an http(s) URL, a data: URI, or a local
/// file path. Local files are only read when a live request is serialized.
struct ImageRef {
    std::string source;
    std::string media_type;  // empty: guessed from the extension

    friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

struct ContentPart {
    enum class Kind { Text, Image };

    Kind kind = Kind::Text;
    std::string text;
    ImageRef image;

    static ContentPart make_text(std::string text);
    static ContentPart make_image(ImageRef image);
};

enum class Role { System, User, Assistant };

struct ChatMessage {
    Role role = Role::User;
    std::vector<ContentPart> parts;

    /// A user turn with the images first, then the text.
    static ChatMessage user(std::string text, std::span<const ImageRef> images = {});
    static ChatMessage system(std::string text);

    /// Throws InvalidInput unless there is at least one part and images only
    /// appear in user messages.
    void validate() const;
};

struct GenerationConfig {
    std::string model_id;
    int max_new_tokens = 8192;
    std::optional<double> temperature;
};

struct ChatResult {
    std::string text;
    std::uint64_t prompt_units = 0;
    std::uint64_t completion_units = 0;
    std::chrono::milliseconds latency{0};
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    GenerationConfig config;
};

enum class ImageEncoding {
    Reference,  // image sources are written as given
    Inline,     // local files become base64 data: URIs
};

/// OpenAI chat-completions request body.
nlohmann::json to_wire_json(const ChatRequest& request, ImageEncoding images = ImageEncoding::Reference);

/// SHA-256 of the reference-encoded request body; the replay key.
std::string request_hash(const ChatRequest& request);

/// Parses a chat-completions response body. Throws MalformedResponse.
ChatResult parse_wire_response(const nlohmann::json& body);

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual ChatResult chat(const std::vector<ChatMessage>& messages, const GenerationConfig& config) = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_backoff{500};
    std::chrono::milliseconds max_backoff{30'000};
    /// Fraction of each delay that is randomised away, in [0, 1].
    double jitter = 0.5;
    std::uint64_t jitter_seed = 0;
    /// Injected for tests; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
};

bool is_retryable(ErrorCode code);

/// Retries rate-limit and timeout failures with exponential backoff. Other
/// errors propagate immediately. After the budget is spent, throws
/// BudgetExhausted whose cause() is the last underlying error.
ChatResult chat_with_retry(ChatClient& client, const std::vector<ChatMessage>& messages,
                           const GenerationConfig& config, const RetryPolicy& policy);

/// Caps the number of in-flight requests across every thread sharing it.
class BoundedClient final : public ChatClient {
public:
    BoundedClient(ChatClient& inner, std::ptrdiff_t max_in_flight);

    ChatResult chat(const std::vector<ChatMessage>& messages, const GenerationConfig& config) override;

private:
    ChatClient& inner_;
    std::counting_semaphore<> slots_;
};

/// Wraps any client with chat_with_retry so callers that take a ChatClient&
/// inherit the retry policy.
class RetryingClient final : public ChatClient {
public:
    RetryingClient(ChatClient& inner, RetryPolicy policy) : inner_(inner), policy_(std::move(policy)) {}

    ChatResult chat(const std::vector<ChatMessage>& messages, const GenerationConfig& config) override {
        return chat_with_retry(inner_, messages, config, policy_);
    }

private:
    ChatClient& inner_;
    RetryPolicy policy_;
};

struct OpenAiOptions {
    std::string base_url;  // e.g. https://api.openai.com/v1
    std::string api_key;
    std::chrono::seconds timeout{600};

    /// Reads LWF_BASE_URL and LWF_API_KEY.
    static OpenAiOptions from_env();
};

class OpenAiClient final : public ChatClient {
public:
    explicit OpenAiClient(OpenAiOptions options);

    ChatResult chat(const std::vector<ChatMessage>& messages, const GenerationConfig& config) override;

private:
    OpenAiOptions options_;
    std::string scheme_host_port_;
    std::string path_prefix_;
};

/// One transcript line. `response` is either
///   {"text": ..., "prompt_units": n, "completion_units": n}
/// or {"error": "<error code name>", "message": ...}.
struct ReplayEntry {
    std::string request_hash;
    nlohmann::json response;
    nlohmann::json request;  // informational, may be null
};

std::vector<ReplayEntry> load_transcript(const std::filesystem::path& path);

/// Serves responses from a transcript keyed by request hash. Entries sharing a
/// hash are served in file order and the last one repeats once the earlier
/// ones are consumed. Unknown requests throw ReplayMiss.
class ReplayClient final : public ChatClient {
public:
    explicit ReplayClient(std::vector<ReplayEntry> entries);
    explicit ReplayClient(const std::filesystem::path& transcript);

    ChatResult chat(const std::vector<ChatMessage>& messages, const GenerationConfig& config) override;

    std::size_t calls() const { return calls_.load(); }

private:
    struct Queue {
        std::vector<nlohmann::json> responses;
        std::size_t next = 0;
    };

    std::mutex mu_;
    std::map<std::string, Queue> by_hash_;
    std::atomic<std::size_t> calls_{0};
};

/// Forwards to `inner` and appends every outcome, including errors, to a
/// transcript that ReplayClient can serve later.
class RecordingClient final : public ChatClient {
public:
    RecordingClient(ChatClient& inner, std::filesystem::path transcript);

    ChatResult chat(const std::vector<ChatMessage>& messages, const GenerationConfig& config) override;

private:
    ChatClient& inner_;
    std::filesystem::path path_;
    std::mutex mu_;
};

/// Transcript representation of a result or an error.
nlohmann::json encode_result(const ChatResult& result);
nlohmann::json encode_error(const Error& error);

}  // namespace lwf
