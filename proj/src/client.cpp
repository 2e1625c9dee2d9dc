#include "lwf/client.hpp"

#include "lwf/crypto.hpp"
#include "lwf/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace lwf {

using json = nlohmann::json;

namespace {

std::string_view role_name(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

std::string guess_media_type(std::string_view source) {
    const auto dot = source.rfind('.');
    const std::string ext = dot == std::string_view::npos ? "" : to_lower_ascii(source.substr(dot + 1));
    if (ext == "png") return "image/png";
    if (ext == "gif") return "image/gif";
    if (ext == "webp") return "image/webp";
    return "image/jpeg";
}

bool is_remote(std::string_view source) {
    return source.starts_with("http://") || source.starts_with("https://") || source.starts_with("data:");
}

std::string image_url(const ImageRef& image, ImageEncoding encoding) {
    if (encoding == ImageEncoding::Reference || is_remote(image.source)) return image.source;
    std::ifstream in(image.source, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot read image '" + image.source + "'");
    std::ostringstream bytes;
    bytes << in.rdbuf();
    const std::string media = image.media_type.empty() ? guess_media_type(image.source) : image.media_type;
    return "data:" + media + ";base64," + crypto::base64_encode(bytes.str());
}

}  // namespace

ContentPart ContentPart::make_text(std::string text) {
    ContentPart p;
    p.kind = Kind::Text;
    p.text = std::move(text);
    return p;
}

ContentPart ContentPart::make_image(ImageRef image) {
    ContentPart p;
    p.kind = Kind::Image;
    p.image = std::move(image);
    return p;
}

ChatMessage ChatMessage::user(std::string text, std::span<const ImageRef> images) {
    ChatMessage m;
    m.role = Role::User;
    for (const auto& img : images) m.parts.push_back(ContentPart::make_image(img));
    m.parts.push_back(ContentPart::make_text(std::move(text)));
    return m;
}

ChatMessage ChatMessage::system(std::string text) {
    ChatMessage m;
    m.role = Role::System;
    m.parts.push_back(ContentPart::make_text(std::move(text)));
    return m;
}

void ChatMessage::validate() const {
    if (parts.empty()) fail(ErrorCode::InvalidInput, "chat message has no content parts");
    if (role != Role::User) {
        for (const auto& p : parts) {
            if (p.kind == ContentPart::Kind::Image) {
                fail(ErrorCode::InvalidInput, "image parts are only allowed in user messages");
            }
        }
    }
}

json to_wire_json(const ChatRequest& request, ImageEncoding images) {
    if (request.config.max_new_tokens < 1) fail(ErrorCode::InvalidInput, "max_new_tokens must be >= 1");
    json messages = json::array();
    for (const auto& m : request.messages) {
        m.validate();
        const bool text_only = std::all_of(m.parts.begin(), m.parts.end(),
                                           [](const ContentPart& p) { return p.kind == ContentPart::Kind::Text; });
        json msg = {{"role", role_name(m.role)}};
        if (text_only && m.parts.size() == 1) {
            msg["content"] = m.parts.front().text;
        } else {
            json content = json::array();
            for (const auto& p : m.parts) {
                if (p.kind == ContentPart::Kind::Text) {
                    content.push_back({{"type", "text"}, {"text", p.text}});
                } else {
                    content.push_back({{"type", "image_url"}, {"image_url", {{"url", image_url(p.image, images)}}}});
                }
            }
            msg["content"] = std::move(content);
        }
        messages.push_back(std::move(msg));
    }
    json body = {
        {"model", request.config.model_id},
        {"messages", std::move(messages)},
        {"max_tokens", request.config.max_new_tokens},
    };
    if (request.config.temperature) body["temperature"] = *request.config.temperature;
    return body;
}

std::string request_hash(const ChatRequest& request) {
    return crypto::sha256_hex(to_wire_json(request, ImageEncoding::Reference).dump());
}

ChatResult parse_wire_response(const json& body) {
    try {
        const json& choices = body.at("choices");
        if (!choices.is_array() || choices.empty()) fail(ErrorCode::MalformedResponse, "response has no choices");
        const json& content = choices.at(0).at("message").at("content");
        ChatResult r;
        if (content.is_string()) {
            r.text = content.get<std::string>();
        } else if (content.is_null()) {
            r.text.clear();
        } else {
            fail(ErrorCode::MalformedResponse, "message content is not a string");
        }
        if (body.contains("usage") && body["usage"].is_object()) {
            const json& usage = body["usage"];
            r.prompt_units = usage.value("prompt_tokens", std::uint64_t{0});
            r.completion_units = usage.value("completion_tokens", std::uint64_t{0});
        }
        return r;
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedResponse, std::string("unexpected chat-completions response: ") + e.what());
    }
}

bool is_retryable(ErrorCode code) {
    return code == ErrorCode::RateLimit || code == ErrorCode::Timeout;
}

ChatResult chat_with_retry(ChatClient& client, const std::vector<ChatMessage>& messages,
                           const GenerationConfig& config, const RetryPolicy& policy) {
    if (policy.max_attempts < 1) fail(ErrorCode::InvalidInput, "retry policy needs max_attempts >= 1");
    std::mt19937_64 rng(policy.jitter_seed);
    const double jitter = std::clamp(policy.jitter, 0.0, 1.0);
    for (int attempt = 1;; ++attempt) {
        try {
            return client.chat(messages, config);
        } catch (const Error& e) {
            if (!is_retryable(e.code())) throw;
            if (attempt >= policy.max_attempts) {
                throw Error(ErrorCode::BudgetExhausted,
                            "retry budget of " + std::to_string(policy.max_attempts) +
                                " attempts exhausted; last error (" + std::string(to_string(e.code())) +
                                "): " + e.what(),
                            e.code());
            }
            const double exp_delay = static_cast<double>(policy.base_backoff.count()) * std::pow(2.0, attempt - 1);
            const double capped = std::min(exp_delay, static_cast<double>(policy.max_backoff.count()));
            const double u = std::generate_canonical<double, 53>(rng);
            const auto delay = std::chrono::milliseconds(static_cast<std::int64_t>(capped * (1.0 - jitter * u)));
            if (policy.sleep) {
                policy.sleep(delay);
            } else {
                std::this_thread::sleep_for(delay);
            }
        }
    }
}

BoundedClient::BoundedClient(ChatClient& inner, std::ptrdiff_t max_in_flight)
    : inner_(inner), slots_(std::max<std::ptrdiff_t>(1, max_in_flight)) {}

ChatResult BoundedClient::chat(const std::vector<ChatMessage>& messages, const GenerationConfig& config) {
    slots_.acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{slots_};
    return inner_.chat(messages, config);
}

// --- replay ---------------------------------------------------------------

json encode_result(const ChatResult& result) {
    return {{"text", result.text},
            {"prompt_units", result.prompt_units},
            {"completion_units", result.completion_units}};
}

json encode_error(const Error& error) {
    return {{"error", to_string(error.code())}, {"message", error.what()}};
}

std::vector<ReplayEntry> load_transcript(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open replay transcript '" + path.string() + "'");
    std::vector<ReplayEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("request_hash") || !j.contains("response")) {
            fail(ErrorCode::InvalidInput,
                 path.string() + ":" + std::to_string(lineno) + ": expected {request_hash, response}");
        }
        entries.push_back({j["request_hash"].get<std::string>(), j["response"], j.value("request", json())});
    }
    return entries;
}

ReplayClient::ReplayClient(std::vector<ReplayEntry> entries) {
    for (auto& e : entries) by_hash_[e.request_hash].responses.push_back(std::move(e.response));
}

ReplayClient::ReplayClient(const std::filesystem::path& transcript) : ReplayClient(load_transcript(transcript)) {}

ChatResult ReplayClient::chat(const std::vector<ChatMessage>& messages, const GenerationConfig& config) {
    ++calls_;
    const ChatRequest request{messages, config};
    const std::string hash = request_hash(request);
    json response;
    {
        std::lock_guard lock(mu_);
        const auto it = by_hash_.find(hash);
        if (it == by_hash_.end()) {
            std::string preview = to_wire_json(request).dump();
            if (preview.size() > 240) preview = preview.substr(0, 240) + "...";
            fail(ErrorCode::ReplayMiss, "no transcript entry for request " + hash + ": " + preview);
        }
        Queue& q = it->second;
        response = q.responses[std::min(q.next, q.responses.size() - 1)];
        if (q.next < q.responses.size()) ++q.next;
    }
    if (response.contains("error")) {
        const std::string name = response["error"].get<std::string>();
        const auto code = error_code_from_string(name);
        if (!code) fail(ErrorCode::InvalidInput, "transcript names unknown error kind '" + name + "'");
        fail(*code, response.value("message", "replayed " + name));
    }
    ChatResult r;
    r.text = response.value("text", "");
    r.prompt_units = response.value("prompt_units", std::uint64_t{0});
    r.completion_units = response.value("completion_units", std::uint64_t{0});
    return r;
}

RecordingClient::RecordingClient(ChatClient& inner, std::filesystem::path transcript)
    : inner_(inner), path_(std::move(transcript)) {}

ChatResult RecordingClient::chat(const std::vector<ChatMessage>& messages, const GenerationConfig& config) {
    const ChatRequest request{messages, config};
    const auto append = [&](const json& response) {
        const json line = {{"request_hash", request_hash(request)},
                           {"request", to_wire_json(request)},
                           {"response", response}};
        std::lock_guard lock(mu_);
        std::ofstream out(path_, std::ios::app);
        if (!out) fail(ErrorCode::Io, "cannot append to transcript '" + path_.string() + "'");
        out << line.dump() << '\n';
    };
    try {
        ChatResult r = inner_.chat(messages, config);
        append(encode_result(r));
        return r;
    } catch (const Error& e) {
        append(encode_error(e));
        throw;
    }
}

}  // namespace lwf
