#include "lwf/client.hpp"

#include <httplib.h>

#include <cstdlib>

namespace lwf {

using json = nlohmann::json;

OpenAiOptions OpenAiOptions::from_env() {
    OpenAiOptions o;
    if (const char* url = std::getenv("LWF_BASE_URL")) o.base_url = url;
    if (const char* key = std::getenv("LWF_API_KEY")) o.api_key = key;
    return o;
}

OpenAiClient::OpenAiClient(OpenAiOptions options) : options_(std::move(options)) {
    std::string url = options_.base_url;
    if (url.empty()) fail(ErrorCode::InvalidInput, "no base URL configured (set LWF_BASE_URL or --base-url)");
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) fail(ErrorCode::InvalidInput, "base URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
}

ChatResult OpenAiClient::chat(const std::vector<ChatMessage>& messages, const GenerationConfig& config) {
    if (options_.api_key.empty()) fail(ErrorCode::Auth, "no API key configured (set LWF_API_KEY)");
    const std::string body = to_wire_json(ChatRequest{messages, config}, ImageEncoding::Inline).dump();

    httplib::Client http(scheme_host_port_);
    http.set_connection_timeout(std::chrono::seconds(30));
    http.set_read_timeout(options_.timeout);
    http.set_write_timeout(options_.timeout);
    const httplib::Headers headers = {{"Authorization", "Bearer " + options_.api_key}};

    const auto started = std::chrono::steady_clock::now();
    auto res = http.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
    const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

    if (!res) {
        const auto err = res.error();
        const std::string what = "request to " + scheme_host_port_ + " failed: " + httplib::to_string(err);
        if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
            fail(ErrorCode::Timeout, what);
        }
        fail(ErrorCode::Transport, what);
    }
    const int status = res->status;
    const std::string detail = "HTTP " + std::to_string(status) + ": " + res->body.substr(0, 512);
    if (status == 401 || status == 403) fail(ErrorCode::Auth, detail);
    if (status == 429) fail(ErrorCode::RateLimit, detail);
    if (status == 408 || status == 504) fail(ErrorCode::Timeout, detail);
    if (status < 200 || status >= 300) fail(ErrorCode::Transport, detail);

    const json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) fail(ErrorCode::MalformedResponse, "response body is not JSON: " + res->body.substr(0, 256));
    ChatResult result = parse_wire_response(parsed);
    result.latency = latency;
    return result;
}

}  // namespace lwf
