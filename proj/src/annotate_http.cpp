#include "lwf/annotate.hpp"

#include <httplib.h>

#include <charconv>

namespace lwf::annotate {

using json = nlohmann::json;

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::BadCredential:
        case ErrorCode::ExpiredToken: return 401;
        case ErrorCode::Forbidden: return 403;
        case ErrorCode::NotFound: return 404;
        case ErrorCode::Duplicate:
        case ErrorCode::InvalidTransition:
        case ErrorCode::NotReady: return 409;
        case ErrorCode::Locked: return 423;
        case ErrorCode::Io: return 500;
        default: return 400;
    }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    send_json(res, status, {{"error", code}, {"message", message}});
}

std::string bearer(const httplib::Request& req) {
    const std::string h = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (h.size() > prefix.size() && h.compare(0, prefix.size(), prefix) == 0) return h.substr(prefix.size());
    return {};
}

json body_json(const httplib::Request& req) {
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorCode::InvalidInput, "request body must be a JSON object");
    return j;
}

std::string field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) fail(ErrorCode::InvalidInput, std::string("missing string field '") + key + "'");
    return it->get<std::string>();
}

int page_number(const std::string& s) {
    int n = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc{} || ptr != s.data() + s.size()) fail(ErrorCode::NotFound, "bad page number '" + s + "'");
    return n;
}

// Wraps a handler so domain errors become JSON error bodies.
template <typename F>
httplib::Server::Handler guarded(F fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            send_error(res, http_status(e.code()), to_string(e.code()), e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

}  // namespace

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(Service& service, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>()) {
    auto& srv = impl_->server;
    Service* svc = &service;

    srv.Post("/api/register", guarded([svc](const auto& req, auto& res) {
                 const json b = body_json(req);
                 const std::string token =
                     svc->register_account(field(b, "username"), field(b, "password"), field(b, "major"));
                 send_json(res, 201, {{"token", token}});
             }));
    srv.Post("/api/login", guarded([svc](const auto& req, auto& res) {
                 const json b = body_json(req);
                 send_json(res, 200, {{"token", svc->login(field(b, "username"), field(b, "password"))}});
             }));
    srv.Get("/api/decks", guarded([svc](const auto& req, auto& res) {
                send_json(res, 200, {{"decks", svc->list_decks(bearer(req))}});
            }));
    srv.Get(R"(/api/decks/([^/]+)/pages/([^/]+))", guarded([svc](const auto& req, auto& res) {
                const Page p = svc->get_page(bearer(req), req.matches[1], page_number(req.matches[2]));
                json j = p;
                j.erase("history");
                send_json(res, 200, j);
            }));
    srv.Put(R"(/api/decks/([^/]+)/pages/([^/]+)/revision)", guarded([svc](const auto& req, auto& res) {
                const json b = body_json(req);
                const PageStatus st =
                    svc->save_revision(bearer(req), req.matches[1], page_number(req.matches[2]), field(b, "text"));
                send_json(res, 200, {{"status", to_string(st)}});
            }));
    srv.Post(R"(/api/admin/review/([^/]+))", guarded([svc](const auto& req, auto& res) {
                 const json b = body_json(req);
                 const Verdict v = parse_verdict(field(b, "verdict"));
                 const auto statuses = svc->review(bearer(req), req.matches[1], v, b.value("notes", ""));
                 json pages = json::array();
                 for (const auto s : statuses) pages.push_back(to_string(s));
                 send_json(res, 200, {{"deck_id", req.matches[1]}, {"pages", pages}});
             }));
    srv.Get("/api/admin/progress", guarded([svc](const auto& req, auto& res) {
                send_json(res, 200, svc->progress(bearer(req)));
            }));
    srv.Get(R"(/api/admin/export/([^/]+))", guarded([svc](const auto& req, auto& res) {
                send_json(res, 200, svc->export_revisions(bearer(req), req.matches[1]));
            }));

    if (static_dir) {
        if (!srv.set_mount_point("/", static_dir->string())) {
            fail(ErrorCode::Io, "static directory " + static_dir->string() + " does not exist");
        }
    }
}

HttpServer::~HttpServer() {
    stop();
}

int HttpServer::bind(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) fail(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::listen() {
    impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    impl_->server.stop();
}

}  // namespace lwf::annotate
