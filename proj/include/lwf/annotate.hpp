#pragma once

// Page-level script revision service: accounts grouped by major, decks of
// slide pages with original and revised scripts, admin review, progress and
// export into SegmentedScript. Decks and accounts live as JSON files under a
// data directory.

#include "lwf/dpo.hpp"
#include "lwf/error.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace lwf::annotate {

enum class Role { Annotator, Admin };
enum class PageStatus { Untouched, Saved, Approved, Rejected };
enum class Verdict { Approved, Rejected };

std::string_view to_string(Role r);
std::string_view to_string(PageStatus s);
PageStatus parse_page_status(std::string_view s);
Verdict parse_verdict(std::string_view s);

struct Account {
    std::string username;
    std::string major;  // empty for admins
    std::string credential_hash;
    Role role = Role::Annotator;
};

struct RevisionEntry {
    std::string text;
    std::string annotator;
    std::string timestamp;  // UTC, ISO 8601
};

struct Page {
    int page_index = 0;
    std::string image_ref;
    std::string original_script;
    std::optional<std::string> revised_script;
    PageStatus status = PageStatus::Untouched;
    std::vector<RevisionEntry> history;
};

struct ReviewEntry {
    std::string verdict;
    std::string notes;
    std::string reviewer;
    std::string timestamp;
};

struct Deck {
    std::string id;
    std::string subject;  // matched against annotator majors
    std::vector<Page> pages;
    std::vector<ReviewEntry> reviews;

    /// Non-empty id and subject, at least one page, page_index 1..n.
    void validate() const;
    bool approved() const;
};

struct StatusCounts {
    std::size_t untouched = 0;
    std::size_t saved = 0;
    std::size_t approved = 0;
    std::size_t rejected = 0;

    std::size_t total() const { return untouched + saved + approved + rejected; }
    /// (saved + approved) / total, 0 for an empty set.
    double completion() const;
    void add(PageStatus s);
    StatusCounts& operator+=(const StatusCounts& o);
};

struct DeckSummary {
    std::string id;
    std::string subject;
    StatusCounts counts;
};

struct ProgressStats {
    std::vector<DeckSummary> decks;              // sorted by id
    std::map<std::string, StatusCounts> majors;  // by subject
    StatusCounts totals;
};

/// File layout: <dir>/accounts.json and <dir>/decks/<id>.json, each replaced
/// atomically on write.
class Store {
public:
    explicit Store(std::filesystem::path dir);

    std::vector<Account> load_accounts() const;
    void save_accounts(const std::vector<Account>& accounts) const;
    std::vector<Deck> load_decks() const;
    void save_deck(const Deck& deck) const;

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

using Clock = std::function<std::chrono::system_clock::time_point()>;

struct ServiceOptions {
    std::chrono::seconds token_ttl{std::chrono::hours(12)};
    Clock clock = [] { return std::chrono::system_clock::now(); };
};

/// Thread-safe. Account and session state sit behind one reader/writer lock;
/// each deck has its own mutex so writes to different decks do not contend.
class Service {
public:
    explicit Service(Store store, ServiceOptions options = {});

    /// Creates an annotator and returns a session token.
    std::string register_account(const std::string& username, const std::string& password, const std::string& major);
    /// Creates or replaces an admin account; used at startup.
    void ensure_admin(const std::string& username, const std::string& password);
    std::string login(const std::string& username, const std::string& password);

    /// Adds and persists a new deck; Duplicate if the id exists.
    void put_deck(const Deck& deck);

    std::vector<DeckSummary> list_decks(const std::string& token) const;
    Page get_page(const std::string& token, const std::string& deck_id, int page_index) const;
    PageStatus save_revision(const std::string& token, const std::string& deck_id, int page_index,
                             const std::string& text);
    /// Approval needs every page saved; rejection reopens saved pages.
    std::vector<PageStatus> review(const std::string& token, const std::string& deck_id, Verdict verdict,
                                   const std::string& notes);
    ProgressStats progress(const std::string& token) const;
    dpo::SegmentedScript export_revisions(const std::string& token, const std::string& deck_id) const;

private:
    struct Session {
        std::string username;
        std::chrono::system_clock::time_point expires;
    };
    struct DeckSlot {
        mutable std::mutex mutex;
        Deck deck;
    };

    Account authenticate(const std::string& token) const;
    Account require_admin(const std::string& token) const;
    DeckSlot& slot(const std::string& deck_id) const;
    void check_access(const Account& who, const Deck& deck) const;
    std::string issue_token(const std::string& username);
    std::string now_iso() const;

    Store store_;
    ServiceOptions options_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, Account> accounts_;
    std::map<std::string, Session> sessions_;
    std::map<std::string, std::unique_ptr<DeckSlot>> decks_;
};

/// REST front end over a Service. Error bodies are {"error", "message"}.
class HttpServer {
public:
    explicit HttpServer(Service& service, std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

int http_status(ErrorCode code);

void to_json(nlohmann::json& j, const Account& a);
void from_json(const nlohmann::json& j, Account& a);
void to_json(nlohmann::json& j, const Page& p);
void to_json(nlohmann::json& j, const Deck& d);
void from_json(const nlohmann::json& j, Deck& d);
void to_json(nlohmann::json& j, const StatusCounts& c);
void to_json(nlohmann::json& j, const DeckSummary& s);
void to_json(nlohmann::json& j, const ProgressStats& p);

}  // namespace lwf::annotate
