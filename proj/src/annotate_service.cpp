#include "lwf/annotate.hpp"

#include "lwf/crypto.hpp"
#include "lwf/prompts.hpp"

#include <ctime>

namespace lwf::annotate {

namespace {

constexpr std::size_t kTokenBytes = 24;

std::string page_name(const std::string& deck_id, int page_index) {
    return "page " + std::to_string(page_index) + " of deck '" + deck_id + "'";
}

}  // namespace

Service::Service(Store store, ServiceOptions options) : store_(std::move(store)), options_(std::move(options)) {
    for (auto& a : store_.load_accounts()) {
        const std::string name = a.username;
        accounts_.emplace(name, std::move(a));
    }
    for (auto& d : store_.load_decks()) {
        auto s = std::make_unique<DeckSlot>();
        const std::string id = d.id;
        s->deck = std::move(d);
        decks_.emplace(id, std::move(s));
    }
}

std::string Service::now_iso() const {
    const std::time_t t = std::chrono::system_clock::to_time_t(options_.clock());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Caller holds the exclusive lock.
std::string Service::issue_token(const std::string& username) {
    const auto now = options_.clock();
    std::erase_if(sessions_, [&](const auto& kv) { return kv.second.expires <= now; });
    std::string token = crypto::random_hex(kTokenBytes);
    sessions_[token] = Session{username, now + options_.token_ttl};
    return token;
}

std::string Service::register_account(const std::string& username, const std::string& password,
                                      const std::string& major) {
    if (username.empty() || password.empty()) fail(ErrorCode::InvalidInput, "username and password are required");
    if (major.empty()) fail(ErrorCode::InvalidInput, "annotators must choose a major");
    const std::string hash = crypto::hash_password(password);
    std::unique_lock lock(mutex_);
    if (accounts_.contains(username)) fail(ErrorCode::Duplicate, "username '" + username + "' is taken");
    accounts_[username] = Account{username, major, hash, Role::Annotator};
    std::vector<Account> all;
    for (const auto& [_, a] : accounts_) all.push_back(a);
    try {
        store_.save_accounts(all);
    } catch (...) {
        accounts_.erase(username);
        throw;
    }
    return issue_token(username);
}

void Service::ensure_admin(const std::string& username, const std::string& password) {
    if (username.empty() || password.empty()) fail(ErrorCode::InvalidInput, "admin username and password are required");
    const std::string hash = crypto::hash_password(password);
    std::unique_lock lock(mutex_);
    const auto it = accounts_.find(username);
    if (it != accounts_.end() && it->second.role != Role::Admin) {
        fail(ErrorCode::Duplicate, "username '" + username + "' belongs to an annotator");
    }
    accounts_[username] = Account{username, "", hash, Role::Admin};
    std::vector<Account> all;
    for (const auto& [_, a] : accounts_) all.push_back(a);
    store_.save_accounts(all);
}

std::string Service::login(const std::string& username, const std::string& password) {
    std::string hash;
    {
        std::shared_lock lock(mutex_);
        const auto it = accounts_.find(username);
        if (it == accounts_.end()) fail(ErrorCode::BadCredential, "unknown username or wrong password");
        hash = it->second.credential_hash;
    }
    if (!crypto::verify_password(password, hash)) fail(ErrorCode::BadCredential, "unknown username or wrong password");
    std::unique_lock lock(mutex_);
    return issue_token(username);
}

Account Service::authenticate(const std::string& token) const {
    std::shared_lock lock(mutex_);
    const auto it = sessions_.find(token);
    if (token.empty() || it == sessions_.end()) fail(ErrorCode::BadCredential, "missing or unknown session token");
    if (it->second.expires <= options_.clock()) fail(ErrorCode::ExpiredToken, "session expired; log in again");
    const auto acc = accounts_.find(it->second.username);
    if (acc == accounts_.end()) fail(ErrorCode::BadCredential, "session account no longer exists");
    return acc->second;
}

Account Service::require_admin(const std::string& token) const {
    Account a = authenticate(token);
    if (a.role != Role::Admin) fail(ErrorCode::Forbidden, "admin role required");
    return a;
}

Service::DeckSlot& Service::slot(const std::string& deck_id) const {
    std::shared_lock lock(mutex_);
    const auto it = decks_.find(deck_id);
    if (it == decks_.end()) fail(ErrorCode::NotFound, "unknown deck '" + deck_id + "'");
    return *it->second;
}

void Service::check_access(const Account& who, const Deck& deck) const {
    if (who.role == Role::Admin || who.major == deck.subject) return;
    fail(ErrorCode::Forbidden, "deck '" + deck.id + "' is outside major '" + who.major + "'");
}

void Service::put_deck(const Deck& deck) {
    deck.validate();
    std::unique_lock lock(mutex_);
    if (decks_.contains(deck.id)) fail(ErrorCode::Duplicate, "deck '" + deck.id + "' already exists");
    store_.save_deck(deck);
    auto s = std::make_unique<DeckSlot>();
    s->deck = deck;
    decks_.emplace(deck.id, std::move(s));
}

std::vector<DeckSummary> Service::list_decks(const std::string& token) const {
    const Account who = authenticate(token);
    std::vector<DeckSummary> out;
    std::shared_lock lock(mutex_);
    for (const auto& [id, s] : decks_) {
        std::lock_guard deck_lock(s->mutex);
        if (who.role != Role::Admin && s->deck.subject != who.major) continue;
        DeckSummary summary{id, s->deck.subject, {}};
        for (const auto& p : s->deck.pages) summary.counts.add(p.status);
        out.push_back(std::move(summary));
    }
    return out;
}

Page Service::get_page(const std::string& token, const std::string& deck_id, int page_index) const {
    const Account who = authenticate(token);
    DeckSlot& s = slot(deck_id);
    std::lock_guard lock(s.mutex);
    check_access(who, s.deck);
    if (page_index < 1 || page_index > static_cast<int>(s.deck.pages.size())) {
        fail(ErrorCode::NotFound, "no " + page_name(deck_id, page_index) + "; pages run 1.." +
                                      std::to_string(s.deck.pages.size()));
    }
    return s.deck.pages[static_cast<std::size_t>(page_index - 1)];
}

PageStatus Service::save_revision(const std::string& token, const std::string& deck_id, int page_index,
                                  const std::string& text) {
    const Account who = authenticate(token);
    DeckSlot& s = slot(deck_id);
    std::lock_guard lock(s.mutex);
    check_access(who, s.deck);
    if (page_index < 1 || page_index > static_cast<int>(s.deck.pages.size())) {
        fail(ErrorCode::NotFound, "no " + page_name(deck_id, page_index));
    }
    if (s.deck.approved()) fail(ErrorCode::Locked, "deck '" + deck_id + "' is approved and locked");
    if (text.empty()) fail(ErrorCode::InvalidInput, "revised script must be non-empty");

    Deck next = s.deck;
    Page& page = next.pages[static_cast<std::size_t>(page_index - 1)];
    if (page.status == PageStatus::Approved) {
        fail(ErrorCode::InvalidTransition, page_name(deck_id, page_index) + " is approved");
    }
    page.revised_script = text;
    page.status = PageStatus::Saved;
    page.history.push_back({text, who.username, now_iso()});
    store_.save_deck(next);
    s.deck = std::move(next);
    return PageStatus::Saved;
}

std::vector<PageStatus> Service::review(const std::string& token, const std::string& deck_id, Verdict verdict,
                                        const std::string& notes) {
    const Account admin = require_admin(token);
    DeckSlot& s = slot(deck_id);
    std::lock_guard lock(s.mutex);
    Deck next = s.deck;
    if (next.approved()) fail(ErrorCode::InvalidTransition, "deck '" + deck_id + "' is already approved");
    if (verdict == Verdict::Approved) {
        for (const auto& p : next.pages) {
            if (p.status != PageStatus::Saved) {
                fail(ErrorCode::InvalidTransition, "cannot approve deck '" + deck_id + "': page " +
                                                       std::to_string(p.page_index) + " is " +
                                                       std::string(to_string(p.status)));
            }
        }
        for (auto& p : next.pages) p.status = PageStatus::Approved;
    } else {
        for (auto& p : next.pages) {
            if (p.status == PageStatus::Saved) p.status = PageStatus::Rejected;
        }
    }
    next.reviews.push_back({verdict == Verdict::Approved ? "approved" : "rejected", notes, admin.username, now_iso()});
    store_.save_deck(next);
    s.deck = std::move(next);
    std::vector<PageStatus> out;
    for (const auto& p : s.deck.pages) out.push_back(p.status);
    return out;
}

ProgressStats Service::progress(const std::string& token) const {
    require_admin(token);
    ProgressStats stats;
    std::shared_lock lock(mutex_);
    for (const auto& [id, s] : decks_) {
        std::lock_guard deck_lock(s->mutex);
        DeckSummary summary{id, s->deck.subject, {}};
        for (const auto& p : s->deck.pages) summary.counts.add(p.status);
        stats.majors[summary.subject] += summary.counts;
        stats.totals += summary.counts;
        stats.decks.push_back(std::move(summary));
    }
    return stats;
}

dpo::SegmentedScript Service::export_revisions(const std::string& token, const std::string& deck_id) const {
    require_admin(token);
    DeckSlot& s = slot(deck_id);
    std::lock_guard lock(s.mutex);
    if (!s.deck.approved()) fail(ErrorCode::NotReady, "deck '" + deck_id + "' is not approved yet");
    dpo::SegmentedScript script;
    script.instruction = std::string(prompts::kLectureScriptInstruction);
    for (const auto& p : s.deck.pages) {
        script.pages.push_back({p.page_index, p.image_ref, p.original_script, p.revised_script});
    }
    return script;
}

}  // namespace lwf::annotate
