#include "lwf/annotate.hpp"

#include "lwf/jsonl.hpp"

#include <algorithm>

namespace lwf::annotate {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Role r) {
    return r == Role::Admin ? "admin" : "annotator";
}

std::string_view to_string(PageStatus s) {
    switch (s) {
        case PageStatus::Untouched: return "untouched";
        case PageStatus::Saved: return "saved";
        case PageStatus::Approved: return "approved";
        case PageStatus::Rejected: return "rejected";
    }
    return "?";
}

PageStatus parse_page_status(std::string_view s) {
    for (const auto st : {PageStatus::Untouched, PageStatus::Saved, PageStatus::Approved, PageStatus::Rejected}) {
        if (to_string(st) == s) return st;
    }
    fail(ErrorCode::InvalidInput, "unknown page status '" + std::string(s) + "'");
}

Verdict parse_verdict(std::string_view s) {
    if (s == "approved") return Verdict::Approved;
    if (s == "rejected") return Verdict::Rejected;
    fail(ErrorCode::InvalidInput, "verdict must be 'approved' or 'rejected', got '" + std::string(s) + "'");
}

void Deck::validate() const {
    if (id.empty() || id.find_first_of("/\\") != std::string::npos || id == "." || id == "..") {
        fail(ErrorCode::InvalidInput, "deck id '" + id + "' is not a valid file name");
    }
    if (subject.empty()) fail(ErrorCode::InvalidInput, "deck '" + id + "' has no subject");
    if (pages.empty()) fail(ErrorCode::InvalidInput, "deck '" + id + "' has no pages");
    for (std::size_t i = 0; i < pages.size(); ++i) {
        if (pages[i].page_index != static_cast<int>(i) + 1) {
            fail(ErrorCode::InvalidInput, "deck '" + id + "': page indices must run 1.." +
                                              std::to_string(pages.size()));
        }
    }
}

bool Deck::approved() const {
    return std::all_of(pages.begin(), pages.end(), [](const Page& p) { return p.status == PageStatus::Approved; });
}

double StatusCounts::completion() const {
    const auto n = total();
    return n ? static_cast<double>(saved + approved) / static_cast<double>(n) : 0.0;
}

void StatusCounts::add(PageStatus s) {
    switch (s) {
        case PageStatus::Untouched: ++untouched; break;
        case PageStatus::Saved: ++saved; break;
        case PageStatus::Approved: ++approved; break;
        case PageStatus::Rejected: ++rejected; break;
    }
}

StatusCounts& StatusCounts::operator+=(const StatusCounts& o) {
    untouched += o.untouched;
    saved += o.saved;
    approved += o.approved;
    rejected += o.rejected;
    return *this;
}

void to_json(json& j, const Account& a) {
    j = {{"username", a.username}, {"major", a.major}, {"credential_hash", a.credential_hash},
         {"role", to_string(a.role)}};
}

void from_json(const json& j, Account& a) {
    a.username = j.at("username").get<std::string>();
    a.major = j.value("major", "");
    a.credential_hash = j.at("credential_hash").get<std::string>();
    a.role = j.value("role", "annotator") == "admin" ? Role::Admin : Role::Annotator;
}

void to_json(json& j, const Page& p) {
    json history = json::array();
    for (const auto& h : p.history) {
        history.push_back({{"text", h.text}, {"annotator", h.annotator}, {"timestamp", h.timestamp}});
    }
    j = {{"page_index", p.page_index},
         {"image_ref", p.image_ref},
         {"original_script", p.original_script},
         {"revised_script", p.revised_script ? json(*p.revised_script) : json(nullptr)},
         {"status", to_string(p.status)},
         {"history", history}};
}

void to_json(json& j, const Deck& d) {
    json reviews = json::array();
    for (const auto& r : d.reviews) {
        reviews.push_back(
            {{"verdict", r.verdict}, {"notes", r.notes}, {"reviewer", r.reviewer}, {"timestamp", r.timestamp}});
    }
    j = {{"id", d.id}, {"subject", d.subject}, {"pages", d.pages}, {"reviews", reviews}};
}

void from_json(const json& j, Deck& d) {
    d = Deck{};
    d.id = j.at("id").get<std::string>();
    d.subject = j.at("subject").get<std::string>();
    for (const auto& pj : j.at("pages")) {
        Page p;
        p.page_index = pj.at("page_index").get<int>();
        p.image_ref = pj.value("image_ref", "");
        p.original_script = pj.at("original_script").get<std::string>();
        if (pj.contains("revised_script") && !pj["revised_script"].is_null()) {
            p.revised_script = pj["revised_script"].get<std::string>();
        }
        p.status = parse_page_status(pj.value("status", "untouched"));
        for (const auto& h : pj.value("history", json::array())) {
            p.history.push_back({h.at("text").get<std::string>(), h.value("annotator", ""), h.value("timestamp", "")});
        }
        d.pages.push_back(std::move(p));
    }
    for (const auto& r : j.value("reviews", json::array())) {
        d.reviews.push_back({r.at("verdict").get<std::string>(), r.value("notes", ""), r.value("reviewer", ""),
                             r.value("timestamp", "")});
    }
}

void to_json(json& j, const StatusCounts& c) {
    j = {{"untouched", c.untouched}, {"saved", c.saved},     {"approved", c.approved},
         {"rejected", c.rejected},   {"total", c.total()},   {"completion", c.completion()}};
}

void to_json(json& j, const DeckSummary& s) {
    j = {{"id", s.id}, {"subject", s.subject}, {"counts", s.counts}};
}

void to_json(json& j, const ProgressStats& p) {
    json majors = json::object();
    for (const auto& [major, counts] : p.majors) majors[major] = counts;
    j = {{"decks", p.decks}, {"majors", majors}, {"totals", p.totals}};
}

Store::Store(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_ / "decks", ec);
    if (ec) fail(ErrorCode::Io, "cannot create data directory " + dir_.string() + ": " + ec.message());
}

std::vector<Account> Store::load_accounts() const {
    const auto path = dir_ / "accounts.json";
    if (!fs::exists(path)) return {};
    return io::read_json(path).get<std::vector<Account>>();
}

void Store::save_accounts(const std::vector<Account>& accounts) const {
    io::write_file_atomic(dir_ / "accounts.json", json(accounts).dump(2) + "\n");
}

std::vector<Deck> Store::load_decks() const {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir_ / "decks")) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Deck> decks;
    for (const auto& f : files) {
        Deck d;
        try {
            d = io::read_json(f).get<Deck>();
        } catch (const json::exception& e) {
            fail(ErrorCode::InvalidInput, "deck file " + f.string() + ": " + e.what());
        }
        d.validate();
        if (d.id != f.stem().string()) {
            fail(ErrorCode::InvalidInput, "deck file " + f.string() + " holds deck '" + d.id + "'");
        }
        decks.push_back(std::move(d));
    }
    return decks;
}

void Store::save_deck(const Deck& deck) const {
    io::write_file_atomic(dir_ / "decks" / (deck.id + ".json"), json(deck).dump(2) + "\n");
}

}  // namespace lwf::annotate
