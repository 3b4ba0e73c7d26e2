#include "fgb/study/store.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>

#include "fgb/error.hpp"
#include "fgb/image.hpp"

namespace fgb::study {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string random_hex(std::size_t bytes) {
    static std::mutex lock;
    static std::random_device device;
    std::lock_guard guard(lock);
    std::string out;
    char buf[3];
    for (std::size_t i = 0; i < bytes; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", static_cast<unsigned>(device() & 0xff));
        out += buf;
    }
    return out;
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_atomic(const fs::path& path, const std::string& text) {
    const auto tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << text;
        out.flush();
        if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace

void to_json(json& j, const PairedReport& r) {
    j = {{"human", r.human}, {"model", r.model}};
}

void apply_event(StudySession& session, const json& event) {
    const auto type = event.at("type").get<std::string>();
    if (type == "created") {
        session = event.at("session").get<StudySession>();
    } else if (type == "response") {
        session.responses.push_back(
            {event.at("index").get<int>(), event.at("choice").get<std::string>(), event.at("latency_ms").get<double>()});
        session.cursor = static_cast<int>(session.responses.size());
        if (session.cursor == static_cast<int>(session.items.size())) session.state = SessionState::Complete;
    } else {
        fail(ErrorCode::Io, "unknown study event '" + type + "'");
    }
}

StudyStore::StudyStore(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_ / "sessions");
    load_all();
}

fs::path StudyStore::dir_for(const std::string& id) const {
    return root_ / "sessions" / id;
}

void StudyStore::append_event(const std::string& id, const json& event) const {
    std::ofstream out(dir_for(id) / "events.jsonl", std::ios::app);
    out << event.dump() << '\n';
    out.flush();
    if (!out) fail(ErrorCode::Io, "cannot append to the event log of " + id);
}

void StudyStore::write_snapshot(const Entry& entry) const {
    write_atomic(dir_for(entry.session.id) / "snapshot.json",
                 json{{"seq", entry.seq}, {"session", entry.session}}.dump(1) + "\n");
}

void StudyStore::load_all() {
    for (const auto& dir : fs::directory_iterator(root_ / "sessions")) {
        if (!dir.is_directory()) continue;
        Entry entry;
        std::uint64_t snap_seq = 0;
        bool have = false;
        if (std::ifstream snap(dir.path() / "snapshot.json"); snap) {
            try {
                json j;
                snap >> j;
                entry.session = j.at("session").get<StudySession>();
                snap_seq = j.at("seq").get<std::uint64_t>();
                have = true;
            } catch (const json::exception&) {
                // Fall back to the log alone.
            }
        }
        entry.seq = have ? snap_seq : 0;
        std::ifstream log(dir.path() / "events.jsonl");
        std::string line;
        while (std::getline(log, line)) {
            json event;
            try {
                event = json::parse(line);
            } catch (const json::exception&) {
                break;  // torn tail from an interrupted append
            }
            const auto seq = event.at("seq").get<std::uint64_t>();
            if (have && seq <= snap_seq) continue;
            apply_event(entry.session, event);
            entry.seq = seq;
            have = true;
        }
        if (!have) continue;
        for (const auto& item : entry.session.items) handles_[item.handle] = item.image_ref;
        write_snapshot(entry);
        sessions_.emplace(entry.session.id, std::move(entry));
    }
}

StudyStore::Entry& StudyStore::entry_for(const std::string& id) {
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorCode::NotFound, "no session '" + id + "'");
    return it->second;
}

const StudyStore::Entry& StudyStore::entry_for(const std::string& id) const {
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorCode::NotFound, "no session '" + id + "'");
    return it->second;
}

StudySession StudyStore::create_session(SessionKind kind, const StudyPools& pools, const std::string& reader_id,
                                        std::uint64_t seed) {
    Entry entry;
    auto& s = entry.session;
    s.kind = kind;
    s.items = compose_items(kind, pools, seed);
    s.reader_id = reader_id;
    s.seed = seed;
    s.created_at = utc_now();
    s.id = random_hex(8);
    for (auto& item : s.items) item.handle = random_hex(16);

    fs::create_directories(dir_for(s.id));
    entry.seq = 1;
    append_event(s.id, {{"seq", entry.seq}, {"type", "created"}, {"session", s}});
    write_snapshot(entry);
    const auto copy = s;
    std::unique_lock guard(map_lock_);
    for (const auto& item : copy.items) handles_[item.handle] = item.image_ref;
    sessions_.emplace(copy.id, std::move(entry));
    return copy;
}

std::optional<NextItem> StudyStore::next_item(const std::string& session_id) const {
    std::shared_lock guard(map_lock_);
    const auto& entry = entry_for(session_id);
    std::lock_guard write(*entry.write_lock);
    const auto& s = entry.session;
    if (s.state == SessionState::Complete) return std::nullopt;
    const auto& item = s.items[static_cast<std::size_t>(s.cursor)];
    return NextItem{item.shown_index, static_cast<int>(s.items.size()), item.handle};
}

StudySession StudyStore::record_response(const std::string& session_id, int shown_index, const std::string& choice,
                                         double latency_ms) {
    std::shared_lock guard(map_lock_);
    auto& entry = entry_for(session_id);
    std::lock_guard write(*entry.write_lock);
    auto& s = entry.session;
    if (shown_index < s.cursor) {
        fail(ErrorCode::DuplicateResponse, "item " + std::to_string(shown_index) + " already answered");
    }
    if (s.state == SessionState::Complete || shown_index != s.cursor) {
        fail(ErrorCode::SequenceError,
             "expected a response for item " + std::to_string(s.cursor) + ", got " + std::to_string(shown_index));
    }
    const auto allowed = choices_for(s.kind);
    if (choice != allowed[0] && choice != allowed[1]) {
        fail(ErrorCode::UsageError, "choice must be " + allowed[0] + " or " + allowed[1]);
    }
    if (!(latency_ms >= 0.0)) fail(ErrorCode::UsageError, "latency_ms must be >= 0");

    const json event = {{"seq", entry.seq + 1},
                        {"type", "response"},
                        {"index", shown_index},
                        {"choice", choice},
                        {"latency_ms", latency_ms}};
    append_event(s.id, event);
    if (crash_before_snapshot_) {
        crash_before_snapshot_ = false;
        fail(ErrorCode::Io, "simulated crash after logging a response");
    }
    apply_event(s, event);
    ++entry.seq;
    write_snapshot(entry);
    return s;
}

StudySession StudyStore::session(const std::string& session_id) const {
    std::shared_lock guard(map_lock_);
    const auto& entry = entry_for(session_id);
    std::lock_guard write(*entry.write_lock);
    return entry.session;
}

std::vector<std::string> StudyStore::session_ids() const {
    std::shared_lock guard(map_lock_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : sessions_) ids.push_back(id);
    return ids;
}

StudyReport StudyStore::report(const std::string& session_id) const {
    return score_session(session(session_id));
}

fs::path StudyStore::image_for(const std::string& handle) const {
    std::shared_lock guard(map_lock_);
    const auto it = handles_.find(handle);
    if (it == handles_.end()) fail(ErrorCode::NotFound, "no image '" + handle + "'");
    return it->second;
}

PairedReport StudyStore::compare_with_model(const std::string& session_id, clf::Classifier& model,
                                            int input_size) const {
    const auto s = session(session_id);
    if (s.kind != SessionKind::Diagnosis) fail(ErrorCode::UsageError, "model comparison needs a DIAGNOSIS session");
    PairedReport out{score_session(s), {}};
    std::vector<fs::path> paths;
    for (const auto& item : s.items) paths.push_back(item.image_ref);
    torch::NoGradGuard no_grad;
    model->eval();
    const auto pred = model->forward(image::load_batch(paths, input_size)).argmax(1).contiguous();
    std::vector<std::string> choices;
    const auto labels = choices_for(s.kind);
    for (std::int64_t i = 0; i < pred.size(0); ++i) {
        choices.push_back(labels[static_cast<std::size_t>(pred[i].item<std::int64_t>())]);
    }
    out.model = score_choices(s, choices);
    return out;
}

}  // namespace fgb::study
