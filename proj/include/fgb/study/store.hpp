#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "fgb/clf/models.hpp"
#include "fgb/study/session.hpp"

namespace fgb::study {

struct NextItem {
    int index = 0;
    int total = 0;
    std::string handle;
};

struct PairedReport {
    StudyReport human;
    StudyReport model;
};

void to_json(nlohmann::json& j, const PairedReport& r);

/// Sessions persisted under `<root>/sessions/<id>/`: an append-only
/// `events.jsonl` written before every acknowledgement, and a `snapshot.json`
/// refreshed after it. Opening a store replays events past the snapshot, so
/// a crash between the two writes loses nothing that was logged.
class StudyStore {
public:
    explicit StudyStore(std::filesystem::path root);

    StudySession create_session(SessionKind kind, const StudyPools& pools, const std::string& reader_id,
                                std::uint64_t seed);

    /// Item at the cursor without its truth; nullopt once all are answered.
    std::optional<NextItem> next_item(const std::string& session_id) const;

    StudySession record_response(const std::string& session_id, int shown_index, const std::string& choice,
                                 double latency_ms);

    StudySession session(const std::string& session_id) const;
    std::vector<std::string> session_ids() const;
    StudyReport report(const std::string& session_id) const;

    /// Image file behind an opaque handle; NotFound otherwise.
    std::filesystem::path image_for(const std::string& handle) const;

    PairedReport compare_with_model(const std::string& session_id, clf::Classifier& model, int input_size) const;

    // Test hook: simulate a crash after the event append and before the
    // snapshot write of the next response.
    void crash_before_snapshot_once() { crash_before_snapshot_ = true; }

private:
    struct Entry {
        StudySession session;
        std::uint64_t seq = 0;
        std::unique_ptr<std::mutex> write_lock = std::make_unique<std::mutex>();
    };

    std::filesystem::path dir_for(const std::string& id) const;
    void append_event(const std::string& id, const nlohmann::json& event) const;
    void write_snapshot(const Entry& entry) const;
    void load_all();
    Entry& entry_for(const std::string& id);
    const Entry& entry_for(const std::string& id) const;

    std::filesystem::path root_;
    mutable std::shared_mutex map_lock_;
    std::map<std::string, Entry> sessions_;
    std::map<std::string, std::filesystem::path> handles_;
    bool crash_before_snapshot_ = false;
};

/// Applies one logged event to a session.
void apply_event(StudySession& session, const nlohmann::json& event);

}  // namespace fgb::study
