#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgb/clf/metrics.hpp"
#include "fgb/data/records.hpp"
#include "fgb/label.hpp"

namespace fgb::study {

enum class SessionKind { TuringAmd, TuringNonAmd, Diagnosis };
enum class SessionState { Open, Complete };

inline constexpr int kItemsPerArm = 10;
inline constexpr int kSessionItems = 2 * kItemsPerArm;

std::string_view to_string(SessionKind k) noexcept;
std::string_view to_string(SessionState s) noexcept;
SessionKind parse_kind(std::string_view text);

/// Allowed answers, positive class first: {SYNTHETIC, REAL} or {AMD, NON_AMD}.
std::array<std::string, 2> choices_for(SessionKind kind);

struct StudyItem {
    std::string handle;  // opaque, used in image URLs
    std::filesystem::path image_ref;
    std::string source_id;  // record id or synthetic file name
    std::string truth;      // one of choices_for(kind)
    int shown_index = 0;

    bool operator==(const StudyItem&) const = default;
};

struct Response {
    int index = 0;
    std::string choice;
    double latency_ms = 0.0;

    bool operator==(const Response&) const = default;
};

struct StudySession {
    std::string id;
    SessionKind kind = SessionKind::TuringAmd;
    std::vector<StudyItem> items;
    int cursor = 0;
    std::string reader_id;
    std::uint64_t seed = 0;
    std::string created_at;
    SessionState state = SessionState::Open;
    std::vector<Response> responses;

    bool operator==(const StudySession&) const = default;
};

void to_json(nlohmann::json& j, const StudySession& s);
void from_json(const nlohmann::json& j, StudySession& s);

struct PoolImage {
    std::string id;
    std::filesystem::path path;
};

// Candidate images per label: real ones from a manifest, synthetic ones
// from generator output directories.
struct StudyPools {
    std::array<std::vector<PoolImage>, 2> real;
    std::array<std::vector<PoolImage>, 2> synthetic;

    /// Records of one split, grouped by label.
    static StudyPools from_manifest(const data::DatasetManifest& manifest, data::Split split);

    /// Adds `<dir>/AMD/*.png` and `<dir>/NON_AMD/*.png` as synthetic images.
    void add_synthetic_dir(const std::filesystem::path& dir);
};

/// Draws the kind's composition from the pools and shuffles it, both
/// seed-deterministically. InsufficientPool when a pool is too small.
std::vector<StudyItem> compose_items(SessionKind kind, const StudyPools& pools, std::uint64_t seed);

struct ItemOutcome {
    int index = 0;
    std::string source_id;
    std::string truth;
    std::string choice;
    double latency_ms = 0.0;
};

struct StudyReport {
    SessionKind kind = SessionKind::TuringAmd;
    std::string positive;  // SYNTHETIC or AMD
    clf::ClassifierMetrics metrics;
    std::vector<ItemOutcome> items;
};

void to_json(nlohmann::json& j, const StudyReport& r);

/// NotComplete for an OPEN session.
StudyReport score_session(const StudySession& session);

/// Scores arbitrary choices against the session's items (used for models).
StudyReport score_choices(const StudySession& session, const std::vector<std::string>& choices,
                          const std::vector<double>& latencies_ms = {});

}  // namespace fgb::study
