#include "fgb/study/session.hpp"

#include <algorithm>
#include <set>

#include "fgb/error.hpp"
#include "fgb/image.hpp"
#include "fgb/rng.hpp"

namespace fgb::study {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(SessionKind k) noexcept {
    switch (k) {
        case SessionKind::TuringAmd: return "TURING_AMD";
        case SessionKind::TuringNonAmd: return "TURING_NON_AMD";
        case SessionKind::Diagnosis: return "DIAGNOSIS";
    }
    return "?";
}

std::string_view to_string(SessionState s) noexcept {
    return s == SessionState::Open ? "OPEN" : "COMPLETE";
}

SessionKind parse_kind(std::string_view text) {
    for (auto k : {SessionKind::TuringAmd, SessionKind::TuringNonAmd, SessionKind::Diagnosis}) {
        if (text == to_string(k)) return k;
    }
    fail(ErrorCode::UsageError, "unknown session kind '" + std::string(text) + "'");
}

std::array<std::string, 2> choices_for(SessionKind kind) {
    if (kind == SessionKind::Diagnosis) return {"AMD", "NON_AMD"};
    return {"SYNTHETIC", "REAL"};
}

void to_json(json& j, const StudySession& s) {
    json items = json::array();
    for (const auto& it : s.items) {
        items.push_back({{"handle", it.handle},
                         {"image_ref", it.image_ref.string()},
                         {"source_id", it.source_id},
                         {"truth", it.truth},
                         {"shown_index", it.shown_index}});
    }
    json responses = json::array();
    for (const auto& r : s.responses) {
        responses.push_back({{"index", r.index}, {"choice", r.choice}, {"latency_ms", r.latency_ms}});
    }
    j = {{"id", s.id},         {"kind", to_string(s.kind)},   {"items", items},
         {"cursor", s.cursor}, {"reader_id", s.reader_id},    {"seed", s.seed},
         {"created_at", s.created_at}, {"state", to_string(s.state)}, {"responses", responses}};
}

void from_json(const json& j, StudySession& s) {
    s.id = j.at("id").get<std::string>();
    s.kind = parse_kind(j.at("kind").get<std::string>());
    s.items.clear();
    for (const auto& it : j.at("items")) {
        s.items.push_back({it.at("handle"), it.at("image_ref").get<std::string>(), it.at("source_id"), it.at("truth"),
                           it.at("shown_index")});
    }
    s.cursor = j.at("cursor").get<int>();
    s.reader_id = j.at("reader_id").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.created_at = j.at("created_at").get<std::string>();
    s.state = j.at("state").get<std::string>() == "COMPLETE" ? SessionState::Complete : SessionState::Open;
    s.responses.clear();
    for (const auto& r : j.at("responses")) s.responses.push_back({r.at("index"), r.at("choice"), r.at("latency_ms")});
}

StudyPools StudyPools::from_manifest(const data::DatasetManifest& manifest, data::Split split) {
    StudyPools pools;
    for (const auto* r : manifest.in_split(split)) {
        pools.real[static_cast<std::size_t>(index_of(r->label))].push_back({r->id, r->path});
    }
    return pools;
}

void StudyPools::add_synthetic_dir(const fs::path& dir) {
    for (Label l : kLabels) {
        const auto sub = dir / std::string(to_string(l));
        if (!fs::is_directory(sub)) continue;
        for (const auto& p : image::list_images(sub)) {
            synthetic[static_cast<std::size_t>(index_of(l))].push_back(
                {"SYNTH/" + std::string(to_string(l)) + "/" + p.filename().string(), p});
        }
    }
}

std::vector<StudyItem> compose_items(SessionKind kind, const StudyPools& pools, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<StudyItem> items;
    const auto take = [&](const std::vector<PoolImage>& pool, const std::string& truth, const std::string& what) {
        if (static_cast<int>(pool.size()) < kItemsPerArm) {
            fail(ErrorCode::InsufficientPool, what + " pool holds " + std::to_string(pool.size()) + " images, " +
                                                  std::to_string(kItemsPerArm) + " needed");
        }
        // Sort first so the draw does not depend on directory or manifest order.
        auto sorted = pool;
        std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        rng.shuffle(std::span(sorted));
        for (int i = 0; i < kItemsPerArm; ++i) items.push_back({{}, sorted[i].path, sorted[i].id, truth, 0});
    };
    switch (kind) {
        case SessionKind::TuringAmd:
        case SessionKind::TuringNonAmd: {
            const auto l = static_cast<std::size_t>(index_of(kind == SessionKind::TuringAmd ? Label::Amd : Label::NonAmd));
            take(pools.synthetic[l], "SYNTHETIC", "synthetic " + std::string(to_string(label_from_index(int(l)))));
            take(pools.real[l], "REAL", "real " + std::string(to_string(label_from_index(int(l)))));
            break;
        }
        case SessionKind::Diagnosis:
            take(pools.real[0], "AMD", "real AMD");
            take(pools.real[1], "NON_AMD", "real NON_AMD");
            break;
    }
    rng.shuffle(std::span(items));
    for (std::size_t i = 0; i < items.size(); ++i) items[i].shown_index = static_cast<int>(i);
    return items;
}

void to_json(json& j, const StudyReport& r) {
    json items = json::array();
    for (const auto& it : r.items) {
        items.push_back({{"index", it.index},
                         {"source_id", it.source_id},
                         {"truth", it.truth},
                         {"choice", it.choice},
                         {"latency_ms", it.latency_ms}});
    }
    j = {{"kind", to_string(r.kind)},
         {"positive", r.positive},
         {"confusion", r.metrics.confusion},
         {"acc", r.metrics.acc},
         {"sensitivity", r.metrics.sensitivity},
         {"specificity", r.metrics.specificity},
         {"items", items}};
}

StudyReport score_choices(const StudySession& session, const std::vector<std::string>& choices,
                          const std::vector<double>& latencies_ms) {
    if (choices.size() != session.items.size()) fail(ErrorCode::UsageError, "one choice per item required");
    const auto labels = choices_for(session.kind);
    const auto idx = [&](const std::string& v) {
        if (v == labels[0]) return 0;
        if (v == labels[1]) return 1;
        fail(ErrorCode::UsageError, "choice '" + v + "' is not valid for " + std::string(to_string(session.kind)));
    };
    std::array<std::array<std::int64_t, 2>, 2> confusion{};
    StudyReport report;
    report.kind = session.kind;
    report.positive = labels[0];
    for (std::size_t i = 0; i < choices.size(); ++i) {
        const auto& item = session.items[i];
        ++confusion[static_cast<std::size_t>(idx(item.truth))][static_cast<std::size_t>(idx(choices[i]))];
        const double latency = i < latencies_ms.size() ? latencies_ms[i] : 0.0;
        report.items.push_back({item.shown_index, item.source_id, item.truth, choices[i], latency});
    }
    report.metrics = clf::ClassifierMetrics::from_confusion(confusion);
    return report;
}

StudyReport score_session(const StudySession& session) {
    if (session.state != SessionState::Complete) {
        fail(ErrorCode::NotComplete, "session " + session.id + " has " + std::to_string(session.cursor) + " of " +
                                         std::to_string(session.items.size()) + " responses");
    }
    std::vector<std::string> choices;
    std::vector<double> latencies;
    for (const auto& r : session.responses) {
        choices.push_back(r.choice);
        latencies.push_back(r.latency_ms);
    }
    return score_choices(session, choices, latencies);
}

}  // namespace fgb::study
