#include "fgb/data/records.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fgb/csv.hpp"
#include "fgb/error.hpp"

namespace fgb::data {

namespace fs = std::filesystem;

namespace {

const csv::Row kHeader{"id", "source_dataset", "path", "label", "grade", "split"};

}  // namespace

std::string_view to_string(SourceDataset d) noexcept {
    switch (d) {
        case SourceDataset::IChallengeAmd: return "ICHALLENGE_AMD";
        case SourceDataset::Odir2019: return "ODIR_2019";
        case SourceDataset::Riadd: return "RIADD";
        case SourceDataset::Toy: return "TOY";
    }
    return "?";
}

std::string_view to_string(Grade g) noexcept {
    switch (g) {
        case Grade::Good: return "GOOD";
        case Grade::Usable: return "USABLE";
        case Grade::Reject: return "REJECT";
    }
    return "?";
}

std::string_view to_string(Split s) noexcept {
    switch (s) {
        case Split::Train: return "TRAIN";
        case Split::Test: return "TEST";
        case Split::Unassigned: return "UNASSIGNED";
    }
    return "?";
}

SourceDataset parse_source(std::string_view text) {
    if (text == "ICHALLENGE_AMD") return SourceDataset::IChallengeAmd;
    if (text == "ODIR_2019") return SourceDataset::Odir2019;
    if (text == "RIADD") return SourceDataset::Riadd;
    if (text == "TOY") return SourceDataset::Toy;
    fail(ErrorCode::ManifestError, "unknown source dataset '" + std::string(text) + "'");
}

Grade parse_grade(std::string_view text) {
    if (text == "GOOD") return Grade::Good;
    if (text == "USABLE") return Grade::Usable;
    if (text == "REJECT") return Grade::Reject;
    fail(ErrorCode::ManifestError, "unknown grade '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
    if (text == "TRAIN") return Split::Train;
    if (text == "TEST") return Split::Test;
    if (text == "UNASSIGNED") return Split::Unassigned;
    fail(ErrorCode::ManifestError, "unknown split '" + std::string(text) + "'");
}

bool RetinaCircle::valid_for(int width, int height) const noexcept {
    return r > 0.0 && cx >= 0.0 && cy >= 0.0 && cx < width && cy < height;
}

int CountTable::label_total(Label l) const {
    int n = 0;
    for (int v : cells[index_of(l)]) n += v;
    return n;
}

int CountTable::split_total(Split s) const {
    return cells[0][static_cast<int>(s)] + cells[1][static_cast<int>(s)];
}

int CountTable::total() const { return label_total(Label::Amd) + label_total(Label::NonAmd); }

CountTable DatasetManifest::tally(const std::vector<ImageRecord>& records) {
    CountTable t;
    for (const auto& r : records) ++t.at(r.label, r.split);
    return t;
}

void DatasetManifest::validate(bool check_paths) const {
    std::set<std::string> ids;
    for (const auto& r : records) {
        if (!ids.insert(r.id).second) fail(ErrorCode::ManifestError, "duplicate record id " + r.id);
        if (r.grade == Grade::Reject && r.split != Split::Unassigned) {
            fail(ErrorCode::ManifestError, "REJECT-graded record " + r.id + " assigned to a split");
        }
        if (check_paths && !fs::exists(r.path)) {
            fail(ErrorCode::ManifestError, "record " + r.id + " points to missing file " + r.path.string());
        }
    }
    if (!(counts == tally(records))) fail(ErrorCode::ManifestError, "counts table does not match records");
}

std::vector<const ImageRecord*> DatasetManifest::in_split(Split s) const {
    std::vector<const ImageRecord*> out;
    for (const auto& r : records) {
        if (r.split == s) out.push_back(&r);
    }
    return out;
}

std::string DatasetManifest::to_csv() const {
    std::string out = csv::format_row(kHeader) + '\n';
    for (const auto& r : records) {
        out += csv::format_row({r.id, std::string(to_string(r.source_dataset)), r.path.generic_string(),
                                std::string(fgb::to_string(r.label)), std::string(to_string(r.grade)),
                                std::string(to_string(r.split))});
        out += '\n';
    }
    return out;
}

std::string DatasetManifest::sidecar_json() const {
    nlohmann::json counts_json;
    for (Label l : kLabels) {
        nlohmann::json row;
        for (Split s : {Split::Train, Split::Test, Split::Unassigned}) row[std::string(to_string(s))] = counts.at(l, s);
        counts_json[std::string(fgb::to_string(l))] = row;
    }
    nlohmann::json j{{"seed", seed}, {"total", counts.total()}, {"counts", counts_json}};
    return j.dump(2) + '\n';
}

fs::path DatasetManifest::sidecar_path(const fs::path& csv_path) {
    auto p = csv_path;
    p.replace_extension(".json");
    return p;
}

void DatasetManifest::write(const fs::path& csv_path) const {
    if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
    {
        std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, "cannot write manifest " + csv_path.string());
        out << to_csv();
    }
    std::ofstream side(sidecar_path(csv_path), std::ios::binary | std::ios::trunc);
    if (!side) fail(ErrorCode::Io, "cannot write manifest sidecar for " + csv_path.string());
    side << sidecar_json();
}

DatasetManifest DatasetManifest::read(const fs::path& csv_path) {
    const auto table = csv::read(csv_path);
    if (table.header != kHeader) fail(ErrorCode::ManifestError, "unexpected manifest header in " + csv_path.string());
    DatasetManifest m;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() != kHeader.size()) {
            fail(ErrorCode::ManifestError, csv_path.string() + ": row " + std::to_string(i + 2) + " has wrong arity");
        }
        ImageRecord r;
        r.id = row[0];
        r.source_dataset = parse_source(row[1]);
        r.path = row[2];
        r.label = parse_label(row[3]);
        r.grade = parse_grade(row[4]);
        r.split = parse_split(row[5]);
        m.records.push_back(std::move(r));
    }
    const auto side = sidecar_path(csv_path);
    if (fs::exists(side)) {
        std::ifstream in(side);
        const auto j = nlohmann::json::parse(in);
        m.seed = j.at("seed").get<std::uint64_t>();
    }
    m.recount();
    return m;
}

}  // namespace fgb::data
