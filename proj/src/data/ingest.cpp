#include "fgb/data/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "fgb/csv.hpp"
#include "fgb/error.hpp"
#include "fgb/image.hpp"

namespace fgb::data {

namespace fs = std::filesystem;

GradeTable GradeTable::read(const fs::path& csv_path) {
    const auto table = csv::read(csv_path);
    const int id_col = table.column("id");
    const int grade_col = table.column("grade");
    if (id_col < 0 || grade_col < 0) fail(ErrorCode::ManifestError, csv_path.string() + ": expected header id,grade");
    GradeTable g;
    for (const auto& row : table.rows) {
        g.grades[row.at(id_col)] = parse_grade(row.at(grade_col));
    }
    return g;
}

void GradeTable::write(const fs::path& csv_path) const {
    std::vector<csv::Row> rows;
    for (const auto& [id, grade] : grades) rows.push_back({id, std::string(to_string(grade))});
    csv::write(csv_path, {"id", "grade"}, rows);
}

std::string make_record_id(SourceDataset dataset, const fs::path& file) {
    return std::string(to_string(dataset)) + "/" + file.stem().string();
}

namespace {

struct Found {
    fs::path path;
    Label label;
};

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::optional<fs::path> first_existing(const fs::path& root, std::initializer_list<const char*> candidates) {
    for (const char* c : candidates) {
        auto p = root / c;
        if (fs::exists(p)) return p;
    }
    return std::nullopt;
}

std::vector<Found> scan_ichallenge(const fs::path& root) {
    std::vector<Found> out;
    if (!fs::is_directory(root)) return out;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && image::is_image_file(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const auto folder = f.parent_path().filename().string();
        if (folder == "AMD") {
            out.push_back({f, Label::Amd});
        } else if (folder == "Non-AMD") {
            out.push_back({f, Label::NonAmd});
        } else {
            fail(ErrorCode::ManifestError, "unknown label key '" + folder + "' for " + f.string());
        }
    }
    return out;
}

// ODIR labels look like "['A']" or "A" or "D,A"; any 'A' marks AMD.
Label odir_label(const std::string& raw, std::size_t row_number) {
    bool any = false;
    bool amd = false;
    for (char c : raw) {
        if (c == '[' || c == ']' || c == '\'' || c == '"' || c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            continue;
        }
        if (std::string_view("NDGCAHMO").find(c) == std::string_view::npos) {
            fail(ErrorCode::ManifestError,
                 "unknown label key '" + raw + "' in ODIR annotation row " + std::to_string(row_number));
        }
        any = true;
        amd = amd || c == 'A';
    }
    if (!any) fail(ErrorCode::ManifestError, "empty label in ODIR annotation row " + std::to_string(row_number));
    return amd ? Label::Amd : Label::NonAmd;
}

std::vector<Found> scan_odir(const fs::path& root, std::vector<std::string>& warnings) {
    std::vector<Found> out;
    const auto labels = root / "full_df.csv";
    if (!fs::exists(labels)) return out;
    const auto table = csv::read(labels);
    const int file_col = table.column("filename");
    const int label_col = table.column("labels");
    if (file_col < 0 || label_col < 0) fail(ErrorCode::ManifestError, labels.string() + ": missing filename/labels columns");
    const fs::path image_dir = first_existing(root, {"preprocessed_images", "Training Images"}).value_or(root);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto label = odir_label(row.at(label_col), i + 2);
        const auto file = image_dir / trim(row.at(file_col));
        if (!fs::exists(file)) {
            warnings.push_back("missing file " + file.string() + " (row " + std::to_string(i + 2) + "), skipped");
            continue;
        }
        out.push_back({file, label});
    }
    return out;
}

std::vector<Found> scan_riadd(const fs::path& root, std::vector<std::string>& warnings) {
    std::vector<Found> out;
    const auto labels = first_existing(root, {"RFMiD_Training_Labels.csv", "Training_Set/RFMiD_Training_Labels.csv"});
    if (!labels) return out;
    const auto table = csv::read(*labels);
    const int id_col = table.column("ID");
    const int amd_col = table.column("ARMD");
    if (id_col < 0 || amd_col < 0) fail(ErrorCode::ManifestError, labels->string() + ": missing ID/ARMD columns");
    const fs::path image_dir =
        first_existing(labels->parent_path(), {"Training", "Training_Set/Training"}).value_or(labels->parent_path());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto key = trim(row.at(amd_col));
        Label label;
        if (key == "1") {
            label = Label::Amd;
        } else if (key == "0") {
            label = Label::NonAmd;
        } else {
            fail(ErrorCode::ManifestError,
                 "unknown label key '" + key + "' in RIADD annotation row " + std::to_string(i + 2));
        }
        const auto file = image_dir / (trim(row.at(id_col)) + ".png");
        if (!fs::exists(file)) {
            warnings.push_back("missing file " + file.string() + " (row " + std::to_string(i + 2) + "), skipped");
            continue;
        }
        out.push_back({file, label});
    }
    return out;
}

std::vector<Found> scan_toy(const fs::path& root, std::vector<std::string>& warnings) {
    std::vector<Found> out;
    const auto labels = root / "labels.csv";
    if (!fs::exists(labels)) return out;
    const auto table = csv::read(labels);
    const int file_col = table.column("filename");
    const int label_col = table.column("label");
    if (file_col < 0 || label_col < 0) fail(ErrorCode::ManifestError, labels.string() + ": missing filename/label columns");
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto& key = row.at(label_col);
        if (key != "AMD" && key != "NON_AMD") {
            fail(ErrorCode::ManifestError, "unknown label key '" + key + "' in toy annotation row " + std::to_string(i + 2));
        }
        const auto file = root / row.at(file_col);
        if (!fs::exists(file)) {
            warnings.push_back("missing file " + file.string() + " (row " + std::to_string(i + 2) + "), skipped");
            continue;
        }
        out.push_back({file, parse_label(key)});
    }
    return out;
}

}  // namespace

IngestResult ingest_dataset(const fs::path& root, SourceDataset dataset, const GradeTable& grades) {
    IngestResult result;
    std::vector<Found> found;
    switch (dataset) {
        case SourceDataset::IChallengeAmd: found = scan_ichallenge(root); break;
        case SourceDataset::Odir2019: found = scan_odir(root, result.warnings); break;
        case SourceDataset::Riadd: found = scan_riadd(root, result.warnings); break;
        case SourceDataset::Toy: found = scan_toy(root, result.warnings); break;
    }

    for (auto& f : found) {
        ImageRecord r;
        r.id = make_record_id(dataset, f.path);
        r.source_dataset = dataset;
        r.path = f.path;
        r.label = f.label;
        const auto it = grades.grades.find(r.id);
        if (it == grades.grades.end()) fail(ErrorCode::ManifestError, "grade table has no entry for " + r.id);
        r.grade = it->second;
        r.split = Split::Unassigned;
        result.manifest.records.push_back(std::move(r));
    }
    result.manifest.recount();
    return result;
}

}  // namespace fgb::data
