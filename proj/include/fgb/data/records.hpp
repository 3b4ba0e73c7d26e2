#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fgb/label.hpp"

namespace fgb::data {

enum class SourceDataset { IChallengeAmd, Odir2019, Riadd, Toy };
enum class Grade { Good, Usable, Reject };
enum class Split { Train = 0, Test = 1, Unassigned = 2 };

std::string_view to_string(SourceDataset d) noexcept;
std::string_view to_string(Grade g) noexcept;
std::string_view to_string(Split s) noexcept;
SourceDataset parse_source(std::string_view text);
Grade parse_grade(std::string_view text);
Split parse_split(std::string_view text);

struct RetinaCircle {
    double cx = 0.0;
    double cy = 0.0;
    double r = 0.0;

    /// r > 0 and the center lies inside a width x height raster.
    bool valid_for(int width, int height) const noexcept;
    bool operator==(const RetinaCircle&) const = default;
};

struct ImageRecord {
    std::string id;
    SourceDataset source_dataset = SourceDataset::IChallengeAmd;
    std::filesystem::path path;
    Label label = Label::NonAmd;
    Grade grade = Grade::Good;
    Split split = Split::Unassigned;
    std::optional<RetinaCircle> circle;

    bool operator==(const ImageRecord&) const = default;
};

// Indexed [label][split].
struct CountTable {
    std::array<std::array<int, 3>, 2> cells{};

    int& at(Label l, Split s) { return cells[index_of(l)][static_cast<int>(s)]; }
    int at(Label l, Split s) const { return cells[index_of(l)][static_cast<int>(s)]; }
    int label_total(Label l) const;
    int split_total(Split s) const;
    int total() const;

    bool operator==(const CountTable&) const = default;
};

struct DatasetManifest {
    std::vector<ImageRecord> records;
    CountTable counts;
    std::uint64_t seed = 0;

    static CountTable tally(const std::vector<ImageRecord>& records);
    void recount() { counts = tally(records); }

    /// Throws ManifestError on duplicate ids, graded REJECT records in
    /// TRAIN/TEST, or a stale counts table; checks paths when asked.
    void validate(bool check_paths) const;

    std::vector<const ImageRecord*> in_split(Split s) const;

    /// CSV body exactly as written to disk.
    std::string to_csv() const;
    std::string sidecar_json() const;

    /// Writes `<stem>.csv` content to csv_path and the counts/seed sidecar
    /// next to it with a .json extension.
    void write(const std::filesystem::path& csv_path) const;
    static DatasetManifest read(const std::filesystem::path& csv_path);

    static std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);
};

}  // namespace fgb::data
