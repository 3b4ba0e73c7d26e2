#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fgb/data/records.hpp"

namespace fgb::data {

/// Manual quality grades keyed by record id (CSV `id,grade`).
struct GradeTable {
    std::map<std::string, Grade> grades;

    static GradeTable read(const std::filesystem::path& csv_path);
    void write(const std::filesystem::path& csv_path) const;
};

struct IngestResult {
    DatasetManifest manifest;
    std::vector<std::string> warnings;
};

/// Builds one record per image found in a dataset's published layout.
///
/// Layouts understood:
///  - ICHALLENGE_AMD: images under folders named `AMD` / `Non-AMD`
///    (optionally nested, e.g. `Training400/AMD/A0001.jpg`).
///  - ODIR_2019: `full_df.csv` with `filename` and `labels` columns, where
///    labels hold ODIR disease letters (N D G C A H M O), images in
///    `preprocessed_images/`, `Training Images/` or the root.
///  - RIADD: `RFMiD_Training_Labels.csv` with `ID` and `ARMD` columns,
///    images `<ID>.png` under `Training/` or the root.
///  - TOY: a `labels.csv` with `filename,label` (AMD / NON_AMD).
///
/// Record ids are `<DATASET>/<file stem>`. Annotated files that are absent
/// on disk produce a warning and are skipped; an unknown label key aborts
/// with ManifestError naming the row.
IngestResult ingest_dataset(const std::filesystem::path& root, SourceDataset dataset, const GradeTable& grades);

std::string make_record_id(SourceDataset dataset, const std::filesystem::path& file);

}  // namespace fgb::data
