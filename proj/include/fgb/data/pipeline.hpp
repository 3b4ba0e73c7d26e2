#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fgb/data/records.hpp"
#include "fgb/data/retina.hpp"

namespace fgb::data {

struct PreprocessResult {
    DatasetManifest manifest;  ///< paths point at the written 256x256 PNGs
    std::vector<std::string> warnings;
};

/// Runs circle detection and the GAN_256 crop chain over every record and
/// writes `<out_dir>/<source>/<stem>.png`. Records whose retina cannot be
/// localized are dropped with a warning.
PreprocessResult preprocess_manifest(const DatasetManifest& manifest, const std::filesystem::path& out_dir,
                                     const HoughConfig& hough = {});

}  // namespace fgb::data
