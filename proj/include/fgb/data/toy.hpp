#pragma once

#include <cstdint>
#include <filesystem>

#include <opencv2/core.hpp>

#include "fgb/data/loader.hpp"
#include "fgb/data/records.hpp"
#include "fgb/rng.hpp"

namespace fgb::data {

/// Filled, anti-aliased disk on black; subpixel center and radius.
cv::Mat render_disk(int width, int height, double cx, double cy, double radius, int channels = 1,
                    cv::Scalar color = cv::Scalar::all(255));

/// Small fundus-like raster: an orange/red ellipse with a dark macula on a
/// black background. AMD samples are tinted yellow and carry bright
/// drusen-like spots so the two classes are separable by eye.
cv::Mat render_toy_fundus(int size, Label label, Rng& rng);

struct ToyOptions {
    int count = 500;
    int size = 32;
    double amd_fraction = 0.5;
    int test_per_class = 0;
    std::uint64_t seed = 0;
};

/// Writes `count` toy images plus a `labels.csv` into dir and returns a
/// manifest (all GOOD; TEST holds test_per_class of each label).
DatasetManifest make_toy_dataset(const std::filesystem::path& dir, const ToyOptions& options);

// Same draws as make_toy_dataset, kept in memory; every image regardless of split.
LabeledImages toy_images(const ToyOptions& options);

}  // namespace fgb::data
