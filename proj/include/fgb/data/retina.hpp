#pragma once

#include <opencv2/core.hpp>

#include "fgb/data/records.hpp"

namespace fgb::data {

/// Hough accumulator settings. Defaults were picked against rendered disks
/// (see the retina unit tests) and are exposed through the run config.
struct HoughConfig {
    double min_radius_fraction = 0.25;  ///< of the image's smaller side
    double max_radius_fraction = 0.60;
    double edge_threshold_fraction = 0.25;  ///< of the strongest gradient
    double min_edge_magnitude = 8.0;
    double vote_fraction = 0.15;  ///< peak votes needed, relative to 2*pi*r
    int working_size = 256;       ///< smaller side is downscaled to this first
};

/// Gradient-directed circle Hough transform over the configured radius
/// range. Input must be 8-bit single channel with min side >= 64.
/// Throws NoCircleFound when no cell reaches the vote threshold.
RetinaCircle detect_retina_circle(const cv::Mat& gray, const HoughConfig& config = {});

enum class CropTarget { Gan256, Clf224 };

inline constexpr int kResampleSide = 390;
inline constexpr int kGanSide = 256;
inline constexpr int kClfSide = 224;

/// Crop to the circle's bounding square (black padding outside the image),
/// resample to 390x390, keep the central 256x256. Gan256 stops there and
/// keeps 8-bit output for 8-bit input; Clf224 resamples to 224x224 and maps
/// [0, 255] onto [-1, 1] as CV_32FC3.
cv::Mat crop_and_resize(const cv::Mat& image, const RetinaCircle& circle, CropTarget target);

}  // namespace fgb::data
