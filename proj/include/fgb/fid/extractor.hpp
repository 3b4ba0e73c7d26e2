#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "fgb/fid/fid.hpp"

namespace fgb::fid {

// Describes how to feed a serialized network; stored as `<weights>.json`.
struct ExtractorInfo {
    std::string kind = "native";  // "native" or "torchscript"
    int input_size = 64;
    int dim = 2048;
    // How [-1,1] RGB input is mapped before the forward pass:
    // "minus_one_one" (unchanged), "unit" ([0,1]), "byte" ([0,255]) or "imagenet".
    std::string normalization = "minus_one_one";
    nlohmann::json forward_kwargs = nlohmann::json::object();  // torchscript only
    std::uint64_t seed = 0;                                     // native only
    int width = 32;                                             // native only
};

void to_json(nlohmann::json& j, const ExtractorInfo& info);
void from_json(const nlohmann::json& j, ExtractorInfo& info);

class FeatureExtractor {
public:
    /// Reads `<path>.json` and the weights at path; ModelLoadError if either is
    /// missing or unreadable.
    static FeatureExtractor load(const std::filesystem::path& path);

    /// Rows are pooled features per image, independent of batch composition.
    Eigen::MatrixXd extract(const torch::Tensor& images) const;

    const ExtractorInfo& info() const { return info_; }

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
    ExtractorInfo info_;
};

/// Random-weight convolutional feature network, written to path + sidecar.
/// Stands in for a pretrained extractor where none is available.
void make_native_extractor(const std::filesystem::path& path, int dim, int input_size, std::uint64_t seed,
                           int width = 32);

Eigen::MatrixXd extract_features(const torch::Tensor& images, const FeatureExtractor& extractor);

/// Both sets need at least 2 images; fewer than 2048 adds a warning.
FidResult fid(const torch::Tensor& images_a, const torch::Tensor& images_b, const FeatureExtractor& extractor);

}  // namespace fgb::fid
