#pragma once

#include <filesystem>
#include <string>

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include "fgb/clf/models.hpp"
#include "fgb/label.hpp"

namespace fgb::explain {

struct Heatmap {
    torch::Tensor values;  // [H,W] float, >= 0, max 1 unless all zero
    std::string target_layer;
    Label target_class = Label::Amd;
};

/// ReLU(sum_k alpha_k A^k) with alpha_k the spatial mean of dScore/dA^k, at
/// feature resolution and before normalization. features/grads are [K,h,w].
torch::Tensor gradcam_raw(const torch::Tensor& features, const torch::Tensor& grads);

/// gradcam_raw, bilinearly upsampled to height x width, divided by its max.
torch::Tensor gradcam_from(const torch::Tensor& features, const torch::Tensor& grads, std::int64_t height,
                           std::int64_t width);

/// image [3,H,W] in [-1,1]. UsageError when the layer's output has no
/// spatial extent or the layer does not exist.
Heatmap gradcam(clf::Classifier& model, const torch::Tensor& image, Label target_class, const std::string& layer);

/// JET-colored heatmap alpha-blended onto an 8-bit BGR image of equal size.
cv::Mat overlay(const cv::Mat& image, const Heatmap& heatmap, double alpha = 0.4);

/// Raw values as a little-endian float32 .npy array.
void write_npy(const std::filesystem::path& path, const torch::Tensor& values);
torch::Tensor read_npy(const std::filesystem::path& path);

}  // namespace fgb::explain
