#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

namespace fgb::image {

/// Reads PNG/JPEG as 8-bit BGR. Throws Error{Io} on failure.
cv::Mat read(const std::filesystem::path& path);
cv::Mat read_gray(const std::filesystem::path& path);

/// Writes an 8-bit image as PNG, creating parent directories.
void write_png(const std::filesystem::path& path, const cv::Mat& image);

/// Bilinear resize; a no-op copy when the size already matches.
cv::Mat resize(const cv::Mat& image, int width, int height);

/// 8-bit BGR -> float RGB tensor [3, size, size] scaled to [-1, 1].
torch::Tensor to_tensor(const cv::Mat& bgr, int size);

/// Float tensor [3, H, W] in [-1, 1] -> 8-bit BGR.
cv::Mat to_mat(const torch::Tensor& chw);

/// Loads and stacks images into [N, 3, size, size].
torch::Tensor load_batch(std::span<const std::filesystem::path> paths, int size);

/// PNG/JPEG files directly inside a directory, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

bool is_image_file(const std::filesystem::path& path);

}  // namespace fgb::image
