#include "fgb/image.hpp"

#include <algorithm>
#include <cctype>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "fgb/error.hpp"

namespace fgb::image {

namespace fs = std::filesystem;

cv::Mat read(const fs::path& path) {
    cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (img.empty()) fail(ErrorCode::Io, "cannot read image " + path.string());
    return img;
}

cv::Mat read_gray(const fs::path& path) {
    cv::Mat img = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (img.empty()) fail(ErrorCode::Io, "cannot read image " + path.string());
    return img;
}

void write_png(const fs::path& path, const cv::Mat& image) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    cv::Mat out = image;
    if (image.depth() != CV_8U) image.convertTo(out, CV_8U);
    if (!cv::imwrite(path.string(), out)) fail(ErrorCode::Io, "cannot write image " + path.string());
}

cv::Mat resize(const cv::Mat& image, int width, int height) {
    if (image.cols == width && image.rows == height) return image.clone();
    cv::Mat out;
    cv::resize(image, out, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
    return out;
}

torch::Tensor to_tensor(const cv::Mat& bgr, int size) {
    cv::Mat rgb;
    cv::cvtColor(resize(bgr, size, size), rgb, cv::COLOR_BGR2RGB);
    cv::Mat f;
    rgb.convertTo(f, CV_32FC3, 1.0 / 127.5, -1.0);
    auto t = torch::from_blob(f.data, {size, size, 3}, torch::kFloat32).clone();
    return t.permute({2, 0, 1}).contiguous();
}

cv::Mat to_mat(const torch::Tensor& chw) {
    auto t = chw.detach().to(torch::kFloat32).clamp(-1.0, 1.0).add(1.0).mul(127.5).round();
    t = t.permute({1, 2, 0}).contiguous().to(torch::kUInt8);
    const int h = static_cast<int>(t.size(0));
    const int w = static_cast<int>(t.size(1));
    cv::Mat rgb(h, w, CV_8UC3, t.data_ptr<std::uint8_t>());
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    return bgr;
}

torch::Tensor load_batch(std::span<const fs::path> paths, int size) {
    std::vector<torch::Tensor> items;
    items.reserve(paths.size());
    for (const auto& p : paths) items.push_back(to_tensor(read(p), size));
    if (items.empty()) return torch::empty({0, 3, size, size});
    return torch::stack(items);
}

bool is_image_file(const fs::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> list_images(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace fgb::image
