#include "fgb/explain/gradcam.hpp"

#include <cstring>
#include <fstream>
#include <regex>

#include <opencv2/imgproc.hpp>

#include "fgb/error.hpp"

namespace fgb::explain {

namespace F = torch::nn::functional;

torch::Tensor gradcam_raw(const torch::Tensor& features, const torch::Tensor& grads) {
    if (features.dim() != 3 || features.sizes() != grads.sizes()) {
        fail(ErrorCode::UsageError, "Grad-CAM needs [K,h,w] feature maps with matching gradients");
    }
    const auto alpha = grads.mean({1, 2}, true);
    return torch::relu((alpha * features).sum(0));
}

torch::Tensor gradcam_from(const torch::Tensor& features, const torch::Tensor& grads, std::int64_t height,
                           std::int64_t width) {
    auto map = gradcam_raw(features.detach(), grads.detach()).to(torch::kFloat);
    map = F::interpolate(map.unsqueeze(0).unsqueeze(0), F::InterpolateFuncOptions()
                                                            .size(std::vector<std::int64_t>{height, width})
                                                            .mode(torch::kBilinear)
                                                            .align_corners(false))
              .squeeze(0)
              .squeeze(0)
              .clamp_min(0.0);
    const double peak = map.max().item<double>();
    return peak > 0.0 ? map / peak : torch::zeros_like(map);
}

Heatmap gradcam(clf::Classifier& model, const torch::Tensor& image, Label target_class, const std::string& layer) {
    if (image.dim() != 3 || image.size(0) != 3) fail(ErrorCode::UsageError, "Grad-CAM expects one [3,H,W] image");
    model->eval();
    const auto capture = model->forward_capture(image.unsqueeze(0), layer);
    if (capture.features.dim() != 4) {
        fail(ErrorCode::UsageError, "layer '" + layer + "' has no spatial extent");
    }
    const auto score = capture.logits[0][index_of(target_class)];
    const auto grads = torch::autograd::grad({score}, {capture.features})[0];
    return {gradcam_from(capture.features[0], grads[0], image.size(1), image.size(2)), layer, target_class};
}

cv::Mat overlay(const cv::Mat& image, const Heatmap& heatmap, double alpha) {
    if (image.type() != CV_8UC3) fail(ErrorCode::UsageError, "overlay expects an 8-bit BGR image");
    if (alpha < 0.0 || alpha > 1.0) fail(ErrorCode::UsageError, "overlay alpha must lie in [0,1]");
    const auto values = heatmap.values.to(torch::kFloat).contiguous();
    if (values.dim() != 2 || values.size(0) != image.rows || values.size(1) != image.cols) {
        fail(ErrorCode::UsageError, "heatmap size does not match the image");
    }
    cv::Mat heat(image.rows, image.cols, CV_32F, const_cast<float*>(values.data_ptr<float>()));
    cv::Mat heat8, color, out;
    heat.convertTo(heat8, CV_8U, 255.0);
    cv::applyColorMap(heat8, color, cv::COLORMAP_JET);
    cv::addWeighted(image, 1.0 - alpha, color, alpha, 0.0, out);
    return out;
}

void write_npy(const std::filesystem::path& path, const torch::Tensor& values) {
    const auto v = values.to(torch::kFloat).contiguous();
    std::string shape = "(";
    for (auto s : v.sizes()) shape += std::to_string(s) + ", ";
    if (v.dim() > 1) shape.resize(shape.size() - 2);
    shape += ")";
    std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape + ", }";
    // Pad so magic + length + header is a multiple of 64, ending in newline.
    const std::size_t total = 10 + header.size() + 1;
    header.append((64 - total % 64) % 64, ' ');
    header += '\n';
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out.write("\x93NUMPY\x01\x00", 8);
    const auto len = static_cast<std::uint16_t>(header.size());
    const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
    out.write(len_bytes, 2);
    out << header;
    out.write(static_cast<const char*>(v.data_ptr()), static_cast<std::streamsize>(v.numel() * sizeof(float)));
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
}

torch::Tensor read_npy(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[10];
    if (!in.read(magic, 10) || std::memcmp(magic, "\x93NUMPY", 6) != 0) {
        fail(ErrorCode::Io, "not an .npy file: " + path.string());
    }
    const auto len = static_cast<std::size_t>(static_cast<unsigned char>(magic[8])) |
                     (static_cast<std::size_t>(static_cast<unsigned char>(magic[9])) << 8);
    std::string header(len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(len));
    if (header.find("'<f4'") == std::string::npos || header.find("'fortran_order': False") == std::string::npos) {
        fail(ErrorCode::Io, "only C-order float32 .npy is supported: " + path.string());
    }
    std::smatch m;
    const std::string shape_text =
        std::regex_search(header, m, std::regex(R"('shape': \(([^)]*)\))")) ? m[1].str() : std::string();
    std::vector<std::int64_t> shape;
    const std::regex digits(R"(\d+)");
    for (std::sregex_iterator it(shape_text.begin(), shape_text.end(), digits), end; it != end; ++it) {
        shape.push_back(std::stoll(it->str()));
    }
    auto t = torch::empty(shape, torch::kFloat);
    in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!in) fail(ErrorCode::Io, "truncated .npy file: " + path.string());
    return t;
}

}  // namespace fgb::explain
