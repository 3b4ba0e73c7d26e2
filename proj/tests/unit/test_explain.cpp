#include "support/doctest.hpp"

#include <fstream>

#include <opencv2/imgproc.hpp>

#include "fgb/error.hpp"
#include "fgb/explain/gradcam.hpp"
#include "support/temp_dir.hpp"

using namespace fgb;
using namespace fgb::explain;
using fgb::testing::TempDir;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected fgb::Error");
    return ErrorCode::Io;
}

const auto kA = [] { return torch::tensor({1.0, -1.0, 0.0, 2.0}).view({1, 2, 2}); };

}  // namespace

TEST_CASE("gradcam_raw: hand fixtures") {
    const auto plus = gradcam_raw(kA(), torch::ones({1, 2, 2}));
    CHECK(torch::equal(plus, torch::tensor({1.0, 0.0, 0.0, 2.0}).view({2, 2})));
    const auto minus = gradcam_raw(kA(), -torch::ones({1, 2, 2}));
    CHECK(torch::equal(minus, torch::tensor({0.0, 1.0, 0.0, 0.0}).view({2, 2})));
    const auto zero = gradcam_from(kA(), torch::zeros({1, 2, 2}), 8, 8);
    CHECK(zero.abs().max().item<double>() == 0.0);
    CHECK(code_of([] { gradcam_raw(torch::ones({2, 2}), torch::ones({2, 2})); }) == ErrorCode::UsageError);
}

TEST_CASE("gradcam_from: weights are spatial means of the gradient") {
    // Two maps; alpha = (0.25, -1).
    const auto a = torch::stack({torch::tensor({4.0, 0.0, 0.0, 0.0}).view({2, 2}),
                                 torch::tensor({0.0, 0.0, 0.0, 1.0}).view({2, 2})});
    const auto g = torch::stack({torch::tensor({1.0, 0.0, 0.0, 0.0}).view({2, 2}), -torch::ones({2, 2})});
    CHECK(torch::allclose(gradcam_raw(a, g), torch::tensor({1.0, 0.0, 0.0, 0.0}).view({2, 2})));
    const auto up = gradcam_from(a, g, 2, 2);
    CHECK(up.max().item<double>() == 1.0);
}

TEST_CASE("linear score: heatmap is the normalized ReLU of the map") {
    torch::manual_seed(3);
    const auto a = torch::randn({1, 6, 6}).requires_grad_(true);
    const auto score = 2.5 * a.sum();
    const auto g = torch::autograd::grad({score}, {a})[0];
    const auto map = gradcam_from(a, g, 6, 6);
    const auto want = torch::relu(a.detach()[0]);
    CHECK(torch::allclose(map, (want / want.max()).to(torch::kFloat), 1e-6, 1e-6));
}

TEST_CASE("gradcam on classifiers: invariants and layer checks") {
    torch::manual_seed(5);
    for (auto arch : clf::kAllArchs) {
        const int size = arch == clf::Arch::AlexNet ? 64 : 32;
        clf::Classifier model(arch, 0.125, 2);
        for (int t = 0; t < 3; ++t) {
            const auto img = torch::rand({3, size, size}) * 2 - 1;
            const auto h = gradcam(model, img, t % 2 ? Label::Amd : Label::NonAmd, model->default_layer());
            CHECK(h.values.sizes() == torch::IntArrayRef({size, size}));
            CHECK(h.values.min().item<double>() >= 0.0);
            const double peak = h.values.max().item<double>();
            CHECK((peak == 0.0 || std::abs(peak - 1.0) < 1e-6));
        }
        const auto img = torch::zeros({3, size, size});
        CHECK(code_of([&] { gradcam(model, img, Label::Amd, "flatten"); }) == ErrorCode::UsageError);
        CHECK(code_of([&] { gradcam(model, img, Label::Amd, "no_such_layer"); }) == ErrorCode::UsageError);
    }
}

TEST_CASE("overlay: alpha extremes and zero heatmap") {
    cv::Mat img(4, 5, CV_8UC3);
    cv::randu(img, 0, 255);
    Heatmap h{torch::rand({4, 5}), "x", Label::Amd};
    CHECK(cv::norm(overlay(img, h, 0.0), img, cv::NORM_INF) == 0.0);

    cv::Mat heat8, jet;
    cv::Mat(4, 5, CV_32F, h.values.data_ptr<float>()).convertTo(heat8, CV_8U, 255.0);
    cv::applyColorMap(heat8, jet, cv::COLORMAP_JET);
    CHECK(cv::norm(overlay(img, h, 1.0), jet, cv::NORM_INF) == 0.0);

    // Zero map: every pixel blends with the colormap's color for 0.
    Heatmap zero{torch::zeros({4, 5}), "x", Label::Amd};
    cv::Mat z8 = cv::Mat::zeros(1, 1, CV_8U), zc;
    cv::applyColorMap(z8, zc, cv::COLORMAP_JET);
    const auto c = zc.at<cv::Vec3b>(0, 0);
    const auto out = overlay(img, zero, 0.4);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 5; ++x) {
            for (int k = 0; k < 3; ++k) {
                const double want = 0.6 * img.at<cv::Vec3b>(y, x)[k] + 0.4 * c[k];
                CHECK(std::abs(out.at<cv::Vec3b>(y, x)[k] - want) <= 0.5 + 1e-9);
            }
        }
    }
    CHECK(code_of([&] { overlay(img, Heatmap{torch::zeros({3, 3}), "x", Label::Amd}); }) == ErrorCode::UsageError);
}

TEST_CASE("npy round trip") {
    TempDir dir;
    const auto v = torch::rand({7, 9});
    write_npy(dir / "h.npy", v);
    CHECK(torch::equal(read_npy(dir / "h.npy"), v));
    std::ifstream in(dir / "h.npy", std::ios::binary);
    std::string head(128, '\0');
    in.read(head.data(), 128);
    CHECK(head.find("'shape': (7, 9)") != std::string::npos);
    CHECK(std::filesystem::file_size(dir / "h.npy") % 4 == 0);
}
