#include "fgb/data/toy.hpp"

#include <cmath>
#include <cstdio>

#include <opencv2/imgproc.hpp>

#include "fgb/csv.hpp"
#include "fgb/image.hpp"

namespace fgb::data {

namespace fs = std::filesystem;

namespace {
constexpr int kShiftBits = 8;
constexpr double kShiftScale = 1 << kShiftBits;

cv::Point fixed(double x, double y) {
    return {static_cast<int>(std::lround(x * kShiftScale)), static_cast<int>(std::lround(y * kShiftScale))};
}
}  // namespace

cv::Mat render_disk(int width, int height, double cx, double cy, double radius, int channels, cv::Scalar color) {
    cv::Mat img = cv::Mat::zeros(height, width, CV_8UC(channels));
    cv::circle(img, fixed(cx, cy), static_cast<int>(std::lround(radius * kShiftScale)), color, cv::FILLED, cv::LINE_AA,
               kShiftBits);
    return img;
}

cv::Mat render_toy_fundus(int size, Label label, Rng& rng) {
    // Draw at 4x and downsample so small sizes still look smooth.
    const int big = size * 4;
    cv::Mat img = cv::Mat::zeros(big, big, CV_8UC3);
    const double s = big;
    const double cx = s * (0.5 + rng.uniform(-0.06, 0.06));
    const double cy = s * (0.5 + rng.uniform(-0.06, 0.06));
    const double ax = s * rng.uniform(0.36, 0.44);
    const double ay = s * rng.uniform(0.36, 0.44);
    const double angle = rng.uniform(0.0, 180.0);
    const double bright = rng.uniform(0.85, 1.0);

    // BGR
    const cv::Scalar base = label == Label::Amd ? cv::Scalar(50, 175, 215) * bright : cv::Scalar(40, 70, 210) * bright;
    cv::ellipse(img, fixed(cx, cy), cv::Size(static_cast<int>(ax * kShiftScale), static_cast<int>(ay * kShiftScale)),
                angle, 0, 360, base, cv::FILLED, cv::LINE_AA, kShiftBits);

    const double mx = cx + s * rng.uniform(-0.05, 0.05);
    const double my = cy + s * rng.uniform(-0.05, 0.05);
    cv::circle(img, fixed(mx, my), static_cast<int>(s * 0.08 * kShiftScale), base * 0.45, cv::FILLED, cv::LINE_AA,
               kShiftBits);

    if (label == Label::Amd) {
        const int spots = 3 + static_cast<int>(rng.index(4));
        for (int i = 0; i < spots; ++i) {
            const double a = rng.uniform(0.0, 2.0 * 3.14159265358979);
            const double d = s * rng.uniform(0.06, 0.2);
            cv::circle(img, fixed(mx + d * std::cos(a), my + d * std::sin(a)),
                       static_cast<int>(s * rng.uniform(0.03, 0.05) * kShiftScale), cv::Scalar(170, 245, 250),
                       cv::FILLED, cv::LINE_AA, kShiftBits);
        }
    }

    cv::Mat out;
    cv::resize(img, out, cv::Size(size, size), 0, 0, cv::INTER_AREA);
    return out;
}

DatasetManifest make_toy_dataset(const fs::path& dir, const ToyOptions& options) {
    fs::create_directories(dir);
    Rng rng(options.seed);
    DatasetManifest m;
    m.seed = options.seed;
    std::vector<csv::Row> label_rows;
    int test_left[2] = {options.test_per_class, options.test_per_class};
    for (int i = 0; i < options.count; ++i) {
        const Label label = rng.uniform01() < options.amd_fraction ? Label::Amd : Label::NonAmd;
        char name[32];
        std::snprintf(name, sizeof name, "toy_%05d.png", i);
        const auto path = dir / name;
        image::write_png(path, render_toy_fundus(options.size, label, rng));
        label_rows.push_back({name, std::string(to_string(label))});

        ImageRecord r;
        r.id = std::string("TOY/") + fs::path(name).stem().string();
        r.source_dataset = SourceDataset::Toy;
        r.path = path;
        r.label = label;
        r.grade = Grade::Good;
        int& left = test_left[index_of(label)];
        r.split = left > 0 ? Split::Test : Split::Train;
        if (left > 0) --left;
        m.records.push_back(std::move(r));
    }
    csv::write(dir / "labels.csv", {"filename", "label"}, label_rows);
    m.recount();
    return m;
}

LabeledImages toy_images(const ToyOptions& options) {
    Rng rng(options.seed);
    std::vector<torch::Tensor> images;
    std::vector<std::int64_t> labels;
    LabeledImages out;
    for (int i = 0; i < options.count; ++i) {
        const Label label = rng.uniform01() < options.amd_fraction ? Label::Amd : Label::NonAmd;
        images.push_back(image::to_tensor(render_toy_fundus(options.size, label, rng), options.size));
        labels.push_back(index_of(label));
        char name[32];
        std::snprintf(name, sizeof name, "TOY/toy_%05d", i);
        out.ids.push_back(name);
    }
    out.images = images.empty() ? torch::empty({0, 3, options.size, options.size}) : torch::stack(images);
    out.labels = torch::tensor(labels, torch::kInt64);
    return out;
}

}  // namespace fgb::data
