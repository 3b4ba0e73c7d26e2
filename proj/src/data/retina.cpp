#include "fgb/data/retina.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "fgb/error.hpp"

namespace fgb::data {

namespace {

// Dense (r, y, x) accumulator.
class Accumulator {
public:
    Accumulator(int radii, int height, int width)
        : radii_(radii), height_(height), width_(width),
          cells_(static_cast<std::size_t>(radii) * height * width, 0.0f) {}

    float& at(int r, int y, int x) { return cells_[(static_cast<std::size_t>(r) * height_ + y) * width_ + x]; }
    float at(int r, int y, int x) const { return cells_[(static_cast<std::size_t>(r) * height_ + y) * width_ + x]; }

    void splat(int r, double fx, double fy, float weight) {
        const int x0 = static_cast<int>(std::floor(fx));
        const int y0 = static_cast<int>(std::floor(fy));
        const auto tx = static_cast<float>(fx - x0);
        const auto ty = static_cast<float>(fy - y0);
        add(r, y0, x0, weight * (1 - tx) * (1 - ty));
        add(r, y0, x0 + 1, weight * tx * (1 - ty));
        add(r, y0 + 1, x0, weight * (1 - tx) * ty);
        add(r, y0 + 1, x0 + 1, weight * tx * ty);
    }

    // 3x3x3 box sum, computed separably.
    Accumulator box_sum() const {
        Accumulator a = *this;
        Accumulator b(radii_, height_, width_);
        auto pass = [&](const Accumulator& in, Accumulator& out, int dr, int dy, int dx) {
            for (int r = 0; r < radii_; ++r) {
                for (int y = 0; y < height_; ++y) {
                    for (int x = 0; x < width_; ++x) {
                        float s = in.at(r, y, x);
                        if (in.inside(r - dr, y - dy, x - dx)) s += in.at(r - dr, y - dy, x - dx);
                        if (in.inside(r + dr, y + dy, x + dx)) s += in.at(r + dr, y + dy, x + dx);
                        out.at(r, y, x) = s;
                    }
                }
            }
        };
        pass(a, b, 0, 0, 1);
        pass(b, a, 0, 1, 0);
        pass(a, b, 1, 0, 0);
        return b;
    }

    bool inside(int r, int y, int x) const {
        return r >= 0 && r < radii_ && y >= 0 && y < height_ && x >= 0 && x < width_;
    }

    int radii() const { return radii_; }
    int height() const { return height_; }
    int width() const { return width_; }

private:
    void add(int r, int y, int x, float w) {
        if (inside(r, y, x)) at(r, y, x) += w;
    }

    int radii_, height_, width_;
    std::vector<float> cells_;
};

}  // namespace

RetinaCircle detect_retina_circle(const cv::Mat& gray, const HoughConfig& cfg) {
    if (gray.empty() || gray.type() != CV_8UC1) fail(ErrorCode::UsageError, "circle detection needs an 8-bit single-channel image");
    const int min_side = std::min(gray.rows, gray.cols);
    if (min_side < 64) fail(ErrorCode::UsageError, "circle detection needs a minimum dimension of 64 px");

    const double scale = std::min(1.0, static_cast<double>(cfg.working_size) / min_side);
    cv::Mat work = gray;
    if (scale < 1.0) {
        cv::resize(gray, work, cv::Size(), scale, scale, cv::INTER_AREA);
    }
    cv::Mat blurred, gx, gy, magnitude;
    cv::GaussianBlur(work, blurred, cv::Size(5, 5), 1.5);
    cv::Sobel(blurred, gx, CV_32F, 1, 0, 3);
    cv::Sobel(blurred, gy, CV_32F, 0, 1, 3);
    cv::magnitude(gx, gy, magnitude);
    double max_mag = 0.0;
    cv::minMaxLoc(magnitude, nullptr, &max_mag);
    if (max_mag < cfg.min_edge_magnitude) fail(ErrorCode::NoCircleFound, "no edges in image");
    const double threshold = std::max(cfg.edge_threshold_fraction * max_mag, cfg.min_edge_magnitude);

    const int side = std::min(work.rows, work.cols);
    const int r_min = std::max(1, static_cast<int>(std::ceil(cfg.min_radius_fraction * side)));
    const int r_max = static_cast<int>(std::floor(cfg.max_radius_fraction * side));
    if (r_max < r_min) fail(ErrorCode::UsageError, "empty Hough radius range");

    Accumulator acc(r_max - r_min + 1, work.rows, work.cols);
    for (int y = 0; y < work.rows; ++y) {
        const auto* m = magnitude.ptr<float>(y);
        const auto* dx = gx.ptr<float>(y);
        const auto* dy = gy.ptr<float>(y);
        for (int x = 0; x < work.cols; ++x) {
            if (m[x] < threshold) continue;
            const double ux = dx[x] / m[x];
            const double uy = dy[x] / m[x];
            const auto weight = static_cast<float>(m[x] / max_mag);
            for (int ri = 0; ri < acc.radii(); ++ri) {
                const double r = r_min + ri;
                // Vote on both sides of the edge so either polarity works.
                acc.splat(ri, x + r * ux, y + r * uy, weight);
                acc.splat(ri, x - r * ux, y - r * uy, weight);
            }
        }
    }

    const Accumulator smoothed = acc.box_sum();
    int best_r = 0, best_y = 0, best_x = 0;
    float best = -1.0f;
    for (int ri = 0; ri < acc.radii(); ++ri) {
        for (int y = 0; y < acc.height(); ++y) {
            for (int x = 0; x < acc.width(); ++x) {
                if (smoothed.at(ri, y, x) > best) {
                    best = smoothed.at(ri, y, x);
                    best_r = ri;
                    best_y = y;
                    best_x = x;
                }
            }
        }
    }
    const double radius_guess = r_min + best_r;
    if (best < cfg.vote_fraction * 2.0 * std::numbers::pi * radius_guess) {
        fail(ErrorCode::NoCircleFound, "no Hough cell above the vote threshold");
    }

    // Weighted centroid of the raw votes around the peak.
    double sw = 0, sr = 0, sy = 0, sx = 0;
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int r = best_r + dr, y = best_y + dy, x = best_x + dx;
                if (!acc.inside(r, y, x)) continue;
                const double w = acc.at(r, y, x);
                sw += w;
                sr += w * (r_min + r);
                sy += w * y;
                sx += w * x;
            }
        }
    }
    RetinaCircle c;
    c.cx = (sx / sw + 0.5) / scale - 0.5;
    c.cy = (sy / sw + 0.5) / scale - 0.5;
    c.r = (sr / sw) / scale;
    return c;
}

cv::Mat crop_and_resize(const cv::Mat& image, const RetinaCircle& circle, CropTarget target) {
    if (image.empty()) fail(ErrorCode::UsageError, "empty image");
    if (!circle.valid_for(image.cols, image.rows)) fail(ErrorCode::UsageError, "circle is not valid for this image");
    const int side = static_cast<int>(std::lround(2.0 * circle.r));
    if (side < 8) fail(ErrorCode::DegenerateCrop, "bounding square of " + std::to_string(side) + " px is too small");

    cv::Mat color = image;
    if (image.channels() == 1) cv::cvtColor(image, color, cv::COLOR_GRAY2BGR);
    cv::Mat src;
    color.convertTo(src, CV_32FC3);

    const int x0 = static_cast<int>(std::lround(circle.cx - circle.r));
    const int y0 = static_cast<int>(std::lround(circle.cy - circle.r));
    cv::Mat square = cv::Mat::zeros(side, side, CV_32FC3);
    const cv::Rect wanted(x0, y0, side, side);
    const cv::Rect visible = wanted & cv::Rect(0, 0, src.cols, src.rows);
    if (!visible.empty()) {
        src(visible).copyTo(square(cv::Rect(visible.x - x0, visible.y - y0, visible.width, visible.height)));
    }

    cv::Mat resampled;
    cv::resize(square, resampled, cv::Size(kResampleSide, kResampleSide), 0, 0, cv::INTER_LINEAR);
    const int offset = (kResampleSide - kGanSide) / 2;
    cv::Mat center = resampled(cv::Rect(offset, offset, kGanSide, kGanSide)).clone();

    if (target == CropTarget::Gan256) {
        if (image.depth() == CV_8U) {
            cv::Mat out;
            center.convertTo(out, CV_8UC3);
            return out;
        }
        return center;
    }

    cv::Mat small;
    cv::resize(center, small, cv::Size(kClfSide, kClfSide), 0, 0, cv::INTER_LINEAR);
    cv::Mat scaled;
    small.convertTo(scaled, CV_32FC3, 1.0 / 127.5, -1.0);
    cv::min(scaled, 1.0, scaled);
    cv::max(scaled, -1.0, scaled);
    return scaled;
}

}  // namespace fgb::data
