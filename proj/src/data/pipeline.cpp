#include "fgb/data/pipeline.hpp"

#include <opencv2/imgproc.hpp>

#include "fgb/error.hpp"
#include "fgb/image.hpp"

namespace fgb::data {

namespace fs = std::filesystem;

PreprocessResult preprocess_manifest(const DatasetManifest& manifest, const fs::path& out_dir,
                                     const HoughConfig& hough) {
    PreprocessResult result;
    result.manifest.seed = manifest.seed;
    for (const auto& record : manifest.records) {
        try {
            const cv::Mat color = image::read(record.path);
            cv::Mat gray;
            cv::cvtColor(color, gray, cv::COLOR_BGR2GRAY);
            const RetinaCircle circle = detect_retina_circle(gray, hough);
            const cv::Mat cropped = crop_and_resize(color, circle, CropTarget::Gan256);
            const auto target = out_dir / std::string(to_string(record.source_dataset)) /
                                (record.path.stem().string() + ".png");
            image::write_png(target, cropped);
            ImageRecord r = record;
            r.path = target;
            r.circle = circle;
            result.manifest.records.push_back(std::move(r));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoCircleFound && e.code() != ErrorCode::DegenerateCrop &&
                e.code() != ErrorCode::Io && e.code() != ErrorCode::UsageError) {
                throw;
            }
            result.warnings.push_back(record.id + ": " + std::string(to_string(e.code())) + " (" + e.what() + ")");
        }
    }
    result.manifest.recount();
    return result;
}

}  // namespace fgb::data
