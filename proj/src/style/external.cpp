#include "fgb/style/external.hpp"

#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

#include "fgb/error.hpp"
#include "fgb/image.hpp"

namespace fgb::style {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json hyperparameters(const StyleConfig& cfg) {
    return {{"batch", cfg.batch_size},
            {"ada_target", cfg.ada_target},
            {"lr", cfg.lr},
            {"betas", cfg.adam_betas},
            {"eps", cfg.adam_eps}};
}

std::string num(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

ExternalRunPlan export_external_config(const StyleConfig& cfg, const data::DatasetManifest& manifest,
                                       const fs::path& out_dir, const fs::path& trainer_dir) {
    cfg.validate();
    const auto train = manifest.in_split(data::Split::Train);
    if (train.empty()) fail(ErrorCode::ConfigError, "manifest has no TRAIN images to export");

    ExternalRunPlan plan;
    plan.dataset_dir = out_dir / "dataset";
    plan.descriptor_path = out_dir / "run.json";
    json labels = json::array();
    for (const auto* r : train) {
        const cv::Mat img = image::read(r->path);
        if (img.rows != kExternalResolution || img.cols != kExternalResolution) {
            fail(ErrorCode::ConfigError, r->id + " is " + std::to_string(img.cols) + "x" + std::to_string(img.rows) +
                                             ", external training expects 256x256 (GAN_256 crops)");
        }
        const auto rel = fs::path(std::string(to_string(r->label))) /
                         (std::string(to_string(r->source_dataset)) + "_" + r->path.stem().string() + ".png");
        image::write_png(plan.dataset_dir / rel, img);
        labels.push_back({rel.generic_string(), index_of(r->label)});
    }
    std::ofstream(plan.dataset_dir / "dataset.json") << json{{"labels", labels}}.dump(1) << "\n";

    const auto run_dir = out_dir / "runs";
    plan.command = {"python",
                    (trainer_dir / "train.py").generic_string(),
                    "--outdir=" + run_dir.generic_string(),
                    "--data=" + plan.dataset_dir.generic_string(),
                    "--cfg=paper256",
                    "--batch=" + std::to_string(cfg.batch_size),
                    "--target=" + num(cfg.ada_target),
                    "--cond=" + std::string(cfg.conditional ? "1" : "0"),
                    "--aug=ada",
                    "--gpus=1"};
    plan.descriptor = {{"trainer", "stylegan2-ada-pytorch"},
                       {"resolution", kExternalResolution},
                       {"conditional", cfg.conditional},
                       {"hyperparameters", hyperparameters(cfg)},
                       {"style_config", cfg},
                       {"dataset", plan.dataset_dir.generic_string()},
                       {"image_count", train.size()},
                       {"run_dir", run_dir.generic_string()},
                       {"command", plan.command}};
    fs::create_directories(out_dir);
    std::ofstream(plan.descriptor_path) << plan.descriptor.dump(2) << "\n";
    return plan;
}

StyleConfig parse_descriptor(const json& descriptor) {
    StyleConfig cfg;
    try {
        cfg = descriptor.at("style_config").get<StyleConfig>();
        if (descriptor.at("hyperparameters") != hyperparameters(cfg)) {
            fail(ErrorCode::ConfigError, "descriptor hyperparameters disagree with its style_config");
        }
        if (descriptor.at("resolution").get<int>() != kExternalResolution) {
            fail(ErrorCode::ConfigError, "descriptor resolution must be 256");
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("malformed run descriptor: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExternalRunOutcome interpret_external_run(const fs::path& run_dir, int exit_status) {
    ExternalRunOutcome out;
    out.succeeded = exit_status == 0;
    if (!fs::is_directory(run_dir)) return out;
    for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
        const auto name = entry.path().filename().string();
        if (!entry.is_regular_file() || name.rfind("network-snapshot-", 0) != 0 || entry.path().extension() != ".pkl") {
            continue;
        }
        // Snapshot names carry a zero-padded kimg count, so lexical order is training order.
        if (!out.latest_snapshot || name > out.latest_snapshot->filename().string() ||
            (name == out.latest_snapshot->filename().string() && entry.path() > *out.latest_snapshot)) {
            out.latest_snapshot = entry.path();
        }
    }
    return out;
}

}  // namespace fgb::style
