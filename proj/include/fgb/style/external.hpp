#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgb/data/records.hpp"
#include "fgb/style/config.hpp"

namespace fgb::style {

inline constexpr int kExternalResolution = 256;

// Everything needed to launch the official StyleGAN2-ADA (PyTorch) trainer.
struct ExternalRunPlan {
    std::filesystem::path dataset_dir;     // <out>/dataset/<LABEL>/*.png + dataset.json
    std::filesystem::path descriptor_path; // <out>/run.json
    std::vector<std::string> command;      // argv for train.py
    nlohmann::json descriptor;
};

/// Exports the TRAIN split of a manifest (all images must be 256x256) in the
/// external trainer's layout and writes the run descriptor.
ExternalRunPlan export_external_config(const StyleConfig& cfg, const data::DatasetManifest& manifest,
                                       const std::filesystem::path& out_dir,
                                       const std::filesystem::path& trainer_dir = "stylegan2-ada-pytorch");

/// Reads the style config back from a descriptor; ConfigError if the
/// hyperparameter block disagrees with it.
StyleConfig parse_descriptor(const nlohmann::json& descriptor);

struct ExternalRunOutcome {
    bool succeeded = false;
    std::optional<std::filesystem::path> latest_snapshot;  // network-snapshot-*.pkl
};

/// Only the exit status and the newest snapshot are inspected.
ExternalRunOutcome interpret_external_run(const std::filesystem::path& run_dir, int exit_status);

}  // namespace fgb::style
