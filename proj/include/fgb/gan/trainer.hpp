#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "fgb/data/loader.hpp"
#include "fgb/data/records.hpp"
#include "fgb/gan/nets.hpp"
#include "fgb/gan/spec.hpp"
#include "fgb/label.hpp"

namespace fgb::gan {

struct HistoryRow {
    std::int64_t step = 0;  // generator updates so far
    int epoch = 0;
    double loss_d = 0.0;
    double loss_g = 0.0;
    double aux_k = 0.0;  // BEGAN k_t, 0 elsewhere
    double aux_M = 0.0;  // BEGAN convergence measure, 0 elsewhere

    bool operator==(const HistoryRow&) const = default;
};

struct TrainHistory {
    std::vector<HistoryRow> rows;  // one per generator step
    std::vector<double> epoch_seconds;

    bool all_finite() const;
    void write_csv(const std::filesystem::path& path) const;
    static TrainHistory read_csv(const std::filesystem::path& path);
};

struct GanCheckpoint {
    GanSpec spec;
    TrainConfig cfg;
    int epoch = 0;
    std::int64_t step = 0;
    double began_k = 0.0;
    Generator generator{nullptr};
    Discriminator discriminator{nullptr};

    /// Freshly initialized networks; parameters depend only on cfg.seed.
    static GanCheckpoint initial(const GanSpec& spec, const TrainConfig& cfg);

    nlohmann::json metadata() const;
    /// Writes the network archive to path and the metadata next to it (.json).
    void save(const std::filesystem::path& path) const;
    static GanCheckpoint load(const std::filesystem::path& path);
};

struct TrainOptions {
    std::filesystem::path out_dir;  // checkpoint.pt / checkpoint.json / history.csv when set
    std::function<void(const HistoryRow&)> on_step;
};

struct TrainResult {
    GanCheckpoint checkpoint;
    TrainHistory history;
};

TrainResult train_gan(const GanSpec& spec, const data::LabeledImages& train, const TrainConfig& cfg,
                      const TrainOptions& options = {});

/// Loads the TRAIN split at spec.image_size and trains on it.
TrainResult train_gan(const GanSpec& spec, const data::DatasetManifest& manifest, const TrainConfig& cfg,
                      const TrainOptions& options = {});

struct Generated {
    torch::Tensor images;  // [n,3,S,S] in [-1,1]
    std::optional<Label> label;
};

Generated generate(const GanCheckpoint& checkpoint, std::int64_t n, std::optional<Label> label, std::uint64_t seed);

}  // namespace fgb::gan
