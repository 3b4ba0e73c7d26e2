#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "fgb/data/loader.hpp"
#include "fgb/data/records.hpp"
#include "fgb/label.hpp"
#include "fgb/style/ada.hpp"
#include "fgb/style/config.hpp"
#include "fgb/style/layers.hpp"

namespace fgb::style {

struct StyleHistoryRow {
    std::int64_t step = 0;
    int epoch = 0;
    double loss_d = 0.0;
    double loss_g = 0.0;
    double r1 = 0.0;
    double p_aug = 0.0;
    double r_estimate = 0.0;

    bool operator==(const StyleHistoryRow&) const = default;
};

struct StyleHistory {
    std::vector<StyleHistoryRow> rows;
    std::vector<double> epoch_seconds;

    bool all_finite() const;
    std::vector<double> p_trace() const;
    void write_csv(const std::filesystem::path& path) const;
};

struct StyleCheckpoint {
    StyleConfig cfg;
    std::uint64_t seed = 0;
    int epoch = 0;
    std::int64_t step = 0;
    AdaState ada;
    StyleGenerator generator{nullptr};
    StyleDiscriminator discriminator{nullptr};

    static StyleCheckpoint initial(const StyleConfig& cfg, std::uint64_t seed);
    void save(const std::filesystem::path& path) const;
    static StyleCheckpoint load(const std::filesystem::path& path);
};

struct StyleTrainResult {
    StyleCheckpoint checkpoint;
    StyleHistory history;
};

/// Non-saturating logistic loss, R1 on reals, ADA-controlled augmentation of
/// every discriminator input. One discriminator and one generator step per batch.
StyleTrainResult train_style_toy(const StyleConfig& cfg, const data::LabeledImages& train, int epochs,
                                 std::uint64_t seed, const std::filesystem::path& out_dir = {});

StyleTrainResult train_style_toy(const StyleConfig& cfg, const data::DatasetManifest& manifest, int epochs,
                                 std::uint64_t seed, const std::filesystem::path& out_dir = {});

torch::Tensor generate_style(const StyleCheckpoint& checkpoint, std::int64_t n, std::optional<Label> label,
                             std::uint64_t seed);

}  // namespace fgb::style
