#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "fgb/clf/metrics.hpp"
#include "fgb/clf/models.hpp"
#include "fgb/clf/sampling.hpp"
#include "fgb/data/loader.hpp"

namespace fgb::clf {

struct EpochRow {
    int epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
    std::int64_t images = 0;
    std::int64_t replaced = 0;
    double seconds = 0.0;
};

struct ClassifierHistory {
    std::vector<EpochRow> rows;
    void write_csv(const std::filesystem::path& path) const;
};

struct TrainedClassifier {
    Classifier model{nullptr};
    ClassifierSpec spec;
    ClassifierHistory history;
    std::set<std::string> seen_ids;  // every real image id that entered a batch
};

/// Per batch: weighted sampling with replacement, classic augmentation,
/// synthetic replacement; SGD with momentum. Any batch id found in
/// forbidden_ids (the TEST split) is a ManifestError.
TrainedClassifier train_classifier(const ClassifierSpec& spec, const data::LabeledImages& train, const MixingConfig& mix,
                                   SynthSource* synth, const std::set<std::string>& forbidden_ids = {},
                                   const ClassicAugmentOptions& augment = {});

/// Loads TRAIN at spec.input_size and audits batches against the TEST ids.
TrainedClassifier train_classifier(const ClassifierSpec& spec, const data::DatasetManifest& manifest,
                                   const MixingConfig& mix, SynthSource* synth);

ClassifierMetrics evaluate(Classifier& model, const data::LabeledImages& test, int input_size, int batch = 64);

struct SweepRow {
    Arch arch = Arch::ResNet18;
    double p = 0.0;
    std::uint64_t seed = 0;
    ClassifierMetrics metrics;
};

struct SweepBest {
    Arch arch = Arch::ResNet18;
    double p = 0.0;
    double mean_acc = 0.0;
    double sd_acc = 0.0;
    int seeds = 0;
};

std::vector<double> default_p_grid();

/// One train/evaluate cycle per (p, seed).
std::vector<SweepRow> sweep_p(const ClassifierSpec& spec, const data::LabeledImages& train,
                              const data::LabeledImages& test, const std::vector<double>& p_grid,
                              const std::vector<std::uint64_t>& seeds, SynthSource* synth,
                              const std::function<void(const SweepRow&)>& on_row = {},
                              const ClassicAugmentOptions& augment = {});

/// Mean accuracy over seeds per (arch, p); the best p per architecture.
std::vector<SweepBest> best_p(const std::vector<SweepRow>& rows);

/// `arch,p,seed,acc,sensitivity,specificity`
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

}  // namespace fgb::clf
