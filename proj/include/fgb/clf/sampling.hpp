#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "fgb/data/records.hpp"
#include "fgb/gan/trainer.hpp"
#include "fgb/label.hpp"
#include "fgb/rng.hpp"
#include "fgb/style/toy.hpp"

namespace fgb::clf {

// Supplier of synthetic images for a requested label, values in [-1,1].
class SynthSource {
public:
    virtual ~SynthSource() = default;
    virtual torch::Tensor sample(Label label, std::int64_t n, Rng& rng) = 0;
    virtual std::string describe() const = 0;
};

// Fresh samples on every request. A conditional checkpoint serves both
// labels; otherwise one unconditional checkpoint per label is required.
class GanSynthSource : public SynthSource {
public:
    explicit GanSynthSource(gan::GanCheckpoint conditional);
    GanSynthSource(gan::GanCheckpoint amd, gan::GanCheckpoint non_amd);

    torch::Tensor sample(Label label, std::int64_t n, Rng& rng) override;
    std::string describe() const override;

private:
    std::vector<gan::GanCheckpoint> ckpts_;
};

class StyleSynthSource : public SynthSource {
public:
    explicit StyleSynthSource(style::StyleCheckpoint conditional);
    StyleSynthSource(style::StyleCheckpoint amd, style::StyleCheckpoint non_amd);

    torch::Tensor sample(Label label, std::int64_t n, Rng& rng) override;
    std::string describe() const override;

private:
    std::vector<style::StyleCheckpoint> ckpts_;
};

// Fixed pre-generated pool per label; draws uniformly with replacement.
class PooledSynthSource : public SynthSource {
public:
    PooledSynthSource(torch::Tensor amd_pool, torch::Tensor non_amd_pool);
    static PooledSynthSource from(SynthSource& source, std::int64_t per_label, Rng& rng);

    torch::Tensor sample(Label label, std::int64_t n, Rng& rng) override;
    std::string describe() const override;

private:
    std::array<torch::Tensor, 2> pools_;
};

struct MixingConfig {
    double p = 0.0;
    std::uint64_t seed = 0;
    std::string synth_source;  // checkpoint path(s) as given in the run config
    bool pooled = false;
    std::int64_t pool_size = 512;

    void validate() const;
    bool operator==(const MixingConfig&) const = default;
};

void to_json(nlohmann::json& j, const MixingConfig& m);
void from_json(const nlohmann::json& j, MixingConfig& m);

struct MixResult {
    torch::Tensor images;
    torch::Tensor labels;
    std::vector<bool> replaced;

    std::int64_t replaced_count() const;
};

/// Per item: x ~ U[0,1]; when p > x the image is swapped for a synthetic one
/// of the same label (resized to the batch geometry). Labels never change.
MixResult mix_batch(const torch::Tensor& images, const torch::Tensor& labels, double p, SynthSource* source,
                    Rng& rng);

/// 1 / (count of the record's class), for TRAIN records or a label vector.
std::vector<double> sampler_weights(const std::vector<Label>& labels);
std::vector<double> sampler_weights(const data::DatasetManifest& manifest);

// Draws indices with replacement in proportion to the weights.
class WeightedSampler {
public:
    explicit WeightedSampler(const std::vector<double>& weights);
    std::int64_t draw(Rng& rng) const;
    std::vector<std::int64_t> draw(std::int64_t n, Rng& rng) const;

private:
    std::vector<double> cumulative_;
};

struct ClassicAugmentOptions {
    std::array<double, 2> crop_scale{0.8, 1.0};  // area fraction
    std::array<double, 2> crop_ratio{3.0 / 4.0, 4.0 / 3.0};
    double brightness = 0.2;
    double contrast = 0.2;
    double saturation = 0.2;
    double flip_prob = 0.5;

    static ClassicAugmentOptions none();
};

struct ClassicAugmented {
    torch::Tensor image;
    bool flipped = false;
};

/// Random resized crop, brightness/contrast/saturation jitter with factors in
/// [1-j, 1+j], horizontal flip; image [3,H,W] in [-1,1], output clamped.
ClassicAugmented classic_augment(const torch::Tensor& image, Rng& rng, const ClassicAugmentOptions& options = {});

torch::Tensor classic_augment_batch(const torch::Tensor& images, Rng& rng, const ClassicAugmentOptions& options = {});

}  // namespace fgb::clf
