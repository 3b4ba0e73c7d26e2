#pragma once

#include <span>
#include <vector>

#include <torch/torch.h>

#include "fgb/rng.hpp"

namespace fgb::style {

struct AdaState {
    double p_aug = 0.0;
    double r_estimate = 0.0;  // EMA of sign(D(x_real))
    double target = 0.8;
    double step_size = 0.005;
    double half_life = 500.0;  // in updates
};

/// Folds a batch of signs into the EMA, then nudges p toward the target.
/// An empty batch leaves the estimate unchanged.
AdaState ada_update(AdaState state, std::span<const double> d_real_signs);

struct AugmentOptions {
    bool rotate90 = true;
    bool translate = true;
    bool flip = true;
    bool brightness = true;
    bool contrast = true;
};

enum class Aug { Rotate90 = 0, Translate, Flip, Brightness, Contrast };
inline constexpr int kAugCount = 5;

struct AugmentResult {
    torch::Tensor images;
    // applied[i][a] is true when augmentation a fired on image i.
    std::vector<std::array<bool, kAugCount>> applied;

    std::int64_t count(Aug a) const;
};

/// Each enabled augmentation fires independently per image with probability
/// p_aug. Built from differentiable tensor ops, so gradients pass through to
/// generated inputs.
AugmentResult augment_pipeline(const torch::Tensor& images, double p_aug, Rng& rng,
                               const AugmentOptions& options = {});

}  // namespace fgb::style
