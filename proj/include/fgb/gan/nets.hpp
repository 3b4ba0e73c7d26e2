#pragma once

#include <optional>
#include <vector>

#include <torch/torch.h>

#include "fgb/gan/spec.hpp"

namespace fgb::gan {

// Upsampling depth and native raster for an output size: four stride-2
// stages from 64 px upward, three below. Sizes that are not base * 2^blocks
// (100 -> 96) get a final bilinear resize.
struct Geometry {
    int blocks;
    int base;
    int native;

    static Geometry for_size(int image_size);
};

// Transposed-conv generator. Conditional variants append a one-hot label
// to z.
class GeneratorImpl : public torch::nn::Module {
public:
    explicit GeneratorImpl(const GanSpec& spec);

    torch::Tensor forward(const torch::Tensor& z, const torch::Tensor& labels = {});

    const GanSpec& spec() const { return spec_; }

private:
    GanSpec spec_;
    Geometry geo_;
    int top_channels_;
    torch::nn::Linear fc_{nullptr};
    torch::nn::BatchNorm1d fc_bn_{nullptr};
    torch::nn::Sequential up_{nullptr};
};
TORCH_MODULE(Generator);

struct DiscriminatorOutput {
    torch::Tensor score;         // [N]; logit, LSGAN value or critic value
    torch::Tensor class_logits;  // [N, class_count] for ACGAN
    torch::Tensor recon;         // autoencoder variants: reconstruction of the input
};

// Strided-conv discriminator without normalization layers, so per-sample
// input gradients are independent (required by the gradient penalties).
// EBGAN/BEGAN swap the scalar head for a bottleneck decoder; CGAN feeds
// one-hot label planes as extra input channels; ACGAN adds a class head.
class DiscriminatorImpl : public torch::nn::Module {
public:
    explicit DiscriminatorImpl(const GanSpec& spec);

    DiscriminatorOutput forward(const torch::Tensor& x, const torch::Tensor& labels = {});

    // Per-sample reconstruction error: MSE for EBGAN, L1 for BEGAN. [N]
    torch::Tensor reconstruction_error(const torch::Tensor& x, const torch::Tensor& recon) const;

private:
    GanSpec spec_;
    Geometry geo_;
    int feat_channels_;
    int feat_side_;
    torch::nn::Sequential down_{nullptr};
    torch::nn::Linear head_{nullptr};
    torch::nn::Linear class_head_{nullptr};
    torch::nn::Linear decode_fc_{nullptr};
    torch::nn::Sequential decode_{nullptr};
};
TORCH_MODULE(Discriminator);

torch::Tensor one_hot(const torch::Tensor& labels, int classes);

// Clamp every parameter of a module into [-c, c] in place.
void clip_weights(torch::nn::Module& module, double c);

}  // namespace fgb::gan
