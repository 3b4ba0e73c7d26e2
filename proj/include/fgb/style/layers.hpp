#pragma once

#include <optional>
#include <vector>

#include <ATen/core/Generator.h>
#include <torch/torch.h>

#include "fgb/style/config.hpp"

namespace fgb::style {

/// Per-sample effective weights [N,Cout,Cin,k,k]: weight scaled by s along
/// the input axis, each output filter divided by sqrt(sum w'^2 + eps) when
/// demodulating.
torch::Tensor modulated_weights(const torch::Tensor& s, const torch::Tensor& weight, bool demodulate,
                                double eps = 1e-8);

/// x [N,Cin,H,W], s [N,Cin], weight [Cout,Cin,k,k] -> [N,Cout,H,W] (same
/// padding). Implemented as one grouped convolution over the batch.
torch::Tensor modulated_conv(const torch::Tensor& x, const torch::Tensor& s, const torch::Tensor& weight,
                             bool demodulate, double eps = 1e-8);

// z -> w: z * rsqrt(mean(z^2) + 1e-8), then mapping_layers x (linear, lrelu 0.2).
// Conditional configs concatenate a normalized label embedding to z.
class MappingNetworkImpl : public torch::nn::Module {
public:
    explicit MappingNetworkImpl(const StyleConfig& cfg);
    torch::Tensor forward(const torch::Tensor& z, const torch::Tensor& labels = {});

private:
    StyleConfig cfg_;
    torch::nn::Embedding embed_{nullptr};
    std::vector<torch::nn::Linear> layers_;
};
TORCH_MODULE(MappingNetwork);

// Modulated 3x3 conv -> noise broadcast (learned strength, starts at 0) ->
// bias -> lrelu.
class StyleLayerImpl : public torch::nn::Module {
public:
    StyleLayerImpl(int w_dim, int in_channels, int out_channels);
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& w, at::Generator* gen);

private:
    torch::nn::Linear affine_{nullptr};
    torch::Tensor weight_, bias_, noise_strength_;
};
TORCH_MODULE(StyleLayer);

class ToRgbImpl : public torch::nn::Module {
public:
    ToRgbImpl(int w_dim, int in_channels);
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& w);

private:
    torch::nn::Linear affine_{nullptr};
    torch::Tensor weight_, bias_;
};
TORCH_MODULE(ToRgb);

// Learned 4x4 constant, two style layers per resolution, skip-connected RGB
// outputs summed across resolutions, tanh at the end.
class StyleGeneratorImpl : public torch::nn::Module {
public:
    explicit StyleGeneratorImpl(const StyleConfig& cfg);
    torch::Tensor forward(const torch::Tensor& z, const torch::Tensor& labels = {}, at::Generator* gen = nullptr);

    /// RGB image after each resolution's output nonlinearity, lowest first.
    std::vector<torch::Tensor> forward_all(const torch::Tensor& z, const torch::Tensor& labels = {},
                                           at::Generator* gen = nullptr);

    MappingNetwork mapping{nullptr};

private:
    StyleConfig cfg_;
    torch::Tensor const_input_;
    std::vector<StyleLayer> layers_;
    std::vector<ToRgb> to_rgb_;
};
TORCH_MODULE(StyleGenerator);

// Plain strided-conv discriminator; conditional configs use a projection
// head (score += <embed(label), features>).
class StyleDiscriminatorImpl : public torch::nn::Module {
public:
    explicit StyleDiscriminatorImpl(const StyleConfig& cfg);
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& labels = {});

private:
    StyleConfig cfg_;
    torch::nn::Sequential body_{nullptr};
    torch::nn::Linear head_{nullptr};
    torch::nn::Embedding project_{nullptr};
};
TORCH_MODULE(StyleDiscriminator);

}  // namespace fgb::style
