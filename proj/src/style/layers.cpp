#include "fgb/style/layers.hpp"

#include <cmath>

#include "fgb/error.hpp"

namespace fgb::style {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

torch::Tensor lrelu(const torch::Tensor& x) { return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2)); }

torch::Tensor upsample2(const torch::Tensor& x) {
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .scale_factor(std::vector<double>{2.0, 2.0})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
}

torch::Tensor conv_weight(int out, int in, int k) { return torch::randn({out, in, k, k}) / std::sqrt(in * k * k); }

// Styles start at 1 so an untrained layer behaves like a plain convolution.
nn::Linear affine(int w_dim, int channels) {
    nn::Linear l(w_dim, channels);
    torch::NoGradGuard guard;
    l->weight.normal_(0.0, 1.0 / std::sqrt(static_cast<double>(w_dim)));
    l->bias.fill_(1.0);
    return l;
}

}  // namespace

torch::Tensor modulated_weights(const torch::Tensor& s, const torch::Tensor& weight, bool demodulate, double eps) {
    const auto n = s.size(0);
    auto w = weight.unsqueeze(0) * s.view({n, 1, -1, 1, 1});
    if (demodulate) w = w * torch::rsqrt(w.pow(2).sum({2, 3, 4}, /*keepdim=*/true) + eps);
    return w;
}

torch::Tensor modulated_conv(const torch::Tensor& x, const torch::Tensor& s, const torch::Tensor& weight,
                             bool demodulate, double eps) {
    const auto n = x.size(0);
    const auto cin = x.size(1);
    if (weight.size(1) != cin || s.size(0) != n || s.size(1) != cin) {
        fail(ErrorCode::UsageError, "modulated_conv: shapes do not conform");
    }
    const auto cout = weight.size(0);
    const auto k = weight.size(2);
    const auto w = modulated_weights(s, weight, demodulate, eps).reshape({n * cout, cin, k, k});
    const auto out = F::conv2d(x.reshape({1, n * cin, x.size(2), x.size(3)}), w,
                               F::Conv2dFuncOptions().padding(k / 2).groups(n));
    return out.reshape({n, cout, out.size(2), out.size(3)});
}

MappingNetworkImpl::MappingNetworkImpl(const StyleConfig& cfg) : cfg_(cfg) {
    int in = cfg.z_dim;
    if (cfg.conditional) {
        embed_ = register_module("embed", nn::Embedding(cfg.class_count, cfg.z_dim));
        in += cfg.z_dim;
    }
    for (int i = 0; i < cfg.mapping_layers; ++i) {
        const int out = cfg.w_dim;
        layers_.push_back(register_module("fc" + std::to_string(i), nn::Linear(in, out)));
        in = out;
    }
}

torch::Tensor MappingNetworkImpl::forward(const torch::Tensor& z, const torch::Tensor& labels) {
    const auto normalize = [](const torch::Tensor& t) { return t * torch::rsqrt(t.pow(2).mean(1, true) + 1e-8); };
    auto x = normalize(z);
    if (cfg_.conditional) {
        if (!labels.defined()) fail(ErrorCode::UsageError, "conditional mapping network needs labels");
        x = torch::cat({x, normalize(embed_(labels.to(torch::kInt64)))}, 1);
    }
    for (auto& layer : layers_) x = lrelu(layer(x));
    return x;
}

StyleLayerImpl::StyleLayerImpl(int w_dim, int in_channels, int out_channels) {
    affine_ = register_module("affine", affine(w_dim, in_channels));
    weight_ = register_parameter("weight", conv_weight(out_channels, in_channels, 3));
    bias_ = register_parameter("bias", torch::zeros({out_channels}));
    noise_strength_ = register_parameter("noise_strength", torch::zeros({1}));
}

torch::Tensor StyleLayerImpl::forward(const torch::Tensor& x, const torch::Tensor& w, at::Generator* gen) {
    auto y = modulated_conv(x, affine_(w), weight_, /*demodulate=*/true);
    const auto shape = std::vector<std::int64_t>{y.size(0), 1, y.size(2), y.size(3)};
    const auto noise = gen ? torch::randn(shape, *gen, y.options()) : torch::randn(shape, y.options());
    y = y + noise_strength_ * noise;
    return lrelu(y + bias_.view({1, -1, 1, 1}));
}

ToRgbImpl::ToRgbImpl(int w_dim, int in_channels) {
    affine_ = register_module("affine", affine(w_dim, in_channels));
    weight_ = register_parameter("weight", conv_weight(3, in_channels, 1));
    bias_ = register_parameter("bias", torch::zeros({3}));
}

torch::Tensor ToRgbImpl::forward(const torch::Tensor& x, const torch::Tensor& w) {
    return modulated_conv(x, affine_(w), weight_, /*demodulate=*/false) + bias_.view({1, -1, 1, 1});
}

StyleGeneratorImpl::StyleGeneratorImpl(const StyleConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    mapping = register_module("mapping", MappingNetwork(cfg));
    const auto ch = cfg.resolved_channels();
    const_input_ = register_parameter("const", torch::randn({1, ch[0], cfg.base_resolution, cfg.base_resolution}));
    int in = ch[0];
    for (std::size_t level = 0; level < ch.size(); ++level) {
        const auto tag = std::to_string(cfg.base_resolution << level);
        // The base level has a single conv on the constant, as in the original.
        if (level > 0) layers_.push_back(register_module("conv0_" + tag, StyleLayer(cfg.w_dim, in, ch[level])));
        layers_.push_back(register_module("conv1_" + tag, StyleLayer(cfg.w_dim, ch[level], ch[level])));
        to_rgb_.push_back(register_module("torgb_" + tag, ToRgb(cfg.w_dim, ch[level])));
        in = ch[level];
    }
}

std::vector<torch::Tensor> StyleGeneratorImpl::forward_all(const torch::Tensor& z, const torch::Tensor& labels,
                                                           at::Generator* gen) {
    const auto w = mapping(z, labels);
    auto x = const_input_.expand({z.size(0), -1, -1, -1});
    torch::Tensor rgb;
    std::vector<torch::Tensor> outputs;
    std::size_t li = 0;
    for (std::size_t level = 0; level < to_rgb_.size(); ++level) {
        if (level > 0) {
            x = layers_[li++]->forward(upsample2(x), w, gen);
        }
        x = layers_[li++]->forward(x, w, gen);
        const auto here = to_rgb_[level]->forward(x, w);
        rgb = rgb.defined() ? upsample2(rgb) + here : here;
        outputs.push_back(torch::tanh(rgb));
    }
    return outputs;
}

torch::Tensor StyleGeneratorImpl::forward(const torch::Tensor& z, const torch::Tensor& labels, at::Generator* gen) {
    return forward_all(z, labels, gen).back();
}

StyleDiscriminatorImpl::StyleDiscriminatorImpl(const StyleConfig& cfg) : cfg_(cfg) {
    const auto ch = cfg.resolved_channels();
    body_ = nn::Sequential();
    body_->push_back(nn::Conv2d(nn::Conv2dOptions(3, ch.back(), 1)));
    body_->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
    for (int level = static_cast<int>(ch.size()) - 1; level > 0; --level) {
        body_->push_back(nn::Conv2d(nn::Conv2dOptions(ch[level], ch[level - 1], 3).stride(2).padding(1)));
        body_->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
    }
    register_module("body", body_);
    const int feat = ch[0] * cfg.base_resolution * cfg.base_resolution;
    head_ = register_module("head", nn::Linear(feat, 1));
    if (cfg.conditional) project_ = register_module("project", nn::Embedding(cfg.class_count, feat));
}

torch::Tensor StyleDiscriminatorImpl::forward(const torch::Tensor& x, const torch::Tensor& labels) {
    const auto h = body_->forward(x).flatten(1);
    auto score = head_(h).view({-1});
    if (cfg_.conditional) {
        if (!labels.defined()) fail(ErrorCode::UsageError, "conditional discriminator needs labels");
        score = score + (project_(labels.to(torch::kInt64)) * h).sum(1) / std::sqrt(static_cast<double>(h.size(1)));
    }
    return score;
}

}  // namespace fgb::style
