#include "fgb/gan/nets.hpp"

#include "fgb/error.hpp"

namespace fgb::gan {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

constexpr int kCodeDim = 64;

nn::ConvTranspose2d up_conv(int in, int out, bool bias) {
    return nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1).bias(bias));
}

nn::Conv2d down_conv(int in, int out) { return nn::Conv2d(nn::Conv2dOptions(in, out, 4).stride(2).padding(1)); }

// DCGAN initialization: N(0, 0.02) for conv/linear weights, N(1, 0.02) for BN scales.
void dcgan_init(nn::Module& module) {
    torch::NoGradGuard guard;
    for (auto& m : module.modules(/*include_self=*/false)) {
        const auto name = m->name();
        if (name.find("Conv") != std::string::npos || name.find("Linear") != std::string::npos) {
            for (auto& p : m->named_parameters(false)) {
                if (p.key() == "weight") p.value().normal_(0.0, 0.02);
                if (p.key() == "bias") p.value().zero_();
            }
        } else if (name.find("BatchNorm") != std::string::npos) {
            for (auto& p : m->named_parameters(false)) {
                if (p.key() == "weight") p.value().normal_(1.0, 0.02);
                if (p.key() == "bias") p.value().zero_();
            }
        }
    }
}

torch::Tensor fit_size(const torch::Tensor& x, int size) {
    if (x.size(-1) == size) return x;
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .size(std::vector<std::int64_t>{size, size})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
}

}  // namespace

Geometry Geometry::for_size(int image_size) {
    const int blocks = image_size >= 64 ? 4 : 3;
    const int base = std::max(image_size >> blocks, 1);
    return {blocks, base, base << blocks};
}

torch::Tensor one_hot(const torch::Tensor& labels, int classes) {
    return F::one_hot(labels.to(torch::kInt64), classes).to(torch::kFloat32);
}

void clip_weights(nn::Module& module, double c) {
    torch::NoGradGuard guard;
    for (auto& p : module.parameters()) p.clamp_(-c, c);
}

GeneratorImpl::GeneratorImpl(const GanSpec& spec)
    : spec_(spec), geo_(Geometry::for_size(spec.image_size)), top_channels_(spec.width << (geo_.blocks - 1)) {
    const int in = spec.latent_dim + (spec.conditional ? spec.class_count : 0);
    fc_ = register_module("fc", nn::Linear(nn::LinearOptions(in, top_channels_ * geo_.base * geo_.base).bias(false)));
    fc_bn_ = register_module("fc_bn", nn::BatchNorm1d(top_channels_ * geo_.base * geo_.base));
    up_ = nn::Sequential();
    int channels = top_channels_;
    for (int i = 0; i < geo_.blocks; ++i) {
        const bool last = i == geo_.blocks - 1;
        const int out = last ? 3 : channels / 2;
        up_->push_back(up_conv(channels, out, last));
        if (last) {
            up_->push_back(nn::Tanh());
        } else {
            up_->push_back(nn::BatchNorm2d(out));
            up_->push_back(nn::ReLU());
        }
        channels = out;
    }
    register_module("up", up_);
    dcgan_init(*this);
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& z, const torch::Tensor& labels) {
    auto input = z;
    if (spec_.conditional) {
        if (!labels.defined()) fail(ErrorCode::UsageError, "conditional generator needs labels");
        input = torch::cat({z, one_hot(labels, spec_.class_count)}, 1);
    }
    auto h = torch::relu(fc_bn_(fc_(input)));
    h = h.view({-1, top_channels_, geo_.base, geo_.base});
    return fit_size(up_->forward(h), spec_.image_size);
}

DiscriminatorImpl::DiscriminatorImpl(const GanSpec& spec) : spec_(spec), geo_(Geometry::for_size(spec.image_size)) {
    const int in = 3 + (spec.variant == Variant::Cgan ? spec.class_count : 0);
    down_ = nn::Sequential();
    int channels = in;
    for (int i = 0; i < geo_.blocks; ++i) {
        const int out = spec.width << i;
        down_->push_back(down_conv(channels, out));
        down_->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
        channels = out;
    }
    register_module("down", down_);
    feat_channels_ = channels;
    {
        torch::NoGradGuard guard;
        feat_side_ = static_cast<int>(down_->forward(torch::zeros({1, in, spec.image_size, spec.image_size})).size(-1));
    }
    const int feat = feat_channels_ * feat_side_ * feat_side_;
    if (is_autoencoder(spec.variant)) {
        head_ = register_module("encode_fc", nn::Linear(feat, kCodeDim));
        const int top = spec.width << (geo_.blocks - 1);
        decode_fc_ = register_module("decode_fc", nn::Linear(kCodeDim, top * geo_.base * geo_.base));
        decode_ = nn::Sequential();
        int c = top;
        for (int i = 0; i < geo_.blocks; ++i) {
            const bool last = i == geo_.blocks - 1;
            const int out = last ? 3 : c / 2;
            decode_->push_back(up_conv(c, out, true));
            if (!last) decode_->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
            c = out;
        }
        register_module("decode", decode_);
    } else {
        head_ = register_module("head", nn::Linear(feat, 1));
        if (spec.variant == Variant::Acgan) class_head_ = register_module("class_head", nn::Linear(feat, spec.class_count));
    }
    dcgan_init(*this);
}

DiscriminatorOutput DiscriminatorImpl::forward(const torch::Tensor& x, const torch::Tensor& labels) {
    auto input = x;
    if (spec_.variant == Variant::Cgan) {
        if (!labels.defined()) fail(ErrorCode::UsageError, "conditional discriminator needs labels");
        const auto planes = one_hot(labels, spec_.class_count).view({x.size(0), spec_.class_count, 1, 1});
        input = torch::cat({x, planes.expand({x.size(0), spec_.class_count, x.size(2), x.size(3)})}, 1);
    }
    const auto h = down_->forward(input).flatten(1);
    DiscriminatorOutput out;
    if (is_autoencoder(spec_.variant)) {
        const int top = spec_.width << (geo_.blocks - 1);
        auto d = decode_fc_(head_(h)).view({-1, top, geo_.base, geo_.base});
        out.recon = fit_size(decode_->forward(d), spec_.image_size);
        out.score = reconstruction_error(x, out.recon);
        return out;
    }
    out.score = head_(h).view({-1});
    if (class_head_) out.class_logits = class_head_(h);
    return out;
}

torch::Tensor DiscriminatorImpl::reconstruction_error(const torch::Tensor& x, const torch::Tensor& recon) const {
    const auto diff = (recon - x).flatten(1);
    return spec_.variant == Variant::Ebgan ? diff.pow(2).mean(1) : diff.abs().mean(1);
}

}  // namespace fgb::gan
