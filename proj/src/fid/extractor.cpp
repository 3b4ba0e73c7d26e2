#include "fgb/fid/extractor.hpp"

#include <fstream>

#include <torch/script.h>

#include "fgb/error.hpp"

namespace fgb::fid {

namespace fs = std::filesystem;
namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

constexpr std::int64_t kChunk = 32;
constexpr std::int64_t kRecommendedSamples = 2048;

fs::path sidecar(const fs::path& p) {
    auto s = p;
    s += ".json";
    return s;
}

// Four stride-2 3x3 conv stages, a 1x1 projection to dim, ReLU, global mean.
class NativeNetImpl : public nn::Module {
public:
    NativeNetImpl(int dim, int width) {
        body_ = nn::Sequential();
        int c = 3;
        for (int i = 0; i < 4; ++i) {
            const int out = width << i;
            body_->push_back(nn::Conv2d(nn::Conv2dOptions(c, out, 3).stride(2).padding(1)));
            body_->push_back(nn::ReLU());
            c = out;
        }
        body_->push_back(nn::Conv2d(nn::Conv2dOptions(c, dim, 1)));
        body_->push_back(nn::ReLU());
        register_module("body", body_);
    }

    torch::Tensor forward(const torch::Tensor& x) { return body_->forward(x).mean({2, 3}); }

private:
    nn::Sequential body_{nullptr};
};
TORCH_MODULE(NativeNet);

torch::Tensor normalize(const torch::Tensor& x, const std::string& mode) {
    if (mode == "minus_one_one") return x;
    if (mode == "unit") return (x + 1) * 0.5;
    if (mode == "byte") return ((x + 1) * 127.5).round();
    if (mode == "imagenet") {
        const auto mean = torch::tensor({0.485, 0.456, 0.406}, x.options()).view({1, 3, 1, 1});
        const auto stdv = torch::tensor({0.229, 0.224, 0.225}, x.options()).view({1, 3, 1, 1});
        return ((x + 1) * 0.5 - mean) / stdv;
    }
    fail(ErrorCode::ModelLoadError, "unknown extractor normalization '" + mode + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const ExtractorInfo& info) {
    j = {{"kind", info.kind},
         {"input_size", info.input_size},
         {"dim", info.dim},
         {"normalization", info.normalization},
         {"forward_kwargs", info.forward_kwargs},
         {"seed", info.seed},
         {"width", info.width}};
}

void from_json(const nlohmann::json& j, ExtractorInfo& info) {
    const ExtractorInfo d;
    info.kind = j.value("kind", d.kind);
    info.input_size = j.value("input_size", d.input_size);
    info.dim = j.value("dim", d.dim);
    info.normalization = j.value("normalization", d.normalization);
    info.forward_kwargs = j.value("forward_kwargs", nlohmann::json::object());
    info.seed = j.value("seed", d.seed);
    info.width = j.value("width", d.width);
}

struct FeatureExtractor::Impl {
    NativeNet native{nullptr};
    std::unique_ptr<torch::jit::Module> script;
    torch::jit::Kwargs kwargs;
};

FeatureExtractor FeatureExtractor::load(const fs::path& path) {
    std::ifstream meta(sidecar(path));
    if (!fs::exists(path) || !meta) fail(ErrorCode::ModelLoadError, "extractor weights not found: " + path.string());
    FeatureExtractor fx;
    try {
        nlohmann::json j;
        meta >> j;
        fx.info_ = j.get<ExtractorInfo>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ModelLoadError, "bad extractor sidecar " + sidecar(path).string() + ": " + e.what());
    }
    fx.impl_ = std::make_shared<Impl>();
    try {
        if (fx.info_.kind == "native") {
            fx.impl_->native = NativeNet(fx.info_.dim, fx.info_.width);
            torch::serialize::InputArchive archive;
            archive.load_from(path.string());
            fx.impl_->native->load(archive);
            fx.impl_->native->eval();
        } else if (fx.info_.kind == "torchscript") {
            fx.impl_->script = std::make_unique<torch::jit::Module>(torch::jit::load(path.string()));
            fx.impl_->script->eval();
            for (const auto& [key, value] : fx.info_.forward_kwargs.items()) {
                if (value.is_boolean()) {
                    fx.impl_->kwargs[key] = value.get<bool>();
                } else if (value.is_number_integer()) {
                    fx.impl_->kwargs[key] = value.get<std::int64_t>();
                } else if (value.is_number()) {
                    fx.impl_->kwargs[key] = value.get<double>();
                } else {
                    fx.impl_->kwargs[key] = value.get<std::string>();
                }
            }
        } else {
            fail(ErrorCode::ModelLoadError, "unknown extractor kind '" + fx.info_.kind + "'");
        }
    } catch (const c10::Error& e) {
        fail(ErrorCode::ModelLoadError, "cannot load extractor " + path.string() + ": " + e.what_without_backtrace());
    }
    return fx;
}

Eigen::MatrixXd FeatureExtractor::extract(const torch::Tensor& images) const {
    if (images.dim() != 4 || images.size(1) != 3) fail(ErrorCode::UsageError, "expected images shaped [N,3,H,W]");
    const auto n = images.size(0);
    Eigen::MatrixXd out(n, info_.dim);
    torch::NoGradGuard guard;
    for (std::int64_t start = 0; start < n; start += kChunk) {
        const auto stop = std::min(n, start + kChunk);
        auto x = images.slice(0, start, stop).to(torch::kFloat32);
        // Pad to a full chunk so each row sees the same kernels regardless of
        // where it falls in the input.
        if (x.size(0) < kChunk) {
            x = torch::cat({x, torch::zeros({kChunk - x.size(0), 3, x.size(2), x.size(3)})});
        }
        if (x.size(-1) != info_.input_size || x.size(-2) != info_.input_size) {
            x = F::interpolate(x, F::InterpolateFuncOptions()
                                      .size(std::vector<std::int64_t>{info_.input_size, info_.input_size})
                                      .mode(torch::kBilinear)
                                      .align_corners(false));
        }
        x = normalize(x, info_.normalization);
        torch::Tensor feats;
        if (impl_->native) {
            feats = impl_->native->forward(x);
        } else {
            feats = impl_->script->forward({x}, impl_->kwargs).toTensor();
        }
        feats = feats.reshape({feats.size(0), -1}).to(torch::kFloat64).contiguous();
        if (feats.size(1) != info_.dim) {
            fail(ErrorCode::ModelLoadError, "extractor produced " + std::to_string(feats.size(1)) +
                                                "-d features, sidecar says " + std::to_string(info_.dim));
        }
        const auto rows = stop - start;
        out.middleRows(start, rows) =
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                feats.data_ptr<double>(), kChunk, info_.dim)
                .topRows(rows);
    }
    return out;
}

void make_native_extractor(const fs::path& path, int dim, int input_size, std::uint64_t seed, int width) {
    if (dim < 1 || input_size < 16) fail(ErrorCode::ConfigError, "extractor dim >= 1 and input_size >= 16 required");
    torch::manual_seed(seed);
    NativeNet net(dim, width);
    {
        torch::NoGradGuard guard;
        for (auto& p : net->named_parameters()) {
            if (p.key().find("weight") != std::string::npos) {
                nn::init::kaiming_normal_(p.value(), 0.0, torch::kFanIn, torch::kReLU);
            } else {
                p.value().zero_();
            }
        }
    }
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    torch::serialize::OutputArchive archive;
    net->save(archive);
    archive.save_to(path.string());
    ExtractorInfo info;
    info.kind = "native";
    info.dim = dim;
    info.input_size = input_size;
    info.seed = seed;
    info.width = width;
    std::ofstream(sidecar(path)) << nlohmann::json(info).dump(2) << "\n";
}

Eigen::MatrixXd extract_features(const torch::Tensor& images, const FeatureExtractor& extractor) {
    return extractor.extract(images);
}

FidResult fid(const torch::Tensor& images_a, const torch::Tensor& images_b, const FeatureExtractor& extractor) {
    const auto a = gaussian_stats(extractor.extract(images_a));
    const auto b = gaussian_stats(extractor.extract(images_b));
    auto r = frechet_distance(a, b);
    for (auto n : {a.n, b.n}) {
        if (n < kRecommendedSamples) {
            r.warnings.push_back("FID from " + std::to_string(n) + " samples (fewer than " +
                                 std::to_string(kRecommendedSamples) + " is biased upward)");
        }
    }
    return r;
}

}  // namespace fgb::fid
