#include "fgb/clf/models.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <unordered_map>

#include "fgb/error.hpp"

namespace fgb::clf {

namespace fs = std::filesystem;
namespace nn = torch::nn;

namespace {

int scaled(int channels, double width) {
    return std::max(4, static_cast<int>(std::lround(channels * width)));
}

nn::Conv2d conv(int in, int out, int k, int stride = 1, int pad = 0, bool bias = true) {
    return nn::Conv2d(nn::Conv2dOptions(in, out, k).stride(stride).padding(pad).bias(bias));
}

class FireImpl : public nn::Module {
public:
    FireImpl(int in, int squeeze_ch, int e1, int e3)
        : squeeze(register_module("squeeze", conv(in, squeeze_ch, 1))),
          expand1x1(register_module("expand1x1", conv(squeeze_ch, e1, 1))),
          expand3x3(register_module("expand3x3", conv(squeeze_ch, e3, 3, 1, 1))) {}

    torch::Tensor forward(const torch::Tensor& x) {
        const auto s = torch::relu(squeeze(x));
        return torch::cat({torch::relu(expand1x1(s)), torch::relu(expand3x3(s))}, 1);
    }

    nn::Conv2d squeeze, expand1x1, expand3x3;
};
TORCH_MODULE(Fire);

class BasicBlockImpl : public nn::Module {
public:
    BasicBlockImpl(int in, int out, int stride)
        : conv1(register_module("conv1", conv(in, out, 3, stride, 1, false))),
          bn1(register_module("bn1", nn::BatchNorm2d(out))),
          conv2(register_module("conv2", conv(out, out, 3, 1, 1, false))),
          bn2(register_module("bn2", nn::BatchNorm2d(out))) {
        if (stride != 1 || in != out) {
            downsample = register_module("downsample", nn::Sequential(conv(in, out, 1, stride, 0, false),
                                                                      nn::BatchNorm2d(out)));
        }
    }

    torch::Tensor forward(const torch::Tensor& x) {
        auto y = torch::relu(bn1(conv1(x)));
        y = bn2(conv2(y));
        return torch::relu(y + (downsample ? downsample->forward(x) : x));
    }

    nn::Conv2d conv1;
    nn::BatchNorm2d bn1;
    nn::Conv2d conv2;
    nn::BatchNorm2d bn2;
    nn::Sequential downsample{nullptr};
};
TORCH_MODULE(BasicBlock);

void kaiming_init(nn::Module& root) {
    // Same scheme torchvision uses for ResNet; squeezenet/alexnet use the
    // framework defaults, which libtorch shares.
    for (auto& m : root.modules(false)) {
        if (auto* c = m->as<nn::Conv2d>()) {
            nn::init::kaiming_normal_(c->weight, 0.0, torch::kFanOut, torch::kReLU);
        } else if (auto* b = m->as<nn::BatchNorm2d>()) {
            nn::init::ones_(b->weight);
            nn::init::zeros_(b->bias);
        }
    }
}

fs::path sidecar_path(const fs::path& p) {
    auto s = p;
    s.replace_extension(".json");
    return s;
}

}  // namespace

std::string_view to_string(Arch a) noexcept {
    switch (a) {
        case Arch::SqueezeNet: return "SQUEEZENET";
        case Arch::AlexNet: return "ALEXNET";
        case Arch::ResNet18: return "RESNET18";
    }
    return "?";
}

Arch parse_arch(std::string_view text) {
    for (Arch a : kAllArchs) {
        if (text == to_string(a)) return a;
    }
    fail(ErrorCode::ConfigError, "unknown architecture '" + std::string(text) + "'");
}

void ClassifierSpec::validate() const {
    if (!(lr > 0.0)) fail(ErrorCode::ConfigError, "classifier.lr must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) fail(ErrorCode::ConfigError, "classifier.momentum must be in [0,1)");
    if (batch_size < 1) fail(ErrorCode::ConfigError, "classifier.batch_size must be >= 1");
    if (epochs < 0) fail(ErrorCode::ConfigError, "classifier.epochs must be >= 0");
    if (!(width > 0.0)) fail(ErrorCode::ConfigError, "classifier.width must be > 0");
    const int min_size = arch == Arch::AlexNet ? 63 : 32;
    if (input_size < min_size) {
        fail(ErrorCode::ConfigError, "classifier.input_size must be >= " + std::to_string(min_size) + " for " +
                                         std::string(to_string(arch)));
    }
    if (pretrained && pretrained_path.empty()) {
        fail(ErrorCode::ConfigError, "classifier.pretrained requires classifier.pretrained_path");
    }
}

void to_json(nlohmann::json& j, const ClassifierSpec& s) {
    j = {{"arch", to_string(s.arch)},     {"pretrained", s.pretrained}, {"pretrained_path", s.pretrained_path.string()},
         {"lr", s.lr},                    {"momentum", s.momentum},     {"batch_size", s.batch_size},
         {"epochs", s.epochs},            {"input_size", s.input_size}, {"width", s.width}};
}

void from_json(const nlohmann::json& j, ClassifierSpec& s) {
    ClassifierSpec d;
    s.arch = parse_arch(j.value("arch", std::string(to_string(d.arch))));
    s.pretrained = j.value("pretrained", d.pretrained);
    s.pretrained_path = j.value("pretrained_path", std::string());
    s.lr = j.value("lr", d.lr);
    s.momentum = j.value("momentum", d.momentum);
    s.batch_size = j.value("batch_size", d.batch_size);
    s.epochs = j.value("epochs", d.epochs);
    s.input_size = j.value("input_size", d.input_size);
    s.width = j.value("width", d.width);
}

ClassifierImpl::ClassifierImpl(Arch arch, double width, int num_classes) : arch_(arch), num_classes_(num_classes) {
    if (num_classes < 2) fail(ErrorCode::UsageError, "classifier needs at least two classes");
    mean_ = torch::tensor({0.485f, 0.456f, 0.406f}).view({1, 3, 1, 1});
    std_ = torch::tensor({0.229f, 0.224f, 0.225f}).view({1, 3, 1, 1});
    switch (arch) {
        case Arch::SqueezeNet: build_squeezenet(width); break;
        case Arch::AlexNet: build_alexnet(width); break;
        case Arch::ResNet18: build_resnet18(width); break;
    }
}

void ClassifierImpl::add_sequential_stages(const std::string& name, nn::Sequential& seq) {
    std::size_t i = 0;
    for (const auto& any : *seq) {
        stages_.emplace_back(name + "." + std::to_string(i++),
                             [m = nn::AnyModule(any)](const torch::Tensor& x) mutable { return m.forward(x); });
    }
}

void ClassifierImpl::build_squeezenet(double width) {
    nn::Sequential features;
    const int stem = scaled(64, width);
    features->push_back(conv(3, stem, 3, 2));
    features->push_back(nn::ReLU());
    features->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).ceil_mode(true)));
    int in = stem;
    const auto fire = [&](int s, int e) {
        const int e1 = scaled(e, width);
        const int e3 = scaled(e, width);
        features->push_back(Fire(in, scaled(s, width), e1, e3));
        in = e1 + e3;
    };
    fire(16, 64);
    fire(16, 64);
    features->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).ceil_mode(true)));
    fire(32, 128);
    fire(32, 128);
    features->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).ceil_mode(true)));
    fire(48, 192);
    fire(48, 192);
    fire(64, 256);
    fire(64, 256);
    auto final_conv = conv(in, num_classes_, 1);
    nn::Sequential classifier(nn::Dropout(0.5), final_conv, nn::ReLU(),
                              nn::AdaptiveAvgPool2d(nn::AdaptiveAvgPool2dOptions(1)));
    register_module("features", features);
    register_module("classifier", classifier);
    for (auto& m : modules(false)) {
        if (auto* c = m->as<nn::Conv2d>()) {
            if (c == final_conv.get()) {
                nn::init::normal_(c->weight, 0.0, 0.01);
            } else {
                nn::init::kaiming_uniform_(c->weight);
            }
            nn::init::zeros_(c->bias);
        }
    }
    add_sequential_stages("features", features);
    add_sequential_stages("classifier", classifier);
    stages_.emplace_back("flatten", [](const torch::Tensor& x) { return x.flatten(1); });
}

void ClassifierImpl::build_alexnet(double width) {
    const int c1 = scaled(64, width), c2 = scaled(192, width), c3 = scaled(384, width), c4 = scaled(256, width);
    const int hidden = scaled(4096, width);
    nn::Sequential features(conv(3, c1, 11, 4, 2), nn::ReLU(), nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2)),
                            conv(c1, c2, 5, 1, 2), nn::ReLU(), nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2)),
                            conv(c2, c3, 3, 1, 1), nn::ReLU(), conv(c3, c4, 3, 1, 1), nn::ReLU(),
                            conv(c4, c4, 3, 1, 1), nn::ReLU(), nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2)));
    auto avgpool = nn::AdaptiveAvgPool2d(nn::AdaptiveAvgPool2dOptions(6));
    nn::Sequential classifier(nn::Dropout(0.5), nn::Linear(c4 * 36, hidden), nn::ReLU(), nn::Dropout(0.5),
                              nn::Linear(hidden, hidden), nn::ReLU(), nn::Linear(hidden, num_classes_));
    register_module("features", features);
    register_module("avgpool", avgpool);
    register_module("classifier", classifier);
    add_sequential_stages("features", features);
    stages_.emplace_back("avgpool", [avgpool](const torch::Tensor& x) mutable { return avgpool(x); });
    stages_.emplace_back("flatten", [](const torch::Tensor& x) { return x.flatten(1); });
    add_sequential_stages("classifier", classifier);
}

void ClassifierImpl::build_resnet18(double width) {
    const int stem = scaled(64, width);
    nn::Conv2d conv1(register_module("conv1", conv(3, stem, 7, 2, 3, false)));
    nn::BatchNorm2d bn1(register_module("bn1", nn::BatchNorm2d(stem)));
    stages_.emplace_back("conv1", [conv1](const torch::Tensor& x) mutable { return conv1(x); });
    stages_.emplace_back("bn1", [bn1](const torch::Tensor& x) mutable { return bn1(x); });
    stages_.emplace_back("relu", [](const torch::Tensor& x) { return torch::relu(x); });
    stages_.emplace_back("maxpool", [](const torch::Tensor& x) { return torch::max_pool2d(x, 3, 2, 1); });
    int in = stem;
    for (int l = 0; l < 4; ++l) {
        const int out = scaled(64 << l, width);
        nn::Sequential layer(BasicBlock(in, out, l == 0 ? 1 : 2), BasicBlock(out, out, 1));
        const auto name = "layer" + std::to_string(l + 1);
        register_module(name, layer);
        stages_.emplace_back(name, [layer](const torch::Tensor& x) mutable { return layer->forward(x); });
        in = out;
    }
    nn::Linear fc(register_module("fc", nn::Linear(in, num_classes_)));
    kaiming_init(*this);
    stages_.emplace_back("avgpool", [](const torch::Tensor& x) { return torch::adaptive_avg_pool2d(x, {1, 1}); });
    stages_.emplace_back("flatten", [](const torch::Tensor& x) { return x.flatten(1); });
    stages_.emplace_back("fc", [fc](const torch::Tensor& x) mutable { return fc(x); });
}

torch::Tensor ClassifierImpl::forward(const torch::Tensor& x) {
    auto h = ((x + 1) * 0.5 - mean_) / std_;
    for (auto& [name, fn] : stages_) h = fn(h);
    return h;
}

Capture ClassifierImpl::forward_capture(const torch::Tensor& x, const std::string& layer) {
    Capture out;
    auto h = ((x + 1) * 0.5 - mean_) / std_;
    for (auto& [name, fn] : stages_) {
        h = fn(h);
        if (name == layer) out.features = h;
    }
    if (!out.features.defined()) fail(ErrorCode::UsageError, "no layer named '" + layer + "'");
    out.logits = h;
    return out;
}

std::vector<std::string> ClassifierImpl::layer_names() const {
    std::vector<std::string> names;
    for (const auto& s : stages_) names.push_back(s.first);
    return names;
}

std::string ClassifierImpl::default_layer() const {
    switch (arch_) {
        case Arch::SqueezeNet: return "features.12";
        case Arch::AlexNet: return "features.11";
        case Arch::ResNet18: return "layer4";
    }
    return {};
}

std::string ClassifierImpl::head_prefix() const {
    switch (arch_) {
        case Arch::SqueezeNet: return "classifier.1.";
        case Arch::AlexNet: return "classifier.6.";
        case Arch::ResNet18: return "fc.";
    }
    return {};
}

PretrainedReport load_pretrained(Classifier& model, const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::ModelLoadError, "pretrained weights not found: " + path.string());
    const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::unordered_map<std::string, torch::Tensor> saved;
    try {
        const auto value = torch::pickle_load(bytes);
        if (!value.isGenericDict()) fail(ErrorCode::ModelLoadError, path.string() + " is not a plain state dict");
        for (const auto& kv : value.toGenericDict()) saved.emplace(kv.key().toStringRef(), kv.value().toTensor());
    } catch (const c10::Error& e) {
        fail(ErrorCode::ModelLoadError, "cannot read " + path.string() + ": " + e.what_without_backtrace());
    }

    PretrainedReport report;
    const auto head = model->head_prefix();
    torch::NoGradGuard guard;
    const auto copy_all = [&](const auto& items) {
        for (const auto& item : items) {
            const auto& name = item.key();
            auto& dst = item.value();
            const bool is_head = name.rfind(head, 0) == 0;
            const auto it = saved.find(name);
            if (it == saved.end()) {
                fail(ErrorCode::ModelLoadError, path.string() + " lacks '" + name + "'");
            }
            if (it->second.sizes() != dst.sizes()) {
                if (is_head) {
                    report.skipped.push_back(name);
                    continue;
                }
                fail(ErrorCode::ModelLoadError, "shape mismatch for '" + name + "' in " + path.string());
            }
            dst.copy_(it->second.to(dst.dtype()));
            ++report.loaded;
        }
    };
    copy_all(model->named_parameters());
    copy_all(model->named_buffers());
    return report;
}

Classifier make_classifier(const ClassifierSpec& spec, int num_classes) {
    spec.validate();
    Classifier model(spec.arch, spec.width, num_classes);
    if (spec.pretrained) load_pretrained(model, spec.pretrained_path);
    return model;
}

void save_classifier(Classifier& model, const ClassifierSpec& spec, const fs::path& path, const nlohmann::json& extra) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    c10::Dict<std::string, torch::Tensor> dict;
    for (const auto& p : model->named_parameters()) dict.insert(p.key(), p.value().detach().clone());
    for (const auto& b : model->named_buffers()) dict.insert(b.key(), b.value().detach().clone());
    const auto bytes = torch::pickle_save(dict);
    std::ofstream(path, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    nlohmann::json meta = {{"spec", spec}, {"num_classes", model->num_classes()}};
    if (!extra.is_null()) meta["extra"] = extra;
    std::ofstream(sidecar_path(path)) << meta.dump(2) << "\n";
}

LoadedClassifier load_classifier(const fs::path& path) {
    std::ifstream in(sidecar_path(path));
    if (!in) fail(ErrorCode::ModelLoadError, "missing classifier sidecar for " + path.string());
    LoadedClassifier out;
    try {
        in >> out.sidecar;
        out.spec = out.sidecar.at("spec").get<ClassifierSpec>();
        out.model = Classifier(out.spec.arch, out.spec.width, out.sidecar.at("num_classes").get<int>());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ModelLoadError, std::string("bad classifier sidecar: ") + e.what());
    }
    const auto report = load_pretrained(out.model, path);
    if (!report.skipped.empty()) fail(ErrorCode::ModelLoadError, "classifier head shape mismatch in " + path.string());
    out.model->eval();
    return out;
}

}  // namespace fgb::clf
