#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace fgb::clf {

enum class Arch { SqueezeNet, AlexNet, ResNet18 };

inline constexpr std::array<Arch, 3> kAllArchs{Arch::SqueezeNet, Arch::AlexNet, Arch::ResNet18};

std::string_view to_string(Arch a) noexcept;
Arch parse_arch(std::string_view text);

struct ClassifierSpec {
    Arch arch = Arch::ResNet18;
    bool pretrained = true;
    std::filesystem::path pretrained_path;  // torch.save(dict(model.state_dict())) of the torchvision model
    double lr = 1e-4;
    double momentum = 0.9;
    int batch_size = 32;
    int epochs = 5;
    int input_size = 224;
    double width = 1.0;  // channel multiplier; 1.0 keeps torchvision shapes

    void validate() const;
    bool operator==(const ClassifierSpec&) const = default;
};

void to_json(nlohmann::json& j, const ClassifierSpec& s);
void from_json(const nlohmann::json& j, ClassifierSpec& s);

struct Capture {
    torch::Tensor logits;
    torch::Tensor features;  // activation after the requested layer
};

// Torchvision-compatible SqueezeNet 1.1, AlexNet and ResNet-18: parameter
// names and shapes match the reference state dicts at width 1. Inputs are in
// [-1,1] and are mapped to ImageNet statistics inside forward().
class ClassifierImpl : public torch::nn::Module {
public:
    ClassifierImpl(Arch arch, double width, int num_classes);

    torch::Tensor forward(const torch::Tensor& x);
    Capture forward_capture(const torch::Tensor& x, const std::string& layer);

    Arch arch() const { return arch_; }
    int num_classes() const { return num_classes_; }
    std::vector<std::string> layer_names() const;
    std::string default_layer() const;
    std::string head_prefix() const;

private:
    using Stage = std::pair<std::string, std::function<torch::Tensor(const torch::Tensor&)>>;

    void build_squeezenet(double width);
    void build_alexnet(double width);
    void build_resnet18(double width);
    void add_sequential_stages(const std::string& name, torch::nn::Sequential& seq);

    Arch arch_;
    int num_classes_;
    std::vector<Stage> stages_;
    torch::Tensor mean_, std_;
};
TORCH_MODULE(Classifier);

struct PretrainedReport {
    int loaded = 0;
    std::vector<std::string> skipped;  // classifier head entries left at initialization
};

/// Copies every tensor of a saved state dict into the model by name. Only the
/// final classification layer may differ in shape; anything else missing or
/// mismatched is a ModelLoadError.
PretrainedReport load_pretrained(Classifier& model, const std::filesystem::path& path);

/// Fresh 2-class model, with pretrained weights loaded when spec.pretrained.
Classifier make_classifier(const ClassifierSpec& spec, int num_classes = 2);

/// Writes the state dict in the same format load_pretrained reads, plus a
/// `.json` sidecar with the spec.
void save_classifier(Classifier& model, const ClassifierSpec& spec, const std::filesystem::path& path,
                     const nlohmann::json& extra = {});

struct LoadedClassifier {
    Classifier model{nullptr};
    ClassifierSpec spec;
    nlohmann::json sidecar;
};
LoadedClassifier load_classifier(const std::filesystem::path& path);

}  // namespace fgb::clf
