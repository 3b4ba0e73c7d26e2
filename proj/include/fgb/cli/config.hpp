#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgb/clf/models.hpp"
#include "fgb/clf/sampling.hpp"
#include "fgb/data/records.hpp"
#include "fgb/data/toy.hpp"
#include "fgb/gan/spec.hpp"
#include "fgb/style/config.hpp"

namespace fgb::cli {

struct DatasetSource {
    data::SourceDataset kind = data::SourceDataset::IChallengeAmd;
    std::filesystem::path root;
    std::filesystem::path grades;  // optional `id,grade` CSV
};

struct PipelineSection {
    std::vector<DatasetSource> datasets;
    std::uint64_t seed = 0;
    int test_per_class = 105;
    bool preprocess = true;
    data::ToyOptions toy{.count = 0};  // count > 0 renders a toy corpus as an extra dataset
};

struct GanSection {
    std::vector<gan::Variant> variants;  // empty = all nine
    int image_size = 100;
    int latent_dim = 100;
    int width = 64;
    bool per_label = true;  // unconditional variants get one generator per label
    gan::TrainConfig train;
    std::filesystem::path manifest;
};

struct StyleSection {
    style::StyleConfig config;
    int epochs = 10;
    std::uint64_t seed = 0;
    std::filesystem::path manifest;
    std::filesystem::path trainer_dir = "stylegan2-ada-pytorch";
};

struct GenSection {
    std::string kind = "gan";  // "gan" or "style"
    std::filesystem::path checkpoint;
    std::int64_t count = 64;
    std::string label;  // AMD, NON_AMD or empty
    std::uint64_t seed = 0;
};

struct FidSection {
    std::filesystem::path extractor;  // empty = seeded native extractor
    int native_dim = 2048;
    int native_input = 64;
    int native_width = 32;
    std::uint64_t native_seed = 0;
    std::filesystem::path set_a;
    std::filesystem::path set_b;
    std::int64_t samples = 0;  // per set; 0 = every image
};

struct ClassifierSection {
    clf::ClassifierSpec spec;
    clf::MixingConfig mixing;
    std::vector<double> p_grid;  // empty = 0.0, 0.1, ..., 1.0
    std::vector<std::uint64_t> seeds{0};
    std::vector<clf::Arch> archs;  // empty = all three
    std::filesystem::path manifest;
};

struct GradcamSection {
    std::filesystem::path model;
    std::filesystem::path image;
    std::string target_class = "AMD";
    std::string layer;  // empty = the architecture's default layer
    double alpha = 0.4;
};

struct StudySection {
    std::filesystem::path store;
    std::filesystem::path manifest;
    std::string split = "TEST";
    std::filesystem::path synthetic_dir;
    std::string host = "127.0.0.1";
    int port = 8080;
    int image_size = 256;
};

struct NamedPath {
    std::string name;
    std::filesystem::path path;
};

struct ReportSection {
    std::vector<NamedPath> fid;          // fid.json files
    std::vector<NamedPath> classifiers;  // metrics.json files
    std::vector<NamedPath> studies;      // report JSON files or study store directories
    std::filesystem::path model;         // classifier compared against DIAGNOSIS sessions in stores
};

struct RunConfig {
    std::filesystem::path output_root = "runs";
    PipelineSection pipeline;
    GanSection gan;
    StyleSection style;
    GenSection gen;
    FidSection fid;
    ClassifierSection classifier;
    GradcamSection gradcam;
    StudySection study;
    ReportSection report;

    /// Fully defaulted JSON form; every accepted key appears in it.
    nlohmann::json to_json() const;

    /// Rejects unknown keys and mistyped values with ConfigError naming the
    /// dotted key, fills defaults and validates each section.
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

    /// FNV-1a over the canonical JSON, 16 hex digits.
    std::string hash() const;
};

/// Applies `a.b.c=value`; the value is read as JSON when it parses, else as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace fgb::cli
