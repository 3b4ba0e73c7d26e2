#include "support/doctest.hpp"

#include <fstream>
#include <iterator>
#include <numeric>

#include "fgb/clf/metrics.hpp"
#include "fgb/clf/models.hpp"
#include "fgb/clf/sampling.hpp"
#include "fgb/clf/train.hpp"
#include "fgb/data/toy.hpp"
#include "fgb/error.hpp"
#include "fgb/gan/trainer.hpp"
#include "support/temp_dir.hpp"

using namespace fgb;
using namespace fgb::clf;
using fgb::testing::TempDir;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected fgb::Error");
    return ErrorCode::Io;
}

// Synthetic images are constant planes whose value encodes the label.
class MarkerSource : public SynthSource {
public:
    torch::Tensor sample(Label label, std::int64_t n, Rng&) override {
        ++calls;
        return torch::full({n, 3, 4, 4}, label == Label::Amd ? 0.5 : -0.5);
    }
    std::string describe() const override { return "marker"; }
    int calls = 0;
};

class BrokenSource : public SynthSource {
public:
    torch::Tensor sample(Label, std::int64_t, Rng&) override { fail(ErrorCode::ModelLoadError, "no weights"); }
    std::string describe() const override { return "broken"; }
};

ClassifierSpec small_spec(Arch arch = Arch::ResNet18) {
    ClassifierSpec s;
    s.arch = arch;
    s.pretrained = false;
    s.width = 0.125;
    s.input_size = arch == Arch::AlexNet ? 64 : 32;
    return s;
}

torch::Tensor read_tensor_dict(const fs::path& path, const std::string& key) {
    std::ifstream in(path, std::ios::binary);
    const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return torch::pickle_load(bytes).toGenericDict().at(key).toTensor();
}

bool same_parameters(Classifier& a, Classifier& b) {
    const auto pa = a->named_parameters();
    const auto pb = b->named_parameters();
    for (const auto& p : pa) {
        if (!torch::equal(p.value(), pb[p.key()])) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("architectures match torchvision outputs on the reference weights") {
    const char* dir = std::getenv("FGB_TEST_TORCHVISION_FIXTURE");
    if (dir == nullptr || !fs::exists(fs::path(dir) / "RESNET18.pt")) return;  // written by ctest's fixture step
    torch::NoGradGuard guard;
    for (Arch arch : kAllArchs) {
        const auto name = std::string(to_string(arch));
        CAPTURE(name);
        Classifier model(arch, 1.0, 1000);
        const auto report = load_pretrained(model, fs::path(dir) / (name + ".pt"));
        CHECK(report.skipped.empty());
        model->eval();
        const auto probe = fs::path(dir) / (name + "_probe.pt");
        const auto got = model->forward(read_tensor_dict(probe, "x"));
        const auto want = read_tensor_dict(probe, "logits");
        CHECK(torch::allclose(got, want, 1e-4, 1e-4));

        // Two-class fine-tuning head: everything but the head is copied.
        ClassifierSpec spec;
        spec.arch = arch;
        spec.pretrained_path = fs::path(dir) / (name + ".pt");
        auto two = make_classifier(spec);
        CHECK(two->num_classes() == 2);
        Classifier again(arch, 1.0, 2);
        CHECK(load_pretrained(again, spec.pretrained_path).skipped.size() == 2);
        const auto src = model->named_parameters();
        for (const auto& p : two->named_parameters()) {
            if (p.key().rfind(two->head_prefix(), 0) == 0) continue;
            CHECK(torch::equal(p.value(), src[p.key()]));
        }

        Classifier narrow(arch, 0.5, 2);
        CHECK(code_of([&] { load_pretrained(narrow, spec.pretrained_path); }) == ErrorCode::ModelLoadError);
    }
}

TEST_CASE("classifier shapes, layers and persistence") {
    TempDir dir;
    torch::manual_seed(1);
    for (Arch arch : kAllArchs) {
        auto spec = small_spec(arch);
        auto model = make_classifier(spec);
        model->eval();
        const auto x = torch::rand({3, 3, spec.input_size, spec.input_size}) * 2 - 1;
        const auto y = model->forward(x);
        CHECK(y.sizes() == torch::IntArrayRef({3, 2}));
        const auto cap = model->forward_capture(x, model->default_layer());
        CHECK(cap.features.dim() == 4);
        CHECK(torch::allclose(cap.logits, y));
        CHECK(code_of([&] { model->forward_capture(x, "nope"); }) == ErrorCode::UsageError);

        const auto path = dir / (std::string(to_string(arch)) + ".pt");
        save_classifier(model, spec, path);
        auto loaded = load_classifier(path);
        CHECK(loaded.spec == spec);
        CHECK(torch::equal(loaded.model->forward(x), y));
    }
    auto spec = small_spec();
    spec.pretrained = true;
    spec.pretrained_path = dir / "missing.pt";
    CHECK(code_of([&] { make_classifier(spec); }) == ErrorCode::ModelLoadError);
    spec.pretrained_path.clear();
    CHECK(code_of([&] { spec.validate(); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { parse_arch("VGG"); }) == ErrorCode::ConfigError);
    CHECK(nlohmann::json(small_spec()).get<ClassifierSpec>() == small_spec());
}

TEST_CASE("mix_batch: p=0, p=1, labels untouched") {
    MarkerSource src;
    const auto images = torch::zeros({50, 3, 8, 8});
    const auto labels = torch::randint(2, {50}, torch::kInt64);
    Rng rng(1);
    const auto none = mix_batch(images, labels, 0.0, &src, rng);
    CHECK(torch::equal(none.images, images));
    CHECK(none.replaced_count() == 0);
    CHECK(src.calls == 0);
    CHECK(mix_batch(images, labels, 0.0, nullptr, rng).replaced_count() == 0);

    const auto all = mix_batch(images, labels, 1.0, &src, rng);
    CHECK(all.replaced_count() == 50);
    CHECK(torch::equal(all.labels, labels));
    // Each replacement carries its own label's marker, resized to 8x8.
    const auto expect = torch::where(labels == 0, torch::full({50}, 0.5), torch::full({50}, -0.5));
    CHECK(torch::allclose(all.images.mean({1, 2, 3}), expect));

    CHECK(code_of([&] { mix_batch(images, labels, 1.0, nullptr, rng); }) == ErrorCode::UsageError);
    BrokenSource broken;
    CHECK(code_of([&] { mix_batch(images, labels, 1.0, &broken, rng); }) == ErrorCode::ModelLoadError);
    CHECK(code_of([&] { mix_batch(images, labels, 1.2, &src, rng); }) == ErrorCode::UsageError);
}

TEST_CASE("mix_batch: replacement count is binomial") {
    MarkerSource src;
    const auto images = torch::zeros({10000, 3, 2, 2});
    const auto labels = torch::randint(2, {10000}, torch::kInt64);
    Rng rng(6);
    const auto out = mix_batch(images, labels, 0.6, &src, rng);
    // 3 sigma of Binomial(10000, 0.6) is 147.
    CHECK(std::abs(out.replaced_count() - 6000) <= 150);
    CHECK(torch::equal(out.labels, labels));
}

TEST_CASE("sampler_weights: inverse class frequency") {
    std::vector<Label> labels(275, Label::Amd);
    labels.insert(labels.end(), 6621, Label::NonAmd);
    const auto w = sampler_weights(labels);
    CHECK(w.front() == doctest::Approx(1.0 / 275));
    CHECK(w.back() == doctest::Approx(1.0 / 6621));
    const WeightedSampler sampler(w);
    Rng rng(3);
    int minority = 0;
    for (auto i : sampler.draw(10000, rng)) minority += i < 275;
    CHECK(std::abs(minority / 10000.0 - 0.5) <= 0.02);

    const auto balanced = sampler_weights({Label::Amd, Label::NonAmd, Label::NonAmd, Label::Amd});
    CHECK(std::all_of(balanced.begin(), balanced.end(), [&](double v) { return v == balanced[0]; }));

    // Counts {1, 9}: the single minority record carries half the mass.
    std::vector<Label> skew(9, Label::NonAmd);
    skew.push_back(Label::Amd);
    const auto ws = sampler_weights(skew);
    CHECK(ws.back() / std::accumulate(ws.begin(), ws.end(), 0.0) == doctest::Approx(0.5));

    CHECK(code_of([] { sampler_weights(std::vector<Label>(5, Label::Amd)); }) == ErrorCode::DegenerateClassBalance);
    CHECK(code_of([] { sampler_weights(std::vector<Label>{}); }) == ErrorCode::DegenerateClassBalance);
}

TEST_CASE("classic_augment: identity, involution, flip rate, range") {
    torch::manual_seed(4);
    const auto img = torch::rand({3, 16, 16}) * 2 - 1;
    Rng rng(1);
    CHECK(torch::equal(classic_augment(img, rng, ClassicAugmentOptions::none()).image, img));

    auto flip_only = ClassicAugmentOptions::none();
    flip_only.flip_prob = 1.0;
    Rng a(5);
    Rng b = a;
    const auto once = classic_augment(img, a, flip_only);
    CHECK(once.flipped);
    CHECK(torch::equal(classic_augment(once.image, b, flip_only).image, img));

    Rng r(8);
    int flips = 0;
    const auto tiny = torch::zeros({3, 2, 2});
    for (int i = 0; i < 10000; ++i) flips += classic_augment(tiny, r).flipped;
    CHECK(std::abs(flips / 10000.0 - 0.5) <= 0.02);

    ClassicAugmentOptions strong;
    strong.brightness = strong.contrast = strong.saturation = 0.9;
    strong.crop_scale = {0.1, 1.0};
    for (int i = 0; i < 50; ++i) {
        const auto out = classic_augment(img, r, strong).image;
        CHECK(out.sizes() == img.sizes());
        CHECK(out.abs().max().item<double>() <= 1.0);
    }
}

TEST_CASE("metrics: fixture confusion and balanced-set arithmetic") {
    const auto m = ClassifierMetrics::from_confusion({{{90, 15}, {21, 84}}});
    CHECK(round_to(m.per_class[0].precision, 2) == doctest::Approx(0.81));
    CHECK(round_to(m.per_class[0].recall, 2) == doctest::Approx(0.86));
    CHECK(round_to(m.per_class[0].f1, 2) == doctest::Approx(0.83));
    CHECK(m.acc == doctest::Approx(174.0 / 210.0));
    CHECK(round_to(m.acc, 3) == doctest::Approx(0.829));

    const auto perfect = ClassifierMetrics::from_confusion({{{10, 0}, {0, 7}}});
    CHECK(perfect.acc == 1.0);
    CHECK(perfect.sensitivity == 1.0);
    CHECK(perfect.specificity == 1.0);

    // Sensitivity 0.9 and specificity 0.8 on 10 + 10 images.
    const auto bal = ClassifierMetrics::from_confusion({{{9, 1}, {2, 8}}});
    CHECK(bal.sensitivity == doctest::Approx(0.9));
    CHECK(bal.specificity == doctest::Approx(0.8));
    CHECK(bal.acc == doctest::Approx(0.85));

    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        std::array<std::array<std::int64_t, 2>, 2> c{};
        for (auto& row : c) {
            for (auto& v : row) v = static_cast<std::int64_t>(rng.index(50));
        }
        const auto r = ClassifierMetrics::from_confusion(c);
        const auto total = c[0][0] + c[0][1] + c[1][0] + c[1][1];
        if (total == 0) continue;
        CHECK(r.acc * total == doctest::Approx(c[0][0] + c[1][1]));
        if (c[0][0] + c[0][1] > 0) CHECK(r.sensitivity == doctest::Approx(double(c[0][0]) / (c[0][0] + c[0][1])));
        if (c[1][1] + c[1][0] > 0) CHECK(r.specificity == doctest::Approx(double(c[1][1]) / (c[1][1] + c[1][0])));
        CHECK(r.per_class[0].recall == r.sensitivity);
        CHECK(r.per_class[1].recall == r.specificity);
    }
    CHECK(nlohmann::json(m).at("AMD").at("f1").get<double>() == m.per_class[0].f1);
}

TEST_CASE("train_classifier: learns the toy task, deterministic, epochs=0") {
    const auto all = data::toy_images({.count = 200, .size = 32, .seed = 11});
    const auto test = data::toy_images({.count = 60, .size = 32, .seed = 12});
    auto spec = small_spec();
    spec.epochs = 2;
    MixingConfig mix;
    mix.seed = 3;
    const auto a = train_classifier(spec, all, mix, nullptr);
    REQUIRE(a.history.rows.size() == 2);
    MESSAGE("train acc " << a.history.rows.back().train_acc);
    CHECK(a.history.rows.back().train_acc > 0.5);

    auto b = train_classifier(spec, all, mix, nullptr);
    auto ma = a.model;
    CHECK(evaluate(ma, test, spec.input_size).confusion == evaluate(b.model, test, spec.input_size).confusion);

    TempDir dir;
    auto pre_spec = small_spec();
    auto fresh = make_classifier(pre_spec);
    save_classifier(fresh, pre_spec, dir / "pre.pt");
    pre_spec.pretrained = true;
    pre_spec.pretrained_path = dir / "pre.pt";
    pre_spec.epochs = 0;
    auto zero = train_classifier(pre_spec, all, mix, nullptr);
    CHECK(same_parameters(zero.model, fresh));
    CHECK(zero.history.rows.empty());
}

TEST_CASE("train_classifier: TEST ids never reach a batch") {
    TempDir dir;
    const auto manifest = data::make_toy_dataset(dir / "toy", {.count = 80, .size = 32, .test_per_class = 10, .seed = 4});
    auto spec = small_spec();
    spec.epochs = 1;
    MarkerSource src;
    MixingConfig mix;
    mix.p = 0.3;
    const auto trained = train_classifier(spec, manifest, mix, &src);
    CHECK(src.calls > 0);
    CHECK(trained.history.rows.front().replaced > 0);
    CHECK_FALSE(trained.seen_ids.empty());
    for (const auto* r : manifest.in_split(data::Split::Test)) CHECK(trained.seen_ids.count(r->id) == 0);

    auto leaked = data::load_split(manifest, data::Split::Test, 32);
    const std::set<std::string> forbidden{leaked.ids.front()};
    CHECK(code_of([&] { train_classifier(spec, leaked, mix, &src, forbidden); }) == ErrorCode::ManifestError);
}

TEST_CASE("sweep_p: cardinality, CSV, best p") {
    const auto train = data::toy_images({.count = 64, .size = 32, .seed = 21});
    auto test = data::toy_images({.count = 40, .size = 32, .seed = 22});
    for (auto& id : test.ids) id += "-test";
    auto spec = small_spec(Arch::SqueezeNet);
    spec.epochs = 1;
    MarkerSource src;
    int seen = 0;
    const auto rows = sweep_p(spec, train, test, {0.0, 1.0}, {1, 2}, &src, [&](const SweepRow&) { ++seen; });
    CHECK(rows.size() == 4);
    CHECK(seen == 4);
    const auto best = best_p(rows);
    REQUIRE(best.size() == 1);
    CHECK(best[0].seeds == 2);
    double p1 = 0.0;
    for (const auto& r : rows) p1 += r.p == 1.0 ? r.metrics.acc / 2 : 0.0;
    CHECK(p1 <= best[0].mean_acc);

    TempDir dir;
    write_sweep_csv(dir / "sweep.csv", rows);
    std::ifstream in(dir / "sweep.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "arch,p,seed,acc,sensitivity,specificity");
    CHECK(default_p_grid().size() == 11);
}

TEST_CASE("synthetic sources: generator-backed and pooled") {
    auto spec = gan::GanSpec::for_variant(gan::Variant::Cgan, 32);
    spec.width = 8;
    gan::TrainConfig cfg;
    auto ckpt = gan::GanCheckpoint::initial(spec, cfg);
    GanSynthSource src(ckpt);
    Rng rng(1);
    const auto imgs = src.sample(Label::Amd, 5, rng);
    CHECK(imgs.sizes() == torch::IntArrayRef({5, 3, 32, 32}));
    auto pooled = PooledSynthSource::from(src, 7, rng);
    CHECK(pooled.sample(Label::NonAmd, 20, rng).size(0) == 20);
    CHECK(pooled.describe() == "pool(7+7)");

    auto dc = gan::GanSpec::for_variant(gan::Variant::Dcgan, 32);
    dc.width = 8;
    CHECK(code_of([&] { GanSynthSource bad(gan::GanCheckpoint::initial(dc, cfg)); }) == ErrorCode::UsageError);
    CHECK(code_of([] { PooledSynthSource(torch::zeros({0, 3, 4, 4}), torch::zeros({1, 3, 4, 4})); }) ==
          ErrorCode::InsufficientPool);
}

TEST_CASE("conditional generators produce the requested label") {
    // Frozen reference classifier trained on real toy images.
    const auto real = data::toy_images({.count = 500, .size = 32, .seed = 7});
    auto held_out = data::toy_images({.count = 100, .size = 32, .seed = 8});
    for (auto& id : held_out.ids) id += "-held";
    auto spec = small_spec();
    spec.width = 0.25;
    spec.epochs = 3;
    spec.lr = 0.01;
    MixingConfig mix;
    mix.seed = 1;
    auto ref = train_classifier(spec, real, mix, nullptr);
    const auto ref_acc = evaluate(ref.model, held_out, spec.input_size).acc;
    MESSAGE("reference classifier accuracy " << ref_acc);
    REQUIRE(ref_acc >= 0.9);

    for (auto variant : {gan::Variant::Cgan, gan::Variant::Acgan}) {
        gan::TrainConfig cfg;
        cfg.epochs = 5;
        cfg.seed = 7;
        const auto trained = gan::train_gan(gan::GanSpec::for_variant(variant, 32), real, cfg);
        // Agreement over all 200 samples, 100 requested per label.
        double agree = 0.0;
        for (Label label : kLabels) {
            auto imgs = gan::generate(trained.checkpoint, 100, label, 99).images;
            data::LabeledImages batch{imgs, torch::full({100}, index_of(label), torch::kInt64), {}};
            const auto hit = evaluate(ref.model, batch, spec.input_size).acc;
            MESSAGE(gan::to_string(variant) << " " << to_string(label) << " agreement " << hit);
            agree += hit / 2;
        }
        CHECK(agree >= 0.7);
    }
}
