#include "support/doctest.hpp"

#include <fstream>

#include <opencv2/core.hpp>

#include "fgb/data/toy.hpp"
#include "fgb/error.hpp"
#include "fgb/image.hpp"
#include "fgb/rng.hpp"
#include "fgb/style/ada.hpp"
#include "fgb/style/config.hpp"
#include "fgb/style/external.hpp"
#include "fgb/style/layers.hpp"
#include "fgb/style/toy.hpp"
#include "support/temp_dir.hpp"

using namespace fgb;
using namespace fgb::style;
using fgb::testing::TempDir;

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

StyleConfig tiny(int max_res = 16) {
    StyleConfig c;
    c.z_dim = 16;
    c.w_dim = 16;
    c.mapping_layers = 2;
    c.max_resolution = max_res;
    c.channels.assign(static_cast<std::size_t>(c.levels()), 8);
    c.batch_size = 8;
    return c;
}

data::DatasetManifest manifest_of_size(const std::filesystem::path& dir, int side, int n) {
    data::DatasetManifest m;
    for (int i = 0; i < n; ++i) {
        data::ImageRecord r;
        r.id = "TOY/img" + std::to_string(i);
        r.source_dataset = data::SourceDataset::Toy;
        r.path = dir / ("img" + std::to_string(i) + ".png");
        r.label = i % 2 ? Label::Amd : Label::NonAmd;
        r.split = data::Split::Train;
        image::write_png(r.path, cv::Mat(side, side, CV_8UC3, cv::Scalar(10 * i, 20, 30)));
        m.records.push_back(r);
    }
    m.recount();
    return m;
}

}  // namespace

TEST_CASE("modulated conv: identity modulation is a plain convolution") {
    torch::manual_seed(1);
    const auto x = torch::randn({3, 4, 9, 9});
    const auto w = torch::randn({5, 4, 3, 3});
    const auto got = modulated_conv(x, torch::ones({3, 4}), w, false);
    const auto want = torch::conv2d(x, w, {}, 1, 1);
    CHECK(torch::allclose(got, want, 1e-5, 1e-5));
}

TEST_CASE("modulated conv: 1x1 hand arithmetic") {
    // w=3, s=2 -> 6 / sqrt(36 + eps) ~= 1.
    const auto x = torch::tensor({0.5f, -1.25f, 2.0f, 7.0f}).reshape({1, 1, 2, 2});
    const auto y = modulated_conv(x, torch::full({1, 1}, 2.0), torch::full({1, 1, 1, 1}, 3.0), true);
    CHECK(torch::allclose(y, x, 1e-6, 1e-6));
    const auto plain = modulated_conv(x, torch::full({1, 1}, 2.0), torch::full({1, 1, 1, 1}, 3.0), false);
    CHECK(torch::allclose(plain, 6 * x));
}

TEST_CASE("modulated weights: demodulated filters have unit norm") {
    torch::manual_seed(2);
    for (int t = 0; t < 20; ++t) {
        const auto s = torch::rand({4, 6}) * 3 + 0.05;
        const auto w = torch::randn({7, 6, 3, 3}) * (t + 1);
        const auto eff = modulated_weights(s, w, true);
        // Direct computation of each output filter's norm.
        const auto norms = eff.pow(2).sum({2, 3, 4}).sqrt();
        CHECK((norms - 1).abs().max().item<double>() <= 1e-3);

        const auto manual = w.unsqueeze(0) * s.view({4, 1, 6, 1, 1});
        CHECK(torch::allclose(modulated_weights(s, w, false), manual));
    }
}

TEST_CASE("mapping network: zero map, shape, scale invariance") {
    torch::NoGradGuard guard;
    StyleConfig cfg;
    torch::manual_seed(3);
    MappingNetwork net(cfg);
    const auto z = torch::randn({5, 64});
    const auto w = net->forward(z);
    CHECK(w.sizes() == torch::IntArrayRef({5, 64}));
    for (double k : {2.0, 0.01, 37.5}) {
        CHECK((net->forward(z * k) - w).abs().max().item<double>() <= 1e-6);
    }
    CHECK(torch::isfinite(net->forward(torch::zeros({2, 64}))).all().item<bool>());

    for (auto& p : net->parameters()) p.zero_();
    CHECK(net->forward(torch::randn({3, 64})).abs().max().item<double>() == 0.0);
}

TEST_CASE("style generator: every resolution's output lies in [-1,1]") {
    torch::NoGradGuard guard;
    for (bool conditional : {false, true}) {
        auto cfg = tiny(32);
        cfg.conditional = conditional;
        torch::manual_seed(4);
        StyleGenerator g(cfg);
        const auto z = torch::randn({6, cfg.z_dim}) * 50;
        const auto y = conditional ? torch::tensor({0, 1, 0, 1, 1, 0}, torch::kInt64) : torch::Tensor{};
        const auto outs = g->forward_all(z, y);
        REQUIRE(outs.size() == static_cast<std::size_t>(cfg.levels()));
        int side = cfg.base_resolution;
        for (const auto& o : outs) {
            CHECK(o.sizes() == torch::IntArrayRef({6, 3, side, side}));
            CHECK(o.abs().max().item<double>() <= 1.0);
            side *= 2;
        }
        StyleDiscriminator d(cfg);
        CHECK(d->forward(outs.back(), y).sizes() == torch::IntArrayRef({6}));
    }
}

TEST_CASE("style config: validation and JSON round trip") {
    StyleConfig c;
    c.validate();
    CHECK(nlohmann::json(c).get<StyleConfig>() == c);
    auto bad = c;
    bad.max_resolution = 48;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::ConfigError);
    bad = c;
    bad.ada_target = 1.0;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::ConfigError);
    bad = c;
    bad.max_resolution = 2;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::ConfigError);
}

TEST_CASE("ada_update: direction and fixed point") {
    AdaState s;
    s.r_estimate = 0.9;
    s.target = 0.8;
    s.p_aug = 0.5;
    s.step_size = 0.01;
    CHECK(ada_update(s, {}).p_aug == doctest::Approx(0.51).epsilon(1e-12));

    s.r_estimate = 0.8;
    CHECK(ada_update(s, {}).p_aug == 0.5);

    s.r_estimate = 0.1;
    s.p_aug = 0.003;
    CHECK(ada_update(s, {}).p_aug == 0.0);
    s.r_estimate = 1.0;
    s.p_aug = 0.999;
    CHECK(ada_update(s, {}).p_aug == 1.0);
}

TEST_CASE("ada_update: estimate is an EMA with the configured half-life") {
    AdaState s;
    s.half_life = 10;
    const std::vector<double> ones(8, 1.0);
    for (int i = 0; i < 10; ++i) s = ada_update(s, ones);
    CHECK(s.r_estimate == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("ada_update: constant low estimate drives p to zero") {
    AdaState s;
    s.p_aug = 0.73;
    s.r_estimate = 0.2;
    int steps = 0;
    while (s.p_aug > 0.0 && steps < 1000) {
        s = ada_update(s, {});
        ++steps;
        CHECK(s.p_aug >= 0.0);
    }
    CHECK(s.p_aug == 0.0);
    CHECK(steps == 146);
}

TEST_CASE("ada_update: closed loop settles on the target-solving p") {
    // Environment: E[sign] = r(p) = 1 - 0.5 p, so r(p) = 0.8 at p = 0.4.
    // Signs are Bernoulli draws, 32 per batch.
    Rng rng(11);
    AdaState s;
    std::vector<double> signs(32);
    std::vector<double> trace;
    for (int step = 0; step < 2000; ++step) {
        const double r = 1.0 - 0.5 * s.p_aug;
        for (auto& v : signs) v = rng.bernoulli((1.0 + r) / 2.0) ? 1.0 : -1.0;
        s = ada_update(s, signs);
        CHECK(s.p_aug >= 0.0);
        CHECK(s.p_aug <= 1.0);
        trace.push_back(s.p_aug);
    }
    double tail = 0.0;
    for (std::size_t i = 1500; i < trace.size(); ++i) tail += trace[i];
    tail /= 500.0;
    MESSAGE("tail mean p = " << tail);
    CHECK(std::abs(tail - 0.4) <= 0.05);
}

TEST_CASE("augment_pipeline: p=0 is the identity, p=1 always fires") {
    torch::manual_seed(5);
    const auto x = torch::rand({6, 3, 8, 8}) * 2 - 1;
    Rng rng(1);
    const auto same = augment_pipeline(x, 0.0, rng);
    CHECK(torch::equal(same.images, x));
    for (int a = 0; a < kAugCount; ++a) CHECK(same.count(static_cast<Aug>(a)) == 0);

    const AugmentOptions flips{.rotate90 = false, .translate = false, .flip = true, .brightness = false,
                               .contrast = false};
    Rng r1(9);
    const auto once = augment_pipeline(x, 1.0, r1, flips);
    CHECK(once.count(Aug::Flip) == 6);
    CHECK(torch::equal(once.images, x.flip({3})));
    const auto twice = augment_pipeline(once.images, 1.0, r1, flips);
    CHECK(torch::equal(twice.images, x));

    CHECK(code_of([&] { augment_pipeline(x, 1.5, rng); }) == ErrorCode::UsageError);
}

TEST_CASE("augment_pipeline: application rates at p=0.5") {
    const auto x = torch::zeros({10000, 3, 8, 8});
    Rng rng(21);
    const auto out = augment_pipeline(x, 0.5, rng);
    for (int a = 0; a < kAugCount; ++a) {
        const double rate = static_cast<double>(out.count(static_cast<Aug>(a))) / 10000.0;
        CHECK(std::abs(rate - 0.5) <= 0.02);
    }
}

TEST_CASE("augment_pipeline: gradients reach the inputs") {
    const auto x = torch::rand({4, 3, 8, 8}).requires_grad_(true);
    Rng rng(3);
    augment_pipeline(x, 1.0, rng).images.sum().backward();
    CHECK(x.grad().defined());
    CHECK(x.grad().abs().sum().item<double>() > 0.0);
}

TEST_CASE("external config: descriptor values, layout, round trip") {
    TempDir dir;
    const auto manifest = manifest_of_size(dir / "src", 256, 4);
    StyleConfig cfg;
    cfg.conditional = true;
    const auto plan = export_external_config(cfg, manifest, dir / "out");

    std::ifstream in(plan.descriptor_path);
    nlohmann::json d;
    in >> d;
    const auto& hp = d.at("hyperparameters");
    CHECK(hp.size() == 5);
    CHECK(hp.at("batch") == 12);
    CHECK(hp.at("ada_target") == 0.8);
    CHECK(hp.at("lr") == 0.0025);
    CHECK(hp.at("betas") == nlohmann::json::array({0.0, 0.99}));
    CHECK(hp.at("eps") == 1e-8);
    CHECK(d.at("resolution") == 256);
    CHECK(d.at("conditional") == true);
    CHECK(parse_descriptor(d) == cfg);

    nlohmann::json labels;
    std::ifstream(plan.dataset_dir / "dataset.json") >> labels;
    CHECK(labels.at("labels").size() == 4);
    for (const auto& entry : labels.at("labels")) {
        CHECK(std::filesystem::exists(plan.dataset_dir / entry[0].get<std::string>()));
    }
    CHECK(std::filesystem::exists(plan.dataset_dir / "AMD"));
    CHECK(std::find(plan.command.begin(), plan.command.end(), "--batch=12") != plan.command.end());
    CHECK(std::find(plan.command.begin(), plan.command.end(), "--cond=1") != plan.command.end());

    auto tampered = d;
    tampered["hyperparameters"]["lr"] = 0.001;
    CHECK(code_of([&] { parse_descriptor(tampered); }) == ErrorCode::ConfigError);
}

TEST_CASE("external config: errors") {
    TempDir dir;
    CHECK(code_of([&] { export_external_config({}, data::DatasetManifest{}, dir / "a"); }) == ErrorCode::ConfigError);
    const auto small = manifest_of_size(dir / "src", 128, 2);
    CHECK(code_of([&] { export_external_config({}, small, dir / "b"); }) == ErrorCode::ConfigError);
}

TEST_CASE("external run: exit status and newest snapshot") {
    TempDir dir;
    CHECK_FALSE(interpret_external_run(dir / "missing", 0).latest_snapshot);
    std::filesystem::create_directories(dir / "00000-run");
    for (const char* name : {"network-snapshot-000000.pkl", "network-snapshot-000200.pkl", "log.txt"}) {
        std::ofstream(dir / "00000-run" / name) << "x";
    }
    const auto ok = interpret_external_run(dir.path(), 0);
    CHECK(ok.succeeded);
    REQUIRE(ok.latest_snapshot);
    CHECK(ok.latest_snapshot->filename() == "network-snapshot-000200.pkl");
    CHECK_FALSE(interpret_external_run(dir.path(), 1).succeeded);
}

TEST_CASE("train_style_toy: epochs=0, smoke, determinism, persistence") {
    const auto cfg = tiny(16);
    const auto imgs = data::toy_images({.count = 24, .size = 16, .seed = 2});
    const auto init = train_style_toy(cfg, imgs, 0, 5);
    CHECK(init.history.rows.empty());
    CHECK(init.checkpoint.epoch == 0);

    TempDir dir;
    const auto a = train_style_toy(cfg, imgs, 2, 5, dir.path());
    const auto b = train_style_toy(cfg, imgs, 2, 5);
    CHECK(a.history.rows.size() == 6);
    CHECK(a.history.all_finite());
    CHECK(a.history.p_trace() == b.history.p_trace());
    CHECK((a.history.rows == b.history.rows));

    const auto loaded = StyleCheckpoint::load(dir / "checkpoint.pt");
    CHECK(loaded.epoch == 2);
    CHECK(loaded.ada.p_aug == a.checkpoint.ada.p_aug);
    const auto g1 = generate_style(a.checkpoint, 5, std::nullopt, 3);
    const auto g2 = generate_style(loaded, 5, std::nullopt, 3);
    CHECK(torch::equal(g1, g2));
    CHECK(g1.abs().max().item<double>() <= 1.0);
    CHECK(std::filesystem::exists(dir / "history.csv"));

    CHECK(code_of([&] { generate_style(loaded, 2, Label::Amd, 1); }) == ErrorCode::UsageError);
    CHECK(code_of([&] { StyleCheckpoint::load(dir / "none.pt"); }) == ErrorCode::ModelLoadError);
    auto big = cfg;
    big.max_resolution = 128;
    big.channels.clear();
    CHECK(code_of([&] { train_style_toy(big, imgs, 1, 1); }) == ErrorCode::ConfigError);
}
