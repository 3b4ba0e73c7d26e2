#include "fgb/style/toy.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <ATen/CPUGeneratorImpl.h>

#include "fgb/csv.hpp"
#include "fgb/error.hpp"

namespace fgb::style {

namespace fs = std::filesystem;
namespace F = torch::nn::functional;

namespace {

constexpr std::int64_t kMaxToyResolution = 64;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

fs::path meta_path(const fs::path& p) {
    auto m = p;
    m.replace_extension(".json");
    return m;
}

}  // namespace

bool StyleHistory::all_finite() const {
    for (const auto& r : rows) {
        for (double v : {r.loss_d, r.loss_g, r.r1, r.p_aug, r.r_estimate}) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

std::vector<double> StyleHistory::p_trace() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.p_aug);
    return out;
}

void StyleHistory::write_csv(const fs::path& path) const {
    std::vector<csv::Row> out;
    for (const auto& r : rows) {
        out.push_back({std::to_string(r.step), std::to_string(r.epoch), fmt(r.loss_d), fmt(r.loss_g), fmt(r.r1),
                       fmt(r.p_aug), fmt(r.r_estimate)});
    }
    csv::write(path, {"step", "epoch", "loss_d", "loss_g", "r1", "p_aug", "r_estimate"}, out);
}

StyleCheckpoint StyleCheckpoint::initial(const StyleConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (cfg.max_resolution > kMaxToyResolution) {
        fail(ErrorCode::ConfigError, "toy style training supports max_resolution <= 64");
    }
    torch::manual_seed(seed);
    StyleCheckpoint c;
    c.cfg = cfg;
    c.seed = seed;
    c.ada.target = cfg.ada_target;
    c.ada.step_size = cfg.ada_step;
    c.ada.half_life = cfg.ada_half_life;
    c.generator = StyleGenerator(cfg);
    c.discriminator = StyleDiscriminator(cfg);
    return c;
}

void StyleCheckpoint::save(const fs::path& path) const {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    torch::serialize::OutputArchive root, g, d;
    generator->save(g);
    discriminator->save(d);
    root.write("generator", g);
    root.write("discriminator", d);
    root.save_to(path.string());
    const nlohmann::json meta = {{"cfg", cfg},
                                 {"seed", seed},
                                 {"epoch", epoch},
                                 {"step", step},
                                 {"ada",
                                  {{"p_aug", ada.p_aug},
                                   {"r_estimate", ada.r_estimate},
                                   {"target", ada.target},
                                   {"step_size", ada.step_size},
                                   {"half_life", ada.half_life}}}};
    std::ofstream(meta_path(path)) << meta.dump(2) << "\n";
}

StyleCheckpoint StyleCheckpoint::load(const fs::path& path) {
    std::ifstream in(meta_path(path));
    if (!in || !fs::exists(path)) fail(ErrorCode::ModelLoadError, "missing style checkpoint " + path.string());
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ModelLoadError, std::string("bad style checkpoint metadata: ") + e.what());
    }
    auto c = initial(meta.at("cfg").get<StyleConfig>(), meta.at("seed").get<std::uint64_t>());
    c.epoch = meta.at("epoch").get<int>();
    c.step = meta.at("step").get<std::int64_t>();
    const auto& a = meta.at("ada");
    c.ada = {a.at("p_aug"), a.at("r_estimate"), a.at("target"), a.at("step_size"), a.at("half_life")};
    try {
        torch::serialize::InputArchive root, g, d;
        root.load_from(path.string());
        root.read("generator", g);
        root.read("discriminator", d);
        c.generator->load(g);
        c.discriminator->load(d);
    } catch (const c10::Error& e) {
        fail(ErrorCode::ModelLoadError, "cannot load style checkpoint: " + std::string(e.what_without_backtrace()));
    }
    return c;
}

StyleTrainResult train_style_toy(const StyleConfig& cfg, const data::LabeledImages& train, int epochs,
                                 std::uint64_t seed, const fs::path& out_dir) {
    StyleTrainResult result{StyleCheckpoint::initial(cfg, seed), {}};
    auto& ckpt = result.checkpoint;
    auto& history = result.history;
    if (epochs < 0) fail(ErrorCode::ConfigError, "epochs must be >= 0");
    const auto n = train.size();
    if (n < 1) fail(ErrorCode::UsageError, "style training needs TRAIN images");
    if (train.images.size(-1) != cfg.max_resolution) fail(ErrorCode::UsageError, "images must match max_resolution");

    const auto ckpt_path = out_dir.empty() ? fs::path{} : out_dir / "checkpoint.pt";
    const auto persist = [&] {
        if (ckpt_path.empty()) return;
        ckpt.save(ckpt_path);
        history.write_csv(out_dir / "history.csv");
    };
    persist();
    if (epochs == 0) return result;

    auto gen = at::make_generator<at::CPUGeneratorImpl>(seed ^ 0x2545F4914F6CDD1DULL);
    Rng order(seed);
    Rng aug_rng(seed + 1);
    auto& G = ckpt.generator;
    auto& D = ckpt.discriminator;
    const auto adam = [&](std::vector<torch::Tensor> params) {
        return torch::optim::Adam(std::move(params), torch::optim::AdamOptions(cfg.lr)
                                                         .betas({cfg.adam_betas[0], cfg.adam_betas[1]})
                                                         .eps(cfg.adam_eps));
    };
    auto opt_g = adam(G->parameters());
    auto opt_d = adam(D->parameters());
    const auto batch = std::min<std::int64_t>(cfg.batch_size, n);
    const auto batches = n / batch;
    const auto labels_for = [&](std::int64_t b) {
        return cfg.conditional ? torch::randint(cfg.class_count, {b}, gen, torch::kInt64) : torch::Tensor{};
    };
    std::vector<std::int64_t> perm(static_cast<std::size_t>(n));

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(perm.begin(), perm.end(), 0);
        order.shuffle(std::span(perm));
        for (std::int64_t b = 0; b < batches; ++b) {
            const auto idx =
                torch::tensor(std::vector<std::int64_t>(perm.begin() + b * batch, perm.begin() + (b + 1) * batch));
            const auto real = train.images.index_select(0, idx);
            const auto y = cfg.conditional ? train.labels.index_select(0, idx) : torch::Tensor{};

            // Discriminator: logistic loss + R1 on augmented reals.
            const auto y_fake = labels_for(batch);
            const auto fake = G->forward(torch::randn({batch, cfg.z_dim}, gen), y_fake, &gen).detach();
            auto real_aug = augment_pipeline(real, ckpt.ada.p_aug, aug_rng).images.detach().requires_grad_(true);
            const auto fake_aug = augment_pipeline(fake, ckpt.ada.p_aug, aug_rng).images;
            const auto d_real = D->forward(real_aug, y);
            const auto d_fake = D->forward(fake_aug, y_fake);
            const auto adv = F::softplus(-d_real).mean() + F::softplus(d_fake).mean();
            const auto grad = torch::autograd::grad({d_real.sum()}, {real_aug}, {}, true, true)[0];
            const auto r1 = grad.pow(2).flatten(1).sum(1).mean();
            const auto loss_d = adv + 0.5 * cfg.r1_gamma * r1;
            opt_d.zero_grad();
            loss_d.backward();
            opt_d.step();

            const auto signs_t = torch::sign(d_real.detach()).to(torch::kDouble).contiguous();
            const std::vector<double> signs(signs_t.data_ptr<double>(), signs_t.data_ptr<double>() + signs_t.numel());
            ckpt.ada = ada_update(ckpt.ada, signs);

            // Generator: non-saturating loss through the same augmentation.
            const auto y_gen = labels_for(batch);
            const auto gen_imgs = G->forward(torch::randn({batch, cfg.z_dim}, gen), y_gen, &gen);
            const auto loss_g =
                F::softplus(-D->forward(augment_pipeline(gen_imgs, ckpt.ada.p_aug, aug_rng).images, y_gen)).mean();
            opt_g.zero_grad();
            loss_g.backward();
            opt_g.step();

            StyleHistoryRow row{ckpt.step + 1,       epoch, loss_d.item<double>(), loss_g.item<double>(),
                                r1.item<double>(), ckpt.ada.p_aug, ckpt.ada.r_estimate};
            if (!std::isfinite(row.loss_d) || !std::isfinite(row.loss_g) || !std::isfinite(row.r1)) {
                if (!ckpt_path.empty()) history.write_csv(out_dir / "history.csv");
                fail(ErrorCode::NumericalError, "non-finite style loss at step " + std::to_string(row.step) +
                                                    "; last good checkpoint (epoch " + std::to_string(ckpt.epoch) +
                                                    ") " + (ckpt_path.empty() ? "in memory" : ckpt_path.string()));
            }
            ++ckpt.step;
            history.rows.push_back(row);
        }
        history.epoch_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        ckpt.epoch = epoch;
        persist();
    }
    return result;
}

StyleTrainResult train_style_toy(const StyleConfig& cfg, const data::DatasetManifest& manifest, int epochs,
                                 std::uint64_t seed, const fs::path& out_dir) {
    return train_style_toy(cfg, data::load_split(manifest, data::Split::Train, cfg.max_resolution), epochs, seed,
                           out_dir);
}

torch::Tensor generate_style(const StyleCheckpoint& checkpoint, std::int64_t n, std::optional<Label> label,
                             std::uint64_t seed) {
    const auto& cfg = checkpoint.cfg;
    if (label.has_value() != cfg.conditional) {
        fail(ErrorCode::UsageError, cfg.conditional ? "conditional generator needs a label"
                                                    : "label given for an unconditional generator");
    }
    if (n <= 0) return torch::empty({0, 3, cfg.max_resolution, cfg.max_resolution});
    torch::NoGradGuard guard;
    auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
    const auto z = torch::randn({n, cfg.z_dim}, gen);
    const auto y = label ? torch::full({n}, index_of(*label), torch::kInt64) : torch::Tensor{};
    auto generator = checkpoint.generator;
    return generator->forward(z, y, &gen);
}

}  // namespace fgb::style
