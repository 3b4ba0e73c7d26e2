#include "fgb/gan/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <ATen/CPUGeneratorImpl.h>

#include "fgb/csv.hpp"
#include "fgb/error.hpp"
#include "fgb/gan/losses.hpp"
#include "fgb/gan/penalty.hpp"
#include "fgb/rng.hpp"

namespace fgb::gan {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kNoiseStream = 0x5bd1e995ULL;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

fs::path metadata_path(const fs::path& p) {
    auto m = p;
    m.replace_extension(".json");
    return m;
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

bool TrainHistory::all_finite() const {
    for (const auto& r : rows) {
        if (!finite(r.loss_d) || !finite(r.loss_g) || !finite(r.aux_k) || !finite(r.aux_M)) return false;
    }
    return true;
}

void TrainHistory::write_csv(const fs::path& path) const {
    std::vector<csv::Row> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back({std::to_string(r.step), std::to_string(r.epoch), fmt(r.loss_d), fmt(r.loss_g), fmt(r.aux_k),
                       fmt(r.aux_M)});
    }
    csv::write(path, {"step", "epoch", "loss_d", "loss_g", "aux_k", "aux_M"}, out);
}

TrainHistory TrainHistory::read_csv(const fs::path& path) {
    const auto table = csv::read(path);
    TrainHistory h;
    for (const auto& row : table.rows) {
        if (row.size() != 6) fail(ErrorCode::Io, "malformed history row in " + path.string());
        h.rows.push_back({std::stoll(row[0]), std::stoi(row[1]), std::stod(row[2]), std::stod(row[3]),
                          std::stod(row[4]), std::stod(row[5])});
    }
    return h;
}

GanCheckpoint GanCheckpoint::initial(const GanSpec& spec, const TrainConfig& cfg) {
    spec.validate();
    cfg.validate();
    torch::manual_seed(cfg.seed);
    GanCheckpoint c;
    c.spec = spec;
    c.cfg = cfg;
    c.began_k = cfg.k0;
    c.generator = Generator(spec);
    c.discriminator = Discriminator(spec);
    return c;
}

nlohmann::json GanCheckpoint::metadata() const {
    return {{"variant", to_string(spec.variant)}, {"spec", spec}, {"cfg", cfg},          {"seed", cfg.seed},
            {"epoch", epoch},                     {"step", step}, {"began_k", began_k}};
}

void GanCheckpoint::save(const fs::path& path) const {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    torch::serialize::OutputArchive root, g, d;
    generator->save(g);
    discriminator->save(d);
    root.write("generator", g);
    root.write("discriminator", d);
    root.save_to(path.string());
    std::ofstream(metadata_path(path)) << metadata().dump(2) << "\n";
}

GanCheckpoint GanCheckpoint::load(const fs::path& path) {
    std::ifstream meta(metadata_path(path));
    if (!meta || !fs::exists(path)) fail(ErrorCode::ModelLoadError, "missing checkpoint " + path.string());
    nlohmann::json j;
    try {
        meta >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ModelLoadError, "bad checkpoint metadata " + metadata_path(path).string() + ": " + e.what());
    }
    auto c = initial(j.at("spec").get<GanSpec>(), j.at("cfg").get<TrainConfig>());
    c.epoch = j.at("epoch").get<int>();
    c.step = j.at("step").get<std::int64_t>();
    c.began_k = j.value("began_k", 0.0);
    try {
        torch::serialize::InputArchive root, g, d;
        root.load_from(path.string());
        root.read("generator", g);
        root.read("discriminator", d);
        c.generator->load(g);
        c.discriminator->load(d);
    } catch (const c10::Error& e) {
        fail(ErrorCode::ModelLoadError, "cannot load checkpoint " + path.string() + ": " + e.what_without_backtrace());
    }
    return c;
}

TrainResult train_gan(const GanSpec& spec, const data::LabeledImages& train, const TrainConfig& cfg,
                      const TrainOptions& options) {
    TrainResult result{GanCheckpoint::initial(spec, cfg), {}};
    auto& ckpt = result.checkpoint;
    auto& history = result.history;
    const auto n = train.size();
    if (n < 2) fail(ErrorCode::UsageError, "GAN training needs at least two TRAIN images");
    if (train.images.size(-1) != spec.image_size) fail(ErrorCode::UsageError, "training images do not match image_size");

    const auto ckpt_path = options.out_dir.empty() ? fs::path{} : options.out_dir / "checkpoint.pt";
    const auto persist = [&] {
        if (ckpt_path.empty()) return;
        ckpt.save(ckpt_path);
        history.write_csv(options.out_dir / "history.csv");
    };
    persist();
    if (cfg.epochs == 0) return result;

    auto gen = at::make_generator<at::CPUGeneratorImpl>(cfg.seed ^ kNoiseStream);
    Rng order(cfg.seed);
    auto& G = ckpt.generator;
    auto& D = ckpt.discriminator;
    G->train();
    D->train();
    const auto adam = [&](std::vector<torch::Tensor> params) {
        return torch::optim::Adam(std::move(params),
                                  torch::optim::AdamOptions(cfg.lr).betas({cfg.adam_beta1, cfg.adam_beta2}));
    };
    auto opt_g = adam(G->parameters());
    auto opt_d = adam(D->parameters());

    const auto variant = spec.variant;
    const auto batch = std::min<std::int64_t>(cfg.batch_size, n);
    const auto batches = n / batch;
    const auto as_scores = [&](const torch::Tensor& s) {
        return is_log_loss(variant) ? Scores::logits(s) : Scores::raw(s);
    };
    const auto sample_labels = [&](std::int64_t b) {
        return spec.conditional ? torch::randint(spec.class_count, {b}, gen, torch::kInt64) : torch::Tensor{};
    };

    std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
    std::int64_t d_steps = 0;
    double last_d = 0.0;
    double last_real_ae = 0.0;
    double k = cfg.k0;
    const auto abort_nan = [&](const std::string& what) {
        const std::string where = ckpt_path.empty() ? "in memory" : ckpt_path.string();
        if (!ckpt_path.empty()) history.write_csv(options.out_dir / "history.csv");
        fail(ErrorCode::NumericalError, "non-finite " + what + " at epoch " + std::to_string(ckpt.epoch + 1) +
                                            ", step " + std::to_string(ckpt.step) + "; last good checkpoint (epoch " +
                                            std::to_string(ckpt.epoch) + ") " + where);
    };

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(perm.begin(), perm.end(), 0);
        order.shuffle(std::span(perm));
        for (std::int64_t b = 0; b < batches; ++b) {
            const auto idx = torch::tensor(std::vector<std::int64_t>(perm.begin() + b * batch, perm.begin() + (b + 1) * batch));
            const auto x = train.images.index_select(0, idx);
            const auto y = spec.conditional ? train.labels.index_select(0, idx) : torch::Tensor{};

            // Discriminator step.
            const auto y_fake = sample_labels(batch);
            const auto fake = G->forward(torch::randn({batch, spec.latent_dim}, gen), y_fake).detach();
            const auto out_real = D->forward(x, y);
            const auto out_fake = D->forward(fake, y_fake);
            LossAux aux;
            aux.k = k;
            aux.margin = cfg.margin_m;
            if (is_autoencoder(variant)) {
                aux.ae_real = out_real.score.mean();
                aux.ae_fake = out_fake.score.mean();
            }
            if (variant == Variant::Acgan) {
                aux.class_logits_real = out_real.class_logits;
                aux.class_logits_fake = out_fake.class_logits;
                aux.labels_real = y;
                aux.labels_fake = y_fake;
            }
            auto loss_d = discriminator_loss(variant, as_scores(out_real.score), as_scores(out_fake.score), aux);
            if (variant == Variant::WganGp || variant == Variant::Dragan) {
                const Critic critic = [&](const torch::Tensor& xh) { return D->forward(xh).score; };
                const auto mode = variant == Variant::WganGp ? PenaltyMode::Interpolate : PenaltyMode::PerturbReal;
                loss_d = loss_d + gradient_penalty(critic, x, fake, mode, cfg.lambda_gp, gen);
            }
            opt_d.zero_grad();
            loss_d.backward();
            opt_d.step();
            if (variant == Variant::Wgan) clip_weights(*D, cfg.clip_c);
            last_d = loss_d.item<double>();
            if (!finite(last_d)) abort_nan("discriminator loss");
            if (is_autoencoder(variant)) last_real_ae = aux.ae_real.item<double>();
            ++d_steps;
            if (is_wasserstein(variant) && d_steps % cfg.n_critic != 0) continue;

            // Generator step.
            const auto y_gen = sample_labels(batch);
            const auto out_gen = D->forward(G->forward(torch::randn({batch, spec.latent_dim}, gen), y_gen), y_gen);
            LossAux gaux;
            if (is_autoencoder(variant)) gaux.ae_fake = out_gen.score.mean();
            if (variant == Variant::Acgan) {
                gaux.class_logits_fake = out_gen.class_logits;
                gaux.labels_fake = y_gen;
            }
            const auto loss_g = generator_loss(variant, as_scores(out_gen.score), gaux);
            opt_g.zero_grad();
            loss_g.backward();
            opt_g.step();

            HistoryRow row{ckpt.step + 1, epoch, last_d, loss_g.item<double>(), 0.0, 0.0};
            if (!finite(row.loss_g)) abort_nan("generator loss");
            if (variant == Variant::Began) {
                const auto upd = began_update_k(k, cfg.gamma, cfg.lambda_k, last_real_ae, gaux.ae_fake.item<double>());
                k = upd.k_next;
                row.aux_k = k;
                row.aux_M = upd.convergence;
            }
            ++ckpt.step;
            history.rows.push_back(row);
            if (options.on_step) options.on_step(row);
        }
        history.epoch_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        ckpt.epoch = epoch;
        ckpt.began_k = k;
        persist();
    }
    return result;
}

TrainResult train_gan(const GanSpec& spec, const data::DatasetManifest& manifest, const TrainConfig& cfg,
                      const TrainOptions& options) {
    return train_gan(spec, data::load_split(manifest, data::Split::Train, spec.image_size), cfg, options);
}

Generated generate(const GanCheckpoint& checkpoint, std::int64_t n, std::optional<Label> label, std::uint64_t seed) {
    const auto& spec = checkpoint.spec;
    if (label && !spec.conditional) fail(ErrorCode::UsageError, "label given for an unconditional generator");
    if (!label && spec.conditional) fail(ErrorCode::UsageError, "conditional generator needs a label");
    Generated out{torch::empty({0, 3, spec.image_size, spec.image_size}), label};
    if (n <= 0) return out;

    torch::NoGradGuard guard;
    auto G = checkpoint.generator;
    const bool was_training = G->is_training();
    G->eval();
    auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
    const auto z = torch::randn({n, spec.latent_dim}, gen);
    std::vector<torch::Tensor> chunks;
    constexpr std::int64_t kChunk = 256;
    for (std::int64_t i = 0; i < n; i += kChunk) {
        const auto zc = z.slice(0, i, std::min(n, i + kChunk));
        const auto yc = label ? torch::full({zc.size(0)}, index_of(*label), torch::kInt64) : torch::Tensor{};
        chunks.push_back(G->forward(zc, yc));
    }
    G->train(was_training);
    out.images = torch::cat(chunks).clamp(-1.0, 1.0);
    return out;
}

}  // namespace fgb::gan
