#include "fgb/cli/commands.hpp"

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>

#include <CLI11.hpp>

#include "fgb/cli/config.hpp"
#include "fgb/clf/metrics.hpp"
#include "fgb/clf/train.hpp"
#include "fgb/csv.hpp"
#include "fgb/data/ingest.hpp"
#include "fgb/data/pipeline.hpp"
#include "fgb/data/splits.hpp"
#include "fgb/error.hpp"
#include "fgb/explain/gradcam.hpp"
#include "fgb/fid/extractor.hpp"
#include "fgb/gan/trainer.hpp"
#include "fgb/image.hpp"
#include "fgb/study/server.hpp"
#include "fgb/study/store.hpp"
#include "fgb/style/external.hpp"
#include "fgb/style/toy.hpp"

namespace fgb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
    RunConfig cfg;
    fs::path run_dir;  // <root>/<hash>
    fs::path out;      // <run_dir>/<command>
    std::ostream& log;

    fs::path sibling(const std::string& command) const { return run_dir / command; }
};

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
    return json::parse(in);
}

fs::path or_default(const fs::path& configured, const fs::path& fallback) {
    return configured.empty() ? fallback : configured;
}

data::DatasetManifest read_manifest(const Context& ctx, const fs::path& configured) {
    const auto path = or_default(configured, ctx.sibling("prep") / "manifest.csv");
    if (!fs::exists(path)) fail(ErrorCode::ManifestError, "no manifest at " + path.string() + " (run prep first)");
    return data::DatasetManifest::read(path);
}

// Every image file below dir, sorted by path.
std::vector<fs::path> images_below(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorCode::Io, "not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && image::is_image_file(e.path())) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

data::LabeledImages only_label(const data::LabeledImages& all, Label label) {
    const auto idx = (all.labels == index_of(label)).nonzero().squeeze(1);
    data::LabeledImages out{all.images.index_select(0, idx), all.labels.index_select(0, idx), {}};
    const auto a = idx.accessor<std::int64_t, 1>();
    for (std::int64_t i = 0; i < a.size(0); ++i) out.ids.push_back(all.ids[static_cast<std::size_t>(a[i])]);
    return out;
}

std::vector<gan::Variant> variants_of(const GanSection& g) {
    if (!g.variants.empty()) return g.variants;
    return {gan::Variant::Dcgan, gan::Variant::Wgan,  gan::Variant::WganGp, gan::Variant::Dragan, gan::Variant::Lsgan,
            gan::Variant::Ebgan, gan::Variant::Began, gan::Variant::Cgan,   gan::Variant::Acgan};
}

void write_generated(const torch::Tensor& images, const fs::path& dir) {
    fs::create_directories(dir);
    for (std::int64_t i = 0; i < images.size(0); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%05lld.png", static_cast<long long>(i));
        image::write_png(dir / name, image::to_mat(images[i]));
    }
}

// Synthetic source named by the mixing config:
//   ""                      none
//   "gan:<VARIANT>"         this run's train-gan output for the variant
//   "style"                 this run's train-style-toy checkpoint
//   "gan-path:<a>[,<b>]"    explicit checkpoint(s); two means AMD then NON_AMD
//   "style-path:<a>[,<b>]"
std::unique_ptr<clf::SynthSource> synth_source(const Context& ctx, const clf::MixingConfig& mix) {
    const auto& text = mix.synth_source;
    if (text.empty()) return nullptr;
    const auto colon = text.find(':');
    const auto kind = text.substr(0, colon);
    const auto arg = colon == std::string::npos ? std::string() : text.substr(colon + 1);
    std::vector<fs::path> paths;
    for (std::size_t start = 0; !arg.empty() && start <= arg.size();) {
        const auto comma = arg.find(',', start);
        paths.emplace_back(arg.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }

    std::unique_ptr<clf::SynthSource> source;
    if (kind == "gan") {
        const auto dir = ctx.sibling("train-gan") / std::string(gan::to_string(gan::parse_variant(arg)));
        if (fs::exists(dir / "checkpoint.pt")) {
            source = std::make_unique<clf::GanSynthSource>(gan::GanCheckpoint::load(dir / "checkpoint.pt"));
        } else {
            source = std::make_unique<clf::GanSynthSource>(gan::GanCheckpoint::load(dir / "AMD" / "checkpoint.pt"),
                                                           gan::GanCheckpoint::load(dir / "NON_AMD" / "checkpoint.pt"));
        }
    } else if (kind == "style") {
        source = std::make_unique<clf::StyleSynthSource>(
            style::StyleCheckpoint::load(ctx.sibling("train-style-toy") / "checkpoint.pt"));
    } else if (kind == "gan-path" && paths.size() == 1) {
        source = std::make_unique<clf::GanSynthSource>(gan::GanCheckpoint::load(paths[0]));
    } else if (kind == "gan-path" && paths.size() == 2) {
        source = std::make_unique<clf::GanSynthSource>(gan::GanCheckpoint::load(paths[0]),
                                                       gan::GanCheckpoint::load(paths[1]));
    } else if (kind == "style-path" && paths.size() == 1) {
        source = std::make_unique<clf::StyleSynthSource>(style::StyleCheckpoint::load(paths[0]));
    } else if (kind == "style-path" && paths.size() == 2) {
        source = std::make_unique<clf::StyleSynthSource>(style::StyleCheckpoint::load(paths[0]),
                                                         style::StyleCheckpoint::load(paths[1]));
    } else {
        fail(ErrorCode::ConfigError, "classifier.mixing.synth_source: cannot interpret '" + text + "'");
    }
    if (!mix.pooled) return source;
    Rng rng(mix.seed);
    return std::make_unique<clf::PooledSynthSource>(clf::PooledSynthSource::from(*source, mix.pool_size, rng));
}

// Commands.

void cmd_prep(Context& ctx) {
    const auto& p = ctx.cfg.pipeline;
    std::vector<data::DatasetManifest> manifests;
    const auto ingest = [&](const fs::path& root, data::SourceDataset kind, const data::GradeTable& table) {
        auto result = data::ingest_dataset(root, kind, table);
        for (const auto& w : result.warnings) ctx.log << "warning: " << w << '\n';
        ctx.log << data::to_string(kind) << ": " << result.manifest.records.size() << " records\n";
        manifests.push_back(std::move(result.manifest));
    };
    if (p.toy.count > 0) {
        // Rendered images need no manual grading.
        data::GradeTable all_good;
        for (const auto& r : data::make_toy_dataset(ctx.out / "toy", p.toy).records) all_good.grades[r.id] = data::Grade::Good;
        ingest(ctx.out / "toy", data::SourceDataset::Toy, all_good);
    }
    for (const auto& d : p.datasets) {
        if (d.grades.empty()) fail(ErrorCode::ConfigError, "pipeline.datasets: " + d.root.string() + " has no grade table");
        ingest(d.root, d.kind, data::GradeTable::read(d.grades));
    }
    if (manifests.empty()) fail(ErrorCode::ConfigError, "pipeline: no datasets configured");

    auto manifest = data::build_splits(manifests, p.seed, {.test_per_class = p.test_per_class});
    if (p.preprocess) {
        auto result = data::preprocess_manifest(manifest, ctx.out / "images");
        for (const auto& w : result.warnings) ctx.log << "warning: " << w << '\n';
        manifest = std::move(result.manifest);
    }
    manifest.write(ctx.out / "manifest.csv");
    for (Label l : kLabels) {
        ctx.log << to_string(l) << ": train " << manifest.counts.at(l, data::Split::Train) << ", test "
                << manifest.counts.at(l, data::Split::Test) << '\n';
    }
    ctx.log << "manifest hash " << hex64(fnv1a(manifest.to_csv())) << '\n';
}

void cmd_train_gan(Context& ctx) {
    const auto& g = ctx.cfg.gan;
    const auto manifest = read_manifest(ctx, g.manifest);
    const auto train = data::load_split(manifest, data::Split::Train, g.image_size);
    for (auto v : variants_of(g)) {
        auto spec = gan::GanSpec::for_variant(v, g.image_size);
        spec.latent_dim = g.latent_dim;
        spec.width = g.width;
        const auto dir = ctx.out / std::string(gan::to_string(v));
        const auto report = [&](const gan::TrainResult& r, const std::string& tag) {
            const auto& rows = r.history.rows;
            ctx.log << tag << ": " << rows.size() << " generator steps";
            if (!rows.empty()) ctx.log << ", loss_d " << rows.back().loss_d << ", loss_g " << rows.back().loss_g;
            ctx.log << '\n';
        };
        if (spec.conditional || !g.per_label) {
            report(gan::train_gan(spec, train, g.train, {.out_dir = dir, .on_step = {}}), std::string(gan::to_string(v)));
            continue;
        }
        for (Label l : kLabels) {
            const auto subset = only_label(train, l);
            report(gan::train_gan(spec, subset, g.train, {.out_dir = dir / std::string(to_string(l)), .on_step = {}}),
                   std::string(gan::to_string(v)) + "/" + std::string(to_string(l)));
        }
    }
}

void cmd_train_style_toy(Context& ctx) {
    const auto& s = ctx.cfg.style;
    const auto manifest = read_manifest(ctx, s.manifest);
    const auto r = style::train_style_toy(s.config, manifest, s.epochs, s.seed, ctx.out);
    ctx.log << "style: " << r.history.rows.size() << " steps, final p_aug "
            << (r.history.rows.empty() ? 0.0 : r.history.rows.back().p_aug) << '\n';
}

void cmd_export_style_config(Context& ctx) {
    const auto& s = ctx.cfg.style;
    const auto manifest = read_manifest(ctx, s.manifest);
    const auto plan = style::export_external_config(s.config, manifest, ctx.out, s.trainer_dir);
    std::ofstream sh(ctx.out / "train.sh");
    for (std::size_t i = 0; i < plan.command.size(); ++i) sh << (i ? " " : "") << plan.command[i];
    sh << '\n';
    ctx.log << "descriptor " << plan.descriptor_path.string() << '\n';
}

void cmd_gen(Context& ctx) {
    const auto& g = ctx.cfg.gen;
    if (g.checkpoint.empty()) fail(ErrorCode::ConfigError, "gen.checkpoint is required");
    const std::optional<Label> label = g.label.empty() ? std::nullopt : std::optional(parse_label(g.label));

    std::function<torch::Tensor(std::optional<Label>, std::uint64_t)> sample;
    bool conditional = false;
    if (g.kind == "gan") {
        auto ckpt = std::make_shared<gan::GanCheckpoint>(gan::GanCheckpoint::load(g.checkpoint));
        conditional = ckpt->spec.conditional;
        sample = [ckpt, &g](std::optional<Label> l, std::uint64_t seed) {
            return gan::generate(*ckpt, g.count, l, seed).images;
        };
    } else {
        auto ckpt = std::make_shared<style::StyleCheckpoint>(style::StyleCheckpoint::load(g.checkpoint));
        conditional = ckpt->cfg.conditional;
        sample = [ckpt, &g](std::optional<Label> l, std::uint64_t seed) {
            return style::generate_style(*ckpt, g.count, l, seed);
        };
    }

    if (!conditional) {
        // An unconditional checkpoint was trained on one class; the label only names the folder.
        write_generated(sample(std::nullopt, g.seed), ctx.out / (label ? std::string(to_string(*label)) : "ALL"));
    } else if (label) {
        write_generated(sample(label, g.seed), ctx.out / std::string(to_string(*label)));
    } else {
        for (Label l : kLabels) {
            write_generated(sample(l, g.seed + static_cast<std::uint64_t>(index_of(l))),
                            ctx.out / std::string(to_string(l)));
        }
    }
    ctx.log << "wrote images under " << ctx.out.string() << '\n';
}

void cmd_fid(Context& ctx) {
    const auto& f = ctx.cfg.fid;
    if (f.set_a.empty() || f.set_b.empty()) fail(ErrorCode::ConfigError, "fid.set_a and fid.set_b are required");
    auto extractor_path = f.extractor;
    if (extractor_path.empty()) {
        extractor_path = ctx.out / "extractor.pt";
        fid::make_native_extractor(extractor_path, f.native_dim, f.native_input, f.native_seed, f.native_width);
    }
    const auto fx = fid::FeatureExtractor::load(extractor_path);
    const auto load = [&](const fs::path& dir) {
        auto paths = images_below(dir);
        if (f.samples > 0 && static_cast<std::int64_t>(paths.size()) > f.samples) {
            paths.resize(static_cast<std::size_t>(f.samples));
        }
        return image::load_batch(paths, fx.info().input_size);
    };
    const auto result = fid::fid(load(f.set_a), load(f.set_b), fx);
    for (const auto& w : result.warnings) ctx.log << "warning: " << w << '\n';
    write_json(ctx.out / "fid.json", result);
    ctx.log << "FID " << fixed(result.value, 6) << '\n';
}

void cmd_train_clf(Context& ctx) {
    const auto& k = ctx.cfg.classifier;
    k.spec.validate();
    const auto manifest = read_manifest(ctx, k.manifest);
    const auto synth = synth_source(ctx, k.mixing);
    auto trained = clf::train_classifier(k.spec, manifest, k.mixing, synth.get());
    trained.history.write_csv(ctx.out / "history.csv");
    json extra = {{"mixing", k.mixing}};
    const auto test = data::load_split(manifest, data::Split::Test, k.spec.input_size);
    if (test.size() > 0) {
        const auto metrics = clf::evaluate(trained.model, test, k.spec.input_size);
        write_json(ctx.out / "metrics.json", metrics);
        extra["metrics"] = metrics;
        ctx.log << "test acc " << fixed(metrics.acc, 4) << ", sensitivity " << fixed(metrics.sensitivity, 4)
                << ", specificity " << fixed(metrics.specificity, 4) << '\n';
    } else {
        ctx.log << "warning: TEST split is empty; no metrics written\n";
    }
    clf::save_classifier(trained.model, k.spec, ctx.out / "model.pt", extra);
}

void cmd_sweep(Context& ctx) {
    const auto& k = ctx.cfg.classifier;
    const auto manifest = read_manifest(ctx, k.manifest);
    const auto train = data::load_split(manifest, data::Split::Train, k.spec.input_size);
    const auto test = data::load_split(manifest, data::Split::Test, k.spec.input_size);
    const auto synth = synth_source(ctx, k.mixing);
    const auto grid = k.p_grid.empty() ? clf::default_p_grid() : k.p_grid;
    auto archs = k.archs;
    if (archs.empty()) archs.assign(clf::kAllArchs.begin(), clf::kAllArchs.end());

    std::vector<clf::SweepRow> rows;
    for (auto arch : archs) {
        auto spec = k.spec;
        spec.arch = arch;
        spec.validate();
        const auto part = clf::sweep_p(spec, train, test, grid, k.seeds, synth.get(), [&](const clf::SweepRow& r) {
            ctx.log << clf::to_string(r.arch) << " p=" << fixed(r.p, 2) << " seed=" << r.seed << " acc "
                    << fixed(r.metrics.acc, 4) << '\n';
        });
        rows.insert(rows.end(), part.begin(), part.end());
    }
    clf::write_sweep_csv(ctx.out / "sweep.csv", rows);
    std::vector<csv::Row> best;
    for (const auto& b : clf::best_p(rows)) {
        best.push_back({std::string(clf::to_string(b.arch)), fixed(b.p, 2), fixed(b.mean_acc, 6), fixed(b.sd_acc, 6),
                        std::to_string(b.seeds)});
    }
    csv::write(ctx.out / "best.csv", {"arch", "p", "mean_acc", "sd_acc", "seeds"}, best);
}

void cmd_gradcam(Context& ctx) {
    const auto& g = ctx.cfg.gradcam;
    if (g.image.empty()) fail(ErrorCode::ConfigError, "gradcam.image is required");
    auto loaded = clf::load_classifier(or_default(g.model, ctx.sibling("train-clf") / "model.pt"));
    const int size = loaded.spec.input_size;
    const auto bgr = image::read(g.image);
    const auto layer = g.layer.empty() ? loaded.model->default_layer() : g.layer;
    const auto heat = explain::gradcam(loaded.model, image::to_tensor(bgr, size), parse_label(g.target_class), layer);
    explain::write_npy(ctx.out / "heatmap.npy", heat.values);
    image::write_png(ctx.out / "overlay.png", explain::overlay(image::resize(bgr, size, size), heat, g.alpha));
    ctx.log << "grad-cam on " << layer << " for " << g.target_class << '\n';
}

study::StudyPools study_pools(const Context& ctx) {
    const auto& s = ctx.cfg.study;
    auto pools = study::StudyPools::from_manifest(read_manifest(ctx, s.manifest), data::parse_split(s.split));
    const auto synth = or_default(s.synthetic_dir, ctx.sibling("gen"));
    if (fs::is_directory(synth)) pools.add_synthetic_dir(synth);
    return pools;
}

study::StudyServer* g_server = nullptr;

void cmd_serve_study(Context& ctx) {
    const auto& s = ctx.cfg.study;
    study::StudyStore store(or_default(s.store, ctx.out / "store"));
    study::StudyServer server(store, study_pools(ctx), {.host = s.host, .port = s.port, .image_size = s.image_size});
    const int port = server.bind();
    ctx.log << "serving on http://" << s.host << ":" << port << std::endl;
    g_server = &server;
    const auto stop = [](int) {
        if (g_server != nullptr) g_server->stop();
    };
    std::signal(SIGINT, stop);
    std::signal(SIGTERM, stop);
    server.serve();
    g_server = nullptr;
}

void cmd_report(Context& ctx) {
    const auto& r = ctx.cfg.report;
    const auto two = [](double v) { return fixed(clf::round_to(v, 2), 2); };

    auto fids = r.fid;
    auto classifiers = r.classifiers;
    if (fids.empty() && fs::exists(ctx.sibling("fid") / "fid.json")) fids.push_back({"fid", ctx.sibling("fid") / "fid.json"});
    if (classifiers.empty() && fs::exists(ctx.sibling("train-clf") / "metrics.json")) {
        classifiers.push_back({"classifier", ctx.sibling("train-clf") / "metrics.json"});
    }

    std::vector<csv::Row> t1;
    for (const auto& f : fids) t1.push_back({f.name, two(read_json(f.path).at("value").get<double>())});
    csv::write(ctx.out / "fid.csv", {"model", "fid"}, t1);

    std::vector<csv::Row> t4;
    for (const auto& c : classifiers) {
        const auto m = read_json(c.path);
        for (const char* cls : {"AMD", "NON_AMD"}) {
            const auto& s = m.at(cls);
            t4.push_back({c.name, cls, two(s.at("precision").get<double>()), two(s.at("recall").get<double>()),
                          two(s.at("f1").get<double>()), two(m.at("acc").get<double>())});
        }
    }
    csv::write(ctx.out / "classifier.csv", {"model", "class", "precision", "recall", "f1", "accuracy"}, t4);

    std::vector<csv::Row> t2, t5;
    const auto add = [&](const std::string& name, const json& rep) {
        csv::Row row{name, rep.at("kind").get<std::string>(), two(rep.at("acc").get<double>()),
                     two(rep.at("sensitivity").get<double>()), two(rep.at("specificity").get<double>())};
        (row[1] == "DIAGNOSIS" ? t5 : t2).push_back(row);
    };
    std::unique_ptr<clf::LoadedClassifier> model;
    if (!r.model.empty()) model = std::make_unique<clf::LoadedClassifier>(clf::load_classifier(r.model));
    for (const auto& s : r.studies) {
        if (fs::is_directory(s.path)) {
            study::StudyStore store(s.path);
            for (const auto& id : store.session_ids()) {
                const auto session = store.session(id);
                if (session.state != study::SessionState::Complete) continue;
                const auto name = s.name + "/" + session.reader_id;
                if (model && session.kind == study::SessionKind::Diagnosis) {
                    const auto paired = store.compare_with_model(id, model->model, model->spec.input_size);
                    add(name, paired.human);
                    add(s.name + "/model", paired.model);
                } else {
                    add(name, store.report(id));
                }
            }
            continue;
        }
        const auto rep = read_json(s.path);
        if (rep.contains("human")) {
            add(s.name + "/human", rep.at("human"));
            add(s.name + "/model", rep.at("model"));
        } else {
            add(s.name, rep);
        }
    }
    const csv::Row header{"reader", "kind", "acc", "sensitivity", "specificity"};
    csv::write(ctx.out / "turing.csv", header, t2);
    csv::write(ctx.out / "comparison.csv", header, t5);
    ctx.log << "tables written to " << ctx.out.string() << '\n';
}

struct CommandInfo {
    const char* name;
    const char* help;
    void (*fn)(Context&);
    bool restartable;  // DONE marker and no-op reruns
};

constexpr CommandInfo kCommands[] = {
    {"prep", "ingest datasets, build splits, preprocess", cmd_prep, true},
    {"train-gan", "train the GAN variants", cmd_train_gan, true},
    {"train-style-toy", "train the small style-based generator", cmd_train_style_toy, true},
    {"export-style-config", "write the external StyleGAN2-ADA run", cmd_export_style_config, true},
    {"gen", "sample images from a checkpoint", cmd_gen, true},
    {"fid", "FID between two image directories", cmd_fid, true},
    {"train-clf", "train and evaluate one classifier", cmd_train_clf, true},
    {"sweep", "mixing-probability sweep", cmd_sweep, true},
    {"gradcam", "Grad-CAM heatmap for one image", cmd_gradcam, true},
    {"serve-study", "run the reader-study HTTP service", cmd_serve_study, false},
    {"report", "render result tables", cmd_report, true},
};

int execute(const CommandInfo& command, const fs::path& config_path, const std::vector<std::string>& overrides,
            bool force, std::ostream& out) {
    Context ctx{RunConfig::load(config_path, overrides), {}, {}, out};
    const char* env = std::getenv("FGB_OUT");
    const fs::path root = env != nullptr && *env != '\0' ? fs::path(env) : ctx.cfg.output_root;
    ctx.run_dir = root / ctx.cfg.hash();
    ctx.out = ctx.run_dir / command.name;

    if (command.restartable && fs::exists(ctx.out / "DONE") && !force) {
        out << command.name << ": up to date in " << ctx.out.string() << '\n';
        return kExitOk;
    }
    if (force) fs::remove_all(ctx.out);
    fs::create_directories(ctx.out);
    write_json(ctx.out / "config.json", ctx.cfg.to_json());
    command.fn(ctx);
    if (command.restartable) std::ofstream(ctx.out / "DONE") << ctx.cfg.hash() << '\n';
    out << command.name << ": done in " << ctx.out.string() << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"fundus GAN benchmark"};
    app.require_subcommand(1);
    fs::path config_path;
    std::vector<std::string> overrides;
    bool force = false;
    const CommandInfo* chosen = nullptr;
    for (const auto& c : kCommands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("config", config_path, "run config (JSON)")->required();
        sub->add_option("--set", overrides, "override a config key: section.key=value");
        sub->add_flag("--force", force, "rerun even when DONE");
        sub->callback([&chosen, &c] { chosen = &c; });
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kExitConfig;
    }

    try {
        return execute(*chosen, config_path, overrides, force, out);
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return e.code() == ErrorCode::ConfigError ? kExitConfig : kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace fgb::cli
