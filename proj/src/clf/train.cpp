#include "fgb/clf/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

#include "fgb/csv.hpp"
#include "fgb/error.hpp"

namespace fgb::clf {

namespace F = torch::nn::functional;

namespace {

torch::Tensor at_size(const torch::Tensor& images, int size) {
    if (images.size(2) == size && images.size(3) == size) return images;
    return F::interpolate(images, F::InterpolateFuncOptions()
                                      .size(std::vector<std::int64_t>{size, size})
                                      .mode(torch::kBilinear)
                                      .align_corners(false));
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::vector<Label> labels_of(const torch::Tensor& labels) {
    std::vector<Label> out;
    const auto l = labels.to(torch::kInt64).contiguous();
    for (std::int64_t i = 0; i < l.numel(); ++i) out.push_back(label_from_index(static_cast<int>(l[i].item<std::int64_t>())));
    return out;
}

}  // namespace

void ClassifierHistory::write_csv(const std::filesystem::path& path) const {
    std::vector<csv::Row> out;
    for (const auto& r : rows) {
        out.push_back({std::to_string(r.epoch), fmt(r.loss), fmt(r.train_acc), std::to_string(r.images),
                       std::to_string(r.replaced), fmt(r.seconds)});
    }
    csv::write(path, {"epoch", "loss", "train_acc", "images", "replaced", "seconds"}, out);
}

TrainedClassifier train_classifier(const ClassifierSpec& spec, const data::LabeledImages& train, const MixingConfig& mix,
                                   SynthSource* synth, const std::set<std::string>& forbidden_ids,
                                   const ClassicAugmentOptions& augment) {
    spec.validate();
    mix.validate();
    torch::manual_seed(mix.seed);
    TrainedClassifier out{make_classifier(spec), spec, {}, {}};
    if (spec.epochs == 0) {
        out.model->eval();
        return out;
    }
    const auto n = train.size();
    if (n == 0) fail(ErrorCode::UsageError, "classifier training needs TRAIN images");
    for (const auto& id : train.ids) {
        if (forbidden_ids.count(id)) fail(ErrorCode::ManifestError, "TEST image " + id + " offered for training");
    }
    const WeightedSampler sampler(sampler_weights(labels_of(train.labels)));
    Rng sample_rng(mix.seed);
    Rng augment_rng(mix.seed + 1);
    Rng mix_rng(mix.seed + 2);
    torch::optim::SGD opt(out.model->parameters(), torch::optim::SGDOptions(spec.lr).momentum(spec.momentum));
    const auto batches = (n + spec.batch_size - 1) / spec.batch_size;

    for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        out.model->train();
        EpochRow row;
        row.epoch = epoch;
        double loss_sum = 0.0;
        std::int64_t correct = 0;
        for (std::int64_t b = 0; b < batches; ++b) {
            const auto idx = sampler.draw(spec.batch_size, sample_rng);
            for (auto i : idx) {
                const auto& id = train.ids[static_cast<std::size_t>(i)];
                if (forbidden_ids.count(id)) fail(ErrorCode::ManifestError, "TEST image " + id + " reached a batch");
                out.seen_ids.insert(id);
            }
            const auto sel = torch::tensor(idx, torch::kInt64);
            auto images = classic_augment_batch(train.images.index_select(0, sel), augment_rng, augment);
            const auto mixed = mix_batch(images, train.labels.index_select(0, sel), mix.p, synth, mix_rng);
            const auto logits = out.model->forward(at_size(mixed.images, spec.input_size));
            const auto loss = F::cross_entropy(logits, mixed.labels);
            opt.zero_grad();
            loss.backward();
            opt.step();
            const auto v = loss.item<double>();
            if (!std::isfinite(v)) fail(ErrorCode::NumericalError, "non-finite classifier loss in epoch " + std::to_string(epoch));
            loss_sum += v * static_cast<double>(idx.size());
            correct += logits.argmax(1).eq(mixed.labels).sum().item<std::int64_t>();
            row.images += static_cast<std::int64_t>(idx.size());
            row.replaced += mixed.replaced_count();
        }
        row.loss = loss_sum / static_cast<double>(row.images);
        row.train_acc = static_cast<double>(correct) / static_cast<double>(row.images);
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.history.rows.push_back(row);
    }
    out.model->eval();
    return out;
}

TrainedClassifier train_classifier(const ClassifierSpec& spec, const data::DatasetManifest& manifest,
                                   const MixingConfig& mix, SynthSource* synth) {
    std::set<std::string> test_ids;
    for (const auto* r : manifest.in_split(data::Split::Test)) test_ids.insert(r->id);
    return train_classifier(spec, data::load_split(manifest, data::Split::Train, spec.input_size), mix, synth,
                            test_ids);
}

ClassifierMetrics evaluate(Classifier& model, const data::LabeledImages& test, int input_size, int batch) {
    if (test.size() == 0) fail(ErrorCode::UsageError, "evaluation needs TEST images");
    torch::NoGradGuard guard;
    model->eval();
    std::array<std::array<std::int64_t, 2>, 2> confusion{};
    for (std::int64_t s = 0; s < test.size(); s += batch) {
        const auto e = std::min<std::int64_t>(s + batch, test.size());
        const auto pred = model->forward(at_size(test.images.slice(0, s, e), input_size)).argmax(1).contiguous();
        const auto truth = test.labels.slice(0, s, e).to(torch::kInt64).contiguous();
        for (std::int64_t i = 0; i < e - s; ++i) {
            ++confusion[static_cast<std::size_t>(truth[i].item<std::int64_t>())]
                       [static_cast<std::size_t>(pred[i].item<std::int64_t>())];
        }
    }
    return ClassifierMetrics::from_confusion(confusion);
}

std::vector<double> default_p_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
    return grid;
}

std::vector<SweepRow> sweep_p(const ClassifierSpec& spec, const data::LabeledImages& train,
                              const data::LabeledImages& test, const std::vector<double>& p_grid,
                              const std::vector<std::uint64_t>& seeds, SynthSource* synth,
                              const std::function<void(const SweepRow&)>& on_row, const ClassicAugmentOptions& augment) {
    std::set<std::string> test_ids(test.ids.begin(), test.ids.end());
    std::vector<SweepRow> rows;
    for (double p : p_grid) {
        for (auto seed : seeds) {
            MixingConfig mix;
            mix.p = p;
            mix.seed = seed;
            auto trained = train_classifier(spec, train, mix, synth, test_ids, augment);
            SweepRow row{spec.arch, p, seed, evaluate(trained.model, test, spec.input_size)};
            if (on_row) on_row(row);
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<SweepBest> best_p(const std::vector<SweepRow>& rows) {
    std::map<std::pair<int, double>, std::vector<double>> cells;
    for (const auto& r : rows) cells[{static_cast<int>(r.arch), r.p}].push_back(r.metrics.acc);
    std::map<int, SweepBest> best;
    for (const auto& [key, accs] : cells) {
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        const double sd = accs.size() > 1 ? std::sqrt(var / static_cast<double>(accs.size() - 1)) : 0.0;
        auto it = best.find(key.first);
        if (it == best.end() || mean > it->second.mean_acc) {
            best[key.first] = {static_cast<Arch>(key.first), key.second, mean, sd, static_cast<int>(accs.size())};
        }
    }
    std::vector<SweepBest> out;
    for (const auto& [_, b] : best) out.push_back(b);
    return out;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
    std::vector<csv::Row> out;
    for (const auto& r : rows) {
        out.push_back({std::string(to_string(r.arch)), fmt(r.p), std::to_string(r.seed), fmt(r.metrics.acc),
                       fmt(r.metrics.sensitivity), fmt(r.metrics.specificity)});
    }
    csv::write(path, {"arch", "p", "seed", "acc", "sensitivity", "specificity"}, out);
}

}  // namespace fgb::clf
