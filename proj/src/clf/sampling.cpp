#include "fgb/clf/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "fgb/error.hpp"

namespace fgb::clf {

namespace F = torch::nn::functional;

namespace {

torch::Tensor fit(const torch::Tensor& images, std::int64_t h, std::int64_t w) {
    if (images.size(2) == h && images.size(3) == w) return images;
    return F::interpolate(images, F::InterpolateFuncOptions()
                                      .size(std::vector<std::int64_t>{h, w})
                                      .mode(torch::kBilinear)
                                      .align_corners(false))
        .clamp(-1.0, 1.0);
}

template <typename Ckpt>
const Ckpt& pick(const std::vector<Ckpt>& ckpts, Label label) {
    return ckpts.size() == 1 ? ckpts.front() : ckpts[static_cast<std::size_t>(index_of(label))];
}

torch::Tensor gray(const torch::Tensor& x) {
    return (0.299 * x[0] + 0.587 * x[1] + 0.114 * x[2]).unsqueeze(0);
}

}  // namespace

GanSynthSource::GanSynthSource(gan::GanCheckpoint conditional) {
    if (!conditional.spec.conditional) {
        fail(ErrorCode::UsageError, "an unconditional generator cannot serve both labels");
    }
    ckpts_.push_back(std::move(conditional));
}

GanSynthSource::GanSynthSource(gan::GanCheckpoint amd, gan::GanCheckpoint non_amd) {
    if (amd.spec.conditional || non_amd.spec.conditional) {
        fail(ErrorCode::UsageError, "per-label sources must be unconditional generators");
    }
    ckpts_.push_back(std::move(amd));
    ckpts_.push_back(std::move(non_amd));
}

torch::Tensor GanSynthSource::sample(Label label, std::int64_t n, Rng& rng) {
    const auto& ckpt = pick(ckpts_, label);
    const auto want = ckpt.spec.conditional ? std::optional<Label>(label) : std::nullopt;
    return gan::generate(ckpt, n, want, rng.next()).images;
}

std::string GanSynthSource::describe() const {
    return std::string(gan::to_string(ckpts_.front().spec.variant)) +
           (ckpts_.size() == 1 ? " (conditional)" : " (per label)");
}

StyleSynthSource::StyleSynthSource(style::StyleCheckpoint conditional) {
    if (!conditional.cfg.conditional) fail(ErrorCode::UsageError, "an unconditional generator cannot serve both labels");
    ckpts_.push_back(std::move(conditional));
}

StyleSynthSource::StyleSynthSource(style::StyleCheckpoint amd, style::StyleCheckpoint non_amd) {
    if (amd.cfg.conditional || non_amd.cfg.conditional) {
        fail(ErrorCode::UsageError, "per-label sources must be unconditional generators");
    }
    ckpts_.push_back(std::move(amd));
    ckpts_.push_back(std::move(non_amd));
}

torch::Tensor StyleSynthSource::sample(Label label, std::int64_t n, Rng& rng) {
    const auto& ckpt = pick(ckpts_, label);
    const auto want = ckpt.cfg.conditional ? std::optional<Label>(label) : std::nullopt;
    return style::generate_style(ckpt, n, want, rng.next());
}

std::string StyleSynthSource::describe() const {
    return ckpts_.size() == 1 ? "STYLE (conditional)" : "STYLE (per label)";
}

PooledSynthSource::PooledSynthSource(torch::Tensor amd_pool, torch::Tensor non_amd_pool)
    : pools_{std::move(amd_pool), std::move(non_amd_pool)} {
    for (const auto& p : pools_) {
        if (!p.defined() || p.dim() != 4 || p.size(0) == 0) {
            fail(ErrorCode::InsufficientPool, "synthetic pool must hold at least one image per label");
        }
    }
}

PooledSynthSource PooledSynthSource::from(SynthSource& source, std::int64_t per_label, Rng& rng) {
    return {source.sample(Label::Amd, per_label, rng), source.sample(Label::NonAmd, per_label, rng)};
}

torch::Tensor PooledSynthSource::sample(Label label, std::int64_t n, Rng& rng) {
    const auto& pool = pools_[static_cast<std::size_t>(index_of(label))];
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
    for (auto& i : idx) i = static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(pool.size(0))));
    return pool.index_select(0, torch::tensor(idx, torch::kInt64));
}

std::string PooledSynthSource::describe() const {
    return "pool(" + std::to_string(pools_[0].size(0)) + "+" + std::to_string(pools_[1].size(0)) + ")";
}

void MixingConfig::validate() const {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::ConfigError, "mixing.p must lie in [0,1]");
    if (pooled && pool_size < 1) fail(ErrorCode::ConfigError, "mixing.pool_size must be >= 1");
}

void to_json(nlohmann::json& j, const MixingConfig& m) {
    j = {{"p", m.p}, {"seed", m.seed}, {"synth_source", m.synth_source}, {"pooled", m.pooled},
         {"pool_size", m.pool_size}};
}

void from_json(const nlohmann::json& j, MixingConfig& m) {
    MixingConfig d;
    m.p = j.value("p", d.p);
    m.seed = j.value("seed", d.seed);
    m.synth_source = j.value("synth_source", d.synth_source);
    m.pooled = j.value("pooled", d.pooled);
    m.pool_size = j.value("pool_size", d.pool_size);
}

std::int64_t MixResult::replaced_count() const {
    return std::count(replaced.begin(), replaced.end(), true);
}

MixResult mix_batch(const torch::Tensor& images, const torch::Tensor& labels, double p, SynthSource* source,
                    Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::UsageError, "mixing probability must lie in [0,1]");
    const auto n = images.size(0);
    MixResult out{images.clone(), labels.clone(), std::vector<bool>(static_cast<std::size_t>(n), false)};
    std::array<std::vector<std::int64_t>, 2> slots;
    const auto lab = labels.to(torch::kInt64).contiguous();
    const auto* lp = lab.data_ptr<std::int64_t>();
    for (std::int64_t i = 0; i < n; ++i) {
        const double x = rng.uniform01();
        if (p > x) {
            out.replaced[static_cast<std::size_t>(i)] = true;
            slots[static_cast<std::size_t>(lp[i])].push_back(i);
        }
    }
    if (slots[0].empty() && slots[1].empty()) return out;
    if (source == nullptr) fail(ErrorCode::UsageError, "mixing with p > 0 needs a synthetic source");
    for (int l = 0; l < 2; ++l) {
        if (slots[l].empty()) continue;
        torch::Tensor synth;
        try {
            synth = source->sample(label_from_index(l), static_cast<std::int64_t>(slots[l].size()), rng);
        } catch (const Error& e) {
            fail(e.code(), "batch aborted: synthetic " + std::string(to_string(label_from_index(l))) +
                               " generation failed (" + source->describe() + "): " + e.what());
        } catch (const c10::Error& e) {
            fail(ErrorCode::NumericalError, "batch aborted: synthetic generation failed (" + source->describe() +
                                                "): " + e.what_without_backtrace());
        }
        synth = fit(synth.detach().to(images.dtype()), images.size(2), images.size(3));
        out.images.index_copy_(0, torch::tensor(slots[l], torch::kInt64), synth);
    }
    return out;
}

std::vector<double> sampler_weights(const std::vector<Label>& labels) {
    std::array<std::int64_t, 2> counts{};
    for (Label l : labels) ++counts[static_cast<std::size_t>(index_of(l))];
    if (counts[0] == 0 || counts[1] == 0) {
        fail(ErrorCode::DegenerateClassBalance, "weighted sampling needs both classes in TRAIN (counts " +
                                                    std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + ")");
    }
    std::vector<double> w;
    w.reserve(labels.size());
    for (Label l : labels) w.push_back(1.0 / static_cast<double>(counts[static_cast<std::size_t>(index_of(l))]));
    return w;
}

std::vector<double> sampler_weights(const data::DatasetManifest& manifest) {
    std::vector<Label> labels;
    for (const auto* r : manifest.in_split(data::Split::Train)) labels.push_back(r->label);
    return sampler_weights(labels);
}

WeightedSampler::WeightedSampler(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::UsageError, "sampler weights must be finite and >= 0");
        total += w;
        cumulative_.push_back(total);
    }
    if (!(total > 0.0)) fail(ErrorCode::DegenerateClassBalance, "sampler weights sum to zero");
}

std::int64_t WeightedSampler::draw(Rng& rng) const {
    const double u = rng.uniform01() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::int64_t>(it - cumulative_.begin(), static_cast<std::int64_t>(cumulative_.size()) - 1);
}

std::vector<std::int64_t> WeightedSampler::draw(std::int64_t n, Rng& rng) const {
    std::vector<std::int64_t> out(static_cast<std::size_t>(n));
    for (auto& i : out) i = draw(rng);
    return out;
}

ClassicAugmentOptions ClassicAugmentOptions::none() {
    ClassicAugmentOptions o;
    o.crop_scale = {1.0, 1.0};
    o.crop_ratio = {1.0, 1.0};
    o.brightness = o.contrast = o.saturation = 0.0;
    o.flip_prob = 0.0;
    return o;
}

ClassicAugmented classic_augment(const torch::Tensor& image, Rng& rng, const ClassicAugmentOptions& o) {
    const auto h = image.size(1);
    const auto w = image.size(2);

    // Crop geometry: area fraction and log-uniform aspect, as in the common
    // resized-crop recipe, falling back to the full frame.
    const double scale = rng.uniform(o.crop_scale[0], o.crop_scale[1]);
    const double log_ratio = rng.uniform(std::log(o.crop_ratio[0]), std::log(o.crop_ratio[1]));
    const double ratio = std::exp(log_ratio);
    const double area = scale * static_cast<double>(h * w);
    auto cw = static_cast<std::int64_t>(std::lround(std::sqrt(area * ratio)));
    auto ch = static_cast<std::int64_t>(std::lround(std::sqrt(area / ratio)));
    if (cw < 1 || ch < 1 || cw > w || ch > h) {
        cw = w;
        ch = h;
    }
    const auto top = static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(h - ch + 1)));
    const auto left = static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(w - cw + 1)));
    const double fb = 1.0 + rng.uniform(-o.brightness, o.brightness);
    const double fc = 1.0 + rng.uniform(-o.contrast, o.contrast);
    const double fs = 1.0 + rng.uniform(-o.saturation, o.saturation);
    const bool flip = rng.bernoulli(o.flip_prob);

    auto x = image.slice(1, top, top + ch).slice(2, left, left + cw);
    if (ch != h || cw != w) x = fit(x.unsqueeze(0), h, w).squeeze(0);
    // Color jitter in [0,1] space.
    if (fb != 1.0 || fc != 1.0 || fs != 1.0) {
        x = (x + 1) * 0.5;
        if (fb != 1.0) x = (x * fb).clamp(0.0, 1.0);
        if (fc != 1.0) x = (fc * x + (1 - fc) * gray(x).mean()).clamp(0.0, 1.0);
        if (fs != 1.0) x = (fs * x + (1 - fs) * gray(x)).clamp(0.0, 1.0);
        x = x * 2 - 1;
    }
    if (flip) x = x.flip({2});
    return {x.clamp(-1.0, 1.0), flip};
}

torch::Tensor classic_augment_batch(const torch::Tensor& images, Rng& rng, const ClassicAugmentOptions& options) {
    std::vector<torch::Tensor> out;
    out.reserve(static_cast<std::size_t>(images.size(0)));
    for (std::int64_t i = 0; i < images.size(0); ++i) out.push_back(classic_augment(images[i], rng, options).image);
    return torch::stack(out);
}

}  // namespace fgb::clf
