#include "fgb/style/ada.hpp"

#include <algorithm>
#include <cmath>

#include "fgb/error.hpp"

namespace fgb::style {

AdaState ada_update(AdaState state, std::span<const double> d_real_signs) {
    if (!d_real_signs.empty()) {
        double sum = 0.0;
        for (double s : d_real_signs) sum += s;
        const double beta = std::pow(0.5, 1.0 / state.half_life);
        state.r_estimate = beta * state.r_estimate + (1.0 - beta) * sum / static_cast<double>(d_real_signs.size());
    }
    const double gap = state.r_estimate - state.target;
    if (std::abs(gap) > 1e-12) {
        state.p_aug = std::clamp(state.p_aug + (gap > 0 ? state.step_size : -state.step_size), 0.0, 1.0);
    }
    return state;
}

std::int64_t AugmentResult::count(Aug a) const {
    std::int64_t n = 0;
    for (const auto& row : applied) n += row[static_cast<int>(a)];
    return n;
}

AugmentResult augment_pipeline(const torch::Tensor& images, double p_aug, Rng& rng, const AugmentOptions& options) {
    if (p_aug < 0.0 || p_aug > 1.0) fail(ErrorCode::UsageError, "p_aug must lie in [0,1]");
    AugmentResult out;
    const auto n = images.size(0);
    const auto h = images.size(2);
    const auto w = images.size(3);
    out.applied.resize(static_cast<std::size_t>(n));
    std::vector<torch::Tensor> items;
    items.reserve(static_cast<std::size_t>(n));
    const std::int64_t max_shift = std::max<std::int64_t>(1, std::min(h, w) / 8);
    for (std::int64_t i = 0; i < n; ++i) {
        auto x = images[i];
        auto& log = out.applied[static_cast<std::size_t>(i)];
        // Draws happen for every augmentation so the stream does not depend on
        // which ones are enabled.
        const bool rot = rng.bernoulli(p_aug);
        const auto quarter = 1 + static_cast<std::int64_t>(rng.index(3));
        const bool shift = rng.bernoulli(p_aug);
        const auto dx = static_cast<std::int64_t>(rng.index(2 * max_shift + 1)) - max_shift;
        const auto dy = static_cast<std::int64_t>(rng.index(2 * max_shift + 1)) - max_shift;
        const bool flip = rng.bernoulli(p_aug);
        const bool bright = rng.bernoulli(p_aug);
        const double delta = 0.2 * rng.normal();
        const bool contrast = rng.bernoulli(p_aug);
        const double factor = std::exp2(0.5 * rng.normal());

        if (options.rotate90 && rot && h == w) {
            x = torch::rot90(x, quarter, {1, 2});
            log[static_cast<int>(Aug::Rotate90)] = true;
        }
        if (options.translate && shift) {
            // Shift with black (-1) fill.
            const auto padded = torch::constant_pad_nd(x, {max_shift, max_shift, max_shift, max_shift}, -1.0);
            x = padded.slice(1, max_shift - dy, max_shift - dy + h).slice(2, max_shift - dx, max_shift - dx + w);
            log[static_cast<int>(Aug::Translate)] = true;
        }
        if (options.flip && flip) {
            x = torch::flip(x, {2});
            log[static_cast<int>(Aug::Flip)] = true;
        }
        if (options.brightness && bright) {
            x = x + delta;
            log[static_cast<int>(Aug::Brightness)] = true;
        }
        if (options.contrast && contrast) {
            const auto mean = x.mean();
            x = (x - mean) * factor + mean;
            log[static_cast<int>(Aug::Contrast)] = true;
        }
        items.push_back(x);
    }
    out.images = n == 0 ? images : torch::stack(items);
    return out;
}

}  // namespace fgb::style
