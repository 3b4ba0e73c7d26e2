#include "fgb/style/config.hpp"

#include <algorithm>
#include <string>

#include "fgb/error.hpp"

namespace fgb::style {

namespace {

bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::ConfigError, what);
}

}  // namespace

int StyleConfig::levels() const {
    int n = 0;
    for (int r = base_resolution; r <= max_resolution; r *= 2) ++n;
    return n;
}

std::vector<int> StyleConfig::resolved_channels() const {
    if (!channels.empty()) return channels;
    std::vector<int> out;
    for (int r = base_resolution; r <= max_resolution; r *= 2) out.push_back(std::clamp(1024 / r, 16, 128));
    return out;
}

void StyleConfig::validate() const {
    require(z_dim >= 1 && w_dim >= 1, "style.z_dim and style.w_dim must be >= 1");
    require(mapping_layers >= 1, "style.mapping_layers must be >= 1");
    require(power_of_two(base_resolution), "style.base_resolution must be a power of two");
    require(power_of_two(max_resolution) && max_resolution >= base_resolution,
            "style.max_resolution must be a power of two >= base_resolution");
    require(channels.empty() || static_cast<int>(channels.size()) == levels(),
            "style.channels needs one entry per resolution");
    for (int c : channels) require(c >= 1, "style.channels entries must be >= 1");
    require(ada_target > 0.0 && ada_target < 1.0, "style.ada_target must lie in (0,1)");
    require(ada_step >= 0.0 && ada_half_life > 0.0, "style.ada_step >= 0 and ada_half_life > 0 required");
    require(r1_gamma >= 0.0, "style.r1_gamma must be >= 0");
    require(batch_size >= 1 && lr > 0.0 && adam_eps > 0.0, "style optimizer settings must be positive");
    require(adam_betas[0] >= 0.0 && adam_betas[0] < 1.0 && adam_betas[1] >= 0.0 && adam_betas[1] < 1.0,
            "style.adam_betas must lie in [0,1)");
    require(class_count >= 2, "style.class_count must be >= 2");
}

void to_json(nlohmann::json& j, const StyleConfig& c) {
    j = {{"z_dim", c.z_dim},
         {"w_dim", c.w_dim},
         {"mapping_layers", c.mapping_layers},
         {"base_resolution", c.base_resolution},
         {"max_resolution", c.max_resolution},
         {"channels", c.channels},
         {"conditional", c.conditional},
         {"class_count", c.class_count},
         {"ada_target", c.ada_target},
         {"ada_step", c.ada_step},
         {"ada_half_life", c.ada_half_life},
         {"r1_gamma", c.r1_gamma},
         {"batch_size", c.batch_size},
         {"lr", c.lr},
         {"adam_betas", c.adam_betas},
         {"adam_eps", c.adam_eps}};
}

void from_json(const nlohmann::json& j, StyleConfig& c) {
    const StyleConfig d;
    c.z_dim = j.value("z_dim", d.z_dim);
    c.w_dim = j.value("w_dim", d.w_dim);
    c.mapping_layers = j.value("mapping_layers", d.mapping_layers);
    c.base_resolution = j.value("base_resolution", d.base_resolution);
    c.max_resolution = j.value("max_resolution", d.max_resolution);
    c.channels = j.value("channels", d.channels);
    c.conditional = j.value("conditional", d.conditional);
    c.class_count = j.value("class_count", d.class_count);
    c.ada_target = j.value("ada_target", d.ada_target);
    c.ada_step = j.value("ada_step", d.ada_step);
    c.ada_half_life = j.value("ada_half_life", d.ada_half_life);
    c.r1_gamma = j.value("r1_gamma", d.r1_gamma);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.lr = j.value("lr", d.lr);
    c.adam_betas = j.value("adam_betas", d.adam_betas);
    c.adam_eps = j.value("adam_eps", d.adam_eps);
}

}  // namespace fgb::style
