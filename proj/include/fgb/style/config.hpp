#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

namespace fgb::style {

// Defaults are the toy model's architecture with the external run's
// optimizer and ADA settings.
struct StyleConfig {
    int z_dim = 64;
    int w_dim = 64;
    int mapping_layers = 8;
    int base_resolution = 4;
    int max_resolution = 32;
    std::vector<int> channels;  // one per resolution from base to max; empty = derived
    bool conditional = false;
    int class_count = 2;

    double ada_target = 0.8;
    double ada_step = 0.005;
    double ada_half_life = 500.0;  // discriminator steps
    double r1_gamma = 1.0;

    int batch_size = 12;
    double lr = 0.0025;
    std::array<double, 2> adam_betas{0.0, 0.99};
    double adam_eps = 1e-8;

    int levels() const;  // number of resolutions, base..max inclusive
    std::vector<int> resolved_channels() const;
    void validate() const;

    bool operator==(const StyleConfig&) const = default;
};

void to_json(nlohmann::json& j, const StyleConfig& c);
void from_json(const nlohmann::json& j, StyleConfig& c);

}  // namespace fgb::style
