#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include <nlohmann/json.hpp>

namespace fgb::gan {

enum class Variant { Dcgan, Lsgan, Wgan, WganGp, Dragan, Ebgan, Began, Cgan, Acgan };

inline constexpr std::array<Variant, 9> kAllVariants{Variant::Dcgan,  Variant::Lsgan, Variant::Wgan,
                                                     Variant::WganGp, Variant::Dragan, Variant::Ebgan,
                                                     Variant::Began,  Variant::Cgan,  Variant::Acgan};

std::string_view to_string(Variant v) noexcept;
Variant parse_variant(std::string_view text);

constexpr bool is_conditional(Variant v) noexcept { return v == Variant::Cgan || v == Variant::Acgan; }
constexpr bool is_wasserstein(Variant v) noexcept { return v == Variant::Wgan || v == Variant::WganGp; }
constexpr bool is_autoencoder(Variant v) noexcept { return v == Variant::Ebgan || v == Variant::Began; }
// Variants whose discriminator emits a probability through a sigmoid.
constexpr bool is_log_loss(Variant v) noexcept {
    return v == Variant::Dcgan || v == Variant::Cgan || v == Variant::Dragan || v == Variant::Acgan;
}

struct GanSpec {
    Variant variant = Variant::Dcgan;
    int latent_dim = 100;
    int image_size = 100;
    bool conditional = false;
    int class_count = 2;
    int width = 64;  // channels of the widest discriminator block / 4

    static GanSpec for_variant(Variant v, int image_size = 100);
    void validate() const;
};

struct TrainConfig {
    int epochs = 50;
    int batch_size = 32;
    double lr = 0.0002;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    double lambda_gp = 10.0;
    double clip_c = 0.01;
    double margin_m = 10.0;
    double gamma = 0.75;
    double lambda_k = 0.001;
    double k0 = 0.0;
    int n_critic = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

void to_json(nlohmann::json& j, const GanSpec& s);
void from_json(const nlohmann::json& j, GanSpec& s);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace fgb::gan
