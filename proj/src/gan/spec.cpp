#include "fgb/gan/spec.hpp"

#include <string>

#include "fgb/error.hpp"

namespace fgb::gan {

namespace {

constexpr std::array<std::string_view, 9> kNames{"DCGAN", "LSGAN", "WGAN", "WGAN_GP", "DRAGAN",
                                                 "EBGAN", "BEGAN", "CGAN", "ACGAN"};

void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::ConfigError, what);
}

}  // namespace

std::string_view to_string(Variant v) noexcept { return kNames[static_cast<std::size_t>(v)]; }

Variant parse_variant(std::string_view text) {
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == text) return static_cast<Variant>(i);
    }
    fail(ErrorCode::ConfigError, "unknown GAN variant '" + std::string(text) + "'");
}

GanSpec GanSpec::for_variant(Variant v, int image_size) {
    GanSpec s;
    s.variant = v;
    s.image_size = image_size;
    s.conditional = is_conditional(v);
    return s;
}

void GanSpec::validate() const {
    require(latent_dim >= 1, "gan.latent_dim must be >= 1");
    require(image_size >= 16, "gan.image_size must be >= 16");
    require(class_count >= 2, "gan.class_count must be >= 2");
    require(width >= 1, "gan.width must be >= 1");
    require(conditional == is_conditional(variant),
            std::string("gan.conditional must be ") + (is_conditional(variant) ? "true" : "false") + " for " +
                std::string(to_string(variant)));
}

void TrainConfig::validate() const {
    require(epochs >= 0, "train.epochs must be >= 0");
    require(batch_size >= 1, "train.batch_size must be >= 1");
    require(n_critic >= 1, "train.n_critic must be >= 1");
    for (const auto& [name, v] : {std::pair{"lr", lr}, {"adam_beta1", adam_beta1}, {"adam_beta2", adam_beta2},
                                  {"lambda_gp", lambda_gp}, {"clip_c", clip_c}, {"margin_m", margin_m},
                                  {"gamma", gamma}, {"lambda_k", lambda_k}, {"k0", k0}}) {
        require(v >= 0.0, std::string("train.") + name + " must be >= 0");
    }
    require(adam_beta1 < 1.0 && adam_beta2 < 1.0, "train.adam betas must be < 1");
    require(k0 <= 1.0, "train.k0 must lie in [0,1]");
}

void to_json(nlohmann::json& j, const GanSpec& s) {
    j = {{"variant", to_string(s.variant)}, {"latent_dim", s.latent_dim}, {"image_size", s.image_size},
         {"conditional", s.conditional},    {"class_count", s.class_count}, {"width", s.width}};
}

void from_json(const nlohmann::json& j, GanSpec& s) {
    s.variant = parse_variant(j.at("variant").get<std::string>());
    s.latent_dim = j.value("latent_dim", 100);
    s.image_size = j.value("image_size", 100);
    s.conditional = j.value("conditional", is_conditional(s.variant));
    s.class_count = j.value("class_count", 2);
    s.width = j.value("width", 64);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"epochs", c.epochs},         {"batch_size", c.batch_size}, {"lr", c.lr},
         {"adam_beta1", c.adam_beta1}, {"adam_beta2", c.adam_beta2}, {"lambda_gp", c.lambda_gp},
         {"clip_c", c.clip_c},         {"margin_m", c.margin_m},     {"gamma", c.gamma},
         {"lambda_k", c.lambda_k},     {"k0", c.k0},                 {"n_critic", c.n_critic},
         {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    const TrainConfig d;
    c.epochs = j.value("epochs", d.epochs);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.lr = j.value("lr", d.lr);
    c.adam_beta1 = j.value("adam_beta1", d.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", d.adam_beta2);
    c.lambda_gp = j.value("lambda_gp", d.lambda_gp);
    c.clip_c = j.value("clip_c", d.clip_c);
    c.margin_m = j.value("margin_m", d.margin_m);
    c.gamma = j.value("gamma", d.gamma);
    c.lambda_k = j.value("lambda_k", d.lambda_k);
    c.k0 = j.value("k0", d.k0);
    c.n_critic = j.value("n_critic", d.n_critic);
    c.seed = j.value("seed", d.seed);
}

}  // namespace fgb::gan
