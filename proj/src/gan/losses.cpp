#include "fgb/gan/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fgb/error.hpp"

namespace fgb::gan {

namespace F = torch::nn::functional;

namespace {

void require_batch(const torch::Tensor& t, const char* what) {
    if (!t.defined() || t.numel() == 0) fail(ErrorCode::UsageError, std::string(what) + " batch is empty");
}

// Mean of ln D and mean of ln(1 - D), from whichever representation was given.
torch::Tensor mean_log_d(const Scores& s) {
    switch (s.kind) {
        case Scores::Kind::Logit:
            return F::logsigmoid(s.values).mean();
        case Scores::Kind::Probability:
            return torch::log(s.values).mean();
        case Scores::Kind::Raw:
            break;
    }
    fail(ErrorCode::UsageError, "log-loss variants need probabilities or logits");
}

torch::Tensor mean_log_one_minus_d(const Scores& s) {
    switch (s.kind) {
        case Scores::Kind::Logit:
            return F::logsigmoid(-s.values).mean();
        case Scores::Kind::Probability:
            return torch::log1p(-s.values).mean();
        case Scores::Kind::Raw:
            break;
    }
    fail(ErrorCode::UsageError, "log-loss variants need probabilities or logits");
}

void check_probability_domain(const Scores& s) {
    if (s.kind != Scores::Kind::Probability) return;
    const auto v = s.values.detach();
    if (!torch::isfinite(v).all().item<bool>() || (v <= 0).any().item<bool>() || (v >= 1).any().item<bool>()) {
        fail(ErrorCode::DomainError, "discriminator probability outside (0,1)");
    }
}

torch::Tensor class_ce(const torch::Tensor& logits, const torch::Tensor& labels) {
    if (!logits.defined() || !labels.defined()) fail(ErrorCode::UsageError, "ACGAN loss needs class logits and labels");
    return F::cross_entropy(logits, labels);
}

torch::Tensor require_ae(const torch::Tensor& t, const char* what) {
    if (!t.defined()) fail(ErrorCode::UsageError, std::string(what) + " reconstruction loss missing");
    return t;
}

}  // namespace

torch::Tensor discriminator_loss(Variant variant, const Scores& d_real, const Scores& d_fake, const LossAux& aux) {
    if (is_autoencoder(variant)) {
        const auto real = require_ae(aux.ae_real, "real");
        const auto fake = require_ae(aux.ae_fake, "fake");
        if (variant == Variant::Ebgan) return real + torch::relu(aux.margin - fake);
        return real - aux.k * fake;
    }
    require_batch(d_real.values, "d_real");
    require_batch(d_fake.values, "d_fake");
    if (is_log_loss(variant)) {
        check_probability_domain(d_real);
        check_probability_domain(d_fake);
        auto loss = -mean_log_d(d_real) - mean_log_one_minus_d(d_fake);
        if (variant == Variant::Acgan) {
            loss = loss + class_ce(aux.class_logits_real, aux.labels_real) +
                   class_ce(aux.class_logits_fake, aux.labels_fake);
        }
        return loss;
    }
    if (variant == Variant::Lsgan) {
        return 0.5 * (d_real.values - 1).pow(2).mean() + 0.5 * d_fake.values.pow(2).mean();
    }
    // WGAN / WGAN-GP critic; the penalty is added by the caller.
    return -(d_real.values.mean() - d_fake.values.mean());
}

torch::Tensor generator_loss(Variant variant, const Scores& d_fake, const LossAux& aux) {
    if (is_autoencoder(variant)) return require_ae(aux.ae_fake, "fake");
    require_batch(d_fake.values, "d_fake");
    if (is_log_loss(variant)) {
        check_probability_domain(d_fake);
        auto loss = -mean_log_d(d_fake);
        if (variant == Variant::Acgan) loss = loss + class_ce(aux.class_logits_fake, aux.labels_fake);
        return loss;
    }
    if (variant == Variant::Lsgan) return 0.5 * (d_fake.values - 1).pow(2).mean();
    return -d_fake.values.mean();
}

BeganStep began_update_k(double k_t, double gamma, double lambda_k, double loss_real, double loss_fake) {
    const double balance = gamma * loss_real - loss_fake;
    return {std::clamp(k_t + lambda_k * balance, 0.0, 1.0), loss_real + std::abs(balance)};
}

}  // namespace fgb::gan
