#pragma once

#include <torch/torch.h>

#include "fgb/gan/spec.hpp"

namespace fgb::gan {

// Discriminator outputs handed to a loss. Log-loss variants accept either
// probabilities (checked against the open unit interval) or logits, which
// are evaluated through log-sigmoid. Other variants read the raw values.
struct Scores {
    enum class Kind { Probability, Logit, Raw };

    torch::Tensor values;
    Kind kind = Kind::Raw;

    static Scores probabilities(torch::Tensor p) { return {std::move(p), Kind::Probability}; }
    static Scores logits(torch::Tensor l) { return {std::move(l), Kind::Logit}; }
    static Scores raw(torch::Tensor v) { return {std::move(v), Kind::Raw}; }
};

// Variant-specific extras.
struct LossAux {
    torch::Tensor ae_real;  // EBGAN / BEGAN: autoencoder reconstruction loss on real batch
    torch::Tensor ae_fake;  //                 ... and on generated batch
    double k = 0.0;         // BEGAN k_t
    double margin = 10.0;   // EBGAN m
    torch::Tensor class_logits_real;  // ACGAN auxiliary head
    torch::Tensor class_logits_fake;
    torch::Tensor labels_real;
    torch::Tensor labels_fake;
};

torch::Tensor discriminator_loss(Variant variant, const Scores& d_real, const Scores& d_fake, const LossAux& aux = {});
torch::Tensor generator_loss(Variant variant, const Scores& d_fake, const LossAux& aux = {});

struct BeganStep {
    double k_next;
    double convergence;  // M
};

BeganStep began_update_k(double k_t, double gamma, double lambda_k, double loss_real, double loss_fake);

}  // namespace fgb::gan
