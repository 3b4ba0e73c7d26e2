#pragma once

#include <functional>

#include <torch/torch.h>

namespace fgb::gan {

// Maps a batch [N,...] to per-sample scores of shape [N] or [N,1].
using Critic = std::function<torch::Tensor(const torch::Tensor&)>;

enum class PenaltyMode {
    Interpolate,  // x_hat = eps * x_real + (1 - eps) * x_fake, eps ~ U[0,1] per sample
    PerturbReal,  // x_hat = x_real + 0.5 * std(x_real) * u, u ~ U[0,1] per element
};

torch::Tensor penalty_points(const torch::Tensor& x_real, const torch::Tensor& x_fake, PenaltyMode mode,
                             at::Generator& gen);

/// lambda * mean_i (||grad critic(x_hat_i)||_2 - 1)^2, differentiable with
/// respect to the critic's parameters.
torch::Tensor gradient_penalty_at(const Critic& critic, const torch::Tensor& x_hat, double lambda_gp);

torch::Tensor gradient_penalty(const Critic& critic, const torch::Tensor& x_real, const torch::Tensor& x_fake,
                               PenaltyMode mode, double lambda_gp, at::Generator& gen);

}  // namespace fgb::gan
