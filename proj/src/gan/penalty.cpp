#include "fgb/gan/penalty.hpp"

#include "fgb/error.hpp"

namespace fgb::gan {

torch::Tensor penalty_points(const torch::Tensor& x_real, const torch::Tensor& x_fake, PenaltyMode mode,
                             at::Generator& gen) {
    const auto real = x_real.detach();
    if (mode == PenaltyMode::Interpolate) {
        if (x_fake.sizes() != x_real.sizes()) fail(ErrorCode::UsageError, "real and fake batches differ in shape");
        std::vector<std::int64_t> shape(real.dim(), 1);
        shape[0] = real.size(0);
        const auto eps = torch::rand(shape, gen, real.options());
        return eps * real + (1 - eps) * x_fake.detach();
    }
    const auto noise = torch::rand(real.sizes(), gen, real.options());
    return real + 0.5 * real.std() * noise;
}

torch::Tensor gradient_penalty_at(const Critic& critic, const torch::Tensor& x_hat, double lambda_gp) {
    auto x = x_hat.detach().requires_grad_(true);
    const auto out = critic(x);
    const auto grads = torch::autograd::grad({out.sum()}, {x}, /*grad_outputs=*/{}, /*retain_graph=*/true,
                                             /*create_graph=*/true)[0];
    if (!torch::isfinite(grads).all().item<bool>()) fail(ErrorCode::NumericalError, "non-finite critic gradient");
    const auto norms = grads.reshape({grads.size(0), -1}).norm(2, 1);
    return lambda_gp * (norms - 1).pow(2).mean();
}

torch::Tensor gradient_penalty(const Critic& critic, const torch::Tensor& x_real, const torch::Tensor& x_fake,
                               PenaltyMode mode, double lambda_gp, at::Generator& gen) {
    return gradient_penalty_at(critic, penalty_points(x_real, x_fake, mode, gen), lambda_gp);
}

}  // namespace fgb::gan
