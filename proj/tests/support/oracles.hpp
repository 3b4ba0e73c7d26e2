#pragma once

// Independent reference computations used by unit and acceptance tests.

#include <cmath>
#include <functional>
#include <vector>

#include <torch/torch.h>

namespace fgb::testing {

// Central finite-difference gradient of a scalar function of one tensor.
inline torch::Tensor fd_gradient(const std::function<double(const torch::Tensor&)>& f, const torch::Tensor& x,
                                 double h = 1e-6) {
    auto base = x.detach().to(torch::kDouble).clone().contiguous();
    auto grad = torch::zeros_like(base);
    auto* p = base.data_ptr<double>();
    auto* g = grad.data_ptr<double>();
    for (std::int64_t i = 0; i < base.numel(); ++i) {
        const double keep = p[i];
        p[i] = keep + h;
        const double up = f(base);
        p[i] = keep - h;
        const double down = f(base);
        p[i] = keep;
        g[i] = (up - down) / (2 * h);
    }
    return grad;
}

inline double relative_error(const torch::Tensor& a, const torch::Tensor& b) {
    const double denom = std::max(b.norm().item<double>(), 1e-12);
    return (a - b).norm().item<double>() / denom;
}

inline double relative_error(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); }

// lambda * mean (||g_i|| - 1)^2 from per-sample gradients obtained any way.
inline double penalty_from_gradients(const std::vector<torch::Tensor>& grads, double lambda) {
    double acc = 0.0;
    for (const auto& g : grads) acc += std::pow(g.norm().item<double>() - 1.0, 2);
    return lambda * acc / static_cast<double>(grads.size());
}

// Smooth double-precision critic so finite differences are well conditioned.
inline torch::nn::Sequential smooth_critic(int channels, int side, std::uint64_t seed) {
    torch::manual_seed(seed);
    torch::nn::Sequential net(torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, 4, 3).padding(1)),
                              torch::nn::Tanh(), torch::nn::Flatten(), torch::nn::Linear(4 * side * side, 1));
    net->to(torch::kDouble);
    return net;
}

}  // namespace fgb::testing
