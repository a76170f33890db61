#pragma once

#include "pasnet/errors.hpp"
#include "pasnet/models.hpp"

namespace pasnet::models::detail {

/// Kaiming-normal (fan-out) for convolutions, unit/zero for batch norm,
/// zero bias for linear layers.
inline void init_cnn(torch::nn::Module& root)
{
    torch::NoGradGuard guard;
    for (auto& m : root.modules(/*include_self=*/false)) {
        if (auto* conv = m->as<torch::nn::Conv3d>()) {
            torch::nn::init::kaiming_normal_(conv->weight, 0.0, torch::kFanOut, torch::kReLU);
            if (conv->bias.defined()) conv->bias.zero_();
        } else if (auto* bn = m->as<torch::nn::BatchNorm3d>()) {
            bn->weight.fill_(1.0);
            bn->bias.zero_();
        } else if (auto* lin = m->as<torch::nn::Linear>()) {
            if (lin->bias.defined()) lin->bias.zero_();
        }
    }
}

/// Truncated normal (σ = 0.02) for linear weights, unit/zero layer norms.
inline void init_transformer(torch::nn::Module& root)
{
    torch::NoGradGuard guard;
    for (auto& m : root.modules(/*include_self=*/false)) {
        if (auto* lin = m->as<torch::nn::Linear>()) {
            trunc_normal_(lin->weight);
            if (lin->bias.defined()) lin->bias.zero_();
        } else if (auto* ln = m->as<torch::nn::LayerNorm>()) {
            ln->weight.fill_(1.0);
            ln->bias.zero_();
        }
    }
}

inline torch::nn::Conv3dOptions conv_opts(std::int64_t in, std::int64_t out, std::int64_t k, std::int64_t stride = 1,
                                          std::int64_t pad = 0, std::int64_t groups = 1)
{
    return torch::nn::Conv3dOptions(in, out, k).stride(stride).padding(pad).groups(groups).bias(false);
}

}  // namespace pasnet::models::detail
