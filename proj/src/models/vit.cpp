#include <cmath>

#include "internal.hpp"

namespace pasnet::models {

AttentionImpl::AttentionImpl(std::int64_t dim, std::int64_t heads_)
    : heads(heads_),
      qkv(register_module("qkv", torch::nn::Linear(dim, 3 * dim))),
      proj(register_module("proj", torch::nn::Linear(dim, dim)))
{
}

torch::Tensor AttentionImpl::forward(const torch::Tensor& x, const std::optional<torch::Tensor>& bias)
{
    // x: (B, T, C); bias broadcastable to (B, heads, T, T)
    const auto b = x.size(0), t = x.size(1), c = x.size(2);
    const auto hd = c / heads;
    auto q_k_v = qkv(x).reshape({b, t, 3, heads, hd}).permute({2, 0, 3, 1, 4});
    auto q = q_k_v[0] * (1.0 / std::sqrt(static_cast<double>(hd)));
    auto attn = torch::matmul(q, q_k_v[1].transpose(-2, -1));
    if (bias) attn = attn + *bias;
    attn = torch::softmax(attn, -1);
    auto out = torch::matmul(attn, q_k_v[2]).transpose(1, 2).reshape({b, t, c});
    return proj(out);
}

TransformerBlockImpl::TransformerBlockImpl(std::int64_t dim, std::int64_t heads, std::int64_t mlp_dim, double dropout)
    : norm1(register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim}).eps(1e-6)))),
      attn(register_module("attn", Attention(dim, heads))),
      norm2(register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim}).eps(1e-6)))),
      fc1(register_module("fc1", torch::nn::Linear(dim, mlp_dim))),
      fc2(register_module("fc2", torch::nn::Linear(mlp_dim, dim))),
      drop(register_module("drop", torch::nn::Dropout(dropout)))
{
}

torch::Tensor TransformerBlockImpl::forward(const torch::Tensor& x)
{
    auto y = x + drop(attn(norm1(x)));
    return y + drop(fc2(drop(torch::gelu(fc1(norm2(y))))));
}

VitTrunkImpl::VitTrunkImpl(const Vit3dOptions& o) : patch(o.patch)
{
    const auto& s = o.input_shape;
    if (s.h % o.patch != 0 || s.w % o.patch != 0 || s.d % o.patch != 0) {
        throw ConfigError("ViT input extents must be divisible by the patch size");
    }
    if (o.dim % o.heads != 0) throw ConfigError("ViT width must be divisible by the head count");
    tokens = (s.h / o.patch) * (s.w / o.patch) * (s.d / o.patch);
    patch_embed = register_module("patch_embed", torch::nn::Linear(o.in_channels * o.patch * o.patch * o.patch, o.dim));
    cls_token = register_parameter("cls_token", torch::zeros({1, 1, o.dim}));
    pos_embed = register_parameter("pos_embed", torch::zeros({1, tokens + 1, o.dim}));
    pos_drop = register_module("pos_drop", torch::nn::Dropout(o.dropout));
    blocks = register_module("blocks", torch::nn::ModuleList());
    for (std::int64_t i = 0; i < o.depth; ++i) blocks->push_back(TransformerBlock(o.dim, o.heads, o.mlp_dim, o.dropout));
    norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({o.dim}).eps(1e-6)));
    detail::init_transformer(*this);
    trunc_normal_(cls_token);
    trunc_normal_(pos_embed);
}

torch::Tensor VitTrunkImpl::forward(const torch::Tensor& x)
{
    auto t = patch_embed(patchify(x, patch));
    t = torch::cat({cls_token.expand({t.size(0), 1, t.size(2)}), t}, 1);
    t = pos_drop(t + pos_embed);
    for (auto& blk : *blocks) t = blk->as<TransformerBlockImpl>()->forward(t);
    return norm(t).select(1, 0);
}

}  // namespace pasnet::models
