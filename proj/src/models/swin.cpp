#include <array>

#include "internal.hpp"

namespace pasnet::models {

namespace {

using Dims = std::array<std::int64_t, 3>;

std::int64_t prod(const Dims& d) { return d[0] * d[1] * d[2]; }

// (B, H, W, D, C) -> (B * nW, wh*ww*wd, C)
torch::Tensor partition(const torch::Tensor& x, const Dims& w)
{
    const auto b = x.size(0), h = x.size(1), wd = x.size(2), d = x.size(3), c = x.size(4);
    return x.reshape({b, h / w[0], w[0], wd / w[1], w[1], d / w[2], w[2], c})
        .permute({0, 1, 3, 5, 2, 4, 6, 7})
        .reshape({-1, prod(w), c});
}

torch::Tensor merge_windows(const torch::Tensor& win, const Dims& w, std::int64_t b, const Dims& grid)
{
    const auto c = win.size(-1);
    return win.reshape({b, grid[0] / w[0], grid[1] / w[1], grid[2] / w[2], w[0], w[1], w[2], c})
        .permute({0, 1, 4, 2, 5, 3, 6, 7})
        .reshape({b, grid[0], grid[1], grid[2], c});
}

struct SwinBlockImpl : torch::nn::Module {
    SwinBlockImpl(std::int64_t dim, std::int64_t heads, const Dims& grid, std::int64_t window, bool shifted,
                  double mlp_ratio, double dropout)
        : grid(grid),
          norm1(register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})))),
          attn(register_module("attn", Attention(dim, heads))),
          norm2(register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})))),
          fc1(register_module("fc1", torch::nn::Linear(dim, static_cast<std::int64_t>(dim * mlp_ratio)))),
          fc2(register_module("fc2", torch::nn::Linear(static_cast<std::int64_t>(dim * mlp_ratio), dim))),
          drop(register_module("drop", torch::nn::Dropout(dropout)))
    {
        // Windows never exceed the grid; an axis covered by one window is not shifted.
        for (int a = 0; a < 3; ++a) {
            win[a] = std::min(window, grid[a]);
            shift[a] = (shifted && grid[a] > window) ? win[a] / 2 : 0;
            if (grid[a] % win[a] != 0) throw ConfigError("Swin feature grid is not divisible by the window");
        }
        const auto n = prod(win);
        rel_bias_table = register_parameter(
            "relative_position_bias_table",
            torch::zeros({(2 * win[0] - 1) * (2 * win[1] - 1) * (2 * win[2] - 1), heads}));
        auto index = torch::empty({n, n}, torch::kLong);
        auto acc = index.accessor<std::int64_t, 2>();
        for (std::int64_t p = 0; p < n; ++p) {
            for (std::int64_t q = 0; q < n; ++q) {
                const Dims cp{p / (win[1] * win[2]), (p / win[2]) % win[1], p % win[2]};
                const Dims cq{q / (win[1] * win[2]), (q / win[2]) % win[1], q % win[2]};
                acc[p][q] = (cp[0] - cq[0] + win[0] - 1) * (2 * win[1] - 1) * (2 * win[2] - 1) +
                            (cp[1] - cq[1] + win[1] - 1) * (2 * win[2] - 1) + (cp[2] - cq[2] + win[2] - 1);
            }
        }
        rel_index = register_buffer("relative_position_index", index);
        if (shift[0] + shift[1] + shift[2] > 0) {
            // Label the regions that a cyclic shift brings together; tokens
            // from different regions must not attend to each other.
            auto img = torch::zeros({1, grid[0], grid[1], grid[2], 1});
            auto ia = img.accessor<float, 5>();
            const auto region = [&](int a, std::int64_t i) {
                if (shift[a] == 0) return 0;
                if (i < grid[a] - win[a]) return 0;
                return i < grid[a] - shift[a] ? 1 : 2;
            };
            for (std::int64_t i = 0; i < grid[0]; ++i)
                for (std::int64_t j = 0; j < grid[1]; ++j)
                    for (std::int64_t k = 0; k < grid[2]; ++k)
                        ia[0][i][j][k][0] = static_cast<float>(region(0, i) * 9 + region(1, j) * 3 + region(2, k));
            auto ids = partition(img, win).squeeze(-1);   // (nW, N)
            auto diff = ids.unsqueeze(1) - ids.unsqueeze(2);
            attn_mask = register_buffer("attn_mask", torch::where(diff != 0, torch::full({}, -100.0), torch::zeros({}))
                                                         .unsqueeze(1));   // (nW, 1, N, N)
        }
    }

    torch::Tensor forward(const torch::Tensor& x)
    {
        const auto b = x.size(0);
        auto y = norm1(x);
        const bool shifted = shift[0] + shift[1] + shift[2] > 0;
        if (shifted) y = torch::roll(y, {-shift[0], -shift[1], -shift[2]}, {1, 2, 3});
        const auto n = prod(win);
        auto bias = rel_bias_table.index_select(0, rel_index.flatten()).reshape({n, n, -1}).permute({2, 0, 1});
        auto full_bias = bias.unsqueeze(0);
        if (shifted) full_bias = (full_bias + attn_mask).repeat({b, 1, 1, 1});
        auto w = attn(partition(y, win), full_bias);
        y = merge_windows(w, win, b, grid);
        if (shifted) y = torch::roll(y, {shift[0], shift[1], shift[2]}, {1, 2, 3});
        auto out = x + drop(y);
        return out + drop(fc2(drop(torch::gelu(fc1(norm2(out))))));
    }

    Dims grid;
    Dims win{};
    Dims shift{};
    torch::nn::LayerNorm norm1;
    Attention attn;
    torch::nn::LayerNorm norm2;
    torch::nn::Linear fc1, fc2;
    torch::nn::Dropout drop;
    torch::Tensor rel_bias_table, rel_index, attn_mask;
};
TORCH_MODULE(SwinBlock);

struct PatchMergingImpl : torch::nn::Module {
    explicit PatchMergingImpl(std::int64_t dim)
        : norm(register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({8 * dim})))),
          reduction(register_module("reduction", torch::nn::Linear(torch::nn::LinearOptions(8 * dim, 2 * dim).bias(false))))
    {
    }
    torch::Tensor forward(const torch::Tensor& x)
    {
        using torch::indexing::Slice;
        std::vector<torch::Tensor> parts;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    parts.push_back(x.index({Slice(), Slice(i, None, 2), Slice(j, None, 2), Slice(k, None, 2), Slice()}));
        return reduction(norm(torch::cat(parts, -1)));
    }
    static constexpr auto None = torch::indexing::None;
    torch::nn::LayerNorm norm;
    torch::nn::Linear reduction;
};
TORCH_MODULE(PatchMerging);

struct SwinStageImpl : torch::nn::Module {
    SwinStageImpl(std::int64_t dim, int depth, std::int64_t heads, const Dims& grid, std::int64_t window,
                  double mlp_ratio, double dropout, bool merge)
    {
        blocks = register_module("blocks", torch::nn::ModuleList());
        for (int i = 0; i < depth; ++i) blocks->push_back(SwinBlock(dim, heads, grid, window, i % 2 == 1, mlp_ratio, dropout));
        if (merge) downsample = register_module("downsample", PatchMerging(dim));
    }
    torch::Tensor forward(torch::Tensor x)
    {
        for (auto& blk : *blocks) x = blk->as<SwinBlockImpl>()->forward(x);
        return downsample ? downsample(x) : x;
    }
    torch::nn::ModuleList blocks{nullptr};
    PatchMerging downsample{nullptr};
};
TORCH_MODULE(SwinStage);

}  // namespace

SwinTrunkImpl::SwinTrunkImpl(const Swin3dOptions& o)
{
    if (o.depths.size() != o.heads.size() || o.depths.empty()) throw ConfigError("Swin depths and heads must pair up");
    const auto merges = static_cast<std::int64_t>(o.depths.size() - 1);
    Dims grid{o.input_shape.h / o.patch, o.input_shape.w / o.patch, o.input_shape.d / o.patch};
    for (int a = 0; a < 3; ++a) {
        if (o.input_shape[a] % (o.patch << merges) != 0) {
            throw ConfigError("Swin input extents must be divisible by " + std::to_string(o.patch << merges));
        }
    }
    patch_embed = register_module(
        "patch_embed", torch::nn::Conv3d(torch::nn::Conv3dOptions(o.in_channels, o.embed_dim, o.patch).stride(o.patch)));
    patch_norm = register_module("patch_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({o.embed_dim})));
    stages = register_module("stages", torch::nn::ModuleList());
    std::int64_t dim = o.embed_dim;
    for (std::size_t s = 0; s < o.depths.size(); ++s) {
        const bool merge = s + 1 < o.depths.size();
        if (dim % o.heads[s] != 0) throw ConfigError("Swin stage width must be divisible by its head count");
        stages->push_back(SwinStage(dim, o.depths[s], o.heads[s], grid, o.window, o.mlp_ratio, o.dropout, merge));
        if (merge) {
            dim *= 2;
            for (auto& g : grid) g /= 2;
        }
    }
    out_dim = dim;
    norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    detail::init_transformer(*this);
    for (auto& p : named_parameters()) {
        if (p.key().find("relative_position_bias_table") != std::string::npos) trunc_normal_(p.value());
    }
}

torch::Tensor SwinTrunkImpl::forward(const torch::Tensor& x)
{
    auto y = patch_norm(patch_embed(x).permute({0, 2, 3, 4, 1}));
    for (auto& st : *stages) y = st->as<SwinStageImpl>()->forward(y);
    return norm(y).mean({1, 2, 3});
}

}  // namespace pasnet::models
