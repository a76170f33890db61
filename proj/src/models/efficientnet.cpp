#include "internal.hpp"

namespace pasnet::models {

namespace {

using detail::conv_opts;

struct SqueezeExciteImpl : torch::nn::Module {
    SqueezeExciteImpl(std::int64_t channels, std::int64_t squeezed)
        : reduce(register_module("reduce", torch::nn::Conv3d(conv_opts(channels, squeezed, 1).bias(true)))),
          expand(register_module("expand", torch::nn::Conv3d(conv_opts(squeezed, channels, 1).bias(true))))
    {
    }
    torch::Tensor forward(const torch::Tensor& x)
    {
        auto s = torch::adaptive_avg_pool3d(x, {1, 1, 1});
        return x * torch::sigmoid(expand(torch::silu(reduce(s))));
    }
    torch::nn::Conv3d reduce, expand;
};
TORCH_MODULE(SqueezeExcite);

struct MBConvImpl : torch::nn::Module {
    MBConvImpl(std::int64_t in, std::int64_t out, std::int64_t expand_ratio, std::int64_t kernel, std::int64_t stride)
        : residual(stride == 1 && in == out)
    {
        const auto hidden = in * expand_ratio;
        block = torch::nn::Sequential();
        if (expand_ratio != 1) {
            block->push_back("expand_conv", torch::nn::Conv3d(conv_opts(in, hidden, 1)));
            block->push_back("expand_bn", torch::nn::BatchNorm3d(hidden));
            block->push_back("expand_act", torch::nn::SiLU());
        }
        block->push_back("dw_conv", torch::nn::Conv3d(conv_opts(hidden, hidden, kernel, stride, kernel / 2, hidden)));
        block->push_back("dw_bn", torch::nn::BatchNorm3d(hidden));
        block->push_back("dw_act", torch::nn::SiLU());
        block->push_back("se", SqueezeExcite(hidden, std::max<std::int64_t>(1, in / 4)));
        block->push_back("project_conv", torch::nn::Conv3d(conv_opts(hidden, out, 1)));
        block->push_back("project_bn", torch::nn::BatchNorm3d(out));
        register_module("block", block);
    }
    torch::Tensor forward(const torch::Tensor& x)
    {
        auto y = block->forward(x);
        return residual ? x + y : y;
    }
    bool residual;
    torch::nn::Sequential block{nullptr};
};
TORCH_MODULE(MBConv);

struct StageSpec {
    std::int64_t expand, kernel, stride, channels;
    int repeats;
};

}  // namespace

EfficientNetB0Impl::EfficientNetB0Impl(std::int64_t in_channels, double width, std::int64_t classes, double dropout)
{
    const std::vector<StageSpec> stages{{1, 3, 1, 16, 1},  {6, 3, 2, 24, 2},  {6, 5, 2, 40, 2}, {6, 3, 2, 80, 3},
                                        {6, 5, 1, 112, 3}, {6, 5, 2, 192, 4}, {6, 3, 1, 320, 1}};
    const auto ch = [&](std::int64_t c) { return scaled(c, width, 8, 8); };
    features = torch::nn::Sequential();
    const auto stem = ch(32);
    features->push_back("stem_conv", torch::nn::Conv3d(conv_opts(in_channels, stem, 3, 2, 1)));
    features->push_back("stem_bn", torch::nn::BatchNorm3d(stem));
    features->push_back("stem_act", torch::nn::SiLU());
    std::int64_t in = stem;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const auto& st = stages[s];
        const auto out = ch(st.channels);
        for (int r = 0; r < st.repeats; ++r) {
            features->push_back("block" + std::to_string(s + 1) + "_" + std::to_string(r),
                                MBConv(in, out, st.expand, st.kernel, r == 0 ? st.stride : 1));
            in = out;
        }
    }
    const auto head = ch(1280);
    features->push_back("head_conv", torch::nn::Conv3d(conv_opts(in, head, 1)));
    features->push_back("head_bn", torch::nn::BatchNorm3d(head));
    features->push_back("head_act", torch::nn::SiLU());
    register_module("features", features);
    drop = register_module("drop", torch::nn::Dropout(dropout));
    classifier = register_module("classifier", torch::nn::Linear(head, classes));
    detail::init_cnn(*this);
}

torch::Tensor EfficientNetB0Impl::forward(const torch::Tensor& x)
{
    auto f = torch::adaptive_avg_pool3d(features->forward(x), {1, 1, 1}).flatten(1);
    return classifier(drop(f));
}

}  // namespace pasnet::models
