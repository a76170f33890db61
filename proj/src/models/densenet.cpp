#include "internal.hpp"

namespace pasnet::models {

namespace {

using detail::conv_opts;

struct DenseLayerImpl : torch::nn::Module {
    DenseLayerImpl(std::int64_t in, std::int64_t growth, std::int64_t bn_size)
        : norm1(register_module("norm1", torch::nn::BatchNorm3d(in))),
          conv1(register_module("conv1", torch::nn::Conv3d(conv_opts(in, bn_size * growth, 1)))),
          norm2(register_module("norm2", torch::nn::BatchNorm3d(bn_size * growth))),
          conv2(register_module("conv2", torch::nn::Conv3d(conv_opts(bn_size * growth, growth, 3, 1, 1))))
    {
    }
    torch::Tensor forward(const torch::Tensor& x)
    {
        return conv2(torch::relu(norm2(conv1(torch::relu(norm1(x))))));
    }
    torch::nn::BatchNorm3d norm1;
    torch::nn::Conv3d conv1;
    torch::nn::BatchNorm3d norm2;
    torch::nn::Conv3d conv2;
};
TORCH_MODULE(DenseLayer);

struct DenseBlockImpl : torch::nn::Module {
    DenseBlockImpl(int layers, std::int64_t in, std::int64_t growth, std::int64_t bn_size)
    {
        for (int l = 0; l < layers; ++l) {
            register_module("denselayer" + std::to_string(l + 1), DenseLayer(in + l * growth, growth, bn_size));
        }
    }
    torch::Tensor forward(torch::Tensor x)
    {
        for (auto& layer : children()) {
            auto out = layer->as<DenseLayerImpl>()->forward(x);
            x = torch::cat({x, out}, 1);
        }
        return x;
    }
};
TORCH_MODULE(DenseBlock);

struct TransitionImpl : torch::nn::Module {
    TransitionImpl(std::int64_t in, std::int64_t out)
        : norm(register_module("norm", torch::nn::BatchNorm3d(in))),
          conv(register_module("conv", torch::nn::Conv3d(conv_opts(in, out, 1))))
    {
    }
    torch::Tensor forward(const torch::Tensor& x)
    {
        return torch::avg_pool3d(conv(torch::relu(norm(x))), 2, 2);
    }
    torch::nn::BatchNorm3d norm;
    torch::nn::Conv3d conv;
};
TORCH_MODULE(Transition);

}  // namespace

DenseNetTrunkImpl::DenseNetTrunkImpl(const DenseNet3dOptions& o)
{
    features = torch::nn::Sequential();
    features->push_back("conv0", torch::nn::Conv3d(conv_opts(o.in_channels, o.init_features, 7, 2, 3)));
    features->push_back("norm0", torch::nn::BatchNorm3d(o.init_features));
    features->push_back("relu0", torch::nn::ReLU());
    features->push_back("pool0", torch::nn::MaxPool3d(torch::nn::MaxPool3dOptions(3).stride(2).padding(1)));
    std::int64_t ch = o.init_features;
    for (std::size_t b = 0; b < o.block_config.size(); ++b) {
        features->push_back("denseblock" + std::to_string(b + 1),
                            DenseBlock(o.block_config[b], ch, o.growth, o.bn_size));
        ch += o.block_config[b] * o.growth;
        if (b + 1 < o.block_config.size()) {
            features->push_back("transition" + std::to_string(b + 1), Transition(ch, ch / 2));
            ch /= 2;
        }
    }
    features->push_back("norm5", torch::nn::BatchNorm3d(ch));
    features->push_back("relu5", torch::nn::ReLU());
    feature_dim = ch;
    register_module("features", features);
    fc = register_module("fc", torch::nn::Linear(ch, o.embed_dim));
    detail::init_cnn(*this);
}

torch::Tensor DenseNetTrunkImpl::forward(const torch::Tensor& x)
{
    auto f = features->forward(x);
    return fc(torch::adaptive_avg_pool3d(f, {1, 1, 1}).flatten(1));
}

}  // namespace pasnet::models
