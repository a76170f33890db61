#include <fstream>
#include <iterator>

#include "internal.hpp"

namespace pasnet::models {

using detail::conv_opts;

BasicBlockImpl::BasicBlockImpl(std::int64_t in, std::int64_t out, std::int64_t stride)
    : conv1(register_module("conv1", torch::nn::Conv3d(conv_opts(in, out, 3, stride, 1)))),
      bn1(register_module("bn1", torch::nn::BatchNorm3d(out))),
      conv2(register_module("conv2", torch::nn::Conv3d(conv_opts(out, out, 3, 1, 1)))),
      bn2(register_module("bn2", torch::nn::BatchNorm3d(out)))
{
    if (stride != 1 || in != out) {
        downsample = register_module(
            "downsample", torch::nn::Sequential(torch::nn::Conv3d(conv_opts(in, out, 1, stride)), torch::nn::BatchNorm3d(out)));
    }
}

torch::Tensor BasicBlockImpl::forward(const torch::Tensor& x)
{
    auto y = bn2(conv2(torch::relu(bn1(conv1(x)))));
    return torch::relu(y + (downsample ? downsample->forward(x) : x));
}

namespace {

torch::nn::Sequential make_layer(std::int64_t in, std::int64_t out, std::int64_t stride)
{
    return torch::nn::Sequential(BasicBlock(in, out, stride), BasicBlock(out, out, 1));
}

}  // namespace

ResNet18TrunkImpl::ResNet18TrunkImpl(std::int64_t in_channels, double width, std::int64_t embed_dim)
{
    const auto c1 = scaled(64, width), c2 = scaled(128, width), c3 = scaled(256, width), c4 = scaled(512, width);
    conv1 = register_module("conv1", torch::nn::Conv3d(conv_opts(in_channels, c1, 7, 2, 3)));
    bn1 = register_module("bn1", torch::nn::BatchNorm3d(c1));
    layer1 = register_module("layer1", make_layer(c1, c1, 1));
    layer2 = register_module("layer2", make_layer(c1, c2, 2));
    layer3 = register_module("layer3", make_layer(c2, c3, 2));
    layer4 = register_module("layer4", make_layer(c3, c4, 2));
    fc = register_module("fc", torch::nn::Linear(c4, embed_dim));
    detail::init_cnn(*this);
}

torch::Tensor ResNet18TrunkImpl::forward(const torch::Tensor& x)
{
    auto y = torch::max_pool3d(torch::relu(bn1(conv1(x))), 3, 2, 1);
    y = layer4->forward(layer3->forward(layer2->forward(layer1->forward(y))));
    return fc(torch::adaptive_avg_pool3d(y, {1, 1, 1}).flatten(1));
}

PretrainedReport load_pretrained_resnet18(ResNet18TrunkImpl& trunk, const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open pretrained weights " + path.string());
    const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    c10::IValue root;
    try {
        root = torch::pickle_load(bytes);
    } catch (const c10::Error& e) {
        throw FormatError("cannot decode pretrained weights " + path.string() + ": " + e.what_without_backtrace());
    }
    if (!root.isGenericDict()) throw FormatError(path.string() + ": expected a state dict");
    auto dict = root.toGenericDict();
    if (dict.contains("state_dict") && dict.at("state_dict").isGenericDict()) {
        dict = dict.at("state_dict").toGenericDict();
    }

    auto params = trunk.named_parameters(true);
    auto buffers = trunk.named_buffers(true);
    PretrainedReport report;
    torch::NoGradGuard guard;
    for (const auto& item : dict) {
        if (!item.key().isString() || !item.value().isTensor()) continue;
        std::string name = item.key().toStringRef();
        if (name.rfind("module.", 0) == 0) name = name.substr(7);
        const auto src = item.value().toTensor();
        torch::Tensor* dst = params.find(name);
        if (dst == nullptr) dst = buffers.find(name);
        if (name.rfind("fc.", 0) == 0 || dst == nullptr || dst->sizes() != src.sizes()) {
            report.skipped.push_back(name);
            continue;
        }
        dst->copy_(src.to(dst->dtype()));
        report.loaded.push_back(name);
    }
    return report;
}

}  // namespace pasnet::models
