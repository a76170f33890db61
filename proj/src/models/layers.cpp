#include <algorithm>
#include <cmath>
#include <sstream>

#include "pasnet/csv.hpp"
#include "pasnet/errors.hpp"
#include "pasnet/models.hpp"

namespace pasnet::models {

namespace {

bool uses_vit(const std::string& arch) { return arch == "densenet121_vit" || arch == "vit"; }
bool uses_swin(const std::string& arch) { return arch == "swin" || arch == "resnet18_swin"; }

Shape3 parse_shape(const std::string& s)
{
    Shape3 out;
    char x1 = 0, x2 = 0;
    std::istringstream in(s);
    if (!(in >> out.h >> x1 >> out.w >> x2 >> out.d) || x1 != 'x' || x2 != 'x') {
        throw ConfigError("input_shape must look like 128x128x64, got '" + s + "'");
    }
    return out;
}

}  // namespace

double default_dropout(const std::string& arch)
{
    if (arch == "densenet121_vit" || arch == "resnet18_swin") return 0.5;
    if (arch == "resnet18" || arch == "vit" || arch == "swin") return 0.1;
    if (arch == "densenet121" || arch == "efficientnet_b0") return 0.2;
    throw ConfigError("unknown architecture '" + arch + "'");
}

void ModelConfig::validate() const
{
    if (std::find(kArchNames.begin(), kArchNames.end(), arch) == kArchNames.end()) {
        throw ConfigError("unknown architecture '" + arch + "'");
    }
    if (dropout && !(*dropout >= 0.0 && *dropout <= 1.0)) throw ConfigError("dropout must lie in [0, 1]");
    if (!(width_multiplier > 0.0 && width_multiplier <= 4.0)) throw ConfigError("width_multiplier must be in (0, 4]");
    if (in_channels < 1 || num_classes < 2) throw ConfigError("need in_channels >= 1 and num_classes >= 2");
    for (int a = 0; a < 3; ++a) {
        if (input_shape[a] < 32) throw ConfigError("every input extent must be at least 32");
        if (uses_vit(arch) && input_shape[a] % 16 != 0) {
            throw ConfigError("input extents must be divisible by the 16-voxel ViT patch");
        }
        if (uses_swin(arch) && input_shape[a] % 32 != 0) {
            throw ConfigError("input extents must be divisible by 32 for the Swin patch grid");
        }
    }
}

double ModelConfig::effective_dropout() const { return dropout ? *dropout : default_dropout(arch); }

std::string ModelConfig::serialize() const
{
    std::ostringstream out;
    out << "arch=" << arch << '\n'
        << "in_channels=" << in_channels << '\n'
        << "num_classes=" << num_classes << '\n'
        << "input_shape=" << input_shape.h << 'x' << input_shape.w << 'x' << input_shape.d << '\n'
        << "width_multiplier=" << format_double(width_multiplier) << '\n';
    if (dropout) out << "dropout=" << format_double(*dropout) << '\n';
    if (pretrained_path) out << "pretrained_path=" << pretrained_path->string() << '\n';
    return out.str();
}

ModelConfig ModelConfig::parse(const std::string& text)
{
    ModelConfig c;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("malformed model config line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "arch") c.arch = value;
        else if (key == "in_channels") c.in_channels = std::stoi(value);
        else if (key == "num_classes") c.num_classes = std::stoi(value);
        else if (key == "input_shape") c.input_shape = parse_shape(value);
        else if (key == "width_multiplier") c.width_multiplier = parse_double(value);
        else if (key == "dropout") c.dropout = parse_double(value);
        else if (key == "pretrained_path") c.pretrained_path = value;
        else throw FormatError("unknown model config key '" + key + "'");
    }
    return c;
}

std::int64_t scaled(std::int64_t channels, double width, std::int64_t divisor, std::int64_t min_value)
{
    const double raw = static_cast<double>(channels) * width / static_cast<double>(divisor);
    const auto units = std::max<std::int64_t>(1, std::llround(raw));
    return std::max(min_value, units * divisor);
}

torch::Tensor patchify(const torch::Tensor& x, std::int64_t patch)
{
    if (x.dim() != 5) throw ConfigError("patchify expects an (N, C, H, W, D) tensor");
    const auto n = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3), d = x.size(4);
    if (h % patch != 0 || w % patch != 0 || d % patch != 0) {
        throw ConfigError("volume extents must be divisible by the patch size " + std::to_string(patch));
    }
    return x.reshape({n, c, h / patch, patch, w / patch, patch, d / patch, patch})
        .permute({0, 2, 4, 6, 1, 3, 5, 7})
        .reshape({n, (h / patch) * (w / patch) * (d / patch), c * patch * patch * patch});
}

void trunc_normal_(torch::Tensor& t, double std)
{
    torch::NoGradGuard guard;
    // Inverse-CDF sampling restricted to [-2, 2] standard deviations.
    const double lo = std::erf(-2.0 / std::sqrt(2.0));
    const double hi = std::erf(2.0 / std::sqrt(2.0));
    t.uniform_(lo, hi).erfinv_().mul_(std * std::sqrt(2.0)).clamp_(-2.0 * std, 2.0 * std);
}

FusionHeadImpl::FusionHeadImpl(std::int64_t in, std::int64_t hidden, std::int64_t classes, double dropout)
    : fc1(register_module("fc1", torch::nn::Linear(in, hidden))),
      drop(register_module("drop", torch::nn::Dropout(dropout))),
      fc2(register_module("fc2", torch::nn::Linear(hidden, classes)))
{
}

torch::Tensor FusionHeadImpl::forward(const torch::Tensor& fused)
{
    return fc2(drop(torch::relu(fc1(fused))));
}

SingleBranchImpl::SingleBranchImpl(torch::nn::AnyModule trunk, std::int64_t embed_dim, std::int64_t classes,
                                   double dropout)
    : trunk_any(std::move(trunk)),
      drop(register_module("drop", torch::nn::Dropout(dropout))),
      head(register_module("head", torch::nn::Linear(embed_dim, classes)))
{
    register_module("trunk", trunk_any.ptr());
}

torch::Tensor SingleBranchImpl::embed(const torch::Tensor& x) { return trunk_any.forward<torch::Tensor>(x); }

torch::Tensor SingleBranchImpl::forward(const torch::Tensor& x) { return head(drop(embed(x))); }

HybridImpl::HybridImpl(torch::nn::AnyModule cnn, std::int64_t cnn_dim, torch::nn::AnyModule transformer,
                       std::int64_t transformer_dim, std::int64_t hidden, std::int64_t classes, double dropout)
    : cnn_any(std::move(cnn)), transformer_any(std::move(transformer))
{
    register_module("cnn", cnn_any.ptr());
    register_module("transformer", transformer_any.ptr());
    fusion = register_module("fusion", FusionHead(cnn_dim + transformer_dim, hidden, classes, dropout));
}

HybridEmbeddings HybridImpl::forward_embeddings(const torch::Tensor& x)
{
    HybridEmbeddings e;
    e.cnn = cnn_any.forward<torch::Tensor>(x);
    e.vit = transformer_any.forward<torch::Tensor>(x);
    e.fused = torch::cat({e.cnn, e.vit}, 1);
    e.logits = fusion(e.fused);
    return e;
}

torch::Tensor HybridImpl::forward(const torch::Tensor& x) { return forward_embeddings(x).logits; }

std::int64_t count_parameters(const torch::nn::Module& m)
{
    std::int64_t n = 0;
    for (const auto& p : m.parameters()) {
        if (p.requires_grad()) n += p.numel();
    }
    return n;
}

torch::Tensor predict_proba(ClassifierImpl& model, const torch::Tensor& batch)
{
    torch::NoGradGuard guard;
    const bool was_training = model.is_training();
    model.eval();
    auto p = torch::softmax(model.forward(batch), 1);
    if (was_training) model.train();
    return p;
}

}  // namespace pasnet::models
