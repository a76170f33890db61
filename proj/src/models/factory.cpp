#include "internal.hpp"

namespace pasnet::models {

namespace {

std::int64_t cnn_embed_dim(double w) { return scaled(128, w); }
std::int64_t vit_dim(double w) { return 12 * scaled(64, w); }

DenseNetTrunk densenet_trunk(const ModelConfig& cfg)
{
    DenseNet3dOptions o;
    o.growth = scaled(32, cfg.width_multiplier);
    o.init_features = scaled(64, cfg.width_multiplier);
    o.embed_dim = cnn_embed_dim(cfg.width_multiplier);
    o.in_channels = cfg.in_channels;
    return DenseNetTrunk(o);
}

VitTrunk vit_trunk(const ModelConfig& cfg)
{
    Vit3dOptions o;
    o.input_shape = cfg.input_shape;
    o.in_channels = cfg.in_channels;
    o.dim = vit_dim(cfg.width_multiplier);
    o.mlp_dim = 4 * o.dim;
    return VitTrunk(o);
}

SwinTrunk swin_trunk(const ModelConfig& cfg)
{
    Swin3dOptions o;
    o.input_shape = cfg.input_shape;
    o.in_channels = cfg.in_channels;
    o.embed_dim = 3 * scaled(32, cfg.width_multiplier);
    return SwinTrunk(o);
}

ResNet18Trunk resnet_trunk(const ModelConfig& cfg)
{
    ResNet18Trunk t(cfg.in_channels, cfg.width_multiplier, cnn_embed_dim(cfg.width_multiplier));
    if (cfg.pretrained_path) {
        const auto report = load_pretrained_resnet18(*t, *cfg.pretrained_path);
        if (report.loaded.empty()) {
            throw FormatError("no tensor in " + cfg.pretrained_path->string() + " matches the ResNet18 layout");
        }
    }
    return t;
}

}  // namespace

Model build_densenet121_3d(const ModelConfig& cfg)
{
    return std::make_shared<SingleBranchImpl>(torch::nn::AnyModule(densenet_trunk(cfg)),
                                              cnn_embed_dim(cfg.width_multiplier), cfg.num_classes,
                                              cfg.effective_dropout());
}

Model build_vit3d(const ModelConfig& cfg)
{
    return std::make_shared<SingleBranchImpl>(torch::nn::AnyModule(vit_trunk(cfg)), vit_dim(cfg.width_multiplier),
                                              cfg.num_classes, cfg.effective_dropout());
}

Model build_hybrid_densenet_vit(const ModelConfig& cfg)
{
    const double w = cfg.width_multiplier;
    return std::make_shared<HybridImpl>(torch::nn::AnyModule(densenet_trunk(cfg)), cnn_embed_dim(w),
                                        torch::nn::AnyModule(vit_trunk(cfg)), vit_dim(w), scaled(256, w),
                                        cfg.num_classes, cfg.effective_dropout());
}

Model build_resnet18_3d(const ModelConfig& cfg)
{
    return std::make_shared<SingleBranchImpl>(torch::nn::AnyModule(resnet_trunk(cfg)),
                                              cnn_embed_dim(cfg.width_multiplier), cfg.num_classes,
                                              cfg.effective_dropout());
}

Model build_efficientnet_b0_3d(const ModelConfig& cfg)
{
    return std::make_shared<EfficientNetB0Impl>(cfg.in_channels, cfg.width_multiplier, cfg.num_classes,
                                                cfg.effective_dropout());
}

Model build_swin3d(const ModelConfig& cfg)
{
    auto t = swin_trunk(cfg);
    const auto dim = t->out_dim;
    return std::make_shared<SingleBranchImpl>(torch::nn::AnyModule(t), dim, cfg.num_classes, cfg.effective_dropout());
}

Model build_hybrid_resnet_swin(const ModelConfig& cfg)
{
    const double w = cfg.width_multiplier;
    auto s = swin_trunk(cfg);
    const auto dim = s->out_dim;
    return std::make_shared<HybridImpl>(torch::nn::AnyModule(resnet_trunk(cfg)), cnn_embed_dim(w),
                                        torch::nn::AnyModule(s), dim, scaled(256, w), cfg.num_classes,
                                        cfg.effective_dropout());
}

Model build_model(const ModelConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    torch::manual_seed(seed);
    const auto& a = cfg.arch;
    if (a == "densenet121_vit") return build_hybrid_densenet_vit(cfg);
    if (a == "densenet121") return build_densenet121_3d(cfg);
    if (a == "vit") return build_vit3d(cfg);
    if (a == "resnet18") return build_resnet18_3d(cfg);
    if (a == "resnet18_swin") return build_hybrid_resnet_swin(cfg);
    if (a == "swin") return build_swin3d(cfg);
    return build_efficientnet_b0_3d(cfg);
}

void save_checkpoint(const torch::nn::Module& model, const CheckpointMeta& meta, const std::filesystem::path& path)
{
    torch::serialize::OutputArchive ar;
    for (const auto& p : model.named_parameters(true)) ar.write("param/" + p.key(), p.value().detach());
    for (const auto& b : model.named_buffers(true)) ar.write("buffer/" + b.key(), b.value(), /*is_buffer=*/true);
    ar.write("config", c10::IValue(meta.config.serialize()));
    ar.write("epoch", c10::IValue(static_cast<std::int64_t>(meta.epoch)));
    ar.write("val_accuracy", c10::IValue(meta.val_accuracy));
    auto tmp = path;
    tmp += ".tmp";
    try {
        ar.save_to(tmp.string());
    } catch (const c10::Error& e) {
        throw IoError("cannot write checkpoint " + path.string() + ": " + e.what_without_backtrace());
    }
    std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
    torch::serialize::InputArchive ar;
    LoadedCheckpoint out;
    try {
        ar.load_from(path.string());
        c10::IValue v;
        ar.read("config", v);
        out.meta.config = ModelConfig::parse(v.toStringRef());
        ar.read("epoch", v);
        out.meta.epoch = static_cast<int>(v.toInt());
        ar.read("val_accuracy", v);
        out.meta.val_accuracy = v.toDouble();
    } catch (const c10::Error& e) {
        throw FormatError("unreadable checkpoint " + path.string() + ": " + e.what_without_backtrace());
    }
    // Weights come from the archive, not from the pretrained file.
    auto cfg = out.meta.config;
    cfg.pretrained_path.reset();
    out.model = build_model(cfg, 0);
    out.meta.config = cfg;
    torch::NoGradGuard guard;
    const auto restore = [&](const std::string& key, torch::Tensor& dst, bool buffer) {
        torch::Tensor src;
        try {
            ar.read(key, src, buffer);
        } catch (const c10::Error&) {
            throw FormatError(path.string() + ": missing tensor '" + key + "'");
        }
        if (src.sizes() != dst.sizes()) throw FormatError(path.string() + ": shape mismatch for '" + key + "'");
        dst.copy_(src);
    };
    for (auto& p : out.model->named_parameters(true)) restore("param/" + p.key(), p.value(), false);
    for (auto& b : out.model->named_buffers(true)) restore("buffer/" + b.key(), b.value(), true);
    return out;
}

}  // namespace pasnet::models
