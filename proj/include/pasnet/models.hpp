#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pasnet/volume.hpp"

namespace pasnet::models {

inline const std::vector<std::string> kArchNames{"densenet121_vit", "densenet121", "vit",          "resnet18",
                                                 "resnet18_swin",   "swin",        "efficientnet_b0"};

struct ModelConfig {
    std::string arch = "densenet121_vit";
    int in_channels = 1;
    int num_classes = 2;
    Shape3 input_shape{128, 128, 64};
    std::optional<double> dropout;     // per-architecture default when unset
    std::optional<std::filesystem::path> pretrained_path;
    double width_multiplier = 1.0;

    /// Throws ConfigError for unknown arch, dropout outside [0,1],
    /// non-positive width, or an input the ViT patch grid cannot tile.
    void validate() const;
    [[nodiscard]] double effective_dropout() const;

    /// `key=value` lines; round-trips through parse().
    [[nodiscard]] std::string serialize() const;
    [[nodiscard]] static ModelConfig parse(const std::string& text);
};

[[nodiscard]] double default_dropout(const std::string& arch);

/// Channel count scaled by the width multiplier, at least `min_value` and
/// rounded to a multiple of `divisor`.
[[nodiscard]] std::int64_t scaled(std::int64_t channels, double width, std::int64_t divisor = 1,
                                  std::int64_t min_value = 1);

/// (N, C, H, W, D) -> (N, T, C*p^3) with T = (H/p)(W/p)(D/p); tokens ordered
/// H-major, each flattened as (C, ph, pw, pd). Throws ConfigError when a
/// spatial extent is not divisible by p.
[[nodiscard]] torch::Tensor patchify(const torch::Tensor& x, std::int64_t patch = 16);

/// Truncated normal on [-2σ, 2σ] (in place).
void trunc_normal_(torch::Tensor& t, double std = 0.02);

/// Every architecture yields logits; models with a single pooled embedding
/// also expose it.
class ClassifierImpl : public torch::nn::Module {
public:
    [[nodiscard]] virtual torch::Tensor forward(const torch::Tensor& x) = 0;
};

/// Linear(in, hidden) -> ReLU -> Dropout -> Linear(hidden, classes).
struct FusionHeadImpl : torch::nn::Module {
    FusionHeadImpl(std::int64_t in, std::int64_t hidden, std::int64_t classes, double dropout);
    torch::Tensor forward(const torch::Tensor& fused);

    torch::nn::Linear fc1{nullptr};
    torch::nn::Dropout drop{nullptr};
    torch::nn::Linear fc2{nullptr};
};
TORCH_MODULE(FusionHead);

// ---- DenseNet-121 -------------------------------------------------------

struct DenseNet3dOptions {
    std::vector<int> block_config{6, 12, 24, 16};
    std::int64_t growth = 32;
    std::int64_t init_features = 64;
    std::int64_t bn_size = 4;
    std::int64_t embed_dim = 128;
    std::int64_t in_channels = 1;
};

/// Conv stem, four dense blocks with transitions, GAP, FC to the embedding.
struct DenseNetTrunkImpl : torch::nn::Module {
    explicit DenseNetTrunkImpl(const DenseNet3dOptions& o);
    torch::Tensor forward(const torch::Tensor& x);   // (N, embed_dim)

    torch::nn::Sequential features{nullptr};
    torch::nn::Linear fc{nullptr};
    std::int64_t feature_dim = 0;
};
TORCH_MODULE(DenseNetTrunk);

// ---- ViT ----------------------------------------------------------------

struct Vit3dOptions {
    Shape3 input_shape{128, 128, 64};
    std::int64_t in_channels = 1;
    std::int64_t patch = 16;
    std::int64_t dim = 768;
    std::int64_t depth = 12;
    std::int64_t heads = 12;
    std::int64_t mlp_dim = 3072;
    double dropout = 0.0;
};

struct AttentionImpl : torch::nn::Module {
    AttentionImpl(std::int64_t dim, std::int64_t heads);
    torch::Tensor forward(const torch::Tensor& x, const std::optional<torch::Tensor>& bias = std::nullopt);

    std::int64_t heads;
    torch::nn::Linear qkv{nullptr};
    torch::nn::Linear proj{nullptr};
};
TORCH_MODULE(Attention);

/// Pre-norm block: x + Attn(LN(x)); x + MLP(LN(x)).
struct TransformerBlockImpl : torch::nn::Module {
    TransformerBlockImpl(std::int64_t dim, std::int64_t heads, std::int64_t mlp_dim, double dropout);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::LayerNorm norm1{nullptr};
    Attention attn{nullptr};
    torch::nn::LayerNorm norm2{nullptr};
    torch::nn::Linear fc1{nullptr};
    torch::nn::Linear fc2{nullptr};
    torch::nn::Dropout drop{nullptr};
};
TORCH_MODULE(TransformerBlock);

struct VitTrunkImpl : torch::nn::Module {
    explicit VitTrunkImpl(const Vit3dOptions& o);
    torch::Tensor forward(const torch::Tensor& x);   // class-token state after the final LayerNorm
    [[nodiscard]] std::int64_t num_tokens() const noexcept { return tokens; }

    std::int64_t patch;
    std::int64_t tokens;
    torch::nn::Linear patch_embed{nullptr};
    torch::Tensor cls_token;
    torch::Tensor pos_embed;
    torch::nn::Dropout pos_drop{nullptr};
    torch::nn::ModuleList blocks{nullptr};
    torch::nn::LayerNorm norm{nullptr};
};
TORCH_MODULE(VitTrunk);

// ---- ResNet-18 ----------------------------------------------------------

struct BasicBlockImpl : torch::nn::Module {
    BasicBlockImpl(std::int64_t in, std::int64_t out, std::int64_t stride);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv3d conv1{nullptr};
    torch::nn::BatchNorm3d bn1{nullptr};
    torch::nn::Conv3d conv2{nullptr};
    torch::nn::BatchNorm3d bn2{nullptr};
    torch::nn::Sequential downsample{nullptr};
};
TORCH_MODULE(BasicBlock);

/// Parameter names follow the common 3D ResNet layout (conv1, bn1,
/// layer1.0.conv1, layer2.0.downsample.0, ...), so external weights map
/// one-to-one.
struct ResNet18TrunkImpl : torch::nn::Module {
    ResNet18TrunkImpl(std::int64_t in_channels, double width, std::int64_t embed_dim);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv3d conv1{nullptr};
    torch::nn::BatchNorm3d bn1{nullptr};
    torch::nn::Sequential layer1{nullptr}, layer2{nullptr}, layer3{nullptr}, layer4{nullptr};
    torch::nn::Linear fc{nullptr};
};
TORCH_MODULE(ResNet18Trunk);

struct PretrainedReport {
    std::vector<std::string> loaded;
    std::vector<std::string> skipped;   // head/embedding layers and unknown names
};

/// Loads a torch.save()'d state dict (optionally nested under "state_dict",
/// names optionally prefixed with "module.") into the trunk. Only tensors
/// whose name and shape match are copied; `fc.*` is always skipped.
PretrainedReport load_pretrained_resnet18(ResNet18TrunkImpl& trunk, const std::filesystem::path& path);

// ---- EfficientNet-B0 ----------------------------------------------------

struct EfficientNetB0Impl : ClassifierImpl {
    EfficientNetB0Impl(std::int64_t in_channels, double width, std::int64_t classes, double dropout);
    torch::Tensor forward(const torch::Tensor& x) override;

    torch::nn::Sequential features{nullptr};
    torch::nn::Dropout drop{nullptr};
    torch::nn::Linear classifier{nullptr};
};

// ---- Swin ---------------------------------------------------------------

struct Swin3dOptions {
    Shape3 input_shape{128, 128, 64};
    std::int64_t in_channels = 1;
    std::int64_t patch = 4;
    std::int64_t embed_dim = 96;
    std::vector<int> depths{2, 2, 6, 2};
    std::vector<int> heads{3, 6, 12, 24};
    std::int64_t window = 4;
    double mlp_ratio = 4.0;
    double dropout = 0.0;
};

struct SwinTrunkImpl : torch::nn::Module {
    explicit SwinTrunkImpl(const Swin3dOptions& o);
    torch::Tensor forward(const torch::Tensor& x);   // (N, embed_dim * 2^(stages-1))

    std::int64_t out_dim = 0;
    torch::nn::Conv3d patch_embed{nullptr};
    torch::nn::LayerNorm patch_norm{nullptr};
    torch::nn::ModuleList stages{nullptr};
    torch::nn::LayerNorm norm{nullptr};
};
TORCH_MODULE(SwinTrunk);

// ---- Classifiers ----------------------------------------------------------

struct HybridEmbeddings {
    torch::Tensor cnn;     // (N, 128·w)
    torch::Tensor vit;     // (N, 768·w)
    torch::Tensor fused;   // concat(cnn, vit)
    torch::Tensor logits;
};

/// Single trunk followed by Dropout and a linear head.
struct SingleBranchImpl : ClassifierImpl {
    SingleBranchImpl(torch::nn::AnyModule trunk, std::int64_t embed_dim, std::int64_t classes, double dropout);
    torch::Tensor forward(const torch::Tensor& x) override;
    torch::Tensor embed(const torch::Tensor& x);

    torch::nn::AnyModule trunk_any;
    torch::nn::Dropout drop{nullptr};
    torch::nn::Linear head{nullptr};
};

/// CNN and transformer branches on the same input, concatenated and fed to
/// a FusionHead.
struct HybridImpl : ClassifierImpl {
    HybridImpl(torch::nn::AnyModule cnn, std::int64_t cnn_dim, torch::nn::AnyModule transformer,
               std::int64_t transformer_dim, std::int64_t hidden, std::int64_t classes, double dropout);
    torch::Tensor forward(const torch::Tensor& x) override;
    HybridEmbeddings forward_embeddings(const torch::Tensor& x);

    torch::nn::AnyModule cnn_any;
    torch::nn::AnyModule transformer_any;
    FusionHead fusion{nullptr};
};

using Model = std::shared_ptr<ClassifierImpl>;

/// Seeds torch's generator with `seed` and constructs the architecture.
[[nodiscard]] Model build_model(const ModelConfig& cfg, std::uint64_t seed = 0);

[[nodiscard]] Model build_densenet121_3d(const ModelConfig& cfg);
[[nodiscard]] Model build_vit3d(const ModelConfig& cfg);
[[nodiscard]] Model build_hybrid_densenet_vit(const ModelConfig& cfg);
[[nodiscard]] Model build_resnet18_3d(const ModelConfig& cfg);
[[nodiscard]] Model build_efficientnet_b0_3d(const ModelConfig& cfg);
[[nodiscard]] Model build_swin3d(const ModelConfig& cfg);
[[nodiscard]] Model build_hybrid_resnet_swin(const ModelConfig& cfg);

[[nodiscard]] std::int64_t count_parameters(const torch::nn::Module& m);

/// Softmax over logits in eval mode without autograd; (N, classes).
[[nodiscard]] torch::Tensor predict_proba(ClassifierImpl& model, const torch::Tensor& batch);

// ---- Checkpoints ----------------------------------------------------------

struct CheckpointMeta {
    ModelConfig config;
    int epoch = 0;
    double val_accuracy = 0.0;
};

/// Parameters and buffers keyed by hierarchical name plus the config.
void save_checkpoint(const torch::nn::Module& model, const CheckpointMeta& meta, const std::filesystem::path& path);

struct LoadedCheckpoint {
    Model model;
    CheckpointMeta meta;
};

/// Rebuilds the model from the stored config and restores its state.
/// Throws FormatError for unreadable or mismatched files.
[[nodiscard]] LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pasnet::models
