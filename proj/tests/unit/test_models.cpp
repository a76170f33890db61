#include <doctest.h>

#include <fstream>

#include "pasnet/errors.hpp"
#include "pasnet/models.hpp"
#include "support/temp_dir.hpp"

using namespace pasnet;
using namespace pasnet::models;

namespace {

ModelConfig reduced(const std::string& arch, Shape3 input = {64, 64, 32})
{
    ModelConfig c;
    c.arch = arch;
    c.input_shape = input;
    c.width_multiplier = 0.25;
    return c;
}

torch::Tensor input_for(const ModelConfig& c, std::int64_t n, std::uint64_t seed = 1)
{
    torch::manual_seed(seed);
    return torch::rand({n, 1, c.input_shape.h, c.input_shape.w, c.input_shape.d});
}

}  // namespace

TEST_CASE("patchify token count and ordering")
{
    CHECK(patchify(torch::zeros({1, 1, 128, 128, 64})).sizes() == torch::IntArrayRef{1, 256, 4096});
    CHECK(patchify(torch::zeros({2, 1, 64, 64, 32})).sizes() == torch::IntArrayRef{2, 32, 4096});
    CHECK_THROWS_AS((void)patchify(torch::zeros({1, 1, 64, 64, 40})), ConfigError);

    const auto ones = patchify(torch::ones({1, 1, 32, 32, 32}));
    CHECK(torch::equal(ones[0][0], ones[0][7]));

    // Token t covers block (t / 4, (t / 2) % 2, t % 2) of a 2x2x2 grid, voxels
    // flattened with depth fastest.
    const auto x = torch::arange(32 * 32 * 32, torch::kFloat32).reshape({1, 1, 32, 32, 32});
    const auto p = patchify(x);
    for (std::int64_t t = 0; t < 8; ++t) {
        const auto bi = t / 4, bj = (t / 2) % 2, bk = t % 2;
        const auto block = x[0][0]
                               .slice(0, bi * 16, bi * 16 + 16)
                               .slice(1, bj * 16, bj * 16 + 16)
                               .slice(2, bk * 16, bk * 16 + 16)
                               .reshape({-1});
        CHECK(torch::equal(p[0][t], block));
    }
}

TEST_CASE("parameter counting")
{
    CHECK(count_parameters(*torch::nn::Linear(4096, 768)) == 4096 * 768 + 768);
    CHECK(4096 * 768 + 768 == 3'146'496);

    // Transformer stack: per block qkv 3d^2+3d, projection d^2+d, MLP 2dm+m+d,
    // two layer norms 4d.
    Vit3dOptions o;
    VitTrunk vit(o);
    const std::int64_t d = 768, m = 3072;
    const std::int64_t per_block = 4 * d * d + 2 * d * m + (3 * d + d + m + d) + 4 * d;
    CHECK(count_parameters(*vit->blocks) == 12 * per_block);
    CHECK(vit->num_tokens() == 256);
    CHECK(vit->pos_embed.size(1) == 257);

    auto model = build_model(reduced("resnet18"));
    CHECK(count_parameters(*model) > 0);
    for (auto& p : model->parameters()) p.set_requires_grad(false);
    CHECK(count_parameters(*model) == 0);
}

TEST_CASE("DenseNet trunk follows the canonical 121-layer configuration")
{
    DenseNetTrunk t(DenseNet3dOptions{});
    CHECK(t->feature_dim == 1024);
    CHECK(t->fc->options.out_features() == 128);
    std::size_t layers = 0;
    for (const auto& m : t->named_modules()) {
        const auto leaf = m.key().substr(m.key().rfind('.') + 1);
        layers += leaf.rfind("denselayer", 0) == 0;
    }
    CHECK(layers == 6 + 12 + 24 + 16);
}

TEST_CASE("every architecture maps a batch to two logits")
{
    torch::NoGradGuard guard;
    for (const auto& arch : kArchNames) {
        CAPTURE(arch);
        const auto cfg = reduced(arch, {128, 128, 64});
        auto model = build_model(cfg);
        model->eval();
        for (const std::int64_t n : {1, 8}) {
            const auto y = model->forward(input_for(cfg, n));
            CHECK(y.sizes() == torch::IntArrayRef{n, 2});
            CHECK(torch::isfinite(y).all().item<bool>());
        }
    }
}

TEST_CASE("hybrid embeddings scale with the width multiplier")
{
    torch::NoGradGuard guard;
    const auto cfg = reduced("densenet121_vit");
    auto model = std::dynamic_pointer_cast<HybridImpl>(build_model(cfg));
    REQUIRE(model);
    model->eval();
    const auto e = model->forward_embeddings(input_for(cfg, 2));
    CHECK(e.cnn.size(1) == 32);
    CHECK(e.vit.size(1) == 192);
    CHECK(e.fused.size(1) == 224);
    CHECK(torch::equal(e.fused, torch::cat({e.cnn, e.vit}, 1)));
    CHECK(torch::equal(e.logits, model->forward(input_for(cfg, 2))));
}

TEST_CASE("eval is deterministic and training-mode dropout is not")
{
    const auto cfg = reduced("densenet121_vit");
    auto model = build_model(cfg);
    const auto x = input_for(cfg, 2);
    {
        torch::NoGradGuard guard;
        model->eval();
        CHECK(torch::equal(model->forward(x), model->forward(x)));
        model->train();
        CHECK_FALSE(torch::equal(model->forward(x), model->forward(x)));
    }
    const auto p = predict_proba(*model, x);
    CHECK(model->is_training());
    CHECK(torch::allclose(p.sum(1), torch::ones({2}), 0.0, 1e-6));
}

TEST_CASE("build_model is reproducible per seed")
{
    const auto cfg = reduced("swin");
    auto a = build_model(cfg, 3);
    auto b = build_model(cfg, 3);
    auto c = build_model(cfg, 4);
    const auto pa = a->parameters(), pb = b->parameters(), pc = c->parameters();
    bool same = true, differs = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        same = same && torch::equal(pa[i], pb[i]);
        differs = differs || !torch::equal(pa[i], pc[i]);
    }
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("every parameter of each reduced model receives gradient")
{
    for (const auto& arch : kArchNames) {
        CAPTURE(arch);
        const auto cfg = reduced(arch);
        auto model = build_model(cfg, 2);
        model->train();
        const auto y = torch::tensor({0, 1, 1, 0}, torch::kInt64);
        torch::nn::functional::cross_entropy(model->forward(input_for(cfg, 4, 9)), y).backward();
        for (const auto& p : model->named_parameters(true)) {
            CAPTURE(p.key());
            REQUIRE(p.value().grad().defined());
            CHECK(p.value().grad().norm().item<double>() > 0.0);
        }
    }
}

TEST_CASE("fusion head gradients match central differences")
{
    torch::manual_seed(8);
    FusionHead head(8, 4, 2, 0.0);
    head->to(torch::kFloat64);
    const auto x = torch::randn({5, 8}, torch::kFloat64);
    const auto y = torch::tensor({0, 1, 1, 0, 1}, torch::kInt64);
    const auto loss = [&] { return torch::nn::functional::cross_entropy(head->forward(x), y); };
    loss().backward();
    torch::NoGradGuard guard;
    for (auto& p : head->parameters()) {
        auto flat = p.view({-1});
        const auto g = p.grad().view({-1});
        for (std::int64_t i = 0; i < flat.numel(); ++i) {
            const double orig = flat[i].item<double>();
            flat[i] = orig + 1e-6;
            const double up = loss().item<double>();
            flat[i] = orig - 1e-6;
            const double down = loss().item<double>();
            flat[i] = orig;
            const double numeric = (up - down) / 2e-6;
            const double analytic = g[i].item<double>();
            CHECK(std::abs(analytic - numeric) <= 1e-4 * std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
        }
    }
}

TEST_CASE("model config validation and round trip")
{
    ModelConfig c = reduced("vit");
    c.dropout = 0.3;
    c.pretrained_path = "/weights/r18.pth";
    const auto back = ModelConfig::parse(c.serialize());
    CHECK(back.arch == c.arch);
    CHECK(back.input_shape == c.input_shape);
    CHECK(back.width_multiplier == c.width_multiplier);
    CHECK(back.dropout == c.dropout);
    CHECK(back.pretrained_path == c.pretrained_path);

    CHECK(default_dropout("densenet121_vit") == 0.5);
    CHECK(default_dropout("resnet18") == 0.1);
    CHECK(ModelConfig{}.effective_dropout() == 0.5);

    ModelConfig bad;
    bad.arch = "alexnet";
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ModelConfig{};
    bad.dropout = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ModelConfig{};
    bad.input_shape = {120, 128, 64};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.arch = "densenet121";
    CHECK_NOTHROW(bad.validate());
    CHECK_THROWS_AS((void)ModelConfig::parse("arch=vit\ncolour=blue\n"), FormatError);
}

TEST_CASE("checkpoints restore identical predictions")
{
    testing::TempDir tmp;
    const auto cfg = reduced("resnet18_swin");
    auto model = build_model(cfg, 5);
    {
        // Move batch-norm statistics away from their initial values.
        torch::NoGradGuard guard;
        model->train();
        (void)model->forward(input_for(cfg, 3, 4));
    }
    const auto path = tmp / "best.ckpt";
    save_checkpoint(*model, {cfg, 7, 0.875}, path);
    const auto loaded = load_checkpoint(path);
    CHECK(loaded.meta.epoch == 7);
    CHECK(loaded.meta.val_accuracy == 0.875);
    CHECK(loaded.meta.config.arch == "resnet18_swin");
    model->eval();
    loaded.model->eval();
    torch::NoGradGuard guard;
    const auto x = input_for(cfg, 2, 11);
    CHECK(torch::equal(model->forward(x), loaded.model->forward(x)));

    CHECK_THROWS_AS((void)load_checkpoint(tmp / "missing.ckpt"), IoError);
    {
        std::ofstream(tmp / "junk.ckpt") << "not a checkpoint";
    }
    CHECK_THROWS_AS((void)load_checkpoint(tmp / "junk.ckpt"), FormatError);
}

TEST_CASE("pretrained ResNet18 weights load by name and skip the head")
{
    testing::TempDir tmp;
    torch::manual_seed(1);
    ResNet18Trunk source(1, 0.25, 32);
    c10::Dict<std::string, torch::Tensor> state;
    for (const auto& p : source->named_parameters(true)) state.insert("module." + p.key(), p.value().detach());
    for (const auto& b : source->named_buffers(true)) state.insert("module." + b.key(), b.value());
    state.insert("module.extra.weight", torch::zeros({3}));
    c10::impl::GenericDict root(c10::StringType::get(), c10::AnyType::get());
    root.insert("state_dict", c10::IValue(state));
    const auto bytes = torch::pickle_save(c10::IValue(root));
    const auto path = tmp / "r18.pth";
    std::ofstream(path, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));

    torch::manual_seed(2);
    ResNet18Trunk target(1, 0.25, 32);
    const auto report = load_pretrained_resnet18(*target, path);
    CHECK(std::find(report.skipped.begin(), report.skipped.end(), "fc.weight") != report.skipped.end());
    CHECK(std::find(report.skipped.begin(), report.skipped.end(), "extra.weight") != report.skipped.end());
    CHECK(torch::equal(target->conv1->weight, source->conv1->weight));
    CHECK(torch::equal(target->layer4->named_parameters()["1.bn2.weight"],
                       source->layer4->named_parameters()["1.bn2.weight"]));
    CHECK_FALSE(torch::equal(target->fc->weight, source->fc->weight));

    ModelConfig cfg = reduced("resnet18");
    cfg.pretrained_path = path;
    CHECK_NOTHROW((void)build_model(cfg));
    cfg.pretrained_path = tmp / "absent.pth";
    CHECK_THROWS_AS((void)build_model(cfg), IoError);
}
