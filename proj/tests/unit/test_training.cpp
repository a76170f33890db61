#include <doctest.h>

#include <fstream>

#include "pasnet/csv.hpp"
#include "pasnet/datamodule.hpp"
#include "pasnet/errors.hpp"
#include "pasnet/synthdata.hpp"
#include "pasnet/training.hpp"
#include "support/temp_dir.hpp"

using namespace pasnet;
using namespace pasnet::train;

namespace {

Manifest tiny_dataset(const std::filesystem::path& dir, std::size_t per_class = 6)
{
    const auto m = synth::generate_dataset(per_class, per_class, 3, dir);
    return data::stratified_split(m, data::SplitSpec{0.70, 0.10, 0.20, 3});
}

ExperimentConfig tiny_config()
{
    ExperimentConfig c;
    c.model.arch = "resnet18";
    c.model.input_shape = synth::kDefaultPhantomShape;
    c.model.width_multiplier = 0.25;
    c.train.epochs = 2;
    c.train.batch_size = 4;
    c.train.lr = 1e-3;
    return c;
}

}  // namespace

TEST_CASE("plateau scheduler halves after patience is exceeded")
{
    PlateauScheduler s(1e-4, PlateauConfig{0.5, 5, 1e-6});
    CHECK_FALSE(s.step(0.80));
    int reductions = 0;
    int first = 0;
    for (int e = 1; e <= 7; ++e) {
        if (s.step(0.70)) {
            ++reductions;
            if (!first) first = e;
        }
    }
    CHECK(reductions == 1);
    CHECK(first == 6);
    CHECK(s.lr() == doctest::Approx(5e-5));
    CHECK(s.bad_epochs() == 1);

    // An improvement resets the count; the floor stops further cuts.
    PlateauScheduler f(2e-6, PlateauConfig{0.5, 1, 1e-6});
    (void)f.step(0.1);
    (void)f.step(0.1);
    CHECK(f.step(0.1));
    CHECK(f.lr() == 1e-6);
    (void)f.step(0.1);
    CHECK_FALSE(f.step(0.1));
    CHECK_FALSE(f.step(0.2));
    CHECK(f.bad_epochs() == 0);
}

TEST_CASE("best epoch is the earliest maximum")
{
    CHECK(earliest_best_epoch({0.6, 0.8, 0.8, 0.7}) == 2);
    CHECK(earliest_best_epoch({0.5}) == 1);
    CHECK(earliest_best_epoch({}) == 0);
}

TEST_CASE("train config validation")
{
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.lr = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.plateau.factor = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config files and overrides")
{
    testing::TempDir tmp;
    const auto path = tmp / "exp.cfg";
    std::ofstream(path) << "# reduced run\narch = swin\nwidth_multiplier = 0.5\ninput_shape = 64x64x32\n"
                           "lr = 0.001   # faster\nepochs = 3\nplateau_patience = 2\nstop_at_train_accuracy = 0.99\n";
    auto cfg = read_config_file(path);
    CHECK(cfg.model.arch == "swin");
    CHECK(cfg.model.width_multiplier == 0.5);
    CHECK(cfg.model.input_shape == Shape3{64, 64, 32});
    CHECK(cfg.train.lr == 0.001);
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.train.plateau.patience == 2);
    CHECK(cfg.train.stop_at_train_accuracy == 0.99);

    apply_config_value(cfg, "epochs", "9");
    CHECK(cfg.train.epochs == 9);
    CHECK_THROWS_AS(apply_config_value(cfg, "epochs", "nine"), ConfigError);
    CHECK_THROWS_AS(apply_config_value(cfg, "optimizer", "sgd"), ConfigError);
    CHECK_THROWS_AS(apply_config_value(cfg, "input_shape", "64x64"), ConfigError);

    std::ofstream(tmp / "bad.cfg") << "arch swin\n";
    CHECK_THROWS_AS((void)read_config_file(tmp / "bad.cfg"), ConfigError);
    CHECK_THROWS_AS((void)read_config_file(tmp / "absent.cfg"), IoError);
}

TEST_CASE("batch loader stacks volumes with labels")
{
    testing::TempDir tmp;
    const auto m = tiny_dataset(tmp / "data", 2);
    BatchLoader loader(m, 1 << 20);
    const auto b = loader.load({0, 3});
    CHECK(b.x.sizes() == torch::IntArrayRef{2, 1, 64, 64, 32});
    CHECK(b.y[0].item<std::int64_t>() == m.records()[0].label);
    CHECK(b.y[1].item<std::int64_t>() == m.records()[3].label);
    CHECK(torch::equal(loader.load({0}).x[0], b.x[0]));

    std::filesystem::remove(m.records()[1].path);
    CHECK_THROWS_AS((void)loader.load({1}), DataError);
}

TEST_CASE("training writes a log and a best checkpoint that reproduces validation accuracy")
{
    testing::TempDir tmp;
    const auto m = tiny_dataset(tmp / "data");
    const auto cfg = tiny_config();
    auto model = models::build_model(cfg.model, 1);
    int calls = 0;
    const auto out = train::train(model, cfg.model, m, cfg.train, tmp / "run", [&](const EpochRecord&, bool) { ++calls; });
    CHECK(calls == 2);
    REQUIRE(out.log.epochs.size() == 2);
    CHECK(std::filesystem::exists(out.checkpoint));

    std::vector<double> val;
    for (const auto& e : out.log.epochs) {
        CHECK(std::isfinite(e.train_loss));
        CHECK(e.lr == cfg.train.lr);
        val.push_back(e.val_accuracy);
    }
    CHECK(out.log.best_epoch == earliest_best_epoch(val));

    const auto ev = evaluate_checkpoint(out.checkpoint, m, Split::Val, 4);
    CHECK(ev.meta.epoch == out.log.best_epoch);
    CHECK(ev.metrics.accuracy == out.log.best_val_accuracy);
    CHECK(ev.predictions.labels.size() == m.count(Split::Val));

    const auto log = read_csv(tmp / "run" / "log.csv");
    CHECK(log.rows.size() == 2);
    CHECK(log.column("val_accuracy").has_value());

    write_predictions(ev.predictions, tmp / "pred.csv");
    const auto back = read_predictions(tmp / "pred.csv");
    CHECK(back.case_ids == ev.predictions.case_ids);
    CHECK(back.labels == ev.predictions.labels);
}

TEST_CASE("first-epoch loss is reproducible")
{
    testing::TempDir tmp;
    const auto m = tiny_dataset(tmp / "data");
    auto cfg = tiny_config();
    cfg.model.arch = "densenet121_vit";
    const double a = first_epoch_loss(cfg.model, m, cfg.train);
    const double b = first_epoch_loss(cfg.model, m, cfg.train);
    CHECK(std::isfinite(a));
    CHECK(a == b);
}

TEST_CASE("training needs train and validation records")
{
    testing::TempDir tmp;
    auto m = tiny_dataset(tmp / "data", 2);
    std::vector<CaseRecord> recs = m.records();
    for (auto& r : recs) {
        if (r.split == Split::Val) r.split = Split::Test;
    }
    const auto cfg = tiny_config();
    CHECK_THROWS_AS(train::train(models::build_model(cfg.model), cfg.model, m.with_records(recs), cfg.train, tmp / "run"),
                    DataError);
}

TEST_CASE("campaigns resume from the results table")
{
    testing::TempDir tmp;
    const auto m = tiny_dataset(tmp / "data");
    auto cfg = tiny_config();
    cfg.train.epochs = 1;
    const auto results = tmp / "runs.csv";
    CHECK(pending_cells({"resnet18"}, {0, 1}, results).size() == 2);

    const auto first = run_experiment(cfg, {"resnet18"}, {0}, m, tmp / "out", results);
    REQUIRE(first.size() == 1);
    CHECK(first[0].status == "ok");
    CHECK(std::filesystem::exists(run_dir_for(tmp / "out", "resnet18", 0) / "best.ckpt"));
    CHECK(std::filesystem::exists(run_dir_for(tmp / "out", "resnet18", 0) / "predictions.csv"));

    const auto pending = pending_cells({"resnet18"}, {0, 1}, results);
    REQUIRE(pending.size() == 1);
    CHECK(pending[0] == std::pair<std::string, int>{"resnet18", 1});

    const auto both = run_experiment(cfg, {"resnet18"}, {0, 1}, m, tmp / "out", results);
    CHECK(both.size() == 2);
    CHECK(eval::read_runs(results).size() == 2);
}
