#include <cmath>

#include "pasnet/csv.hpp"
#include "pasnet/datamodule.hpp"
#include "pasnet/errors.hpp"
#include "pasnet/training.hpp"

namespace pasnet::train {

void TrainConfig::validate() const
{
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (plateau.patience < 1) throw ConfigError("plateau patience must be at least 1");
    if (!(plateau.factor > 0.0 && plateau.factor < 1.0)) throw ConfigError("plateau factor must lie in (0, 1)");
    if (!(plateau.min_lr >= 0.0)) throw ConfigError("min_lr must be non-negative");
    if (grad_clip < 0.0) throw ConfigError("grad_clip must be non-negative");
}

PlateauScheduler::PlateauScheduler(double initial_lr, PlateauConfig cfg) : lr_(initial_lr), cfg_(cfg) {}

bool PlateauScheduler::step(double metric)
{
    if (!best_ || metric > *best_) {
        best_ = metric;
        bad_ = 0;
        return false;
    }
    if (++bad_ <= cfg_.patience) return false;
    bad_ = 0;
    const double next = std::max(lr_ * cfg_.factor, cfg_.min_lr);
    const bool reduced = next < lr_;
    lr_ = next;
    return reduced;
}

int earliest_best_epoch(const std::vector<double>& val_accuracy)
{
    int best = 0;
    for (std::size_t i = 0; i < val_accuracy.size(); ++i) {
        if (best == 0 || val_accuracy[i] > val_accuracy[static_cast<std::size_t>(best - 1)]) best = static_cast<int>(i + 1);
    }
    return best;
}

void TrainingLog::write_csv(const std::filesystem::path& path) const
{
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : epochs) {
        rows.push_back({std::to_string(e.epoch), format_double(e.train_loss), format_double(e.train_accuracy),
                        format_double(e.val_loss), format_double(e.val_accuracy), format_double(e.lr)});
    }
    pasnet::write_csv(path, {"epoch", "train_loss", "train_accuracy", "val_loss", "val_accuracy", "lr"}, rows,
                      {{"best_epoch", std::to_string(best_epoch)}, {"best_val_accuracy", format_double(best_val_accuracy)}});
}

namespace {

// A lone trailing sample cannot pass through batch norm on a 1x1x1 feature
// map, so it joins the previous batch.
std::vector<std::vector<std::size_t>> train_batches(const Manifest& m, const TrainConfig& cfg, int epoch)
{
    auto batches = data::plan_epoch(m, Split::Train, static_cast<std::size_t>(cfg.batch_size), true, cfg.seed,
                                    static_cast<std::uint64_t>(epoch - 1));
    if (batches.size() > 1 && batches.back().size() == 1) {
        batches[batches.size() - 2].push_back(batches.back().front());
        batches.pop_back();
    }
    return batches;
}

struct EpochStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

EpochStats run_epoch(models::ClassifierImpl& model, torch::optim::Optimizer& opt, BatchLoader& loader,
                     const TrainConfig& cfg, int epoch)
{
    model.train();
    double loss_sum = 0.0;
    std::int64_t correct = 0, seen = 0;
    const auto batches = train_batches(loader.manifest(), cfg, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
        auto batch = loader.load(batches[b]);
        auto logits = model.forward(batch.x);
        auto loss = torch::nn::functional::cross_entropy(logits, batch.y);
        const double lv = loss.item<double>();
        if (!std::isfinite(lv)) {
            throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b + 1));
        }
        opt.zero_grad();
        loss.backward();
        if (cfg.grad_clip > 0.0) torch::nn::utils::clip_grad_norm_(model.parameters(), cfg.grad_clip);
        opt.step();
        const auto n = batch.y.size(0);
        loss_sum += lv * static_cast<double>(n);
        correct += (logits.argmax(1) == batch.y).sum().item<std::int64_t>();
        seen += n;
    }
    return {loss_sum / static_cast<double>(seen), static_cast<double>(correct) / static_cast<double>(seen)};
}

void set_lr(torch::optim::Optimizer& opt, double lr)
{
    for (auto& g : opt.param_groups()) static_cast<torch::optim::AdamOptions&>(g.options()).lr(lr);
}

void require_splits(const Manifest& m)
{
    if (m.count(Split::Train) == 0) throw DataError("manifest has no training records");
    if (m.count(Split::Val) == 0) throw DataError("manifest has no validation records");
}

void make_deterministic(std::uint64_t seed)
{
    at::globalContext().setDeterministicAlgorithms(true, /*warn_only=*/true);
    torch::manual_seed(seed);
}

}  // namespace

SplitPredictions predict_split(models::ClassifierImpl& model, BatchLoader& loader, Split split, int batch_size)
{
    torch::NoGradGuard guard;
    const bool was_training = model.is_training();
    model.eval();
    SplitPredictions out;
    std::int64_t correct = 0;
    double loss_sum = 0.0;
    const auto& recs = loader.manifest().records();
    for (const auto& batch_idx :
         data::plan_epoch(loader.manifest(), split, static_cast<std::size_t>(batch_size), false, 0, 0)) {
        auto batch = loader.load(batch_idx);
        auto logits = model.forward(batch.x);
        loss_sum += torch::nn::functional::cross_entropy(
                        logits, batch.y, torch::nn::functional::CrossEntropyFuncOptions().reduction(torch::kSum))
                        .item<double>();
        auto prob = torch::softmax(logits.to(torch::kFloat64), 1).contiguous();
        auto pa = prob.accessor<double, 2>();
        for (std::size_t i = 0; i < batch_idx.size(); ++i) {
            const auto& r = recs[batch_idx[i]];
            out.case_ids.push_back(r.case_id);
            out.labels.push_back(r.label);
            out.p_pas.push_back(pa[static_cast<std::int64_t>(i)][1]);
            correct += eval::argmax_label(pa[static_cast<std::int64_t>(i)][0], pa[static_cast<std::int64_t>(i)][1]) ==
                       r.label;
        }
    }
    if (!out.labels.empty()) {
        out.accuracy = static_cast<double>(correct) / static_cast<double>(out.labels.size());
        out.loss = loss_sum / static_cast<double>(out.labels.size());
    }
    if (was_training) model.train();
    return out;
}

TrainOutcome train(models::Model model, const models::ModelConfig& mcfg, const Manifest& manifest,
                   const TrainConfig& cfg, const std::filesystem::path& out_dir, const EpochCallback& on_epoch)
{
    cfg.validate();
    require_splits(manifest);
    make_deterministic(cfg.seed);
    std::filesystem::create_directories(out_dir);

    BatchLoader loader(manifest, cfg.cache_mb << 20);
    torch::optim::Adam opt(model->parameters(), torch::optim::AdamOptions(cfg.lr).weight_decay(cfg.weight_decay));
    PlateauScheduler sched(cfg.lr, cfg.plateau);

    TrainOutcome out;
    out.checkpoint = out_dir / "best.ckpt";
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = sched.lr();
        const auto stats = run_epoch(*model, opt, loader, cfg, epoch);
        rec.train_loss = stats.loss;
        rec.train_accuracy = stats.accuracy;
        const auto val = predict_split(*model, loader, Split::Val, cfg.batch_size);
        rec.val_loss = val.loss;
        rec.val_accuracy = val.accuracy;

        const bool improved = rec.val_accuracy > out.log.best_val_accuracy;
        if (improved) {
            out.log.best_val_accuracy = rec.val_accuracy;
            out.log.best_epoch = epoch;
            models::save_checkpoint(*model, {mcfg, epoch, rec.val_accuracy}, out.checkpoint);
        }
        out.log.epochs.push_back(rec);
        out.log.write_csv(out_dir / "log.csv");
        if (on_epoch) on_epoch(rec, improved);

        if (sched.step(rec.val_accuracy)) set_lr(opt, sched.lr());
        if (cfg.stop_at_train_accuracy && rec.train_accuracy >= *cfg.stop_at_train_accuracy) break;
    }
    return out;
}

double first_epoch_loss(const models::ModelConfig& mcfg, const Manifest& manifest, const TrainConfig& cfg)
{
    cfg.validate();
    require_splits(manifest);
    auto model = models::build_model(mcfg, cfg.seed);
    make_deterministic(cfg.seed);
    BatchLoader loader(manifest, cfg.cache_mb << 20);
    torch::optim::Adam opt(model->parameters(), torch::optim::AdamOptions(cfg.lr).weight_decay(cfg.weight_decay));
    return run_epoch(*model, opt, loader, cfg, 1).loss;
}

CheckpointEvaluation evaluate_checkpoint(const std::filesystem::path& checkpoint, const Manifest& manifest, Split split,
                                         int batch_size)
{
    auto loaded = models::load_checkpoint(checkpoint);
    if (manifest.count(split) == 0) throw DataError("manifest has no " + std::string(to_string(split)) + " records");
    BatchLoader loader(manifest, 0);
    CheckpointEvaluation out;
    out.meta = loaded.meta;
    out.predictions = predict_split(*loaded.model, loader, split, batch_size);
    out.metrics = eval::evaluate_scores(out.predictions.labels, out.predictions.p_pas);
    if (out.metrics.auc) out.roc = eval::roc_auc(out.predictions.labels, out.predictions.p_pas).curve;
    return out;
}

void write_predictions(const SplitPredictions& p, const std::filesystem::path& csv)
{
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < p.case_ids.size(); ++i) {
        rows.push_back({p.case_ids[i], std::to_string(p.labels[i]), format_double(1.0 - p.p_pas[i]),
                        format_double(p.p_pas[i])});
    }
    write_csv(csv, {"case_id", "label", "p_normal", "p_pas"}, rows);
}

SplitPredictions read_predictions(const std::filesystem::path& csv)
{
    const auto t = read_csv(csv);
    const auto ci = t.require_column("case_id", csv.string());
    const auto cl = t.require_column("label", csv.string());
    const auto cp = t.require_column("p_pas", csv.string());
    SplitPredictions p;
    for (const auto& r : t.rows) {
        p.case_ids.push_back(r[ci]);
        p.labels.push_back(std::stoi(r[cl]));
        p.p_pas.push_back(parse_double(r[cp]));
    }
    return p;
}

}  // namespace pasnet::train
