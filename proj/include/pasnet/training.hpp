#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pasnet/evaluation.hpp"
#include "pasnet/manifest.hpp"
#include "pasnet/models.hpp"

namespace pasnet::train {

struct PlateauConfig {
    double factor = 0.5;
    int patience = 5;
    double min_lr = 1e-6;
};

struct TrainConfig {
    double lr = 1e-4;
    int batch_size = 8;
    int epochs = 100;
    std::uint64_t seed = 0;
    PlateauConfig plateau{};
    double grad_clip = 5.0;        // global norm; 0 disables clipping
    double weight_decay = 0.0;
    /// Ends the run early once training accuracy reaches this value and a
    /// checkpoint exists. Unset runs every epoch.
    std::optional<double> stop_at_train_accuracy;
    std::size_t cache_mb = 1024;   // decoded-volume cache budget

    /// Throws ConfigError unless lr > 0, epochs >= 1, patience >= 1,
    /// batch_size >= 1 and 0 < factor < 1.
    void validate() const;
};

/// Reduce-on-plateau over a maximized metric. An epoch improves only when
/// the metric strictly exceeds the best so far; after more than `patience`
/// consecutive non-improving epochs the rate is multiplied by `factor`
/// (floored at min_lr) and the count restarts.
class PlateauScheduler {
public:
    PlateauScheduler(double initial_lr, PlateauConfig cfg);
    /// Returns true when this step lowered the rate.
    bool step(double metric);
    [[nodiscard]] double lr() const noexcept { return lr_; }
    [[nodiscard]] int bad_epochs() const noexcept { return bad_; }

private:
    double lr_;
    PlateauConfig cfg_;
    std::optional<double> best_;
    int bad_ = 0;
};

struct EpochRecord {
    int epoch = 0;   // 1-indexed
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double lr = 0.0;
};

struct TrainingLog {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;   // earliest epoch attaining best_val_accuracy
    double best_val_accuracy = -1.0;

    void write_csv(const std::filesystem::path& path) const;
};

/// Earliest 1-indexed position of the maximum; 0 for an empty list.
[[nodiscard]] int earliest_best_epoch(const std::vector<double>& val_accuracy);

/// Loads preprocessed volumes of a manifest into (N, 1, H, W, D) batches,
/// keeping decoded volumes in memory up to a byte budget.
class BatchLoader {
public:
    BatchLoader(const Manifest& manifest, std::size_t cache_bytes);

    struct Batch {
        torch::Tensor x;   // (N, 1, H, W, D) float32
        torch::Tensor y;   // (N) int64
    };
    /// Throws DataError naming the case when a volume cannot be read.
    [[nodiscard]] Batch load(const std::vector<std::size_t>& indices);
    [[nodiscard]] const Manifest& manifest() const noexcept { return manifest_; }

private:
    const Manifest& manifest_;
    std::size_t budget_;
    std::size_t used_ = 0;
    std::map<std::size_t, torch::Tensor> cache_;
};

struct SplitPredictions {
    std::vector<std::string> case_ids;
    std::vector<int> labels;
    std::vector<double> p_pas;
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Eval-mode inference over one split, in manifest order.
[[nodiscard]] SplitPredictions predict_split(models::ClassifierImpl& model, BatchLoader& loader, Split split,
                                             int batch_size);

/// Called after every epoch (for logging).
using EpochCallback = std::function<void(const EpochRecord&, bool improved)>;

struct TrainOutcome {
    TrainingLog log;
    std::filesystem::path checkpoint;
};

/// Trains on the train split, validates after each epoch and keeps the
/// checkpoint of the strictly best validation accuracy. Throws
/// TrainingDiverged on a non-finite loss and DataError when the train or
/// val split is empty.
TrainOutcome train(models::Model model, const models::ModelConfig& mcfg, const Manifest& manifest,
                   const TrainConfig& cfg, const std::filesystem::path& out_dir, const EpochCallback& on_epoch = {});

/// One optimisation epoch from freshly built weights; returns the mean
/// training loss. Used for reproducibility checks.
[[nodiscard]] double first_epoch_loss(const models::ModelConfig& mcfg, const Manifest& manifest,
                                      const TrainConfig& cfg);

struct CheckpointEvaluation {
    eval::MetricReport metrics;
    SplitPredictions predictions;
    eval::RocCurve roc;   // empty when AUC is undefined
    models::CheckpointMeta meta;
};

[[nodiscard]] CheckpointEvaluation evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                                       const Manifest& manifest, Split split, int batch_size = 8);

/// CSV `case_id,label,p_normal,p_pas`.
void write_predictions(const SplitPredictions& p, const std::filesystem::path& csv);
[[nodiscard]] SplitPredictions read_predictions(const std::filesystem::path& csv);

// ---- Campaigns ----------------------------------------------------------

struct ExperimentConfig {
    models::ModelConfig model;
    TrainConfig train;
};

/// `key = value` lines with '#' comments. Keys: arch, dropout,
/// width_multiplier, pretrained_path, input_shape, in_channels, lr,
/// batch_size, epochs, seed, plateau_factor, plateau_patience, min_lr,
/// grad_clip, weight_decay, stop_at_train_accuracy, cache_mb.
[[nodiscard]] ExperimentConfig read_config_file(const std::filesystem::path& path);
/// Applies one key; throws ConfigError for unknown keys or bad values.
void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct CellResult {
    eval::RunRecord record;
    std::optional<TrainingLog> log;
};

/// Trains one (arch, seed) cell into `run_dir` (log.csv, best.ckpt,
/// result.csv, predictions.csv) and evaluates it on the test split. A
/// diverged run yields status "failed".
CellResult run_cell(const ExperimentConfig& base, const std::string& arch, int seed, const Manifest& manifest,
                    const std::filesystem::path& run_dir, const EpochCallback& on_epoch = {});

/// `<out>/<arch>/seed_<s>`.
[[nodiscard]] std::filesystem::path run_dir_for(const std::filesystem::path& out, const std::string& arch, int seed);

/// Appends one row to an append-only runs CSV under a file lock.
void append_result(const std::filesystem::path& results_csv, const eval::RunRecord& r);

/// Every (arch, seed) cell in order. Cells already present in
/// `results_csv` are skipped, so an interrupted campaign resumes.
std::vector<eval::RunRecord> run_experiment(const ExperimentConfig& base, const std::vector<std::string>& archs,
                                            const std::vector<int>& seeds, const Manifest& manifest,
                                            const std::filesystem::path& out_dir,
                                            const std::filesystem::path& results_csv,
                                            const EpochCallback& on_epoch = {});

/// Cells of (archs x seeds) without a row in `results_csv`.
[[nodiscard]] std::vector<std::pair<std::string, int>> pending_cells(const std::vector<std::string>& archs,
                                                                     const std::vector<int>& seeds,
                                                                     const std::filesystem::path& results_csv);

}  // namespace pasnet::train
