#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pasnet::eval {

/// Binary confusion counts; class 1 (PAS) is the positive class.
struct ConfusionMatrix {
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tp = 0;

    [[nodiscard]] std::size_t total() const noexcept { return tn + fp + fn + tp; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct MetricReport {
    double accuracy = 0.0;
    std::optional<double> auc;   // missing when only one class is present
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
};

struct RocCurve {
    std::vector<double> thresholds;   // descending; the first is +inf
    std::vector<double> fpr;
    std::vector<double> tpr;
};

/// Predicted class from two class probabilities; exact ties go to class 0.
[[nodiscard]] int argmax_label(double p0, double p1) noexcept;

/// Throws std::invalid_argument on length mismatch or labels outside {0,1}.
[[nodiscard]] ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

/// Accuracy plus per-class precision/recall/F1 averaged over both classes.
/// Any 0/0 ratio is taken as 0. The returned report has no AUC.
[[nodiscard]] MetricReport macro_metrics(const ConfusionMatrix& cm);

/// ROC over thresholds at every distinct score (score >= threshold is
/// positive) and its trapezoidal area, which equals the probability that a
/// random positive outscores a random negative with ties counting one half.
/// Throws MetricUndefined when y_true holds a single class.
struct RocResult {
    RocCurve curve;
    double auc = 0.0;
};
[[nodiscard]] RocResult roc_auc(std::span<const int> y_true, std::span<const double> scores);

/// Confusion from argmax of (1 - p1, p1), macro metrics, and AUC when defined.
[[nodiscard]] MetricReport evaluate_scores(std::span<const int> y_true, std::span<const double> p1);

/// One cell of a runs table: metrics of model `model` at seed `seed`.
struct RunRecord {
    std::string model;
    int seed = 0;
    MetricReport metrics;
    std::string status = "ok";          // "ok" or "failed"
    std::filesystem::path checkpoint;
};

struct Summary {
    double best = 0.0;
    double mean = 0.0;
    std::optional<double> sd;            // sample SD, missing for one run
    std::size_t n = 0;
};

/// Summary per model (in first-seen order) and metric name
/// (accuracy, auc, precision_macro, recall_macro, f1_macro). Failed runs and
/// missing values are skipped.
struct AggregateRow {
    std::string model;
    std::map<std::string, Summary> metrics;
};
[[nodiscard]] std::vector<AggregateRow> aggregate_runs(const std::vector<RunRecord>& runs);
[[nodiscard]] Summary summarize(std::span<const double> values);

inline const std::vector<std::string> kMetricNames{"accuracy", "auc", "precision_macro", "recall_macro", "f1_macro"};

/// `best (mean ± sd)`; accuracy in percent with one decimal, the rest with
/// three decimals. A missing SD prints as "n/a".
[[nodiscard]] std::string format_summary(const std::string& metric, const Summary& s);

/// Run whose test accuracy is highest, ties broken by AUC then input order.
[[nodiscard]] std::optional<std::size_t> best_run(const std::vector<RunRecord>& runs, const std::string& model);

/// CSV `model,seed,accuracy,auc,precision_macro,recall_macro,f1_macro[,status,checkpoint]`.
[[nodiscard]] std::vector<RunRecord> read_runs(const std::filesystem::path& csv);
void write_runs(const std::vector<RunRecord>& runs, const std::filesystem::path& csv);
[[nodiscard]] std::vector<std::string> run_csv_header();
[[nodiscard]] std::vector<std::string> run_csv_row(const RunRecord& r);

/// Table-4 style text and CSV (`model,metric,best,mean,sd,n,formatted`).
[[nodiscard]] std::string render_table(const std::vector<AggregateRow>& rows);
void write_table_csv(const std::vector<AggregateRow>& rows, const std::filesystem::path& csv);

struct NamedCurve {
    std::string name;
    RocCurve curve;
    double auc = 0.0;
};

/// Writes an SVG line plot (one series per model, AUC in the legend) to
/// `svg` and the curve points to the sibling `<stem>.csv`
/// (`model,threshold,fpr,tpr`). Returns the SVG path.
std::filesystem::path emit_roc_plot(const std::vector<NamedCurve>& curves, const std::filesystem::path& svg);

}  // namespace pasnet::eval
