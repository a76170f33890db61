#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pasnet/csv.hpp"
#include "pasnet/errors.hpp"
#include "pasnet/evaluation.hpp"

namespace pasnet::eval {

int argmax_label(double p0, double p1) noexcept
{
    return p1 > p0 ? 1 : 0;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred)
{
    if (y_true.size() != y_pred.size()) throw std::invalid_argument("confusion: length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if ((t != 0 && t != 1) || (p != 0 && p != 1)) throw std::invalid_argument("confusion: labels must be 0 or 1");
        if (t == 0) (p == 0 ? cm.tn : cm.fp)++;
        else (p == 0 ? cm.fn : cm.tp)++;
    }
    return cm;
}

namespace {

double ratio(std::size_t num, std::size_t den)
{
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1(double precision, double recall)
{
    return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

}  // namespace

MetricReport macro_metrics(const ConfusionMatrix& cm)
{
    MetricReport r;
    r.accuracy = ratio(cm.tn + cm.tp, cm.total());
    // class 0 treats "negative" as the positive outcome
    const double p0 = ratio(cm.tn, cm.tn + cm.fn);
    const double r0 = ratio(cm.tn, cm.tn + cm.fp);
    const double p1 = ratio(cm.tp, cm.tp + cm.fp);
    const double r1 = ratio(cm.tp, cm.tp + cm.fn);
    r.precision_macro = (p0 + p1) / 2.0;
    r.recall_macro = (r0 + r1) / 2.0;
    r.f1_macro = (f1(p0, r0) + f1(p1, r1)) / 2.0;
    return r;
}

RocResult roc_auc(std::span<const int> y_true, std::span<const double> scores)
{
    if (y_true.size() != scores.size()) throw std::invalid_argument("roc_auc: length mismatch");
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    for (const int y : y_true) {
        if (y == 1) ++pos;
        else if (y == 0) ++neg;
        else throw std::invalid_argument("roc_auc: labels must be 0 or 1");
    }
    if (pos == 0 || neg == 0) throw MetricUndefined("AUC is undefined when only one class is present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult out;
    out.curve.thresholds.push_back(std::numeric_limits<double>::infinity());
    out.curve.fpr.push_back(0.0);
    out.curve.tpr.push_back(0.0);

    // Twice the area times pos*neg, accumulated exactly in integers.
    std::uint64_t twice_area = 0;
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        std::uint64_t dp = 0;
        std::uint64_t dn = 0;
        for (; i < order.size() && scores[order[i]] == s; ++i) (y_true[order[i]] == 1 ? dp : dn)++;
        twice_area += dn * (2 * tp + dp);
        tp += dp;
        fp += dn;
        out.curve.thresholds.push_back(s);
        out.curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
        out.curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
    }
    out.auc = static_cast<double>(twice_area) / static_cast<double>(2 * pos * neg);
    return out;
}

MetricReport evaluate_scores(std::span<const int> y_true, std::span<const double> p1)
{
    std::vector<int> pred(p1.size());
    for (std::size_t i = 0; i < p1.size(); ++i) pred[i] = argmax_label(1.0 - p1[i], p1[i]);
    MetricReport r = macro_metrics(confusion(y_true, pred));
    try {
        r.auc = roc_auc(y_true, p1).auc;
    } catch (const MetricUndefined&) {
        r.auc.reset();
    }
    return r;
}

Summary summarize(std::span<const double> values)
{
    Summary s;
    s.n = values.size();
    if (values.empty()) return s;
    s.best = *std::max_element(values.begin(), values.end());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1 && std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) {
        s.sd = 0.0;
    } else if (values.size() > 1) {
        double ss = 0.0;
        for (const double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

namespace {

std::optional<double> metric_value(const MetricReport& m, const std::string& name)
{
    if (name == "accuracy") return m.accuracy;
    if (name == "auc") return m.auc;
    if (name == "precision_macro") return m.precision_macro;
    if (name == "recall_macro") return m.recall_macro;
    if (name == "f1_macro") return m.f1_macro;
    throw std::invalid_argument("unknown metric '" + name + "'");
}

}  // namespace

std::vector<AggregateRow> aggregate_runs(const std::vector<RunRecord>& runs)
{
    std::vector<AggregateRow> rows;
    for (const auto& r : runs) {
        if (std::none_of(rows.begin(), rows.end(), [&](const AggregateRow& a) { return a.model == r.model; })) {
            rows.push_back({r.model, {}});
        }
    }
    for (auto& row : rows) {
        for (const auto& metric : kMetricNames) {
            std::vector<double> values;
            for (const auto& r : runs) {
                if (r.model != row.model || r.status != "ok") continue;
                const auto v = metric_value(r.metrics, metric);
                if (v && std::isfinite(*v)) values.push_back(*v);
            }
            row.metrics[metric] = summarize(values);
        }
    }
    return rows;
}

std::string format_summary(const std::string& metric, const Summary& s)
{
    if (s.n == 0) return "n/a";
    const bool percent = metric == "accuracy";
    const double k = percent ? 100.0 : 1.0;
    const char* fmt = percent ? "%.1f" : "%.3f";
    const auto num = [&](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), fmt, v * k);
        return std::string(buf);
    };
    return num(s.best) + " (" + num(s.mean) + " ± " + (s.sd ? num(*s.sd) : std::string("n/a")) + ")";
}

std::optional<std::size_t> best_run(const std::vector<RunRecord>& runs, const std::string& model)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        if (r.model != model || r.status != "ok") continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = runs[*best];
        const double auc_r = r.metrics.auc.value_or(-1.0);
        const double auc_b = b.metrics.auc.value_or(-1.0);
        if (r.metrics.accuracy > b.metrics.accuracy || (r.metrics.accuracy == b.metrics.accuracy && auc_r > auc_b)) {
            best = i;
        }
    }
    return best;
}

std::vector<std::string> run_csv_header()
{
    return {"model", "seed", "accuracy", "auc", "precision_macro", "recall_macro", "f1_macro", "status", "checkpoint"};
}

std::vector<std::string> run_csv_row(const RunRecord& r)
{
    const auto& m = r.metrics;
    return {r.model,
            std::to_string(r.seed),
            format_double(m.accuracy),
            m.auc ? format_double(*m.auc) : "nan",
            format_double(m.precision_macro),
            format_double(m.recall_macro),
            format_double(m.f1_macro),
            r.status,
            r.checkpoint.string()};
}

std::vector<RunRecord> read_runs(const std::filesystem::path& csv)
{
    const CsvTable t = read_csv(csv);
    const auto src = csv.string();
    const auto c_model = t.require_column("model", src);
    const auto c_seed = t.require_column("seed", src);
    std::map<std::string, std::size_t> cols;
    for (const auto& m : kMetricNames) cols[m] = t.require_column(m, src);
    const auto c_status = t.column("status");
    const auto c_ckpt = t.column("checkpoint");
    std::vector<RunRecord> out;
    for (const auto& row : t.rows) {
        RunRecord r;
        r.model = row[c_model];
        r.seed = std::stoi(row[c_seed]);
        r.metrics.accuracy = parse_double(row[cols["accuracy"]]);
        const double auc = parse_double(row[cols["auc"]]);
        if (std::isfinite(auc)) r.metrics.auc = auc;
        r.metrics.precision_macro = parse_double(row[cols["precision_macro"]]);
        r.metrics.recall_macro = parse_double(row[cols["recall_macro"]]);
        r.metrics.f1_macro = parse_double(row[cols["f1_macro"]]);
        if (c_status) r.status = row[*c_status];
        if (c_ckpt) r.checkpoint = row[*c_ckpt];
        out.push_back(std::move(r));
    }
    return out;
}

void write_runs(const std::vector<RunRecord>& runs, const std::filesystem::path& csv)
{
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : runs) rows.push_back(run_csv_row(r));
    write_csv(csv, run_csv_header(), rows);
}

std::string render_table(const std::vector<AggregateRow>& rows)
{
    static const std::vector<std::string> titles{"Accuracy (%)", "AUC", "Precision", "Recall", "F1-Score"};
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"Model"});
    cells.back().insert(cells.back().end(), titles.begin(), titles.end());
    for (const auto& row : rows) {
        std::vector<std::string> line{row.model};
        for (const auto& m : kMetricNames) line.push_back(format_summary(m, row.metrics.at(m)));
        cells.push_back(std::move(line));
    }
    // Display width: count UTF-8 code points.
    const auto width = [](const std::string& s) {
        return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
    };
    std::vector<std::size_t> widths(cells.front().size(), 0);
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], width(line[c]));
    }
    std::ostringstream out;
    for (std::size_t l = 0; l < cells.size(); ++l) {
        for (std::size_t c = 0; c < cells[l].size(); ++c) {
            out << cells[l][c] << std::string(widths[c] - width(cells[l][c]) + (c + 1 < cells[l].size() ? 2 : 0), ' ');
        }
        out << '\n';
        if (l == 0) {
            std::size_t total = 0;
            for (const auto w : widths) total += w + 2;
            out << std::string(total - 2, '-') << '\n';
        }
    }
    out << "Values are best (mean ± SD) across runs.\n";
    return out.str();
}

void write_table_csv(const std::vector<AggregateRow>& rows, const std::filesystem::path& csv)
{
    std::vector<std::vector<std::string>> out;
    for (const auto& row : rows) {
        for (const auto& m : kMetricNames) {
            const Summary& s = row.metrics.at(m);
            out.push_back({row.model, m, s.n ? format_double(s.best) : "nan", s.n ? format_double(s.mean) : "nan",
                           s.sd ? format_double(*s.sd) : "nan", std::to_string(s.n), format_summary(m, s)});
        }
    }
    write_csv(csv, {"model", "metric", "best", "mean", "sd", "n", "formatted"}, out);
}

}  // namespace pasnet::eval
