#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pasnet/csv.hpp"
#include "pasnet/errors.hpp"
#include "pasnet/stats.hpp"

namespace pasnet::stats {

void RunMatrix::validate() const
{
    if (models.size() < 2) throw std::invalid_argument("run matrix needs at least two models");
    if (seeds.size() < 2) throw std::invalid_argument("run matrix needs at least two seeds");
    if (values.size() != models.size()) throw std::invalid_argument("run matrix row count != model count");
    for (const auto& row : values) {
        if (row.size() != seeds.size()) throw std::invalid_argument("run matrix is not rectangular");
    }
}

RunMatrix run_matrix(const std::vector<eval::RunRecord>& runs, const std::string& metric, std::vector<int>* dropped)
{
    RunMatrix m;
    std::map<std::pair<std::string, int>, double> cell;
    std::set<int> all_seeds;
    for (const auto& r : runs) {
        if (std::find(m.models.begin(), m.models.end(), r.model) == m.models.end()) m.models.push_back(r.model);
        all_seeds.insert(r.seed);
        if (r.status != "ok") continue;
        std::optional<double> v;
        if (metric == "accuracy") v = r.metrics.accuracy;
        else if (metric == "auc") v = r.metrics.auc;
        else if (metric == "precision_macro") v = r.metrics.precision_macro;
        else if (metric == "recall_macro") v = r.metrics.recall_macro;
        else if (metric == "f1_macro") v = r.metrics.f1_macro;
        else throw std::invalid_argument("unknown metric '" + metric + "'");
        if (v && std::isfinite(*v)) cell[{r.model, r.seed}] = *v;
    }
    for (const int s : all_seeds) {
        const bool complete = std::all_of(m.models.begin(), m.models.end(),
                                          [&](const std::string& model) { return cell.count({model, s}) > 0; });
        if (complete) m.seeds.push_back(s);
        else if (dropped) dropped->push_back(s);
    }
    for (const auto& model : m.models) {
        std::vector<double> row;
        for (const int s : m.seeds) row.push_back(cell.at({model, s}));
        m.values.push_back(std::move(row));
    }
    return m;
}

AnovaResult rm_anova(const RunMatrix& m)
{
    m.validate();
    const auto k = m.models.size();
    const auto n = m.seeds.size();
    double grand = 0.0;
    for (const auto& row : m.values) grand += std::accumulate(row.begin(), row.end(), 0.0);
    grand /= static_cast<double>(k * n);

    std::vector<double> model_mean(k, 0.0);
    std::vector<double> seed_mean(n, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            model_mean[i] += m.values[i][j] / static_cast<double>(n);
            seed_mean[j] += m.values[i][j] / static_cast<double>(k);
        }
    }

    AnovaResult r;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double x = m.values[i][j];
            r.ss_total += (x - grand) * (x - grand);
            const double resid = x - model_mean[i] - seed_mean[j] + grand;
            r.ss_error += resid * resid;
        }
    }
    for (const double mm : model_mean) r.ss_treatment += static_cast<double>(n) * (mm - grand) * (mm - grand);
    for (const double sm : seed_mean) r.ss_subjects += static_cast<double>(k) * (sm - grand) * (sm - grand);

    r.df_treatment = static_cast<double>(k - 1);
    r.df_error = static_cast<double>((k - 1) * (n - 1));
    const double ms_treatment = r.ss_treatment / r.df_treatment;
    const double ms_error = r.ss_error / r.df_error;
    // Sums of squares below the rounding level of the data count as zero.
    double scale = 1e-300;
    for (const auto& row : m.values)
        for (const double x : row) scale += x * x;
    if (ms_error <= 0.0 || r.ss_error <= 1e-24 * scale) {
        if (r.ss_treatment > 1e-24 * scale) throw StatDegenerate("repeated-measures ANOVA: zero error variance", 0.0);
        throw StatDegenerate("repeated-measures ANOVA: no variance to test");
    }
    r.f = ms_treatment / ms_error;
    r.p = f_upper_p(r.f, r.df_treatment, r.df_error);
    return r;
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw std::invalid_argument("paired_ttest: samples must have equal length");
    const auto n = a.size();
    if (n < 2) throw std::invalid_argument("paired_ttest: need at least two pairs");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (const double x : d) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    const double tiny = 1e-12 * scale;

    TTestResult r;
    r.df = static_cast<double>(n - 1);
    if (sd <= tiny) {
        if (std::abs(mean) <= tiny) return r;
        throw StatDegenerate("paired t-test: constant non-zero difference");
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p = t_two_sided_p(r.t, r.df);
    return r;
}

std::vector<double> bh_fdr(std::span<const double> p)
{
    const auto m = p.size();
    for (const double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("bh_fdr: p-values must lie in [0, 1]");
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return p[x] < p[y]; });
    std::vector<double> adj(m);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        const double q = static_cast<double>(m) * p[order[r]] / static_cast<double>(r + 1);
        running = std::min(running, q);
        // max() guards against m * p / m rounding below p
        adj[order[r]] = std::min(1.0, std::max(running, p[order[r]]));
    }
    return adj;
}

PairwiseReport compare_models(const RunMatrix& m, double alpha)
{
    m.validate();
    PairwiseReport report;
    report.alpha = alpha;
    try {
        report.anova = rm_anova(m);
    } catch (const StatDegenerate& e) {
        report.anova_note = e.what();
    }

    std::vector<std::size_t> defined;
    std::vector<double> raw;
    for (std::size_t i = 0; i < m.models.size(); ++i) {
        for (std::size_t j = i + 1; j < m.models.size(); ++j) {
            PairwiseCell cell{m.models[i], m.models[j], std::nullopt, std::nullopt, std::nullopt, false, ""};
            try {
                const TTestResult t = paired_ttest(m.values[i], m.values[j]);
                cell.t = t.t;
                cell.p_raw = t.p;
                defined.push_back(report.cells.size());
                raw.push_back(t.p);
            } catch (const StatDegenerate& e) {
                cell.note = e.what();
            }
            report.cells.push_back(std::move(cell));
        }
    }
    const auto adj = bh_fdr(raw);
    for (std::size_t x = 0; x < defined.size(); ++x) {
        auto& cell = report.cells[defined[x]];
        cell.p_adj = adj[x];
        cell.significant = adj[x] < alpha;
    }
    return report;
}

void write_pairwise_csv(const PairwiseReport& r, const std::filesystem::path& csv)
{
    std::vector<std::vector<std::string>> rows;
    const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("nan"); };
    for (const auto& c : r.cells) {
        rows.push_back({c.model_a, c.model_b, opt(c.t), opt(c.p_raw), opt(c.p_adj), c.significant ? "true" : "false"});
    }
    std::map<std::string, std::string> meta{{"alpha", format_double(r.alpha)}};
    if (r.anova) {
        meta["anova_f"] = format_double(r.anova->f);
        meta["anova_p"] = format_double(r.anova->p);
        meta["anova_df"] = format_double(r.anova->df_treatment) + "/" + format_double(r.anova->df_error);
    }
    write_csv(csv, {"model_a", "model_b", "t", "p_raw", "p_adj", "significant"}, rows, meta);
}

std::string render_pairwise(const PairwiseReport& r, const RunMatrix& m)
{
    const auto k = m.models.size();
    std::vector<std::vector<std::string>> grid(k - 1, std::vector<std::string>(k - 1, "--"));
    std::size_t idx = 0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j, ++idx) {
            const auto& c = r.cells[idx];
            std::string text = "undefined";
            if (c.p_adj) {
                char buf[32];
                if (*c.p_adj < 0.001) std::snprintf(buf, sizeof(buf), "<0.001");
                else std::snprintf(buf, sizeof(buf), "%.3f", *c.p_adj);
                text = std::string(buf) + (c.significant ? " (✓)" : " (×)");
            }
            grid[i][j - 1] = text;
        }
    }
    std::ostringstream out;
    if (r.anova) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "RM-ANOVA: F(%g, %g) = %.4f, p = %.4g\n", r.anova->df_treatment,
                      r.anova->df_error, r.anova->f, r.anova->p);
        out << buf;
    } else {
        out << "RM-ANOVA: " << r.anova_note << '\n';
    }
    const auto width = [](const std::string& s) {
        return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
    };
    std::size_t w0 = 5;
    for (std::size_t i = 0; i + 1 < k; ++i) w0 = std::max(w0, width(m.models[i]));
    std::size_t wc = 12;
    for (std::size_t j = 1; j < k; ++j) wc = std::max(wc, width(m.models[j]));
    const auto pad = [&](const std::string& s, std::size_t w) { return s + std::string(w - std::min(w, width(s)), ' '); };
    out << pad("Model", w0 + 2);
    for (std::size_t j = 1; j < k; ++j) out << pad(m.models[j], wc + 2);
    out << '\n';
    for (std::size_t i = 0; i + 1 < k; ++i) {
        out << pad(m.models[i], w0 + 2);
        for (std::size_t j = 0; j + 1 < k; ++j) out << pad(grid[i][j], wc + 2);
        out << '\n';
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "Cells: BH-adjusted p (alpha = %g).\n", r.alpha);
    out << buf;
    return out.str();
}

}  // namespace pasnet::stats
