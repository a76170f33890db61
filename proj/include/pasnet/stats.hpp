#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pasnet/evaluation.hpp"

namespace pasnet::stats {

/// Regularized incomplete beta I_x(a, b), relative accuracy ~1e-14.
[[nodiscard]] double incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
[[nodiscard]] double t_two_sided_p(double t, double df);

/// P(F >= f) for the F distribution with (d1, d2) degrees of freedom.
[[nodiscard]] double f_upper_p(double f, double d1, double d2);

/// models x seeds; column s of every row comes from the same seed.
struct RunMatrix {
    std::vector<std::string> models;
    std::vector<int> seeds;
    std::vector<std::vector<double>> values;   // values[model][seed]

    /// Throws std::invalid_argument unless rectangular with k >= 2, n >= 2.
    void validate() const;
};

/// Builds a matrix for one metric from run records. Seeds that are missing
/// or failed for any model are dropped so pairing stays intact; `dropped`
/// receives them when non-null.
[[nodiscard]] RunMatrix run_matrix(const std::vector<eval::RunRecord>& runs, const std::string& metric,
                                   std::vector<int>* dropped = nullptr);

struct AnovaResult {
    double f = 0.0;
    double p = 1.0;
    double df_treatment = 0.0;
    double df_error = 0.0;
    double ss_total = 0.0;
    double ss_subjects = 0.0;
    double ss_treatment = 0.0;
    double ss_error = 0.0;
};

/// One-way repeated-measures ANOVA with seeds as subjects. SS_error is
/// computed from the interaction residuals, independently of the other
/// three terms. Throws StatDegenerate when MS_error is 0 (its p() is 0
/// when SS_treatment > 0, otherwise absent).
[[nodiscard]] AnovaResult rm_anova(const RunMatrix& m);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    double df = 0.0;
};

/// Two-sided paired t-test on a - b. Zero spread with zero mean gives t = 0,
/// p = 1; zero spread with non-zero mean throws StatDegenerate.
[[nodiscard]] TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

/// Benjamini-Hochberg step-up adjusted p-values in input order.
[[nodiscard]] std::vector<double> bh_fdr(std::span<const double> p);

struct PairwiseCell {
    std::string model_a;
    std::string model_b;
    std::optional<double> t;
    std::optional<double> p_raw;
    std::optional<double> p_adj;
    bool significant = false;
    std::string note;          // reason when the cell is degenerate
};

struct PairwiseReport {
    std::optional<AnovaResult> anova;
    std::string anova_note;
    std::vector<PairwiseCell> cells;   // upper triangle, row-major
    double alpha = 0.05;
};

/// RM-ANOVA, all k(k-1)/2 paired t-tests, BH adjustment over the defined
/// raw p-values. A degenerate cell is reported without a p-value and does
/// not stop the table.
[[nodiscard]] PairwiseReport compare_models(const RunMatrix& m, double alpha = 0.05);

/// CSV `model_a,model_b,t,p_raw,p_adj,significant`.
void write_pairwise_csv(const PairwiseReport& r, const std::filesystem::path& csv);

/// Upper-triangular text table, cells as "0.018 (✓)" / "<0.001 (✓)" / "0.886 (×)".
[[nodiscard]] std::string render_pairwise(const PairwiseReport& r, const RunMatrix& m);

}  // namespace pasnet::stats
