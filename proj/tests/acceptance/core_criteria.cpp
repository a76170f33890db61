#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "criteria.hpp"
#include "pasnet/datamodule.hpp"
#include "pasnet/evaluation.hpp"
#include "pasnet/nifti.hpp"
#include "pasnet/preprocess.hpp"
#include "pasnet/random.hpp"
#include "pasnet/stats.hpp"
#include "pasnet/synthdata.hpp"
#include "support/temp_dir.hpp"

namespace pasnet::acceptance {

namespace {

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// Distance between the first rising and last falling 0.5 crossings, with
// linear interpolation between samples.
double half_max_width(const std::vector<double>& v)
{
    const auto crossing = [&](std::size_t i) { return static_cast<double>(i - 1) + (0.5 - v[i - 1]) / (v[i] - v[i - 1]); };
    double left = 0.0, right = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i - 1] < 0.5 && v[i] >= 0.5) {
            left = crossing(i);
            break;
        }
    }
    for (std::size_t i = v.size() - 1; i > 0; --i) {
        if (v[i - 1] >= 0.5 && v[i] < 0.5) {
            right = crossing(i);
            break;
        }
    }
    return right - left;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

Outcome metric_oracle()
{
    const auto m = eval::macro_metrics({144, 27, 7, 49});
    const bool ok = near(m.accuracy, 0.850, 5e-4) && near(m.precision_macro, 0.799, 5e-4) &&
                    near(m.recall_macro, 0.859, 5e-4) && near(m.f1_macro, 0.818, 5e-4);
    return {ok, fmt::format("accuracy {:.4f} precision {:.4f} recall {:.4f} f1 {:.4f}", m.accuracy, m.precision_macro,
                            m.recall_macro, m.f1_macro)};
}

Outcome dataset_bookkeeping()
{
    std::vector<CaseRecord> recs;
    for (int n = 0; n < 1133; ++n) {
        const auto id = fmt::format("case{:04d}", n);
        recs.push_back({id, "pt_" + id, id + ".nii", n < 853 ? kLabelNormal : kLabelPas});
    }
    const Manifest split = data::stratified_split(Manifest(recs, 42), data::SplitSpec{0.70, 0.10, 0.20, 42});
    std::map<std::pair<Split, int>, std::size_t> c;
    for (const auto s : {Split::Train, Split::Val, Split::Test}) {
        for (const int l : {kLabelNormal, kLabelPas}) c[{s, l}] = split.count(s, l);
    }
    const bool table = c[{Split::Train, 0}] == 597 && c[{Split::Val, 0}] == 85 && c[{Split::Test, 0}] == 171 &&
                       c[{Split::Train, 1}] == 196 && c[{Split::Val, 1}] == 28 && c[{Split::Test, 1}] == 56;

    data::AugmentationSpec aug;
    aug.seed = 42;
    const auto over = data::oversample_minority(split, aug, "augmented");
    const auto tn = over.manifest.count(Split::Train, kLabelNormal);
    const auto tp = over.manifest.count(Split::Train, kLabelPas);
    const bool balanced = tn == 597 && tp == 597 && over.manifest.count(Split::Train) == 1194 &&
                          over.augmentations.size() == 401;
    return {table && balanced,
            fmt::format("normal {}/{}/{} pas {}/{}/{}; after oversampling {}/{} = {}", c[{Split::Train, 0}],
                        c[{Split::Val, 0}], c[{Split::Test, 0}], c[{Split::Train, 1}], c[{Split::Val, 1}],
                        c[{Split::Test, 1}], tn, tp, tn + tp)};
}

Outcome auc_oracle()
{
    Rng rng(606);
    int exact = 0, with_ties = 0;
    double worst_trapezoid = 0.0;
    constexpr int kInstances = 100;
    for (int trial = 0; trial < kInstances; ++trial) {
        const auto n = static_cast<std::size_t>(2 + rng.below(19));
        std::vector<int> y(n);
        std::vector<double> s(n);
        y[0] = 0;
        y[1] = 1;
        for (std::size_t i = 2; i < n; ++i) y[i] = rng.coin() ? 1 : 0;
        // coarse grid on half the instances forces ties
        const bool coarse = trial % 2 == 0;
        for (auto& v : s) v = coarse ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
        rng.shuffle(y);

        double num = 0.0, den = 0.0;
        bool tied = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (y[i] != 1 || y[j] != 0) continue;
                den += 1.0;
                num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
                tied = tied || s[i] == s[j];
            }
        }
        const auto r = eval::roc_auc(y, s);
        exact += r.auc == num / den;
        with_ties += tied;

        double trap = 0.0;
        for (std::size_t i = 1; i < r.curve.fpr.size(); ++i) {
            trap += (r.curve.fpr[i] - r.curve.fpr[i - 1]) * (r.curve.tpr[i] + r.curve.tpr[i - 1]) / 2.0;
        }
        worst_trapezoid = std::max(worst_trapezoid, std::abs(trap - r.auc));
    }
    return {exact == kInstances && with_ties > 0 && worst_trapezoid < 1e-12,
            fmt::format("{}/{} exact ({} with tied pairs); curve trapezoid within {:.1e}", exact, kInstances,
                        with_ties, worst_trapezoid)};
}

Outcome statistics_oracles()
{
    Rng rng(707);

    // Step-up definition: adj_i = min over p_j >= p_i of m p_j / rank_j, where
    // rank_j counts p-values <= p_j, capped at 1 and never below p_i.
    int bh_exact = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> p(1 + rng.below(40));
        for (auto& v : p) v = trial % 3 == 0 ? std::round(rng.uniform() * 20.0) / 20.0 : rng.uniform();
        const auto adj = stats::bh_fdr(p);
        const double m = static_cast<double>(p.size());
        bool same = adj.size() == p.size();
        for (std::size_t i = 0; same && i < p.size(); ++i) {
            double best = 1.0;
            for (const double pj : p) {
                if (pj < p[i]) continue;
                const auto rank = std::count_if(p.begin(), p.end(), [&](double x) { return x <= pj; });
                best = std::min(best, m * pj / static_cast<double>(rank));
            }
            same = adj[i] == std::min(1.0, std::max(best, p[i]));
        }
        bh_exact += same;
    }

    double worst_f = 0.0, worst_p = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        stats::RunMatrix rm{{"a", "b"}, {}, {{}, {}}};
        const auto n = 3 + rng.below(8);
        for (std::uint64_t s = 0; s < n; ++s) {
            rm.seeds.push_back(static_cast<int>(s));
            const double subject = rng.normal();
            rm.values[0].push_back(subject + 0.3 * rng.normal());
            rm.values[1].push_back(subject + 0.2 + 0.3 * rng.normal());
        }
        const auto a = stats::rm_anova(rm);
        const auto t = stats::paired_ttest(rm.values[0], rm.values[1]);
        worst_f = std::max(worst_f, rel_diff(a.f, t.t * t.t));
        worst_p = std::max(worst_p, std::abs(a.p - t.p));
    }

    double worst_ss = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        stats::RunMatrix rm;
        for (int k = 0; k < 6; ++k) rm.models.push_back("m" + std::to_string(k));
        for (int s = 0; s < 5; ++s) rm.seeds.push_back(s);
        for (int k = 0; k < 6; ++k) {
            std::vector<double> row;
            for (int s = 0; s < 5; ++s) row.push_back(0.8 + 0.05 * rng.normal());
            rm.values.push_back(row);
        }
        const auto a = stats::rm_anova(rm);
        worst_ss = std::max(worst_ss, rel_diff(a.ss_total, a.ss_subjects + a.ss_treatment + a.ss_error));
    }

    const auto t = stats::paired_ttest(std::vector<double>{2, 4, 6}, std::vector<double>{1, 2, 3});
    const bool example = near(t.t, 3.4641, 5e-5) && near(t.p, 0.0742, 1e-3);

    const bool ok = bh_exact == 1000 && worst_f <= 1e-9 && worst_p <= 1e-9 && worst_ss <= 1e-9 && example;
    return {ok, fmt::format("bh {}/1000 exact; k=2 |F-t^2| rel {:.1e}, |dp| {:.1e}; SS identity rel {:.1e}; "
                            "t={:.4f} p={:.4f}",
                            bh_exact, worst_f, worst_p, worst_ss, t.t, t.p)};
}

Outcome preprocessing_properties()
{
    testing::TempDir tmp("pasnet_acc8");
    Rng rng(808);
    const Shape3 target = prep::kTargetShape;
    int failures = 0;
    double worst_affine = 0.0;
    double worst_aspect = 0.0;
    std::string first_failure;
    const auto fail = [&](int n, const std::string& what) {
        if (failures++ == 0) first_failure = fmt::format("phantom {}: {}", n, what);
    };

    for (int n = 0; n < 50; ++n) {
        const Shape3 shape{32 + static_cast<std::int64_t>(rng.below(160)), 32 + static_cast<std::int64_t>(rng.below(160)),
                           32 + static_cast<std::int64_t>(rng.below(80))};
        const int label = static_cast<int>(rng.below(2));
        const Volume v = synth::generate_phantom(label, shape, rng.below(1u << 30));

        const CaseRecord rec{fmt::format("p{}", n), "x", io::write_nifti(v, tmp / fmt::format("p{}.nii", n)), label};
        const Volume out = prep::preprocess_case(rec);
        if (!(out.shape() == target)) fail(n, "shape");
        if (!(out.min() >= 0.0F && out.max() <= 1.0F)) fail(n, "range");

        const Volume resized = prep::resize_with_padding(v);
        if (!(prep::minmax_normalize(resized) == out)) fail(n, "composition");
        const auto plan = prep::plan_resize(shape);
        for (std::int64_t i = 0; i < target.h; ++i) {
            for (std::int64_t j = 0; j < target.w; ++j) {
                for (std::int64_t k = 0; k < target.d; ++k) {
                    const bool inside = i >= plan.pad_low.h && i < plan.pad_low.h + plan.content.h &&
                                        j >= plan.pad_low.w && j < plan.pad_low.w + plan.content.w &&
                                        k >= plan.pad_low.d && k < plan.pad_low.d + plan.content.d;
                    if (!inside && resized.at(i, j, k) != 0.0F) {
                        fail(n, "padding");
                        i = target.h;
                        j = target.w;
                        break;
                    }
                }
            }
        }

        // Offsets scale with a so float32 storage of a*v+b keeps its precision.
        const double a = std::exp(rng.uniform(-3.0, 3.0));
        const double b = a * rng.uniform(-2.0, 2.0);
        auto data = resized.copy_data();
        for (auto& x : data) x = static_cast<float>(a * x + b);
        const Volume shifted = prep::minmax_normalize(Volume(target, std::move(data)));
        for (std::size_t i = 0; i < out.size(); ++i) {
            worst_affine = std::max(worst_affine, static_cast<double>(std::abs(shifted.data()[i] - out.data()[i])));
        }

        // Unit box with a random aspect ratio on a zero field. Extents are the
        // distance between half-maximum crossings on the centre lines, located
        // to sub-voxel precision.
        const auto bh = shape.h / 4 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(shape.h / 2)));
        const auto bw = shape.w / 4 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(shape.w / 2)));
        const auto bd = shape.d / 2;
        const Shape3 lo{(shape.h - bh) / 2, (shape.w - bw) / 2, (shape.d - bd) / 2};
        Volume bv(shape);
        for (std::int64_t i = lo.h; i < lo.h + bh; ++i) {
            for (std::int64_t j = lo.w; j < lo.w + bw; ++j) {
                for (std::int64_t k = lo.d; k < lo.d + bd; ++k) bv.at(i, j, k) = 1.0F;
            }
        }
        const Volume bo = prep::minmax_normalize(prep::resize_with_padding(bv));
        const auto ch = plan.pad_low.h + plan.content.h / 2;
        const auto cw = plan.pad_low.w + plan.content.w / 2;
        const auto cd = plan.pad_low.d + plan.content.d / 2;
        std::vector<double> line_h, line_w;
        for (std::int64_t i = 0; i < target.h; ++i) line_h.push_back(bo.at(i, cw, cd));
        for (std::int64_t j = 0; j < target.w; ++j) line_w.push_back(bo.at(ch, j, cd));
        const double eh = half_max_width(line_h);
        const double ew = half_max_width(line_w);
        // Both extents follow the one scale factor, so their ratio is the input's.
        const double dev = std::max(std::abs(eh - plan.scale * static_cast<double>(bh)),
                                    std::abs(ew - plan.scale * static_cast<double>(bw)));
        worst_aspect = std::max(worst_aspect, dev);
        if (dev > 1.0) fail(n, fmt::format("aspect {}x{} -> {:.2f}x{:.2f}", bh, bw, eh, ew));
    }
    if (worst_affine > 1e-6) fail(-1, "affine invariance");
    return {failures == 0, fmt::format("50 phantoms, {} failures{}; affine max diff {:.1e}; aspect max dev {:.2f} voxel",
                                       failures, failures ? " (" + first_failure + ")" : "", worst_affine,
                                       worst_aspect)};
}

}  // namespace pasnet::acceptance
