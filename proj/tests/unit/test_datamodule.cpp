#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "pasnet/datamodule.hpp"
#include "pasnet/errors.hpp"
#include "pasnet/nifti.hpp"
#include "pasnet/random.hpp"
#include "support/temp_dir.hpp"

using namespace pasnet;

namespace {

Manifest single_scan_manifest(std::size_t n_normal, std::size_t n_pas)
{
    std::vector<CaseRecord> recs;
    for (std::size_t n = 0; n < n_normal + n_pas; ++n) {
        const std::string id = "c" + std::to_string(n);
        recs.push_back({id, "p" + std::to_string(n), id + ".nii", n < n_normal ? 0 : 1, Split::Unassigned,
                        Provenance::Original});
    }
    return Manifest(std::move(recs));
}

std::map<std::pair<Split, int>, std::size_t> counts(const Manifest& m)
{
    std::map<std::pair<Split, int>, std::size_t> c;
    for (const auto& r : m.records()) ++c[{r.split, r.label}];
    return c;
}

Volume random_volume(Shape3 s, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<float> d(static_cast<std::size_t>(s.voxels()));
    for (auto& x : d) x = static_cast<float>(rng.uniform());
    return Volume(s, std::move(d));
}

}  // namespace

TEST_CASE("split_targets apportion by largest remainder")
{
    const data::SplitSpec spec;
    CHECK(data::split_targets(853, spec) == std::array<std::size_t, 3>{597, 85, 171});
    CHECK(data::split_targets(280, spec) == std::array<std::size_t, 3>{196, 28, 56});
    CHECK(data::split_targets(0, spec) == std::array<std::size_t, 3>{0, 0, 0});
    for (std::size_t n = 1; n < 200; ++n) {
        const auto t = data::split_targets(n, spec);
        CHECK(t[0] + t[1] + t[2] == n);
    }
    data::SplitSpec bad;
    bad.test = 0.3;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("stratified split reproduces the reference cohort distribution")
{
    const Manifest m = single_scan_manifest(853, 280);
    const Manifest s = data::stratified_split(m, {0.7, 0.1, 0.2, 1234});
    auto c = counts(s);
    CHECK(c[{Split::Train, 0}] == 597);
    CHECK(c[{Split::Val, 0}] == 85);
    CHECK(c[{Split::Test, 0}] == 171);
    CHECK(c[{Split::Train, 1}] == 196);
    CHECK(c[{Split::Val, 1}] == 28);
    CHECK(c[{Split::Test, 1}] == 56);
    CHECK(s.count(Split::Train) == 793);
    CHECK(s.count(Split::Val) == 113);
    CHECK(s.count(Split::Test) == 227);

    const Manifest again = data::stratified_split(m, {0.7, 0.1, 0.2, 1234});
    CHECK(again.records() == s.records());
    const Manifest other = data::stratified_split(m, {0.7, 0.1, 0.2, 99});
    CHECK(counts(other) == c);
    CHECK(other.records() != s.records());
}

TEST_CASE("stratified split keeps patients whole")
{
    std::vector<CaseRecord> recs;
    for (int n = 0; n < 10; ++n) {
        const std::string pid = n < 4 ? "big" : "p" + std::to_string(n);
        recs.push_back({"c" + std::to_string(n), pid, "x.nii", n % 3 == 0 ? 1 : 0, Split::Unassigned,
                        Provenance::Original});
    }
    // The multi-scan patient needs one label.
    for (int n = 0; n < 4; ++n) recs[static_cast<std::size_t>(n)].label = 1;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Manifest s = data::stratified_split(Manifest(recs), {0.7, 0.1, 0.2, seed});
        std::set<Split> big;
        for (const auto& r : s.records())
            if (r.patient_id == "big") big.insert(r.split);
        CHECK(big.size() == 1);
        CHECK(s.count(Split::Unassigned) == 0);
    }

    recs[1].label = 0;
    CHECK_THROWS_AS((void)data::stratified_split(Manifest(recs), {}), DataError);
}

TEST_CASE("flip and rotation group identities")
{
    const Volume v = random_volume({8, 8, 5}, 1);
    CHECK(data::flip(data::flip(v, 0), 0) == v);
    CHECK(data::flip(data::flip(v, 1), 1) == v);
    Volume r = v;
    for (int q = 0; q < 4; ++q) r = data::rotate90(r, 1);
    CHECK(r == v);
    CHECK(data::rotate90(data::rotate90(v, 1), 1) == data::rotate90(v, 2));
    CHECK(data::rotate90(v, 3) == data::rotate90(data::rotate90(v, 2), 1));
    // counter-clockwise quarter turn sends the (0, last) corner to (0, 0)
    CHECK(data::rotate90(v, 1).at(0, 0, 2) == v.at(0, 7, 2));
    CHECK_THROWS_AS((void)data::rotate90(random_volume({6, 8, 3}, 2), 1), DataError);
    CHECK(data::rotate90(random_volume({6, 8, 3}, 2), 2).shape() == Shape3{6, 8, 3});
}

TEST_CASE("zoom 1.25 grows a centred sphere of radius 20 to radius 25 +- 1")
{
    const Shape3 s{128, 128, 64};
    Volume v(s);
    const double ci = 63.5, cj = 63.5, ck = 31.5;
    for (std::int64_t i = 0; i < s.h; ++i)
        for (std::int64_t j = 0; j < s.w; ++j)
            for (std::int64_t k = 0; k < s.d; ++k) {
                const double r = std::hypot(i - ci, j - cj, k - ck);
                v.at(i, j, k) = r <= 20.0 ? 1.0F : 0.0F;
            }
    const Volume z = data::zoom(v, 1.25);
    CHECK(z.shape() == s);
    // radius measured along each axis through the centre
    for (int axis = 0; axis < 3; ++axis) {
        std::int64_t n = 0;
        for (std::int64_t t = 0; t < s[axis]; ++t) {
            const std::int64_t i = axis == 0 ? t : 64, j = axis == 1 ? t : 64, k = axis == 2 ? t : 32;
            n += z.at(i, j, k) >= 0.5F ? 1 : 0;
        }
        CHECK(std::abs(static_cast<double>(n) / 2.0 - 25.0) <= 1.0);
    }
    // volume-based radius estimate
    double mass = 0.0;
    for (float x : z.data()) mass += x;
    const double radius = std::cbrt(mass * 3.0 / (4.0 * M_PI));
    CHECK(std::abs(radius - 25.0) <= 1.0);
}

TEST_CASE("augmentation draws are never the identity and are reproducible")
{
    data::AugmentationSpec spec;
    spec.seed = 77;
    std::map<std::string, int> seen;
    for (std::uint64_t s = 0; s < 400; ++s) {
        const auto p = data::draw_augmentation(spec, s);
        CHECK_FALSE(p.is_identity());
        CHECK(p == data::draw_augmentation(spec, s));
        if (p.zoom != 1.0) {
            CHECK(p.zoom >= 1.1);
            CHECK(p.zoom <= 1.3);
        }
        CHECK((p.rot_deg == 0 || p.rot_deg == 90 || p.rot_deg == 180 || p.rot_deg == 270));
        seen["flip_h"] += p.flip_h;
        seen["rot"] += p.rot_deg != 0;
    }
    // each component fires a bit over half the time (forcing adds some)
    CHECK(seen["flip_h"] > 160);
    CHECK(seen["flip_h"] < 280);
    CHECK(seen["rot"] > 160);

    spec.rotations_deg = {45};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.rotations_deg = {90};
    spec.zoom_min = 1.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("augment output differs from the input and keeps its shape")
{
    const Volume v = random_volume({16, 16, 8}, 3);
    data::AugmentationSpec spec;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Volume a = data::augment(v, data::draw_augmentation(spec, s));
        CHECK(a.shape() == v.shape());
        CHECK_FALSE(a == v);
    }
}

TEST_CASE("oversample_minority balances the training split by round robin")
{
    testing::TempDir tmp;
    std::vector<CaseRecord> recs;
    for (int n = 0; n < 13; ++n) {
        const std::string id = "c" + std::to_string(n);
        const auto path = io::write_nifti(random_volume({8, 8, 4}, static_cast<std::uint64_t>(n)), tmp / (id + ".nii"));
        recs.push_back({id, "p" + std::to_string(n), path, n < 10 ? 0 : 1, Split::Train, Provenance::Original});
    }
    recs.push_back({"v0", "pv0", tmp / "c0.nii", 1, Split::Val, Provenance::Original});
    recs.push_back({"t0", "pt0", tmp / "c0.nii", 0, Split::Test, Provenance::Original});
    const Manifest m(recs, 5);
    data::AugmentationSpec spec;
    spec.seed = 5;
    const auto res = data::oversample_minority(m, spec, tmp / "aug");
    const Manifest& out = res.manifest;

    std::size_t n0 = 0, n1 = 0;
    std::map<std::string, int> per_source;
    for (const auto& r : out.in_split(Split::Train)) (r->label == 0 ? n0 : n1) += 1;
    CHECK(n0 == 10);
    CHECK(n1 == 10);
    REQUIRE(res.augmentations.size() == 7);
    for (const auto& a : res.augmentations) ++per_source[a.source_id];
    CHECK(per_source.size() == 3);
    for (const auto& [src, k] : per_source) CHECK((k == 2 || k == 3));
    CHECK(out.count(Split::Val) == 1);
    CHECK(out.count(Split::Test) == 1);
    for (std::size_t n = 0; n < recs.size(); ++n) CHECK(out.records()[n] == recs[n]);

    // persisted parameters regenerate each augmented volume bit-identically
    data::materialize_augmentations(out, res.augmentations);
    data::write_augmentation_sidecar(res.augmentations, tmp / "aug.csv");
    const auto side = data::read_augmentation_sidecar(tmp / "aug.csv");
    CHECK(side == res.augmentations);
    for (const auto& a : side) {
        const Volume src = io::read_nifti(out.find(a.source_id).path);
        const Volume disk = io::read_nifti(out.find(a.case_id).path);
        CHECK(data::augment(src, a.params) == disk);
    }

    // determinism and fixed point
    const auto res2 = data::oversample_minority(m, spec, tmp / "aug");
    CHECK(res2.augmentations == res.augmentations);
    const auto again = data::oversample_minority(out, spec, tmp / "aug");
    CHECK(again.manifest.records() == out.records());
    CHECK(again.augmentations.empty());
}

TEST_CASE("oversample_minority counts at reference scale")
{
    std::vector<CaseRecord> recs;
    for (int n = 0; n < 793; ++n)
        recs.push_back({"c" + std::to_string(n), "p" + std::to_string(n), "x.nii", n < 597 ? 0 : 1, Split::Train,
                        Provenance::Original});
    const auto res = data::oversample_minority(Manifest(recs), {}, "aug");
    CHECK(res.manifest.count(Split::Train) == 1194);
    CHECK(res.augmentations.size() == 401);

    std::vector<CaseRecord> only_normal{{"a", "pa", "a.nii", 0, Split::Train, Provenance::Original},
                                        {"b", "pb", "b.nii", 0, Split::Train, Provenance::Original},
                                        {"c", "pc", "c.nii", 1, Split::Test, Provenance::Original}};
    CHECK_THROWS_AS((void)data::oversample_minority(Manifest(only_normal), {}, "aug"), DataError);
}

TEST_CASE("plan_epoch covers the split exactly once with a short last batch")
{
    const Manifest s = data::stratified_split(single_scan_manifest(60, 21), {0.7, 0.1, 0.2, 3});
    const auto train = s.count(Split::Train);
    for (const bool shuffle : {false, true}) {
        const auto batches = data::plan_epoch(s, Split::Train, 8, shuffle, 3, 0);
        std::multiset<std::size_t> seen;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            if (b + 1 < batches.size()) CHECK(batches[b].size() == 8);
            for (auto idx : batches[b]) {
                CHECK(s.records()[idx].split == Split::Train);
                seen.insert(idx);
            }
        }
        CHECK(seen.size() == train);
        CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == train);
        CHECK(batches.size() == (train + 7) / 8);
    }
    CHECK(data::plan_epoch(s, Split::Train, 8, true, 3, 4) == data::plan_epoch(s, Split::Train, 8, true, 3, 4));
    CHECK(data::plan_epoch(s, Split::Train, 8, true, 3, 4) != data::plan_epoch(s, Split::Train, 8, true, 3, 5));
}
