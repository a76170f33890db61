#include <doctest.h>

#include <cmath>

#include "pasnet/errors.hpp"
#include "pasnet/nifti.hpp"
#include "pasnet/preprocess.hpp"
#include "pasnet/random.hpp"
#include "support/temp_dir.hpp"

using namespace pasnet;

namespace {

// Independent shape calculator: scale, round, split the remainder.
struct ExpectedAxis {
    std::int64_t content, low, high;
};
ExpectedAxis expected_axis(std::int64_t n, std::int64_t target, double s)
{
    const auto c = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * s + 0.5));
    const std::int64_t pad = target - c;
    return {c, pad / 2, pad - pad / 2};
}

Volume box_phantom(Shape3 s, Shape3 lo, Shape3 hi)
{
    Volume v(s);
    for (std::int64_t i = lo.h; i < hi.h; ++i)
        for (std::int64_t j = lo.w; j < hi.w; ++j)
            for (std::int64_t k = lo.d; k < hi.d; ++k) v.at(i, j, k) = 1.0F;
    return v;
}

// Count of voxels along an axis line through the centre that exceed 0.5.
std::int64_t extent(const Volume& v, int axis)
{
    const auto s = v.shape();
    std::int64_t n = 0;
    for (std::int64_t t = 0; t < s[axis]; ++t) {
        const std::int64_t i = axis == 0 ? t : s.h / 2;
        const std::int64_t j = axis == 1 ? t : s.w / 2;
        const std::int64_t k = axis == 2 ? t : s.d / 2;
        n += v.at(i, j, k) > 0.5F ? 1 : 0;
    }
    return n;
}

}  // namespace

TEST_CASE("plan_resize matches an independent shape calculator")
{
    const Shape3 t = prep::kTargetShape;
    for (const Shape3 in : {Shape3{256, 256, 128}, Shape3{256, 192, 50}, Shape3{512, 512, 33}, Shape3{100, 300, 64},
                            Shape3{4, 4, 4}, Shape3{128, 128, 64}}) {
        CAPTURE(in.h);
        CAPTURE(in.w);
        CAPTURE(in.d);
        const double s = std::min({128.0 / static_cast<double>(in.h), 128.0 / static_cast<double>(in.w),
                                   64.0 / static_cast<double>(in.d)});
        const auto p = prep::plan_resize(in);
        CHECK(p.scale == doctest::Approx(s));
        for (int a = 0; a < 3; ++a) {
            const auto e = expected_axis(in[a], t[a], s);
            CHECK(p.content[a] == e.content);
            CHECK(p.pad_low[a] == e.low);
            CHECK(p.pad_high[a] == e.high);
        }
    }
}

TEST_CASE("plan_resize worked examples")
{
    const auto exact = prep::plan_resize({256, 256, 128});
    CHECK(exact.scale == 0.5);
    CHECK(exact.content == Shape3{128, 128, 64});
    CHECK(exact.pad_low == Shape3{0, 0, 0});

    const auto p = prep::plan_resize({256, 192, 50});
    CHECK(p.scale == 0.5);
    CHECK(p.content == Shape3{128, 96, 25});
    CHECK(p.pad_low == Shape3{0, 16, 19});
    CHECK(p.pad_high == Shape3{0, 16, 20});

    CHECK_THROWS_AS((void)prep::plan_resize({3, 100, 100}), PreprocessError);
}

TEST_CASE("resize of a constant volume: constant interior, exactly-zero padding")
{
    const Volume v(Shape3{40, 30, 20}, std::vector<float>(24000, 3.5F));
    const Volume r = prep::resize_with_padding(v);
    REQUIRE(r.shape() == prep::kTargetShape);
    const auto p = prep::plan_resize(v.shape());
    bool ok = true;
    for (std::int64_t i = 0; i < 128; ++i)
        for (std::int64_t j = 0; j < 128; ++j)
            for (std::int64_t k = 0; k < 64; ++k) {
                const bool inside = i >= p.pad_low.h && i < p.pad_low.h + p.content.h && j >= p.pad_low.w &&
                                    j < p.pad_low.w + p.content.w && k >= p.pad_low.d && k < p.pad_low.d + p.content.d;
                ok = ok && r.at(i, j, k) == (inside ? 3.5F : 0.0F);
            }
    CHECK(ok);
}

TEST_CASE("resize preserves aspect ratio of a box phantom within one voxel")
{
    // 20x60 box (ratio 1:3) in a 100x200x40 volume
    const Volume v = box_phantom({100, 200, 40}, {40, 70, 10}, {60, 130, 30});
    const Volume r = prep::resize_with_padding(v);
    const double s = prep::plan_resize(v.shape()).scale;
    CHECK(std::abs(static_cast<double>(extent(r, 0)) - 20 * s) <= 1.0);
    CHECK(std::abs(static_cast<double>(extent(r, 1)) - 60 * s) <= 1.0);
}

TEST_CASE("resize clips cubic overshoot to the input range")
{
    const Volume v = box_phantom({37, 41, 23}, {10, 10, 5}, {20, 25, 15});
    const Volume r = prep::resize_with_padding(v);
    CHECK(r.min() >= 0.0F);
    CHECK(r.max() <= 1.0F);
}

TEST_CASE("minmax_normalize")
{
    const Volume v(Shape3{1, 1, 3}, std::vector<float>{10.0F, 15.0F, 20.0F});
    const Volume n = prep::minmax_normalize(v);
    CHECK(n.at(0, 0, 0) == 0.0F);
    CHECK(n.at(0, 0, 1) == 0.5F);
    CHECK(n.at(0, 0, 2) == 1.0F);

    const Volume c(Shape3{2, 2, 2}, std::vector<float>(8, 7.0F));
    const Volume z = prep::minmax_normalize(c);
    CHECK(z.min() == 0.0F);
    CHECK(z.max() == 0.0F);

    Rng rng(5);
    std::vector<float> data(300);
    for (auto& x : data) x = static_cast<float>(rng.normal());
    const Volume a(Shape3{5, 6, 10}, data);
    const Volume na = prep::minmax_normalize(a);
    CHECK(na.min() == 0.0F);
    CHECK(na.max() == 1.0F);
    CHECK(prep::minmax_normalize(na) == na);

    // affine invariance
    std::vector<float> scaled(data);
    for (auto& x : scaled) x = 3.7F * x + 12.0F;
    const Volume nb = prep::minmax_normalize(Volume(Shape3{5, 6, 10}, scaled));
    for (std::size_t n2 = 0; n2 < data.size(); ++n2) CHECK(std::abs(na.data()[n2] - nb.data()[n2]) <= 1e-6F);
}

TEST_CASE("preprocess_case composes the pipeline and names the case on failure")
{
    testing::TempDir tmp;
    Rng rng(9);
    std::vector<float> data(50 * 60 * 20);
    for (auto& x : data) x = static_cast<float>(rng.uniform() * 400.0 - 100.0);
    const Volume v(Shape3{20, 50, 60}, data, {}, "DHW");
    const auto path = io::write_nifti(v, tmp / "c.nii");
    CaseRecord rec{"case_17", "p", path, 1, Split::Unassigned, Provenance::Original};
    const Volume out = prep::preprocess_case(rec);
    CHECK(out.shape() == prep::kTargetShape);
    CHECK(out.min() >= 0.0F);
    CHECK(out.max() <= 1.0F);
    CHECK(out.max() == 1.0F);

    rec.path = tmp / "missing.nii";
    try {
        (void)prep::preprocess_case(rec);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("case_17") != std::string::npos);
    }

    const auto tiny = io::write_nifti(Volume(Shape3{2, 8, 8}), tmp / "tiny.nii");
    rec.path = tiny;
    CHECK_THROWS_AS((void)prep::preprocess_case(rec), PreprocessError);
}
